//! Ultimatum game engine, strategy model, rubric, log parser and statistics.
//!
//! Money is integer cents throughout. Statistical routines are generic over
//! the float type; exact rates use [`num_rational::Ratio`].

pub mod game;
pub mod parse;
pub mod rubric;
pub mod stats;
pub mod strategy;
pub mod transcript;

pub use game::{Decision, GameConfig, GameError, GameState, Money, RoundOutcome};
pub use rubric::{ErrorClass, Rubric, RubricConfig, Verdict};
pub use strategy::{Personality, PersonalityPair, Role, StrategySpec};
pub use transcript::{RawLog, Structure, Transcript};

/// Exact success rate.
pub type Rate = stats::Rate;
/// Test result in double precision.
pub type TestResultF64 = stats::TestResult<f64>;
/// Test result in single precision.
pub type TestResultF32 = stats::TestResult<f32>;
