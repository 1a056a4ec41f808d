//! Turns free-text model logs into strategies and transcripts.
//!
//! Parsing is two-tier. Tier one reads the explicit markers the harness asks
//! models to emit (`PROPOSER STRATEGY:`, `OFFER:`, `DECISION:`, `key = value`
//! strategy lines). Tier two falls back to keyword and dollar-amount
//! heuristics for logs that ignore the format; whenever it fires the
//! diagnostics say so.

mod amounts;
mod canonical;
mod logs;
mod strategy_text;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use amounts::{extract_amounts, AmountMatch};
pub use canonical::{parse_canonical, serialize_canonical, CANONICAL_HEADER};
pub use logs::{parse_action_reply, parse_agent_log, parse_single_model_log, ReplyError};
pub use strategy_text::{canonical_strategy_text, parse_strategy_text};
pub use text::{detect_decision, round_markers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Confidence {
    /// Everything came from explicit markers.
    Exact,
    /// At least one heuristic fallback fired.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Warning {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub warnings: Vec<Warning>,
    pub confidence: Confidence,
}

impl Default for ParseDiagnostics {
    fn default() -> Self {
        ParseDiagnostics {
            warnings: Vec::new(),
            confidence: Confidence::Exact,
        }
    }
}

impl ParseDiagnostics {
    pub(crate) fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Warning {
            location: location.into(),
            message: message.into(),
        });
    }

    pub(crate) fn heuristic(&mut self) {
        self.confidence = Confidence::Heuristic;
    }

    pub(crate) fn absorb(&mut self, other: ParseDiagnostics) {
        self.warnings.extend(other.warnings);
        if other.confidence == Confidence::Heuristic {
            self.heuristic();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unparseable log: {0}")]
    Unparseable(String),
    #[error("unparseable log: round {0} is missing or incomplete")]
    MissingRound(u32),
    #[error("unparseable log: no {0} strategy section found")]
    MissingStrategy(crate::strategy::Role),
    #[error("inconsistent logs at round {round}: {detail}")]
    InconsistentLogs { round: u32, detail: String },
    #[error("unsupported transcript schema `{0}`")]
    SchemaVersion(String),
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
}
