use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{GameConfig, RoundOutcome};
use crate::strategy::{PersonalityPair, StrategySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Structure {
    SingleModel,
    MultiAgent,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::SingleModel => "single-model",
            Structure::MultiAgent => "multi-agent",
        }
    }

    /// Short label used in report tables.
    pub fn table_label(self) -> &'static str {
        match self {
            Structure::SingleModel => "SingleLLM",
            Structure::MultiAgent => "MultiAgent",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "single-model" | "single" | "singlellm" => Ok(Structure::SingleModel),
            "multi-agent" | "multi" | "multiagent" => Ok(Structure::MultiAgent),
            other => Err(format!("unknown structure `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawLog {
    pub label: String,
    pub text: String,
}

impl RawLog {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        RawLog {
            label: label.into(),
            text: text.into(),
        }
    }
}

/// One full run: both declared strategies and every played round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transcript {
    pub config: GameConfig,
    pub pair: PersonalityPair,
    pub structure: Structure,
    pub proposer_strategy: StrategySpec,
    pub receiver_strategy: StrategySpec,
    pub rounds: Vec<RoundOutcome>,
    pub raw_logs: Vec<RawLog>,
}

impl Transcript {
    pub fn is_complete(&self) -> bool {
        self.rounds.len() as u32 == self.config.rounds()
    }
}
