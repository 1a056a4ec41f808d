use serde::{Deserialize, Serialize};
use thiserror::Error;
use ultimatum_core::parse::{parse_agent_log, parse_single_model_log, ParseDiagnostics, ParseError};
use ultimatum_core::rubric::RubricError;
use ultimatum_core::{RawLog, Rubric, Structure, Transcript, Verdict};

use crate::gateway::UsageTally;
use crate::orchestrator::{FailureCause, Simulation, SimulationConfig};
use crate::prompts::PromptUse;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum RunOutcome {
    Completed {
        transcript: Transcript,
        verdict: Verdict,
        diagnostics: ParseDiagnostics,
    },
    Failed {
        cause: FailureCause,
        message: String,
        raw_logs: Vec<RawLog>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub run_index: usize,
    pub config: SimulationConfig,
    pub outcome: RunOutcome,
    pub prompts: Vec<PromptUse>,
    pub usage: UsageTally,
    pub elapsed_ms: u64,
}

impl RunRecord {
    pub fn from_simulation(run_index: usize, config: SimulationConfig, sim: Simulation, elapsed_ms: u64) -> Self {
        let outcome = match sim.result {
            Ok(done) => RunOutcome::Completed {
                transcript: done.transcript,
                verdict: done.verdict,
                diagnostics: done.diagnostics,
            },
            Err(e) => RunOutcome::Failed {
                cause: e.cause(),
                message: e.to_string(),
                raw_logs: sim.raw_logs,
            },
        };
        RunRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            run_index,
            config,
            outcome,
            prompts: sim.prompts,
            usage: sim.usage,
            elapsed_ms,
        }
    }

    pub fn verdict(&self) -> Option<&Verdict> {
        match &self.outcome {
            RunOutcome::Completed { verdict, .. } => Some(verdict),
            RunOutcome::Failed { .. } => None,
        }
    }

    pub fn failure(&self) -> Option<FailureCause> {
        match &self.outcome {
            RunOutcome::Completed { .. } => None,
            RunOutcome::Failed { cause, .. } => Some(*cause),
        }
    }

    pub fn raw_logs(&self) -> &[RawLog] {
        match &self.outcome {
            RunOutcome::Completed { transcript, .. } => &transcript.raw_logs,
            RunOutcome::Failed { raw_logs, .. } => raw_logs,
        }
    }

    /// Report label such as `MultiAgent-gpt-4`.
    pub fn group_label(&self) -> String {
        format!("{}-{}", self.config.structure.table_label(), self.config.model)
    }

    /// Parses the stored raw logs again and grades the result.
    pub fn regrade(&self) -> Result<Verdict, RegradeError> {
        regrade_logs(&self.config, self.raw_logs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegradeError {
    #[error("record has no `{0}` log")]
    MissingLog(&'static str),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rubric(#[from] RubricError),
}

fn find<'a>(logs: &'a [RawLog], label: &'static str) -> Result<&'a str, RegradeError> {
    logs.iter()
        .find(|l| l.label == label)
        .map(|l| l.text.as_str())
        .ok_or(RegradeError::MissingLog(label))
}

/// Rebuilds and grades a transcript from the raw logs of one run.
pub fn regrade_logs(config: &SimulationConfig, logs: &[RawLog]) -> Result<Verdict, RegradeError> {
    let transcript = match config.structure {
        Structure::SingleModel => parse_single_model_log(find(logs, "combined")?, config.pair, config.game)?.0,
        Structure::MultiAgent => {
            parse_agent_log(
                find(logs, "proposer")?,
                find(logs, "receiver")?,
                config.pair,
                config.game,
            )?
            .0
        }
    };
    Ok(Rubric::default().evaluate_transcript(&transcript)?)
}
