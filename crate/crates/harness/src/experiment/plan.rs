use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use ultimatum_core::{GameConfig, Money, PersonalityPair, Structure};

use crate::agents::Flaw;
use crate::gateway::{EndpointConfig, SamplingParams};
use crate::orchestrator::SimulationConfig;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot read plan {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("malformed plan: {0}")]
    Syntax(String),
    #[error("invalid plan: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    structures: Vec<String>,
    #[serde(default)]
    pairs: Vec<String>,
    runs_per_cell: u32,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    game: GameSection,
    #[serde(default)]
    models: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    sampling: Option<SamplingParams>,
    #[serde(default)]
    flaws: Vec<String>,
    concurrency: Option<usize>,
    output: Option<PathBuf>,
    endpoint: Option<EndpointConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameSection {
    #[serde(default = "default_pot")]
    pot_cents: u32,
    #[serde(default = "default_rounds")]
    rounds: u32,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            pot_cents: default_pot(),
            rounds: default_rounds(),
        }
    }
}

fn default_pot() -> u32 {
    100
}

fn default_rounds() -> u32 {
    5
}

/// A validated batch: every structure × model × pair cell, `runs_per_cell` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub structures: Vec<Structure>,
    /// Model identifiers per structure; scripted runs use "oracle".
    pub models: BTreeMap<Structure, Vec<String>>,
    pub pairs: Vec<PersonalityPair>,
    pub runs_per_cell: u32,
    pub game: GameConfig,
    pub seed: u64,
    pub sampling: SamplingParams,
    pub flaws: Vec<Flaw>,
    pub concurrency: Option<usize>,
    pub output: Option<PathBuf>,
    pub endpoint: Option<EndpointConfig>,
}

impl ExperimentPlan {
    /// Both structures, all four pairs, scripted players.
    pub fn oracle(runs_per_cell: u32, seed: u64) -> Self {
        let structures = vec![Structure::SingleModel, Structure::MultiAgent];
        ExperimentPlan {
            models: structures.iter().map(|s| (*s, vec!["oracle".to_string()])).collect(),
            structures,
            pairs: PersonalityPair::all().to_vec(),
            runs_per_cell,
            game: GameConfig::default(),
            seed,
            sampling: SamplingParams::default(),
            flaws: Vec::new(),
            concurrency: None,
            output: None,
            endpoint: None,
        }
    }

    pub fn with_structures(mut self, structures: &[Structure]) -> Self {
        self.structures = structures.to_vec();
        self
    }

    pub fn with_pairs(mut self, pairs: &[PersonalityPair]) -> Self {
        self.pairs = pairs.to_vec();
        self
    }

    pub fn with_flaws(mut self, flaws: &[Flaw]) -> Self {
        self.flaws = flaws.to_vec();
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let file: PlanFile = toml::from_str(text).map_err(|e| PlanError::Syntax(e.to_string()))?;
        let invalid = PlanError::Invalid;
        let structures = file
            .structures
            .iter()
            .map(|s| s.parse::<Structure>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(invalid)?;
        if structures.is_empty() {
            return Err(PlanError::Invalid("no structures listed".into()));
        }
        let pairs = if file.pairs.is_empty() {
            PersonalityPair::all().to_vec()
        } else {
            file.pairs
                .iter()
                .map(|p| p.parse::<PersonalityPair>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(PlanError::Invalid)?
        };
        if file.runs_per_cell < 1 {
            return Err(PlanError::Invalid("runs_per_cell must be at least 1".into()));
        }
        let game = GameConfig::new(Money::from_cents(file.game.pot_cents), file.game.rounds)
            .map_err(|e| PlanError::Invalid(e.to_string()))?;
        let mut models = BTreeMap::new();
        for (key, ids) in &file.models {
            let s: Structure = key.parse().map_err(PlanError::Invalid)?;
            if ids.is_empty() {
                return Err(PlanError::Invalid(format!("no models listed for {s}")));
            }
            models.insert(s, ids.clone());
        }
        for s in &structures {
            models.entry(*s).or_insert_with(|| vec!["oracle".to_string()]);
        }
        models.retain(|s, _| structures.contains(s));
        let flaws = file
            .flaws
            .iter()
            .map(|f| f.parse::<Flaw>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(PlanError::Invalid)?;
        if file.concurrency == Some(0) {
            return Err(PlanError::Invalid("concurrency must be at least 1".into()));
        }
        Ok(ExperimentPlan {
            structures,
            models,
            pairs,
            runs_per_cell: file.runs_per_cell,
            game,
            seed: file.seed,
            sampling: file.sampling.unwrap_or_default(),
            flaws,
            concurrency: file.concurrency,
            output: file.output,
            endpoint: file.endpoint,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlanError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    /// Every run in a fixed order, each with its own seed.
    pub fn runs(&self) -> Vec<SimulationConfig> {
        let mut out = Vec::new();
        for structure in &self.structures {
            let models = self
                .models
                .get(structure)
                .cloned()
                .unwrap_or_else(|| vec!["oracle".into()]);
            for model in models {
                for pair in &self.pairs {
                    for _ in 0..self.runs_per_cell {
                        let index = out.len() as u64;
                        out.push(SimulationConfig {
                            structure: *structure,
                            pair: *pair,
                            game: self.game,
                            model: model.clone(),
                            sampling: self.sampling,
                            seed: run_seed(self.seed, index),
                            flaws: self.flaws.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn total_runs(&self) -> usize {
        let models: usize = self
            .structures
            .iter()
            .map(|s| self.models.get(s).map_or(1, Vec::len))
            .sum();
        models * self.pairs.len() * self.runs_per_cell as usize
    }
}

/// SplitMix64 step over the plan seed and run index.
pub fn run_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = r#"
structures = ["single-model", "multi-agent"]
pairs = ["Fair-Fair", "Greedy-Greedy"]
runs_per_cell = 3
seed = 11
flaws = ["deviator"]

[game]
pot_cents = 100
rounds = 5

[models]
multi-agent = ["gpt-4-1106-preview", "gpt-3.5-turbo"]
"#;

    #[test]
    fn parses_and_counts_runs() {
        let plan = ExperimentPlan::from_toml(PLAN).unwrap();
        assert_eq!(plan.total_runs(), (1 + 2) * 2 * 3);
        let runs = plan.runs();
        assert_eq!(runs.len(), plan.total_runs());
        assert_eq!(runs[0].model, "oracle");
        assert_eq!(plan.flaws, vec![Flaw::Deviator]);
        let seeds: std::collections::BTreeSet<u64> = runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), runs.len());
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(matches!(
            ExperimentPlan::from_toml("structures = []\nruns_per_cell = 1"),
            Err(PlanError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentPlan::from_toml("structures = [\"multi-agent\"]\nruns_per_cell = 0"),
            Err(PlanError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentPlan::from_toml("structures = [\"solo\"]\nruns_per_cell = 1"),
            Err(PlanError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentPlan::from_toml("structures = "),
            Err(PlanError::Syntax(_))
        ));
    }

    #[test]
    fn oracle_plan_is_the_full_grid() {
        assert_eq!(ExperimentPlan::oracle(10, 0).total_runs(), 80);
    }
}
