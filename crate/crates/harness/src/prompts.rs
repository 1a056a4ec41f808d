//! Versioned prompt templates and the per-run prompt manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ultimatum_core::{GameConfig, Money, PersonalityPair};

/// Bumped whenever any template text changes.
pub const PROMPT_SET_VERSION: &str = "1";

pub const SINGLE_MODEL: &str = include_str!("../assets/prompts/single_model.txt");
pub const SINGLE_MODEL_FORMAT: &str = include_str!("../assets/prompts/single_model_format.txt");
pub const SINGLE_MODEL_RETRY: &str = include_str!("../assets/prompts/single_model_retry.txt");
pub const AGENT_SYSTEM: &str = include_str!("../assets/prompts/agent_system.txt");
pub const AGENT_DIRECTIVES: &str = include_str!("../assets/prompts/agent_directives.txt");
pub const STRATEGY_REQUEST: &str = include_str!("../assets/prompts/strategy_request.txt");
pub const TURN_CORRECTION: &str = include_str!("../assets/prompts/turn_correction.txt");

const TEMPLATES: [(&str, &str); 7] = [
    ("single_model", SINGLE_MODEL),
    ("single_model_format", SINGLE_MODEL_FORMAT),
    ("single_model_retry", SINGLE_MODEL_RETRY),
    ("agent_system", AGENT_SYSTEM),
    ("agent_directives", AGENT_DIRECTIVES),
    ("strategy_request", STRATEGY_REQUEST),
    ("turn_correction", TURN_CORRECTION),
];

/// Replaces every `{key}` slot with its value.
pub fn render(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (key, value) in slots {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// "$1" for whole dollars, "$0.75" otherwise.
pub fn pot_words(pot: Money) -> String {
    if pot.cents().is_multiple_of(100) {
        format!("${}", pot.cents() / 100)
    } else {
        pot.to_string()
    }
}

pub fn count_word(n: u32) -> String {
    const WORDS: [&str; 10] = [
        "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS
        .get((n as usize).wrapping_sub(1))
        .map_or_else(|| n.to_string(), |w| w.to_string())
}

/// The single-model prompt with personality adjectives and game size filled in.
pub fn single_model_prompt(pair: PersonalityPair, game: &GameConfig) -> String {
    render(
        SINGLE_MODEL,
        &[
            ("proposer", pair.proposer.adjective()),
            ("receiver", pair.receiver.adjective()),
            ("rounds_word", &count_word(game.rounds())),
            ("pot", &pot_words(game.pot())),
        ],
    )
}

pub fn single_model_format() -> String {
    render(SINGLE_MODEL_FORMAT, &[])
}

pub fn single_model_retry(error: &str, game: &GameConfig) -> String {
    render(
        SINGLE_MODEL_RETRY,
        &[("error", error), ("rounds_word", &count_word(game.rounds()))],
    )
}

pub fn strategy_request(name: &str, game: &GameConfig) -> String {
    render(
        STRATEGY_REQUEST,
        &[
            ("name", name),
            ("rounds_word", &count_word(game.rounds())),
            ("pot", &pot_words(game.pot())),
        ],
    )
}

pub fn turn_correction(error: &str, instruction: &str) -> String {
    render(TURN_CORRECTION, &[("error", error), ("instruction", instruction)])
}

pub fn default_directives() -> Vec<String> {
    AGENT_DIRECTIVES
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One template of the prompt set, identified by content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptManifest {
    pub version: String,
    pub templates: Vec<TemplateEntry>,
}

pub fn manifest() -> PromptManifest {
    PromptManifest {
        version: PROMPT_SET_VERSION.to_string(),
        templates: TEMPLATES
            .iter()
            .map(|(name, text)| TemplateEntry {
                name: name.to_string(),
                sha256: sha256_hex(text),
            })
            .collect(),
    }
}

/// An exact prompt string sent during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptUse {
    pub template: String,
    pub text: String,
}

impl PromptUse {
    pub fn new(template: &str, text: impl Into<String>) -> Self {
        PromptUse {
            template: template.to_string(),
            text: text.into(),
        }
    }
}
