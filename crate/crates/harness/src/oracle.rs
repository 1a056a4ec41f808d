//! Offline stand-in for a single-model completion: reads the pair from the
//! prompt, plays two scripted agents, and answers with a marker-format log.

use std::fmt::Write as _;

use ultimatum_core::{GameConfig, Personality, PersonalityPair, Role, RoundOutcome};

use crate::agents::{play_scripted, Flaw, ScriptedAgent};
use crate::gateway::{ChatGateway, ChatRequest, ChatResponse, ChatRole, GatewayError};

/// Seed for one role's scripted agent, derived from the run seed.
pub fn role_seed(seed: u64, role: Role) -> u64 {
    let salt = match role {
        Role::Proposer => 0x9E37_79B9_7F4A_7C15,
        Role::Receiver => 0xD1B5_4A32_D192_ED03,
    };
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ salt
}

/// The two scripted agents for a run.
pub fn scripted_pair(pair: PersonalityPair, game: GameConfig, flaws: &[Flaw], seed: u64) -> [ScriptedAgent; 2] {
    [Role::Proposer, Role::Receiver]
        .map(|role| ScriptedAgent::new(role, pair.of(role), game, flaws, role_seed(seed, role)))
}

/// Combined strategies-plus-rounds log in the marker format.
pub fn single_model_log(proposer: &ScriptedAgent, receiver: &ScriptedAgent, rounds: &[RoundOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "PROPOSER STRATEGY:\n{}\n", proposer.declared().raw_text);
    let _ = writeln!(s, "RECEIVER STRATEGY:\n{}\n", receiver.declared().raw_text);
    for o in rounds {
        let _ = writeln!(
            s,
            "ROUND {}\nProposer: OFFER: {}\nReceiver: DECISION: {}\nOUTCOME: Proposer {}, Receiver {}\n",
            o.round,
            o.offer,
            o.decision.as_str().to_ascii_uppercase(),
            o.proposer_payoff,
            o.receiver_payoff
        );
    }
    s
}

fn personality_before(text: &str, noun: &str) -> Option<Personality> {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    words
        .windows(2)
        .find(|w| w[1] == noun && w[0].parse::<Personality>().is_ok())
        .and_then(|w| w[0].parse().ok())
}

/// Reads "a fair proposer and a greedy receiver" out of a prompt.
pub fn pair_from_prompt(prompt: &str) -> Option<PersonalityPair> {
    Some(PersonalityPair::new(
        personality_before(prompt, "proposer")?,
        personality_before(prompt, "receiver")?,
    ))
}

pub struct OracleGateway {
    game: GameConfig,
    flaws: Vec<Flaw>,
}

impl OracleGateway {
    pub fn new(game: GameConfig, flaws: Vec<Flaw>) -> Self {
        OracleGateway { game, flaws }
    }
}

impl ChatGateway for OracleGateway {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let prompt = request
            .messages
            .iter()
            .find(|m| m.role == ChatRole::User)
            .ok_or_else(|| GatewayError::Protocol("no user message".into()))?;
        let pair = pair_from_prompt(&prompt.content)
            .ok_or_else(|| GatewayError::Protocol("prompt names no personality pair".into()))?;
        let [mut p, mut r] = scripted_pair(pair, self.game, &self.flaws, request.seed.unwrap_or(0));
        let rounds = play_scripted(&mut p, &mut r, self.game).map_err(|e| GatewayError::Protocol(e.to_string()))?;
        Ok(ChatResponse::text(single_model_log(&p, &r, &rounds)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::single_model_prompt;
    use ultimatum_core::parse::{parse_single_model_log, Confidence};

    #[test]
    fn pair_is_read_back_from_every_prompt() {
        for pair in PersonalityPair::all() {
            let prompt = single_model_prompt(pair, &GameConfig::default());
            assert_eq!(pair_from_prompt(&prompt), Some(pair));
        }
        assert_eq!(pair_from_prompt("play a game"), None);
    }

    #[test]
    fn oracle_log_parses_exactly() {
        let game = GameConfig::default();
        for pair in PersonalityPair::all() {
            let [mut p, mut r] = scripted_pair(pair, game, &[], 9);
            let rounds = play_scripted(&mut p, &mut r, game).unwrap();
            let log = single_model_log(&p, &r, &rounds);
            let (t, d) = parse_single_model_log(&log, pair, game).unwrap();
            assert_eq!(d.confidence, Confidence::Exact, "{log}\n{d:?}");
            assert_eq!(t.rounds, rounds);
            assert_eq!(&t.proposer_strategy.parsed, &p.declared().parsed);
            assert_eq!(&t.receiver_strategy.parsed, &r.declared().parsed);
        }
    }
}
