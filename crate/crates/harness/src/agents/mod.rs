//! Players: scripted oracles and model-backed agents behind one trait.

mod model;
mod scripted;

pub use model::ModelAgent;
pub use scripted::{oracle_strategy, play_scripted, Flaw, ScriptedAgent};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ultimatum_core::game::Phase;
use ultimatum_core::parse::{Confidence, ParseDiagnostics, ReplyError};
use ultimatum_core::strategy::{Action, StrategyError};
use ultimatum_core::{GameState, Money, Personality, Role, RoundOutcome, StrategySpec};

use crate::gateway::{GatewayError, UsageTally};
use crate::prompts;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub public_bio: String,
    /// Personality; never shown to the other agent.
    pub private_bio: String,
    pub directives: Vec<String>,
    pub initial_plan: String,
}

impl AgentProfile {
    /// Named after the role, blank public biography, personality in the private one.
    pub fn for_role(role: Role, personality: Personality) -> Self {
        AgentProfile {
            name: role.name().to_string(),
            public_bio: String::new(),
            private_bio: format!("{} is {}.", role.name(), personality.adjective()),
            directives: prompts::default_directives(),
            initial_plan: "create strategy".to_string(),
        }
    }

    pub fn system_prompt(&self) -> String {
        prompts::render(
            prompts::AGENT_SYSTEM,
            &[
                ("name", &self.name),
                ("public_bio", &self.public_bio),
                ("private_bio", &self.private_bio),
                ("directives", &self.directives.join("\n")),
                ("initial_plan", &self.initial_plan),
            ],
        )
    }
}

/// What a player may see when asked to act: public game history only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub role: Role,
    pub round: u32,
    pub rounds: u32,
    pub pot: Money,
    pub pending_offer: Option<Money>,
    pub history: Vec<RoundOutcome>,
}

impl Observation {
    pub fn of(state: &GameState, role: Role) -> Self {
        Observation {
            role,
            round: state.round_index(),
            rounds: state.config().rounds(),
            pot: state.config().pot(),
            pending_offer: state.pending_offer(),
            history: state.history().to_vec(),
        }
    }

    /// Whether it is `role`'s turn in `state`.
    pub fn turn_of(state: &GameState) -> Option<Role> {
        match state.phase() {
            Phase::AwaitingOffer => Some(Role::Proposer),
            Phase::AwaitingDecision => Some(Role::Receiver),
            Phase::Finished => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyReply {
    /// Text as the agent wrote it.
    pub text: String,
    pub spec: StrategySpec,
    pub diagnostics: ParseDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub text: String,
    pub action: Action,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("unreadable reply: {source}")]
    Reply { source: ReplyError, text: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

impl AgentError {
    /// The agent answered with the other role's action.
    pub fn is_turn_order(&self) -> bool {
        matches!(
            self,
            AgentError::Reply {
                source: ReplyError::WrongMarker { .. },
                ..
            }
        )
    }
}

pub trait Player: Send {
    fn role(&self) -> Role;

    fn profile(&self) -> &AgentProfile;

    /// Delivers a game message that needs no reply.
    fn notify(&mut self, message: &str);

    fn create_strategy(&mut self, request: &str) -> Result<StrategyReply, AgentError>;

    fn act(&mut self, prompt: &str, observation: &Observation) -> Result<Turn, AgentError>;

    /// Everything delivered to this player so far, system prompt included.
    fn inbound(&self) -> Vec<String>;

    fn usage(&self) -> UsageTally {
        UsageTally::default()
    }
}
