use std::sync::Arc;

use ultimatum_core::parse::{parse_action_reply, parse_strategy_text};
use ultimatum_core::{GameConfig, Role};

use super::{AgentError, AgentProfile, Observation, Player, StrategyReply, Turn};
use crate::gateway::{ChatGateway, ChatMessage, ChatRequest, ChatRole, SamplingParams, UsageTally};

/// Player backed by a chat-completion model. Keeps its own conversation;
/// notifications are held back and sent with the next prompt.
pub struct ModelAgent {
    profile: AgentProfile,
    role: Role,
    config: GameConfig,
    gateway: Arc<dyn ChatGateway>,
    model: String,
    sampling: SamplingParams,
    seed: Option<u64>,
    conversation: Vec<ChatMessage>,
    pending: Vec<String>,
    usage: UsageTally,
}

impl ModelAgent {
    pub fn new(
        profile: AgentProfile,
        role: Role,
        config: GameConfig,
        gateway: Arc<dyn ChatGateway>,
        model: impl Into<String>,
        sampling: SamplingParams,
        seed: Option<u64>,
    ) -> Self {
        let system = ChatMessage::system(profile.system_prompt());
        ModelAgent {
            profile,
            role,
            config,
            gateway,
            model: model.into(),
            sampling,
            seed,
            conversation: vec![system],
            pending: Vec::new(),
            usage: UsageTally::default(),
        }
    }

    pub fn conversation(&self) -> &[ChatMessage] {
        &self.conversation
    }

    fn ask(&mut self, prompt: &str) -> Result<String, AgentError> {
        let mut content = std::mem::take(&mut self.pending);
        content.push(prompt.to_string());
        self.conversation.push(ChatMessage::user(content.join("\n")));
        let request = ChatRequest {
            model: self.model.clone(),
            messages: self.conversation.clone(),
            sampling: self.sampling,
            seed: self.seed,
        };
        match self.gateway.complete(&request) {
            Ok(resp) => {
                self.usage.record(&resp);
                self.conversation.push(ChatMessage::assistant(resp.text.clone()));
                Ok(resp.text)
            }
            Err(e) => {
                self.usage.record_failure(&e);
                Err(e.into())
            }
        }
    }
}

impl Player for ModelAgent {
    fn role(&self) -> Role {
        self.role
    }

    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn notify(&mut self, message: &str) {
        self.pending.push(message.to_string());
    }

    fn create_strategy(&mut self, request: &str) -> Result<StrategyReply, AgentError> {
        let text = self.ask(request)?;
        let body = text.trim();
        let body = body.strip_prefix("STRATEGY:").unwrap_or(body).trim();
        let (spec, diagnostics) = parse_strategy_text(body, self.role, &self.config);
        Ok(StrategyReply {
            text,
            spec,
            diagnostics,
        })
    }

    fn act(&mut self, prompt: &str, _observation: &Observation) -> Result<Turn, AgentError> {
        let text = self.ask(prompt)?;
        match parse_action_reply(&text, self.role, self.config.pot()) {
            Ok((action, confidence)) => Ok(Turn {
                text,
                action,
                confidence,
            }),
            Err(source) => Err(AgentError::Reply { source, text }),
        }
    }

    fn inbound(&self) -> Vec<String> {
        self.conversation
            .iter()
            .filter(|m| m.role != ChatRole::Assistant)
            .map(|m| m.content.clone())
            .chain(self.pending.iter().cloned())
            .collect()
    }

    fn usage(&self) -> UsageTally {
        self.usage
    }
}
