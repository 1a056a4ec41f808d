//! Runs one simulation in either structure and grades it.
//!
//! In multi-agent runs the engine is authoritative: agents only propose
//! actions, and the orchestrator announces decisions and payoffs to both.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ultimatum_core::parse::{parse_agent_log, parse_single_model_log, ParseDiagnostics, ParseError};
use ultimatum_core::rubric::RubricError;
use ultimatum_core::strategy::Action;
use ultimatum_core::{
    Decision, GameConfig, GameError, GameState, Money, PersonalityPair, RawLog, Role, Rubric, Structure, Transcript,
    Verdict,
};

use crate::agents::{AgentError, AgentProfile, Flaw, ModelAgent, Observation, Player};
use crate::gateway::{ChatGateway, ChatMessage, ChatRequest, GatewayError, SamplingParams, UsageTally};
use crate::oracle::scripted_pair;
use crate::prompts::{self, PromptUse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub structure: Structure,
    pub pair: PersonalityPair,
    pub game: GameConfig,
    /// Model identifier; "oracle" for scripted runs.
    pub model: String,
    pub sampling: SamplingParams,
    pub seed: u64,
    /// Injected defects; only scripted players honour them.
    #[serde(default)]
    pub flaws: Vec<Flaw>,
}

impl SimulationConfig {
    pub fn oracle(structure: Structure, pair: PersonalityPair, seed: u64) -> Self {
        SimulationConfig {
            structure,
            pair,
            game: GameConfig::default(),
            model: "oracle".to_string(),
            sampling: SamplingParams::default(),
            seed,
            flaws: Vec::new(),
        }
    }

    pub fn with_flaws(mut self, flaws: &[Flaw]) -> Self {
        self.flaws = flaws.to_vec();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("turn-order violation by the {role} in round {round}: {detail}")]
    TurnOrder { role: Role, round: u32, detail: String },
    #[error("unreadable reply from the {role} in round {round}: {detail}")]
    Reply { role: Role, round: u32, detail: String },
    #[error("the {0}'s private biography reached the other agent")]
    InformationLeak(Role),
    #[error("parsed logs disagree with the engine in round {round}")]
    LogMismatch { round: u32 },
    #[error("{0} is not supported by this runner")]
    WrongStructure(Structure),
    #[error(transparent)]
    Engine(#[from] GameError),
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error(transparent)]
    Agent(AgentError),
}

/// Serializable failure category for run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCause {
    Transport,
    RateLimited,
    EndpointStatus,
    Protocol,
    ReplayMiss,
    Credentials,
    Store,
    UnparseableLog,
    UnparseableReply,
    TurnOrderViolation,
    InformationLeak,
    LogMismatch,
    Engine,
    Rubric,
    Configuration,
}

impl RunError {
    pub fn cause(&self) -> FailureCause {
        match self {
            RunError::Gateway(g) | RunError::Agent(AgentError::Gateway(g)) => match g {
                GatewayError::Transport { .. } => FailureCause::Transport,
                GatewayError::RateLimited { .. } => FailureCause::RateLimited,
                GatewayError::Status { .. } => FailureCause::EndpointStatus,
                GatewayError::Protocol(_) => FailureCause::Protocol,
                GatewayError::ReplayMiss { .. } => FailureCause::ReplayMiss,
                GatewayError::Credentials(_) => FailureCause::Credentials,
                GatewayError::Store(_) => FailureCause::Store,
            },
            RunError::Parse(_) => FailureCause::UnparseableLog,
            RunError::TurnOrder { .. } => FailureCause::TurnOrderViolation,
            RunError::Reply { .. } | RunError::Agent(_) => FailureCause::UnparseableReply,
            RunError::InformationLeak(_) => FailureCause::InformationLeak,
            RunError::LogMismatch { .. } => FailureCause::LogMismatch,
            RunError::WrongStructure(_) => FailureCause::Configuration,
            RunError::Engine(_) => FailureCause::Engine,
            RunError::Rubric(_) => FailureCause::Rubric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completed {
    pub transcript: Transcript,
    pub verdict: Verdict,
    pub diagnostics: ParseDiagnostics,
}

/// Everything one run produced, whether or not it finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub prompts: Vec<PromptUse>,
    /// Logs for failed runs; completed runs keep theirs in the transcript.
    pub raw_logs: Vec<RawLog>,
    pub usage: UsageTally,
    pub result: Result<Completed, RunError>,
}

fn grade(transcript: Transcript, diagnostics: ParseDiagnostics) -> Result<Completed, RunError> {
    let verdict = Rubric::default().evaluate_transcript(&transcript)?;
    Ok(Completed {
        transcript,
        verdict,
        diagnostics,
    })
}

/// One completion produces both strategies and all rounds. A log that cannot
/// be parsed earns one re-prompt.
pub fn run_single_model(config: &SimulationConfig, gateway: &dyn ChatGateway) -> Simulation {
    let prompt = format!(
        "{}\n\n{}",
        prompts::single_model_prompt(config.pair, &config.game),
        prompts::single_model_format()
    );
    let mut sim = Simulation {
        prompts: vec![PromptUse::new("single_model", prompt.clone())],
        raw_logs: Vec::new(),
        usage: UsageTally::default(),
        result: Err(RunError::WrongStructure(config.structure)),
    };
    if config.structure != Structure::SingleModel {
        return sim;
    }
    let mut messages = vec![ChatMessage::user(prompt)];
    let mut rejected: Vec<RawLog> = Vec::new();
    for attempt in 0..2 {
        let request = ChatRequest {
            model: config.model.clone(),
            messages: messages.clone(),
            sampling: config.sampling,
            seed: Some(config.seed),
        };
        let text = match gateway.complete(&request) {
            Ok(resp) => {
                sim.usage.record(&resp);
                resp.text
            }
            Err(e) => {
                sim.usage.record_failure(&e);
                sim.raw_logs = rejected;
                sim.result = Err(e.into());
                return sim;
            }
        };
        match parse_single_model_log(&text, config.pair, config.game) {
            Ok((mut transcript, diagnostics)) => {
                transcript.raw_logs.extend(rejected);
                sim.result = grade(transcript, diagnostics);
                return sim;
            }
            Err(e) => {
                rejected.push(RawLog::new("rejected", text.clone()));
                if attempt == 1 {
                    sim.raw_logs = rejected;
                    sim.result = Err(e.into());
                    return sim;
                }
                let retry = prompts::single_model_retry(&e.to_string(), &config.game);
                sim.prompts.push(PromptUse::new("single_model_retry", retry.clone()));
                messages.push(ChatMessage::assistant(text));
                messages.push(ChatMessage::user(retry));
            }
        }
    }
    unreachable!("the loop returns on its second attempt")
}

/// One agent's view of the game, in the speaker-labelled log format.
#[derive(Debug, Default)]
struct AgentLog {
    lines: Vec<String>,
}

impl AgentLog {
    fn game(&mut self, text: &str) {
        for line in text.lines() {
            self.lines.push(format!("Game: {line}"));
        }
    }

    fn speak(&mut self, name: &str, text: &str) {
        let mut lines = text.trim().lines();
        self.lines
            .push(format!("{name}: {}", lines.next().unwrap_or("").trim_end()));
        for line in lines {
            self.lines.push(format!("  {}", line.trim_end()));
        }
    }

    fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// The scripted players for `config`.
pub fn scripted_players(config: &SimulationConfig) -> [Box<dyn Player>; 2] {
    let [p, r] = scripted_pair(config.pair, config.game, &config.flaws, config.seed);
    [Box::new(p), Box::new(r)]
}

/// Model-backed players sharing one gateway.
pub fn model_players(config: &SimulationConfig, gateway: Arc<dyn ChatGateway>) -> [Box<dyn Player>; 2] {
    [Role::Proposer, Role::Receiver].map(|role| {
        Box::new(ModelAgent::new(
            AgentProfile::for_role(role, config.pair.of(role)),
            role,
            config.game,
            gateway.clone(),
            config.model.clone(),
            config.sampling,
            Some(config.seed),
        )) as Box<dyn Player>
    })
}

/// Fails if either player has been shown the other's private biography.
pub fn check_information_hiding(players: &[Box<dyn Player>; 2], logs: &[String; 2]) -> Result<(), RunError> {
    for (i, player) in players.iter().enumerate() {
        let secret = &players[1 - i].profile().private_bio;
        if secret.is_empty() {
            continue;
        }
        let seen = player.inbound().iter().any(|m| m.contains(secret.as_str()))
            || logs[i]
                .lines()
                .filter(|l| l.starts_with("Game:"))
                .any(|l| l.contains(secret.as_str()));
        if seen {
            return Err(RunError::InformationLeak(players[1 - i].role()));
        }
    }
    Ok(())
}

struct Table<'a> {
    players: [Box<dyn Player>; 2],
    logs: [AgentLog; 2],
    protocol: Vec<String>,
    prompts: &'a mut Vec<PromptUse>,
}

impl Table<'_> {
    fn name(&self, role: Role) -> String {
        self.players[role as usize].profile().name.clone()
    }

    fn tell(&mut self, role: Role, message: &str) {
        self.logs[role as usize].game(message);
        self.players[role as usize].notify(message);
    }

    /// Asks `role` to act, re-prompting once after an out-of-turn or unreadable reply.
    fn take_turn(&mut self, role: Role, prompt: &str, state: &GameState) -> Result<Action, RunError> {
        let round = state.round_index();
        let obs = Observation::of(state, role);
        let name = self.name(role);
        self.logs[role as usize].game(prompt);
        let mut ask = prompt.to_string();
        for attempt in 0..2 {
            let outcome = self.players[role as usize].act(&ask, &obs);
            let failure = match outcome {
                Ok(turn) if kind_matches(role, turn.action) => {
                    self.logs[role as usize].speak(&name, &turn.text);
                    return Ok(turn.action);
                }
                Ok(turn) => {
                    self.protocol.push(format!("round {round} {name}: {}", turn.text));
                    RunError::TurnOrder {
                        role,
                        round,
                        detail: format!("answered with {}", turn.action),
                    }
                }
                Err(e) if e.is_turn_order() => {
                    if let AgentError::Reply { text, .. } = &e {
                        self.protocol.push(format!("round {round} {name}: {text}"));
                    }
                    RunError::TurnOrder {
                        role,
                        round,
                        detail: e.to_string(),
                    }
                }
                Err(AgentError::Reply { source, text }) => {
                    self.protocol.push(format!("round {round} {name}: {text}"));
                    RunError::Reply {
                        role,
                        round,
                        detail: source.to_string(),
                    }
                }
                Err(e) => return Err(RunError::Agent(e)),
            };
            if attempt == 1 {
                return Err(failure);
            }
            ask = prompts::turn_correction(&failure.to_string(), instruction(role));
            self.protocol.push(format!("round {round} Game: {ask}"));
            self.prompts.push(PromptUse::new("turn_correction", ask.clone()));
        }
        unreachable!("the loop returns on its second attempt")
    }
}

fn kind_matches(role: Role, action: Action) -> bool {
    matches!(
        (role, action),
        (Role::Proposer, Action::Offer(_)) | (Role::Receiver, Action::Decide(_))
    )
}

fn instruction(role: Role) -> &'static str {
    match role {
        Role::Proposer => "It is your turn to make an offer. Reply with OFFER: $x.xx.",
        Role::Receiver => "It is your turn to answer the offer. Reply with DECISION: ACCEPT or DECISION: REJECT.",
    }
}

fn decision_word(d: Decision) -> String {
    d.as_str().to_ascii_uppercase()
}

fn outcome_line(proposer: Money, receiver: Money) -> String {
    format!("OUTCOME: Proposer {proposer}, Receiver {receiver}")
}

/// Two isolated agents: private strategy creation, then strict alternation
/// through the engine. The transcript is rebuilt from the two agent logs.
pub fn run_multi_agent(config: &SimulationConfig, players: [Box<dyn Player>; 2]) -> Simulation {
    let mut sim = Simulation {
        prompts: Vec::new(),
        raw_logs: Vec::new(),
        usage: UsageTally::default(),
        result: Err(RunError::WrongStructure(config.structure)),
    };
    if config.structure != Structure::MultiAgent {
        return sim;
    }
    let mut table = Table {
        players,
        logs: [AgentLog::default(), AgentLog::default()],
        protocol: Vec::new(),
        prompts: &mut sim.prompts,
    };
    let played = play_table(&mut table, config);
    let logs = [table.logs[0].text(), table.logs[1].text()];
    let protocol = table.protocol.join("\n");
    for p in &table.players {
        sim.usage.merge(p.usage());
    }
    let hidden = check_information_hiding(&table.players, &logs);
    let mut raw_logs = vec![
        RawLog::new("proposer", logs[0].clone()),
        RawLog::new("receiver", logs[1].clone()),
    ];
    if !protocol.is_empty() {
        raw_logs.push(RawLog::new("protocol", protocol));
    }
    let result = played.and_then(|engine| {
        hidden?;
        let (mut transcript, diagnostics) = parse_agent_log(&logs[0], &logs[1], config.pair, config.game)?;
        if let Some(k) = (0..engine.len()).find(|&k| transcript.rounds.get(k) != Some(&engine[k])) {
            return Err(RunError::LogMismatch { round: k as u32 + 1 });
        }
        transcript.raw_logs = raw_logs.clone();
        grade(transcript, diagnostics)
    });
    if result.is_err() {
        sim.raw_logs = raw_logs;
    }
    sim.result = result;
    sim
}

fn play_table(table: &mut Table<'_>, config: &SimulationConfig) -> Result<Vec<ultimatum_core::RoundOutcome>, RunError> {
    for role in [Role::Proposer, Role::Receiver] {
        let i = role as usize;
        let name = table.name(role);
        table.prompts.push(PromptUse::new(
            "agent_system",
            table.players[i].profile().system_prompt(),
        ));
        let request = prompts::strategy_request(&name, &config.game);
        table.prompts.push(PromptUse::new("strategy_request", request.clone()));
        table.logs[i].game(&request);
        let reply = table.players[i].create_strategy(&request).map_err(RunError::Agent)?;
        table.logs[i].speak(&name, &reply.text);
    }

    let rounds = config.game.rounds();
    let mut state = GameState::new(config.game)?;
    while !state.is_finished() {
        let r = state.round_index();
        let prompt = format!("Round {r} of {rounds}. Make your offer.");
        let Action::Offer(offer) = table.take_turn(Role::Proposer, &prompt, &state)? else {
            unreachable!("take_turn checks the action kind")
        };
        state = state.submit_offer(offer)?;

        let prompt = format!("Round {r} of {rounds}.\nOFFER: {offer}");
        let Action::Decide(decision) = table.take_turn(Role::Receiver, &prompt, &state)? else {
            unreachable!("take_turn checks the action kind")
        };
        let (next, outcome) = state.submit_decision(decision)?;
        state = next;

        let outcome = outcome_line(outcome.proposer_payoff, outcome.receiver_payoff);
        table.tell(
            Role::Proposer,
            &format!("DECISION: {}\n{outcome}", decision_word(decision)),
        );
        table.tell(Role::Receiver, &outcome);
    }
    Ok(state.history().to_vec())
}
