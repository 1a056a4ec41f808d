use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ultimatum_core::parse::{canonical_strategy_text, Confidence, ParseDiagnostics};
use ultimatum_core::strategy::{
    prescribed_action, Action, AdjustRule, FinalRoundRule, ParsedStrategy, ProposerStrategy, ReceiverStrategy, Step,
    StrategyError, OPEN_STEP_MAX, OPEN_STEP_MIN,
};
use ultimatum_core::{Decision, GameConfig, GameState, Money, Personality, Role, RoundOutcome, StrategySpec};

use super::{AgentError, AgentProfile, Observation, Player, StrategyReply, Turn};

/// Deliberate defects for testing the grader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flaw {
    /// Proposer declares no plan for after an acceptance.
    Incomplete,
    /// Receiver threshold outside its personality band.
    InconsistentThreshold,
    /// Proposer plays 20% of the pot away from its own plan in round 3.
    Deviator,
}

impl Flaw {
    pub const ALL: [Flaw; 3] = [Flaw::Incomplete, Flaw::InconsistentThreshold, Flaw::Deviator];

    pub fn target(self) -> Role {
        match self {
            Flaw::Incomplete | Flaw::Deviator => Role::Proposer,
            Flaw::InconsistentThreshold => Role::Receiver,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flaw::Incomplete => "incomplete",
            Flaw::InconsistentThreshold => "inconsistent-threshold",
            Flaw::Deviator => "deviator",
        }
    }
}

impl fmt::Display for Flaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Flaw::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| format!("unknown flaw `{s}`"))
    }
}

fn share(pot: Money, percent: u32) -> Money {
    Money::from_cents(pot.cents() * percent / 100)
}

/// The clean policy for a role and personality, scaled to the pot.
pub fn oracle_strategy(role: Role, personality: Personality, pot: Money) -> ParsedStrategy {
    let step = Money::from_cents((pot.cents() * 5 / 100).max(1));
    match (role, personality) {
        (Role::Proposer, p) => ParsedStrategy::Proposer(ProposerStrategy {
            initial_offer: Some(share(pot, if p == Personality::Fair { 50 } else { 20 })),
            on_accept: Some(AdjustRule::Keep),
            on_reject: Some(AdjustRule::IncreaseBy(Step::Exact(step))),
            cutoff: None,
        }),
        (Role::Receiver, p) => ParsedStrategy::Receiver(ReceiverStrategy {
            default_threshold: Some(share(pot, if p == Personality::Fair { 40 } else { 55 })),
            final_round_rule: Some(FinalRoundRule::AcceptAnyNonzero),
            ..Default::default()
        }),
    }
}

fn apply_flaw(strategy: &mut ParsedStrategy, flaw: Flaw, personality: Personality, pot: Money) {
    match (strategy, flaw) {
        (ParsedStrategy::Proposer(p), Flaw::Incomplete) => p.on_accept = None,
        (ParsedStrategy::Receiver(r), Flaw::InconsistentThreshold) => match personality {
            Personality::Greedy => {
                r.default_threshold = Some(share(pot, 40));
                r.concession = Some(AdjustRule::DecreaseBy(Step::Open));
            }
            Personality::Fair => r.default_threshold = Some(share(pot, 60)),
        },
        _ => {}
    }
}

fn resolve_open(strategy: &ParsedStrategy, step: Money) -> ParsedStrategy {
    match strategy {
        ParsedStrategy::Proposer(p) => ParsedStrategy::Proposer(ProposerStrategy {
            on_accept: p.on_accept.map(|r| r.resolve_open(step)),
            on_reject: p.on_reject.map(|r| r.resolve_open(step)),
            ..p.clone()
        }),
        ParsedStrategy::Receiver(r) => ParsedStrategy::Receiver(ReceiverStrategy {
            concession: r.concession.map(|c| c.resolve_open(step)),
            ..r.clone()
        }),
    }
}

/// Deterministic player that declares its policy in canonical form and then
/// follows it, apart from any injected flaw.
pub struct ScriptedAgent {
    profile: AgentProfile,
    role: Role,
    config: GameConfig,
    declared: StrategySpec,
    acting: StrategySpec,
    deviate_in: Option<u32>,
    deviate_up: bool,
    inbound: Vec<String>,
}

impl ScriptedAgent {
    pub fn new(role: Role, personality: Personality, config: GameConfig, flaws: &[Flaw], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pot = config.pot();
        let mut parsed = oracle_strategy(role, personality, pot);
        let mine: Vec<Flaw> = flaws.iter().copied().filter(|f| f.target() == role).collect();
        for flaw in &mine {
            apply_flaw(&mut parsed, *flaw, personality, pot);
        }
        let step = Money::from_cents(rng.random_range(OPEN_STEP_MIN.cents()..=OPEN_STEP_MAX.cents()));
        let acting = resolve_open(&parsed, step);
        let text = canonical_strategy_text(&parsed);
        ScriptedAgent {
            profile: AgentProfile::for_role(role, personality),
            role,
            config,
            declared: StrategySpec::new(text.clone(), parsed),
            acting: StrategySpec::new(text, acting),
            deviate_in: mine.contains(&Flaw::Deviator).then(|| config.rounds().min(3)),
            deviate_up: rng.random_bool(0.5),
            inbound: Vec::new(),
        }
    }

    pub fn declared(&self) -> &StrategySpec {
        &self.declared
    }

    fn decide(&self, obs: &Observation) -> Result<Action, StrategyError> {
        let rounds = &obs.history;
        match prescribed_action(&self.acting, &self.config, rounds, obs.round, obs.pending_offer) {
            Ok(p) => Ok(p.nominal_action()),
            Err(StrategyError::Uncovered(_)) => Ok(self.fallback(obs)),
            Err(e) => Err(e),
        }
    }

    /// Uncovered states repeat the last move the plan did cover.
    fn fallback(&self, obs: &Observation) -> Action {
        match (&self.acting.parsed, obs.pending_offer) {
            (ParsedStrategy::Receiver(r), Some(offer)) => {
                let last = (1..obs.round).rev().find_map(|k| r.declared_threshold(k));
                Action::Decide(match last {
                    Some(t) if offer >= t => Decision::Accept,
                    _ => Decision::Reject,
                })
            }
            _ => Action::Offer(obs.history.last().map_or(Money::ZERO, |o| o.offer)),
        }
    }

    fn deviate(&self, offer: Money) -> Money {
        let d = share(self.config.pot(), 20);
        let up = offer.saturating_add(d);
        let down = offer.cents().checked_sub(d.cents()).map(Money::from_cents);
        match (self.deviate_up, up <= self.config.pot(), down) {
            (true, true, _) | (false, true, None) => up,
            (_, _, Some(m)) => m,
            (_, false, None) => Money::ZERO,
        }
    }
}

fn action_text(action: Action) -> String {
    match action {
        Action::Offer(m) => format!("OFFER: {m}"),
        Action::Decide(d) => format!("DECISION: {}", d.as_str().to_ascii_uppercase()),
    }
}

impl Player for ScriptedAgent {
    fn role(&self) -> Role {
        self.role
    }

    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn notify(&mut self, message: &str) {
        self.inbound.push(message.to_string());
    }

    fn create_strategy(&mut self, request: &str) -> Result<StrategyReply, AgentError> {
        self.inbound.push(request.to_string());
        Ok(StrategyReply {
            text: format!("STRATEGY:\n{}", self.declared.raw_text),
            spec: self.declared.clone(),
            diagnostics: ParseDiagnostics::default(),
        })
    }

    fn act(&mut self, prompt: &str, obs: &Observation) -> Result<Turn, AgentError> {
        self.inbound.push(prompt.to_string());
        let mut action = self.decide(obs)?;
        if let (Action::Offer(m), Some(r)) = (action, self.deviate_in) {
            if r == obs.round {
                action = Action::Offer(self.deviate(m));
            }
        }
        Ok(Turn {
            text: action_text(action),
            action,
            confidence: Confidence::Exact,
        })
    }

    fn inbound(&self) -> Vec<String> {
        self.inbound.clone()
    }
}

/// Plays two scripted agents against each other through the engine.
pub fn play_scripted(
    proposer: &mut ScriptedAgent,
    receiver: &mut ScriptedAgent,
    config: GameConfig,
) -> Result<Vec<RoundOutcome>, AgentError> {
    let mut state = GameState::new(config).expect("validated config");
    while !state.is_finished() {
        let offer = match proposer.act("", &Observation::of(&state, Role::Proposer))?.action {
            Action::Offer(m) => m,
            Action::Decide(_) => unreachable!("proposer strategies prescribe offers"),
        };
        state = state.submit_offer(offer).expect("scripted offers stay within the pot");
        let decision = match receiver.act("", &Observation::of(&state, Role::Receiver))?.action {
            Action::Decide(d) => d,
            Action::Offer(_) => unreachable!("receiver strategies prescribe decisions"),
        };
        state = state.submit_decision(decision).expect("decision in turn").0;
    }
    Ok(state.history().to_vec())
}
