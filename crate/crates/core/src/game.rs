//! Deterministic state machine for an N-round ultimatum game over a fixed pot.
//!
//! All amounts are integer cents. Transitions take the state by reference and
//! return a new state, so a game can be replayed or forked freely.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An amount of money in whole cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(u32);

impl Money {
    pub const ZERO: Money = Money(0);
    /// One dollar.
    pub const DOLLAR: Money = Money(100);

    pub const fn from_cents(cents: u32) -> Self {
        Money(cents)
    }

    pub const fn cents(self) -> u32 {
        self.0
    }

    pub fn saturating_sub(self, other: Money) -> Money {
        Money(self.0.saturating_sub(other.0))
    }

    pub fn saturating_add(self, other: Money) -> Money {
        Money(self.0.saturating_add(other.0))
    }

    /// Absolute difference in cents.
    pub fn abs_diff(self, other: Money) -> u32 {
        self.0.abs_diff(other.0)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}.{:02}", self.0 / 100, self.0 % 100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pot: Money,
    rounds: u32,
}

impl GameConfig {
    pub fn new(pot: Money, rounds: u32) -> Result<Self, GameError> {
        if rounds < 1 {
            return Err(GameError::InvalidConfig("rounds must be at least 1".into()));
        }
        if pot.cents() < 1 {
            return Err(GameError::InvalidConfig("pot must be at least one cent".into()));
        }
        Ok(GameConfig { pot, rounds })
    }

    pub fn pot(&self) -> Money {
        self.pot
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }
}

impl Default for GameConfig {
    /// Five rounds over one dollar.
    fn default() -> Self {
        GameConfig {
            pot: Money::DOLLAR,
            rounds: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    AwaitingOffer,
    AwaitingDecision,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u32,
    /// Amount offered to the receiver.
    pub offer: Money,
    pub decision: Decision,
    pub proposer_payoff: Money,
    pub receiver_payoff: Money,
}

impl RoundOutcome {
    /// Builds the outcome the engine would produce for this offer and decision.
    pub fn settle(round: u32, pot: Money, offer: Money, decision: Decision) -> Self {
        let (proposer_payoff, receiver_payoff) = match decision {
            Decision::Accept => (pot.saturating_sub(offer), offer),
            Decision::Reject => (Money::ZERO, Money::ZERO),
        };
        RoundOutcome {
            round,
            offer,
            decision,
            proposer_payoff,
            receiver_payoff,
        }
    }

    /// Whether the payoffs obey pot conservation for the given pot.
    pub fn conserves(&self, pot: Money) -> bool {
        match self.decision {
            Decision::Accept => {
                self.receiver_payoff == self.offer
                    && self.proposer_payoff.cents() + self.receiver_payoff.cents() == pot.cents()
            }
            Decision::Reject => self.proposer_payoff == Money::ZERO && self.receiver_payoff == Money::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("offer {offer} is outside [0, {pot}]")]
    OfferOutOfRange { offer: Money, pot: Money },
    #[error("wrong phase: expected {expected:?}, game is in {actual:?}")]
    WrongPhase { expected: Phase, actual: Phase },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    config: GameConfig,
    round_index: u32,
    phase: Phase,
    pending_offer: Option<Money>,
    history: Vec<RoundOutcome>,
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        // Re-validate: configs can arrive through deserialization.
        let config = GameConfig::new(config.pot, config.rounds)?;
        Ok(GameState {
            config,
            round_index: 1,
            phase: Phase::AwaitingOffer,
            pending_offer: None,
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// The round currently being played. Once finished this stays at the last round.
    pub fn round_index(&self) -> u32 {
        self.round_index
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn pending_offer(&self) -> Option<Money> {
        self.pending_offer
    }

    pub fn history(&self) -> &[RoundOutcome] {
        &self.history
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn submit_offer(&self, offer: Money) -> Result<GameState, GameError> {
        self.expect_phase(Phase::AwaitingOffer)?;
        if offer > self.config.pot {
            return Err(GameError::OfferOutOfRange {
                offer,
                pot: self.config.pot,
            });
        }
        let mut next = self.clone();
        next.phase = Phase::AwaitingDecision;
        next.pending_offer = Some(offer);
        Ok(next)
    }

    pub fn submit_decision(&self, decision: Decision) -> Result<(GameState, RoundOutcome), GameError> {
        self.expect_phase(Phase::AwaitingDecision)?;
        let offer = self
            .pending_offer
            .expect("pending offer exists while awaiting a decision");
        let outcome = RoundOutcome::settle(self.round_index, self.config.pot, offer, decision);

        let mut next = self.clone();
        next.history.push(outcome);
        next.pending_offer = None;
        if next.history.len() as u32 == self.config.rounds {
            next.phase = Phase::Finished;
        } else {
            next.phase = Phase::AwaitingOffer;
            next.round_index += 1;
        }
        Ok((next, outcome))
    }

    /// Plays one full round.
    pub fn play_round(&self, offer: Money, decision: Decision) -> Result<(GameState, RoundOutcome), GameError> {
        self.submit_offer(offer)?.submit_decision(decision)
    }

    /// Replays a sequence of (offer, decision) pairs from a fresh game.
    pub fn replay<I>(config: GameConfig, actions: I) -> Result<GameState, GameError>
    where
        I: IntoIterator<Item = (Money, Decision)>,
    {
        actions
            .into_iter()
            .try_fold(GameState::new(config)?, |state, (offer, decision)| {
                state.play_round(offer, decision).map(|(next, _)| next)
            })
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), GameError> {
        if self.phase != expected {
            return Err(GameError::WrongPhase {
                expected,
                actual: self.phase,
            });
        }
        Ok(())
    }
}
