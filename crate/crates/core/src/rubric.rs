//! Grades transcripts against human-behavior ranges and sorts failures into
//! strategy errors, gameplay errors, or both.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Decision, GameConfig, Money, RoundOutcome};
use crate::strategy::{
    check_adherence, check_completeness, check_personality_consistency_with, prescribed_action, share_ceil, share_cmp,
    AdherenceTolerance, Deviation, Gap, Personality, PersonalityBands, PrescribedAction, Role, StrategySpec,
};
use crate::transcript::Transcript;

pub use crate::strategy::PersonalityPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricConfig {
    pub bands: PersonalityBands,
    /// After an acceptance, offers may move by at most this much.
    pub accept_drift: Money,
    /// After a rejection, offers must rise by an amount in this range.
    pub reject_step: (Money, Money),
    /// Let a proposer move the strategy explicitly allows override the two limits above.
    pub sanctioned_override: bool,
    pub tolerance: AdherenceTolerance,
}

impl Default for RubricConfig {
    fn default() -> Self {
        RubricConfig {
            bands: PersonalityBands::default(),
            accept_drift: Money::from_cents(5),
            reject_step: (Money::from_cents(1), Money::from_cents(15)),
            sanctioned_override: true,
            tolerance: AdherenceTolerance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleViolation {
    InitialOfferOutOfBand,
    InitialDecisionInconsistent,
    OfferDriftAfterAcceptance,
    OfferNotIncreasedAfterRejection,
    /// Rejected an offer at or above the threshold the receiver had already shown.
    ThresholdRaised,
    /// Accepted less than before although earlier offers had been accepted.
    ThresholdLoweredAfterAgreement,
    /// Rejected a nonzero offer in the final round after every earlier offer was rejected.
    FinalRoundHoldout,
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleViolation::InitialOfferOutOfBand => "initial offer outside the personality range",
            RuleViolation::InitialDecisionInconsistent => "first decision inconsistent with personality",
            RuleViolation::OfferDriftAfterAcceptance => "offer moved too far after an acceptance",
            RuleViolation::OfferNotIncreasedAfterRejection => "offer not raised slightly after a rejection",
            RuleViolation::ThresholdRaised => "receiver raised its threshold",
            RuleViolation::ThresholdLoweredAfterAgreement => "receiver lowered its threshold after agreeing",
            RuleViolation::FinalRoundHoldout => "receiver held out in the final round",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundFlag {
    pub round: u32,
    pub role: Role,
    pub rule: RuleViolation,
    /// The action faithfully followed a flawed strategy, so the flag counts
    /// against strategy creation rather than gameplay.
    pub attributed_to_strategy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    None,
    StrategyOnly,
    GameplayOnly,
    Both,
}

impl ErrorClass {
    pub fn from_flags(strategy_error: bool, gameplay_error: bool) -> Self {
        match (strategy_error, gameplay_error) {
            (false, false) => ErrorClass::None,
            (true, false) => ErrorClass::StrategyOnly,
            (false, true) => ErrorClass::GameplayOnly,
            (true, true) => ErrorClass::Both,
        }
    }

    pub fn has_strategy_error(self) -> bool {
        matches!(self, ErrorClass::StrategyOnly | ErrorClass::Both)
    }

    pub fn has_gameplay_error(self) -> bool {
        matches!(self, ErrorClass::GameplayOnly | ErrorClass::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub proposer_strategy_complete: bool,
    pub receiver_strategy_complete: bool,
    pub proposer_strategy_consistent: bool,
    pub receiver_strategy_consistent: bool,
    pub proposer_adherent: bool,
    pub receiver_adherent: bool,
    pub gameplay_human_consistent: bool,
    pub per_round_flags: Vec<RoundFlag>,
    pub deviations: Vec<Deviation>,
    pub strategy_gaps: Vec<(Role, Gap)>,
    pub error_class: ErrorClass,
}

impl Verdict {
    pub fn strategy_ok(&self, role: Role) -> bool {
        match role {
            Role::Proposer => self.proposer_strategy_complete && self.proposer_strategy_consistent,
            Role::Receiver => self.receiver_strategy_complete && self.receiver_strategy_consistent,
        }
    }

    /// Both strategies complete and personality-consistent.
    pub fn strategies_robust(&self) -> bool {
        self.strategy_ok(Role::Proposer) && self.strategy_ok(Role::Receiver)
    }

    pub fn human_consistent(&self) -> bool {
        self.error_class == ErrorClass::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RubricError {
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsequentCheck {
    pub proposer: Option<RuleViolation>,
    pub receiver: Option<RuleViolation>,
}

impl SubsequentCheck {
    pub fn proposer_ok(&self) -> bool {
        self.proposer.is_none()
    }

    pub fn receiver_ok(&self) -> bool {
        self.receiver.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rubric {
    pub config: RubricConfig,
}

impl Rubric {
    pub fn new(config: RubricConfig) -> Self {
        Rubric { config }
    }

    /// Fair: 40..=60% of the pot. Greedy: strictly under 50%.
    pub fn evaluate_initial_offer(&self, offer: Money, personality: Personality, pot: Money) -> bool {
        let bands = &self.config.bands;
        match personality {
            Personality::Fair => {
                share_cmp(offer, pot, bands.fair_offer.0) != Ordering::Less
                    && share_cmp(offer, pot, bands.fair_offer.1) != Ordering::Greater
            }
            Personality::Greedy => share_cmp(offer, pot, bands.greedy_offer_below) == Ordering::Less,
        }
    }

    /// Fair receivers accept from 40% up and reject below; greedy receivers
    /// accept only above 50%.
    pub fn evaluate_initial_decision(
        &self,
        offer: Money,
        decision: Decision,
        personality: Personality,
        pot: Money,
    ) -> bool {
        let should_accept = offer >= self.initial_threshold(personality, pot);
        (decision == Decision::Accept) == should_accept
    }

    /// Smallest offer a receiver of this personality accepts in round one.
    pub fn initial_threshold(&self, personality: Personality, pot: Money) -> Money {
        let bands = &self.config.bands;
        match personality {
            Personality::Fair => share_ceil(pot, bands.fair_accept_from),
            Personality::Greedy => {
                let floor = u64::from(pot.cents()) * u64::from(bands.greedy_accept_above) / 100;
                Money::from_cents(floor as u32 + 1)
            }
        }
    }

    /// Checks a round after the first against the previous rounds. Strategy
    /// sanctions are not considered here.
    pub fn evaluate_subsequent_round(
        &self,
        history: &[RoundOutcome],
        offer: Money,
        decision: Decision,
        pair: PersonalityPair,
        round: u32,
        game: &GameConfig,
    ) -> SubsequentCheck {
        debug_assert!(round >= 2 && history.len() as u32 == round - 1);
        let prev = history.last().expect("subsequent rounds have history");

        let proposer = match prev.decision {
            Decision::Accept => (offer.abs_diff(prev.offer) > self.config.accept_drift.cents())
                .then_some(RuleViolation::OfferDriftAfterAcceptance),
            Decision::Reject => {
                let (min_step, max_step) = self.config.reject_step;
                let at_ceiling = prev.offer == game.pot() && offer == game.pot();
                let raised = offer > prev.offer
                    && offer.saturating_sub(prev.offer) >= min_step
                    && offer.saturating_sub(prev.offer) <= max_step;
                (!(raised || at_ceiling)).then_some(RuleViolation::OfferNotIncreasedAfterRejection)
            }
        };

        let any_accepted = history.iter().any(|o| o.decision == Decision::Accept);
        let min_accepted = history
            .iter()
            .filter(|o| o.decision == Decision::Accept)
            .map(|o| o.offer)
            .min();
        let base = self.initial_threshold(pair.receiver, game.pot());
        let implied = min_accepted.map_or(base, |m| m.min(base));

        let receiver = if round == game.rounds() && !any_accepted {
            (decision == Decision::Reject && offer > Money::ZERO).then_some(RuleViolation::FinalRoundHoldout)
        } else {
            match decision {
                Decision::Reject => (offer >= implied).then_some(RuleViolation::ThresholdRaised),
                Decision::Accept => {
                    let lowered = offer < implied;
                    (lowered && (any_accepted || offer == Money::ZERO))
                        .then_some(RuleViolation::ThresholdLoweredAfterAgreement)
                }
            }
        };

        SubsequentCheck { proposer, receiver }
    }

    /// Grades a transcript using the strategies it carries.
    pub fn evaluate_transcript(&self, transcript: &Transcript) -> Result<Verdict, RubricError> {
        self.evaluate(
            &transcript.config,
            transcript.pair,
            &transcript.proposer_strategy,
            &transcript.receiver_strategy,
            &transcript.rounds,
        )
    }

    pub fn evaluate(
        &self,
        game: &GameConfig,
        pair: PersonalityPair,
        proposer_spec: &StrategySpec,
        receiver_spec: &StrategySpec,
        rounds: &[RoundOutcome],
    ) -> Result<Verdict, RubricError> {
        validate_rounds(game, rounds)?;
        if proposer_spec.role() != Role::Proposer || receiver_spec.role() != Role::Receiver {
            return Err(RubricError::MalformedTranscript(
                "strategies do not match their roles".into(),
            ));
        }

        let completeness = [
            check_completeness(proposer_spec, game),
            check_completeness(receiver_spec, game),
        ];
        let consistency = [
            check_personality_consistency_with(proposer_spec, pair.proposer, game, &self.config.bands),
            check_personality_consistency_with(receiver_spec, pair.receiver, game, &self.config.bands),
        ];
        let adherence = check_adherence(proposer_spec, receiver_spec, game, rounds, self.config.tolerance);
        let strategy_ok = |role: Role| {
            let i = role as usize;
            completeness[i].complete() && consistency[i].consistent()
        };

        let mut raw_flags: Vec<(u32, Role, RuleViolation)> = Vec::new();
        let pot = game.pot();
        for (idx, outcome) in rounds.iter().enumerate() {
            let round = idx as u32 + 1;
            if round == 1 {
                if !self.evaluate_initial_offer(outcome.offer, pair.proposer, pot) {
                    raw_flags.push((round, Role::Proposer, RuleViolation::InitialOfferOutOfBand));
                }
                if !self.evaluate_initial_decision(outcome.offer, outcome.decision, pair.receiver, pot) {
                    raw_flags.push((round, Role::Receiver, RuleViolation::InitialDecisionInconsistent));
                }
                continue;
            }
            let history = &rounds[..idx];
            let check = self.evaluate_subsequent_round(history, outcome.offer, outcome.decision, pair, round, game);
            if let Some(rule) = check.proposer {
                let sanctioned = self.config.sanctioned_override
                    && matches!(
                        prescribed_action(proposer_spec, game, history, round, None),
                        Ok(PrescribedAction::Offer(band)) if band.contains(outcome.offer)
                    );
                if !sanctioned {
                    raw_flags.push((round, Role::Proposer, rule));
                }
            }
            if let Some(rule) = check.receiver {
                raw_flags.push((round, Role::Receiver, rule));
            }
        }

        let per_round_flags: Vec<RoundFlag> = raw_flags
            .into_iter()
            .map(|(round, role, rule)| {
                let faithful = adherence.is_uncovered(round, role) || !adherence.deviated(round, role);
                RoundFlag {
                    round,
                    role,
                    rule,
                    attributed_to_strategy: !strategy_ok(role) && faithful,
                }
            })
            .collect();

        let gameplay_human_consistent = per_round_flags.iter().all(|f| f.attributed_to_strategy);
        let strategy_error = !(strategy_ok(Role::Proposer) && strategy_ok(Role::Receiver));
        let gameplay_error = !(adherence.proposer_adherent && adherence.receiver_adherent && gameplay_human_consistent);

        let strategy_gaps = [Role::Proposer, Role::Receiver]
            .into_iter()
            .flat_map(|role| {
                completeness[role as usize]
                    .missing_cases
                    .iter()
                    .map(move |gap| (role, *gap))
            })
            .collect();

        Ok(Verdict {
            proposer_strategy_complete: completeness[0].complete(),
            receiver_strategy_complete: completeness[1].complete(),
            proposer_strategy_consistent: consistency[0].consistent(),
            receiver_strategy_consistent: consistency[1].consistent(),
            proposer_adherent: adherence.proposer_adherent,
            receiver_adherent: adherence.receiver_adherent,
            gameplay_human_consistent,
            per_round_flags,
            deviations: adherence.deviations,
            strategy_gaps,
            error_class: ErrorClass::from_flags(strategy_error, gameplay_error),
        })
    }
}

fn validate_rounds(game: &GameConfig, rounds: &[RoundOutcome]) -> Result<(), RubricError> {
    if rounds.len() as u32 != game.rounds() {
        return Err(RubricError::MalformedTranscript(format!(
            "expected {} rounds, found {}",
            game.rounds(),
            rounds.len()
        )));
    }
    for (idx, outcome) in rounds.iter().enumerate() {
        let expected = idx as u32 + 1;
        if outcome.round != expected {
            return Err(RubricError::MalformedTranscript(format!(
                "round {} found where round {expected} was expected",
                outcome.round
            )));
        }
        if outcome.offer > game.pot() || !outcome.conserves(game.pot()) {
            return Err(RubricError::MalformedTranscript(format!(
                "round {expected} payoffs do not conserve the pot"
            )));
        }
    }
    Ok(())
}

/// Grades with the default rubric.
pub fn evaluate_transcript(transcript: &Transcript) -> Result<Verdict, RubricError> {
    Rubric::default().evaluate_transcript(transcript)
}

pub fn evaluate_initial_offer(offer: Money, personality: Personality, pot: Money) -> bool {
    Rubric::default().evaluate_initial_offer(offer, personality, pot)
}

pub fn evaluate_initial_decision(offer: Money, decision: Decision, personality: Personality, pot: Money) -> bool {
    Rubric::default().evaluate_initial_decision(offer, decision, personality, pot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{AdjustRule, FinalRoundRule, ProposerStrategy, ReceiverStrategy, Step};
    use crate::transcript::Structure;
    use Decision::*;
    use Personality::*;

    fn c(cents: u32) -> Money {
        Money::from_cents(cents)
    }

    fn rounds(actions: &[(u32, Decision)]) -> Vec<RoundOutcome> {
        actions
            .iter()
            .enumerate()
            .map(|(i, &(offer, d))| RoundOutcome::settle(i as u32 + 1, Money::DOLLAR, c(offer), d))
            .collect()
    }

    fn transcript(
        pair: PersonalityPair,
        p: ProposerStrategy,
        r: ReceiverStrategy,
        actions: &[(u32, Decision)],
    ) -> Transcript {
        Transcript {
            config: GameConfig::default(),
            pair,
            structure: Structure::MultiAgent,
            proposer_strategy: StrategySpec::proposer("", p),
            receiver_strategy: StrategySpec::receiver("", r),
            rounds: rounds(actions),
            raw_logs: vec![],
        }
    }

    fn fair_proposer() -> ProposerStrategy {
        ProposerStrategy {
            initial_offer: Some(c(50)),
            on_accept: Some(AdjustRule::Keep),
            on_reject: Some(AdjustRule::IncreaseBy(Step::Exact(c(5)))),
            cutoff: None,
        }
    }

    #[test]
    fn initial_offer_examples() {
        assert!(evaluate_initial_offer(c(50), Fair, Money::DOLLAR));
        assert!(!evaluate_initial_offer(c(50), Greedy, Money::DOLLAR));
        assert!(evaluate_initial_offer(c(0), Greedy, Money::DOLLAR));
        assert!(evaluate_initial_offer(c(40), Fair, Money::DOLLAR));
        assert!(evaluate_initial_offer(c(60), Fair, Money::DOLLAR));
        assert!(!evaluate_initial_offer(c(61), Fair, Money::DOLLAR));
    }

    #[test]
    fn initial_decision_examples() {
        assert!(evaluate_initial_decision(c(30), Reject, Fair, Money::DOLLAR));
        assert!(!evaluate_initial_decision(c(40), Accept, Greedy, Money::DOLLAR));
        assert!(evaluate_initial_decision(c(50), Accept, Fair, Money::DOLLAR));
        assert!(!evaluate_initial_decision(c(50), Accept, Greedy, Money::DOLLAR));
        assert!(evaluate_initial_decision(c(51), Accept, Greedy, Money::DOLLAR));
        assert!(evaluate_initial_decision(c(50), Reject, Greedy, Money::DOLLAR));
    }

    #[test]
    fn initial_decision_is_defined_and_monotone_for_fair_receivers() {
        let rubric = Rubric::default();
        let mut seen_accept_ok = false;
        for offer in 0..=100 {
            let ok = rubric.evaluate_initial_decision(c(offer), Accept, Fair, Money::DOLLAR);
            assert!(!seen_accept_ok || ok, "accept at {offer} must stay consistent");
            seen_accept_ok |= ok;
            for p in [Fair, Greedy] {
                // exactly one of accept / reject is consistent for every offer
                let a = rubric.evaluate_initial_decision(c(offer), Accept, p, Money::DOLLAR);
                let r = rubric.evaluate_initial_decision(c(offer), Reject, p, Money::DOLLAR);
                assert!(a ^ r);
            }
        }
    }

    #[test]
    fn subsequent_proposer_examples() {
        let rubric = Rubric::default();
        let game = GameConfig::default();
        let pair = PersonalityPair::new(Greedy, Fair);
        let h = rounds(&[(10, Reject)]);
        assert!(rubric
            .evaluate_subsequent_round(&h, c(15), Reject, pair, 2, &game)
            .proposer_ok());
        assert!(!rubric
            .evaluate_subsequent_round(&h, c(5), Reject, pair, 2, &game)
            .proposer_ok());
        assert!(!rubric
            .evaluate_subsequent_round(&h, c(26), Reject, pair, 2, &game)
            .proposer_ok());
        let h = rounds(&[(50, Accept)]);
        assert!(rubric
            .evaluate_subsequent_round(&h, c(50), Accept, pair, 2, &game)
            .proposer_ok());
        assert!(rubric
            .evaluate_subsequent_round(&h, c(45), Accept, pair, 2, &game)
            .proposer_ok());
        assert!(!rubric
            .evaluate_subsequent_round(&h, c(40), Accept, pair, 2, &game)
            .proposer_ok());
    }

    #[test]
    fn subsequent_receiver_rules() {
        let rubric = Rubric::default();
        let game = GameConfig::default();
        let gg = PersonalityPair::new(Greedy, Greedy);
        let four_rejections = rounds(&[(20, Reject), (25, Reject), (30, Reject), (35, Reject)]);
        let check = rubric.evaluate_subsequent_round(&four_rejections, c(45), Reject, gg, 5, &game);
        assert_eq!(check.receiver, Some(RuleViolation::FinalRoundHoldout));
        let check = rubric.evaluate_subsequent_round(&four_rejections, c(45), Accept, gg, 5, &game);
        assert!(check.receiver_ok());

        // no acceptances yet: lowering is fine, holding below the personality threshold is fine
        let h = rounds(&[(20, Reject)]);
        assert!(rubric
            .evaluate_subsequent_round(&h, c(25), Accept, gg, 2, &game)
            .receiver_ok());
        assert!(rubric
            .evaluate_subsequent_round(&h, c(25), Reject, gg, 2, &game)
            .receiver_ok());
        // rejecting above the greedy threshold is raising it
        assert_eq!(
            rubric
                .evaluate_subsequent_round(&h, c(55), Reject, gg, 2, &game)
                .receiver,
            Some(RuleViolation::ThresholdRaised)
        );
        // after an agreement at 50, accepting 30 lowers the bar
        let ff = PersonalityPair::new(Fair, Fair);
        let h = rounds(&[(50, Accept)]);
        assert_eq!(
            rubric
                .evaluate_subsequent_round(&h, c(30), Accept, ff, 2, &game)
                .receiver,
            Some(RuleViolation::ThresholdLoweredAfterAgreement)
        );
        assert!(rubric
            .evaluate_subsequent_round(&h, c(40), Accept, ff, 2, &game)
            .receiver_ok());
    }

    #[test]
    fn figure_two_run_is_clean() {
        let proposer = ProposerStrategy {
            initial_offer: Some(c(50)),
            on_accept: Some(AdjustRule::DecreaseBy(Step::Open)),
            on_reject: Some(AdjustRule::IncreaseBy(Step::Open)),
            cutoff: None,
        };
        let t = transcript(
            PersonalityPair::new(Fair, Fair),
            proposer,
            ReceiverStrategy::with_threshold(c(40)),
            &[(50, Accept), (50, Accept), (50, Accept), (40, Accept), (40, Accept)],
        );
        let v = evaluate_transcript(&t).unwrap();
        assert_eq!(v.error_class, ErrorClass::None, "{v:#?}");
        assert!(v.per_round_flags.is_empty());
    }

    #[test]
    fn unsanctioned_drop_is_a_gameplay_error() {
        let t = transcript(
            PersonalityPair::new(Fair, Fair),
            fair_proposer(),
            ReceiverStrategy::with_threshold(c(40)),
            &[(50, Accept), (50, Accept), (50, Accept), (40, Accept), (40, Accept)],
        );
        let v = evaluate_transcript(&t).unwrap();
        assert!(!v.proposer_adherent);
        assert!(!v.gameplay_human_consistent);
        assert_eq!(v.error_class, ErrorClass::GameplayOnly);
    }

    #[test]
    fn faithful_play_of_inconsistent_threshold_is_strategy_error() {
        let mut receiver = ReceiverStrategy::with_threshold(c(40));
        receiver.concession = Some(AdjustRule::DecreaseBy(Step::Open));
        receiver.final_round_rule = Some(FinalRoundRule::AcceptAnyNonzero);
        let t = transcript(
            PersonalityPair::new(Fair, Greedy),
            fair_proposer(),
            receiver,
            &[(50, Accept); 5],
        );
        let v = evaluate_transcript(&t).unwrap();
        assert!(!v.receiver_strategy_consistent);
        assert!(v.receiver_adherent);
        assert!(v.gameplay_human_consistent);
        assert_eq!(v.per_round_flags.len(), 1);
        assert!(v.per_round_flags[0].attributed_to_strategy);
        assert_eq!(v.error_class, ErrorClass::StrategyOnly);
    }

    #[test]
    fn greedy_receiver_deviating_to_accept_40_is_gameplay_error() {
        let mut receiver = ReceiverStrategy::with_threshold(c(55));
        receiver.final_round_rule = Some(FinalRoundRule::AcceptAnyNonzero);
        let t = transcript(
            PersonalityPair::new(Fair, Greedy),
            ProposerStrategy {
                initial_offer: Some(c(40)),
                ..fair_proposer()
            },
            receiver,
            &[(40, Accept); 5],
        );
        let v = evaluate_transcript(&t).unwrap();
        assert!(!v.gameplay_human_consistent);
        assert!(!v.receiver_adherent);
        assert_eq!(v.error_class, ErrorClass::GameplayOnly);
    }

    #[test]
    fn short_transcript_is_malformed() {
        let t = transcript(
            PersonalityPair::new(Fair, Fair),
            fair_proposer(),
            ReceiverStrategy::with_threshold(c(40)),
            &[(50, Accept); 3],
        );
        assert!(matches!(
            evaluate_transcript(&t),
            Err(RubricError::MalformedTranscript(_))
        ));
    }

    #[test]
    fn error_class_partition() {
        assert_eq!(ErrorClass::from_flags(false, false), ErrorClass::None);
        assert_eq!(ErrorClass::from_flags(true, true), ErrorClass::Both);
        assert!(ErrorClass::Both.has_strategy_error() && ErrorClass::Both.has_gameplay_error());
        assert!(!ErrorClass::StrategyOnly.has_gameplay_error());
    }
}
