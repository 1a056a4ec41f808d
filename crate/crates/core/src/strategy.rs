//! Structured player strategies and the strategy-level checks: completeness,
//! personality consistency, and adherence of played rounds to the declared plan.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Decision, GameConfig, Money, RoundOutcome};

/// Smallest step accepted for an increase or decrease of unstated size.
pub const OPEN_STEP_MIN: Money = Money::from_cents(1);
/// Largest step accepted for an increase or decrease of unstated size.
pub const OPEN_STEP_MAX: Money = Money::from_cents(15);
/// Representative step used when a single value is needed for an open step.
pub const OPEN_STEP_NOMINAL: Money = Money::from_cents(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Personality {
    Greedy,
    Fair,
}

impl Personality {
    pub const ALL: [Personality; 2] = [Personality::Fair, Personality::Greedy];

    pub fn adjective(self) -> &'static str {
        match self {
            Personality::Greedy => "greedy",
            Personality::Fair => "fair",
        }
    }
}

impl fmt::Display for Personality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.adjective())
    }
}

impl FromStr for Personality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(Personality::Greedy),
            "fair" => Ok(Personality::Fair),
            other => Err(format!("unknown personality `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Proposer,
    Receiver,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Proposer => "Proposer",
            Role::Receiver => "Receiver",
        }
    }

    pub fn opponent(self) -> Role {
        match self {
            Role::Proposer => Role::Receiver,
            Role::Receiver => Role::Proposer,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposer" => Ok(Role::Proposer),
            "receiver" => Ok(Role::Receiver),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

/// Proposer and receiver personalities, written `proposer-receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PersonalityPair {
    pub proposer: Personality,
    pub receiver: Personality,
}

impl PersonalityPair {
    pub const fn new(proposer: Personality, receiver: Personality) -> Self {
        PersonalityPair { proposer, receiver }
    }

    /// Fair-Fair, Fair-Greedy, Greedy-Fair, Greedy-Greedy.
    pub fn all() -> [PersonalityPair; 4] {
        use Personality::*;
        [
            PersonalityPair::new(Fair, Fair),
            PersonalityPair::new(Fair, Greedy),
            PersonalityPair::new(Greedy, Fair),
            PersonalityPair::new(Greedy, Greedy),
        ]
    }

    pub fn of(&self, role: Role) -> Personality {
        match role {
            Role::Proposer => self.proposer,
            Role::Receiver => self.receiver,
        }
    }

    /// Table label such as `Fair-Greedy`.
    pub fn label(&self) -> String {
        fn cap(p: Personality) -> &'static str {
            match p {
                Personality::Fair => "Fair",
                Personality::Greedy => "Greedy",
            }
        }
        format!("{}-{}", cap(self.proposer), cap(self.receiver))
    }
}

impl fmt::Display for PersonalityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.proposer, self.receiver)
    }
}

impl FromStr for PersonalityPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, r) = s
            .split_once('-')
            .ok_or_else(|| format!("personality pair `{s}` must look like `fair-greedy`"))?;
        Ok(PersonalityPair::new(p.parse()?, r.parse()?))
    }
}

/// Magnitude of an increase or decrease.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Exact(Money),
    /// Direction given without a magnitude ("increase slightly").
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdjustRule {
    Keep,
    IncreaseBy(Step),
    DecreaseBy(Step),
    SetTo(Money),
}

impl AdjustRule {
    /// Applies the rule once to `base`, staying inside `[0, ceiling]`.
    pub fn apply(self, base: Money, ceiling: Money) -> Band {
        self.apply_times(base, 1, ceiling)
    }

    /// Applies the rule `times` times in a row (`times >= 1`).
    pub fn apply_times(self, base: Money, times: u32, ceiling: Money) -> Band {
        let clamp = |m: Money| m.min(ceiling);
        let scaled = |step: Money| Money::from_cents(step.cents().saturating_mul(times));
        let band = match self {
            AdjustRule::Keep => Band::exact(base),
            AdjustRule::SetTo(m) => Band::exact(m),
            AdjustRule::IncreaseBy(Step::Exact(d)) => Band::exact(base.saturating_add(scaled(d))),
            AdjustRule::DecreaseBy(Step::Exact(d)) => Band::exact(base.saturating_sub(scaled(d))),
            AdjustRule::IncreaseBy(Step::Open) => Band {
                nominal: base.saturating_add(scaled(OPEN_STEP_NOMINAL)),
                low: base.saturating_add(scaled(OPEN_STEP_MIN)),
                high: base.saturating_add(scaled(OPEN_STEP_MAX)),
            },
            AdjustRule::DecreaseBy(Step::Open) => Band {
                nominal: base.saturating_sub(scaled(OPEN_STEP_NOMINAL)),
                low: base.saturating_sub(scaled(OPEN_STEP_MAX)),
                high: base.saturating_sub(scaled(OPEN_STEP_MIN)),
            },
        };
        Band {
            nominal: clamp(band.nominal),
            low: clamp(band.low),
            high: clamp(band.high),
        }
    }

    pub fn is_increase(self) -> bool {
        matches!(self, AdjustRule::IncreaseBy(_))
    }

    pub fn has_open_step(self) -> bool {
        matches!(
            self,
            AdjustRule::IncreaseBy(Step::Open) | AdjustRule::DecreaseBy(Step::Open)
        )
    }

    /// Replaces an open step with a concrete one; other rules are unchanged.
    pub fn resolve_open(self, step: Money) -> AdjustRule {
        match self {
            AdjustRule::IncreaseBy(Step::Open) => AdjustRule::IncreaseBy(Step::Exact(step)),
            AdjustRule::DecreaseBy(Step::Open) => AdjustRule::DecreaseBy(Step::Exact(step)),
            other => other,
        }
    }
}

/// Where a proposer stops conceding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cutoff {
    At(Money),
    /// Declared, but without an amount.
    Unspecified,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProposerStrategy {
    pub initial_offer: Option<Money>,
    pub on_accept: Option<AdjustRule>,
    pub on_reject: Option<AdjustRule>,
    pub cutoff: Option<Cutoff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinalRoundRule {
    KeepThreshold,
    AcceptAnyNonzero,
}

/// Acceptance thresholds: accept iff offer >= threshold. A threshold of
/// `pot + 1` rejects everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReceiverStrategy {
    /// Threshold declared for all rounds.
    pub default_threshold: Option<Money>,
    /// Per-round thresholds, overriding the default.
    pub round_thresholds: BTreeMap<u32, Money>,
    /// How the threshold moves while no offer has been accepted.
    pub concession: Option<AdjustRule>,
    pub final_round_rule: Option<FinalRoundRule>,
}

impl ReceiverStrategy {
    pub fn with_threshold(threshold: Money) -> Self {
        ReceiverStrategy {
            default_threshold: Some(threshold),
            ..Default::default()
        }
    }

    /// The declared threshold for `round`, before concessions.
    pub fn declared_threshold(&self, round: u32) -> Option<Money> {
        self.round_thresholds.get(&round).copied().or(self.default_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParsedStrategy {
    Proposer(ProposerStrategy),
    Receiver(ReceiverStrategy),
}

impl ParsedStrategy {
    pub fn role(&self) -> Role {
        match self {
            ParsedStrategy::Proposer(_) => Role::Proposer,
            ParsedStrategy::Receiver(_) => Role::Receiver,
        }
    }

    pub fn empty(role: Role) -> Self {
        match role {
            Role::Proposer => ParsedStrategy::Proposer(ProposerStrategy::default()),
            Role::Receiver => ParsedStrategy::Receiver(ReceiverStrategy::default()),
        }
    }
}

/// A declared strategy: the model's verbatim text plus its structured reading.
/// The role is carried by the parsed variant, so the two can never disagree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub raw_text: String,
    pub parsed: ParsedStrategy,
}

impl StrategySpec {
    pub fn new(raw_text: impl Into<String>, parsed: ParsedStrategy) -> Self {
        StrategySpec {
            raw_text: raw_text.into(),
            parsed,
        }
    }

    pub fn proposer(raw_text: impl Into<String>, strategy: ProposerStrategy) -> Self {
        Self::new(raw_text, ParsedStrategy::Proposer(strategy))
    }

    pub fn receiver(raw_text: impl Into<String>, strategy: ReceiverStrategy) -> Self {
        Self::new(raw_text, ParsedStrategy::Receiver(strategy))
    }

    pub fn role(&self) -> Role {
        self.parsed.role()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gap {
    NoInitialOffer,
    NoAcceptBranch,
    NoRejectBranch,
    UncoveredRound(u32),
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gap::NoInitialOffer => f.write_str("no initial offer"),
            Gap::NoAcceptBranch => f.write_str("no plan after an accepted offer"),
            Gap::NoRejectBranch => f.write_str("no plan after a rejected offer"),
            Gap::UncoveredRound(r) => write!(f, "no acceptance rule for round {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub missing_cases: Vec<Gap>,
}

impl CompletenessReport {
    pub fn complete(&self) -> bool {
        self.missing_cases.is_empty()
    }
}

/// Proposers need an initial offer and both branches; receivers need a
/// threshold for every round. Cutoffs are never required.
pub fn check_completeness(spec: &StrategySpec, config: &GameConfig) -> CompletenessReport {
    let mut missing_cases = Vec::new();
    match &spec.parsed {
        ParsedStrategy::Proposer(p) => {
            if p.initial_offer.is_none() {
                missing_cases.push(Gap::NoInitialOffer);
            }
            if config.rounds() > 1 {
                if p.on_accept.is_none() {
                    missing_cases.push(Gap::NoAcceptBranch);
                }
                if p.on_reject.is_none() {
                    missing_cases.push(Gap::NoRejectBranch);
                }
            }
        }
        ParsedStrategy::Receiver(r) => {
            for round in 1..=config.rounds() {
                let capitulates = round == config.rounds()
                    && config.rounds() > 1
                    && r.final_round_rule == Some(FinalRoundRule::AcceptAnyNonzero);
                if !capitulates && r.declared_threshold(round).is_none() {
                    missing_cases.push(Gap::UncoveredRound(round));
                }
            }
        }
    }
    CompletenessReport { missing_cases }
}

/// Personality bands as whole percentages of the pot. The defaults are the
/// one-dollar thresholds: fair offers 40..=60, greedy offers below 50, fair
/// receivers threshold 40..=50, greedy receivers threshold above 50.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalityBands {
    pub fair_offer: (u32, u32),
    pub greedy_offer_below: u32,
    pub fair_threshold: (u32, u32),
    pub greedy_threshold_above: u32,
    /// Boundary used when grading a fair receiver's first decision.
    pub fair_accept_from: u32,
    /// A greedy receiver only accepts offers strictly above this share.
    pub greedy_accept_above: u32,
}

impl Default for PersonalityBands {
    fn default() -> Self {
        PersonalityBands {
            fair_offer: (40, 60),
            greedy_offer_below: 50,
            fair_threshold: (40, 50),
            greedy_threshold_above: 50,
            fair_accept_from: 40,
            greedy_accept_above: 50,
        }
    }
}

/// Compares `amount` against `percent`% of `pot` exactly.
pub(crate) fn share_cmp(amount: Money, pot: Money, percent: u32) -> std::cmp::Ordering {
    (u64::from(amount.cents()) * 100).cmp(&(u64::from(pot.cents()) * u64::from(percent)))
}

/// Smallest amount that is at least `percent`% of `pot`.
pub(crate) fn share_ceil(pot: Money, percent: u32) -> Money {
    let scaled = u64::from(pot.cents()) * u64::from(percent);
    Money::from_cents(scaled.div_ceil(100) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Consistency {
    Consistent,
    Inconsistent,
    /// The field the check needs was never declared.
    Undecidable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub outcome: Consistency,
    pub reason: String,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.outcome == Consistency::Consistent
    }
}

pub fn check_personality_consistency(
    spec: &StrategySpec,
    personality: Personality,
    config: &GameConfig,
) -> ConsistencyReport {
    check_personality_consistency_with(spec, personality, config, &PersonalityBands::default())
}

pub fn check_personality_consistency_with(
    spec: &StrategySpec,
    personality: Personality,
    config: &GameConfig,
    bands: &PersonalityBands,
) -> ConsistencyReport {
    use std::cmp::Ordering::*;
    let pot = config.pot();
    let report = |ok: bool, reason: String| ConsistencyReport {
        outcome: if ok {
            Consistency::Consistent
        } else {
            Consistency::Inconsistent
        },
        reason,
    };
    match &spec.parsed {
        ParsedStrategy::Proposer(p) => {
            let Some(offer) = p.initial_offer else {
                return ConsistencyReport {
                    outcome: Consistency::Undecidable,
                    reason: "no initial offer declared".into(),
                };
            };
            match personality {
                Personality::Fair => {
                    let (lo, hi) = bands.fair_offer;
                    let ok = share_cmp(offer, pot, lo) != Less && share_cmp(offer, pot, hi) != Greater;
                    report(
                        ok,
                        format!("fair initial offer {offer} must be within {lo}%..={hi}% of {pot}"),
                    )
                }
                Personality::Greedy => {
                    let below = bands.greedy_offer_below;
                    let ok = share_cmp(offer, pot, below) == Less;
                    report(
                        ok,
                        format!("greedy initial offer {offer} must be below {below}% of {pot}"),
                    )
                }
            }
        }
        ParsedStrategy::Receiver(r) => {
            let Some(threshold) = r.declared_threshold(1) else {
                return ConsistencyReport {
                    outcome: Consistency::Undecidable,
                    reason: "no first-round threshold declared".into(),
                };
            };
            match personality {
                Personality::Fair => {
                    let (lo, hi) = bands.fair_threshold;
                    let ok = share_cmp(threshold, pot, lo) != Less && share_cmp(threshold, pot, hi) != Greater;
                    report(
                        ok,
                        format!("fair first-round threshold {threshold} must be within {lo}%..={hi}% of {pot}"),
                    )
                }
                Personality::Greedy => {
                    let above = bands.greedy_threshold_above;
                    let ok = share_cmp(threshold, pot, above) == Greater;
                    report(
                        ok,
                        format!("greedy first-round threshold {threshold} must exceed {above}% of {pot}"),
                    )
                }
            }
        }
    }
}

/// A prescribed amount: `nominal` is the single value a scripted player uses,
/// `[low, high]` is everything the rule allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Band {
    pub nominal: Money,
    pub low: Money,
    pub high: Money,
}

impl Band {
    pub fn exact(m: Money) -> Self {
        Band {
            nominal: m,
            low: m,
            high: m,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.low == self.high
    }

    pub fn contains(&self, m: Money) -> bool {
        self.low <= m && m <= self.high
    }

    /// Whether `m` lies within `tolerance` of the band.
    pub fn contains_with(&self, m: Money, tolerance: Money) -> bool {
        self.low.saturating_sub(tolerance) <= m && m <= self.high.saturating_add(tolerance)
    }

    fn cap(self, ceiling: Money) -> Band {
        Band {
            nominal: self.nominal.min(ceiling),
            low: self.low.min(ceiling),
            high: self.high.min(ceiling),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Offer(Money),
    Decide(Decision),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Offer(m) => write!(f, "offer {m}"),
            Action::Decide(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrescribedAction {
    Offer(Band),
    /// Accept iff the pending offer reaches the threshold. When the threshold
    /// is a band, offers inside it may go either way.
    Respond {
        offer: Money,
        threshold: Band,
    },
}

impl PrescribedAction {
    /// The decision the strategy requires, or `None` when either is allowed.
    pub fn decision(&self) -> Option<Decision> {
        match *self {
            PrescribedAction::Offer(_) => None,
            PrescribedAction::Respond { offer, threshold } => {
                if offer >= threshold.high {
                    Some(Decision::Accept)
                } else if offer < threshold.low {
                    Some(Decision::Reject)
                } else {
                    None
                }
            }
        }
    }

    /// The single action a scripted player takes.
    pub fn nominal_action(&self) -> Action {
        match *self {
            PrescribedAction::Offer(band) => Action::Offer(band.nominal),
            PrescribedAction::Respond { offer, threshold } => Action::Decide(if offer >= threshold.nominal {
                Decision::Accept
            } else {
                Decision::Reject
            }),
        }
    }

    /// Whether `actual` follows this prescription within `tolerance`.
    pub fn admits(&self, actual: Action, tolerance: Money) -> bool {
        match (*self, actual) {
            (PrescribedAction::Offer(band), Action::Offer(m)) => band.contains_with(m, tolerance),
            (PrescribedAction::Respond { offer, threshold }, Action::Decide(d)) => match d {
                Decision::Accept => offer.saturating_add(tolerance) >= threshold.low,
                Decision::Reject => offer < threshold.high.saturating_add(tolerance),
            },
            _ => false,
        }
    }
}

impl fmt::Display for PrescribedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrescribedAction::Offer(b) if b.is_exact() => write!(f, "offer {}", b.nominal),
            PrescribedAction::Offer(b) => write!(f, "offer {}..={}", b.low, b.high),
            PrescribedAction::Respond { offer, threshold } => match self.decision() {
                Some(d) => write!(f, "{d} {offer}"),
                None => write!(
                    f,
                    "either decision on {offer} (threshold {}..={})",
                    threshold.low, threshold.high
                ),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy does not cover this state: {0}")]
    Uncovered(Gap),
    #[error("round {round} queried with {history} rounds of history")]
    HistoryMismatch { round: u32, history: usize },
    #[error("round {round} is outside the configured {rounds} rounds")]
    RoundOutOfRange { round: u32, rounds: u32 },
    #[error("a receiver prescription needs a pending offer")]
    MissingPendingOffer,
}

/// What the strategy says to do in `round`, given the rounds already played.
pub fn prescribed_action(
    spec: &StrategySpec,
    config: &GameConfig,
    history: &[RoundOutcome],
    round: u32,
    pending_offer: Option<Money>,
) -> Result<PrescribedAction, StrategyError> {
    if round < 1 || round > config.rounds() {
        return Err(StrategyError::RoundOutOfRange {
            round,
            rounds: config.rounds(),
        });
    }
    if history.len() as u32 + 1 != round {
        return Err(StrategyError::HistoryMismatch {
            round,
            history: history.len(),
        });
    }
    match &spec.parsed {
        ParsedStrategy::Proposer(p) => prescribe_offer(p, config, history).map(PrescribedAction::Offer),
        ParsedStrategy::Receiver(r) => {
            let offer = pending_offer.ok_or(StrategyError::MissingPendingOffer)?;
            let threshold = prescribe_threshold(r, config, history, round)?;
            Ok(PrescribedAction::Respond { offer, threshold })
        }
    }
}

fn prescribe_offer(p: &ProposerStrategy, config: &GameConfig, history: &[RoundOutcome]) -> Result<Band, StrategyError> {
    let pot = config.pot();
    let Some(prev) = history.last() else {
        return p
            .initial_offer
            .map(|m| Band::exact(m.min(pot)))
            .ok_or(StrategyError::Uncovered(Gap::NoInitialOffer));
    };
    let rule = match prev.decision {
        Decision::Accept => p.on_accept.ok_or(StrategyError::Uncovered(Gap::NoAcceptBranch))?,
        Decision::Reject => p.on_reject.ok_or(StrategyError::Uncovered(Gap::NoRejectBranch))?,
    };
    let band = rule.apply(prev.offer, pot);
    match (rule.is_increase(), p.cutoff) {
        (true, Some(Cutoff::At(limit))) if prev.offer >= limit => Ok(Band::exact(prev.offer)),
        (true, Some(Cutoff::At(limit))) => Ok(band.cap(limit)),
        _ => Ok(band),
    }
}

fn prescribe_threshold(
    r: &ReceiverStrategy,
    config: &GameConfig,
    history: &[RoundOutcome],
    round: u32,
) -> Result<Band, StrategyError> {
    let pot = config.pot();
    let reject_all = pot.saturating_add(Money::from_cents(1));
    if round == config.rounds() && config.rounds() > 1 && r.final_round_rule == Some(FinalRoundRule::AcceptAnyNonzero) {
        return Ok(Band::exact(Money::from_cents(1)));
    }
    let base = r
        .declared_threshold(round)
        .ok_or(StrategyError::Uncovered(Gap::UncoveredRound(round)))?
        .min(reject_all);
    // Concessions accrue only over the rejections before the first acceptance.
    let rejections = history.iter().take_while(|o| o.decision == Decision::Reject).count() as u32;
    match r.concession {
        Some(rule) if rejections > 0 => Ok(rule.apply_times(base, rejections, reject_all)),
        _ => Ok(Band::exact(base)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdherenceTolerance {
    pub proposer: Money,
    pub receiver: Money,
}

impl Default for AdherenceTolerance {
    fn default() -> Self {
        AdherenceTolerance {
            proposer: Money::from_cents(5),
            receiver: Money::ZERO,
        }
    }
}

impl AdherenceTolerance {
    pub fn uniform(tolerance: Money) -> Self {
        AdherenceTolerance {
            proposer: tolerance,
            receiver: tolerance,
        }
    }

    pub fn for_role(&self, role: Role) -> Money {
        match role {
            Role::Proposer => self.proposer,
            Role::Receiver => self.receiver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deviation {
    pub round: u32,
    pub role: Role,
    pub expected: PrescribedAction,
    pub actual: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdherenceReport {
    pub proposer_adherent: bool,
    pub receiver_adherent: bool,
    pub deviations: Vec<Deviation>,
    /// States the strategy does not cover; charged to completeness instead.
    pub uncovered: Vec<(u32, Role)>,
}

impl AdherenceReport {
    pub fn adherent(&self, role: Role) -> bool {
        match role {
            Role::Proposer => self.proposer_adherent,
            Role::Receiver => self.receiver_adherent,
        }
    }

    pub fn deviated(&self, round: u32, role: Role) -> bool {
        self.deviations.iter().any(|d| d.round == round && d.role == role)
    }

    pub fn is_uncovered(&self, round: u32, role: Role) -> bool {
        self.uncovered.contains(&(round, role))
    }
}

/// Compares every played action with what the player's own strategy prescribes.
pub fn check_adherence(
    proposer: &StrategySpec,
    receiver: &StrategySpec,
    config: &GameConfig,
    rounds: &[RoundOutcome],
    tolerance: AdherenceTolerance,
) -> AdherenceReport {
    let mut deviations = Vec::new();
    let mut uncovered = Vec::new();
    for (idx, outcome) in rounds.iter().enumerate() {
        let history = &rounds[..idx];
        let round = idx as u32 + 1;
        let checks = [
            (Role::Proposer, proposer, None, Action::Offer(outcome.offer)),
            (
                Role::Receiver,
                receiver,
                Some(outcome.offer),
                Action::Decide(outcome.decision),
            ),
        ];
        for (role, spec, pending, actual) in checks {
            match prescribed_action(spec, config, history, round, pending) {
                Ok(expected) => {
                    if !expected.admits(actual, tolerance.for_role(role)) {
                        deviations.push(Deviation {
                            round,
                            role,
                            expected,
                            actual,
                        });
                    }
                }
                Err(_) => uncovered.push((round, role)),
            }
        }
    }
    AdherenceReport {
        proposer_adherent: !deviations.iter().any(|d| d.role == Role::Proposer),
        receiver_adherent: !deviations.iter().any(|d| d.role == Role::Receiver),
        deviations,
        uncovered,
    }
}
