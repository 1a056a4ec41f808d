use std::collections::BTreeMap;

use proptest::prelude::*;
use ultimatum_core::parse::{parse_canonical, parse_strategy_text, serialize_canonical};
use ultimatum_core::stats::{chi_square_2x2, two_proportion_z, ContingencyTable2x2};
use ultimatum_core::strategy::{
    check_adherence, check_completeness, check_personality_consistency, prescribed_action, Action, AdherenceTolerance,
    AdjustRule, Cutoff, FinalRoundRule, ParsedStrategy, ProposerStrategy, ReceiverStrategy, Step, StrategyError,
};
use ultimatum_core::{
    Decision, GameConfig, GameState, Money, Personality, PersonalityPair, RawLog, Role, RoundOutcome, StrategySpec,
    Structure, Transcript,
};

fn config() -> impl Strategy<Value = GameConfig> {
    (1u32..=300, 1u32..=8).prop_map(|(pot, rounds)| GameConfig::new(Money::from_cents(pot), rounds).unwrap())
}

fn decision() -> impl Strategy<Value = Decision> {
    prop_oneof![Just(Decision::Accept), Just(Decision::Reject)]
}

fn personality() -> impl Strategy<Value = Personality> {
    prop_oneof![Just(Personality::Fair), Just(Personality::Greedy)]
}

fn money(max: u32) -> impl Strategy<Value = Money> {
    (0..=max).prop_map(Money::from_cents)
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        Just(Step::Open),
        (1u32..=30).prop_map(|c| Step::Exact(Money::from_cents(c)))
    ]
}

fn rule() -> impl Strategy<Value = AdjustRule> {
    prop_oneof![
        Just(AdjustRule::Keep),
        step().prop_map(AdjustRule::IncreaseBy),
        step().prop_map(AdjustRule::DecreaseBy),
        money(100).prop_map(AdjustRule::SetTo),
    ]
}

fn proposer_strategy() -> impl Strategy<Value = ProposerStrategy> {
    (
        proptest::option::of(money(100)),
        proptest::option::of(rule()),
        proptest::option::of(rule()),
        proptest::option::of(prop_oneof![Just(Cutoff::Unspecified), money(100).prop_map(Cutoff::At)]),
    )
        .prop_map(|(initial_offer, on_accept, on_reject, cutoff)| ProposerStrategy {
            initial_offer,
            on_accept,
            on_reject,
            cutoff,
        })
}

fn receiver_strategy() -> impl Strategy<Value = ReceiverStrategy> {
    (
        proptest::option::of(money(101)),
        proptest::collection::btree_map(1u32..=8, money(101), 0..4),
        proptest::option::of(rule()),
        proptest::option::of(prop_oneof![
            Just(FinalRoundRule::KeepThreshold),
            Just(FinalRoundRule::AcceptAnyNonzero)
        ]),
    )
        .prop_map(
            |(default_threshold, round_thresholds, concession, final_round_rule)| ReceiverStrategy {
                default_threshold,
                round_thresholds,
                concession,
                final_round_rule,
            },
        )
}

fn complete_proposer() -> impl Strategy<Value = ProposerStrategy> {
    (proposer_strategy(), money(100), rule(), rule()).prop_map(|(mut p, initial, accept, reject)| {
        p.initial_offer.get_or_insert(initial);
        p.on_accept.get_or_insert(accept);
        p.on_reject.get_or_insert(reject);
        p
    })
}

fn complete_receiver() -> impl Strategy<Value = ReceiverStrategy> {
    (receiver_strategy(), money(101)).prop_map(|(mut r, threshold)| {
        r.default_threshold.get_or_insert(threshold);
        r
    })
}

fn actions(config: GameConfig) -> impl Strategy<Value = Vec<(Money, Decision)>> {
    proptest::collection::vec((money(config.pot().cents()), decision()), config.rounds() as usize)
}

fn play(config: GameConfig, actions: &[(Money, Decision)]) -> Vec<RoundOutcome> {
    let mut state = GameState::new(config).unwrap();
    let mut out = Vec::new();
    for &(offer, decision) in actions {
        let (next, outcome) = state.play_round(offer, decision).unwrap();
        out.push(outcome);
        state = next;
    }
    out
}

fn transcript() -> impl Strategy<Value = Transcript> {
    config()
        .prop_flat_map(|c| {
            (
                Just(c),
                0..=c.rounds() as usize,
                actions(c),
                (personality(), personality()),
                prop_oneof![Just(Structure::SingleModel), Just(Structure::MultiAgent)],
                (proposer_strategy(), ".*", receiver_strategy(), ".*"),
                proptest::collection::vec(("[a-z]{1,8}", ".*"), 0..3),
            )
        })
        .prop_map(
            |(config, played, acts, (p, r), structure, (ps, praw, rs, rraw), logs)| Transcript {
                config,
                pair: PersonalityPair::new(p, r),
                structure,
                proposer_strategy: StrategySpec::proposer(praw, ps),
                receiver_strategy: StrategySpec::receiver(rraw, rs),
                rounds: play(config, &acts[..played]),
                raw_logs: logs.into_iter().map(|(l, t)| RawLog::new(l, t)).collect(),
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn engine_conserves_pot_and_replays_deterministically(
        (config, acts) in config().prop_flat_map(|c| (Just(c), actions(c)))
    ) {
        let outcomes = play(config, &acts);
        for (i, o) in outcomes.iter().enumerate() {
            prop_assert!(o.conserves(config.pot()));
            prop_assert_eq!(o.round as usize, i + 1);
            let total = o.proposer_payoff.cents() + o.receiver_payoff.cents();
            match o.decision {
                Decision::Accept => prop_assert_eq!(total, config.pot().cents()),
                Decision::Reject => prop_assert_eq!(total, 0),
            }
        }
        let a = GameState::replay(config, acts.iter().copied()).unwrap();
        let b = GameState::replay(config, acts.iter().copied()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.history(), &outcomes[..]);
        prop_assert!(a.is_finished());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn offers_above_the_pot_are_refused(config in config(), extra in 1u32..50) {
        let state = GameState::new(config).unwrap();
        prop_assert!(state.submit_offer(config.pot().saturating_add(Money::from_cents(extra))).is_err());
    }

    #[test]
    fn canonical_round_trip(t in transcript()) {
        let text = serialize_canonical(&t);
        let back = parse_canonical(&text).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn chi_square_equals_z_squared(a in 0u64..200, b in 0u64..200, c in 0u64..200, d in 0u64..200) {
        let table = ContingencyTable2x2::new(a, b, c, d);
        let chi = chi_square_2x2::<f64>(&table);
        let z = two_proportion_z::<f64>(a, a + b, c, c + d);
        match (chi, z) {
            (Ok(chi), Ok(z)) => {
                let z2 = z.statistic * z.statistic;
                prop_assert!((chi.statistic - z2).abs() <= 1e-9 * chi.statistic.max(1.0), "{} vs {}", chi.statistic, z2);
                prop_assert!((chi.p_two_tailed - z.p_two_tailed).abs() <= 1e-9);
            }
            (Err(_), Err(_)) => {}
            (chi, z) => prop_assert!(false, "degeneracy disagrees: {:?} / {:?}", chi, z),
        }
    }

    #[test]
    fn z_is_antisymmetric(
        (s1, n1) in (1u64..60).prop_flat_map(|n| (0..=n, Just(n))),
        (s2, n2) in (1u64..60).prop_flat_map(|n| (0..=n, Just(n))),
    ) {
        if let (Ok(a), Ok(b)) = (two_proportion_z::<f64>(s1, n1, s2, n2), two_proportion_z::<f64>(s2, n2, s1, n1)) {
            prop_assert!((a.statistic + b.statistic).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_cells_doubles_chi_square(a in 0u64..100, b in 0u64..100, c in 0u64..100, d in 0u64..100) {
        let table = ContingencyTable2x2::new(a, b, c, d);
        if let Ok(r) = chi_square_2x2::<f64>(&table) {
            let doubled = chi_square_2x2::<f64>(&table.scaled(2)).unwrap();
            prop_assert!((doubled.statistic - 2.0 * r.statistic).abs() <= 1e-9 * r.statistic.max(1.0));
        }
    }

    #[test]
    fn uncovered_states_are_reported_gaps(
        (config, ps, rs, acts) in config().prop_flat_map(|c| (Just(c), proposer_strategy(), receiver_strategy(), actions(c)))
    ) {
        let specs = [StrategySpec::proposer("", ps), StrategySpec::receiver("", rs)];
        let outcomes = play(config, &acts);
        for spec in &specs {
            let report = check_completeness(spec, &config);
            for (i, &(offer, _)) in acts.iter().enumerate() {
                let pending = (spec.role() == Role::Receiver).then_some(offer);
                match prescribed_action(spec, &config, &outcomes[..i], i as u32 + 1, pending) {
                    Err(StrategyError::Uncovered(gap)) => {
                        prop_assert!(report.missing_cases.contains(&gap), "{:?} not in {:?}", gap, report.missing_cases);
                    }
                    Err(e) => prop_assert!(false, "unexpected error {}", e),
                    Ok(_) => {}
                }
            }
        }
    }

    #[test]
    fn nominal_play_is_adherent(
        (config, ps, rs) in config().prop_flat_map(|c| (Just(c), complete_proposer(), complete_receiver()))
    ) {
        let p = StrategySpec::proposer("", ps);
        let r = StrategySpec::receiver("", rs);
        prop_assert!(check_completeness(&p, &config).complete() && check_completeness(&r, &config).complete());
        let mut state = GameState::new(config).unwrap();
        while !state.is_finished() {
            let round = state.round_index();
            let Action::Offer(offer) = prescribed_action(&p, &config, state.history(), round, None).unwrap().nominal_action() else {
                unreachable!()
            };
            let offer = offer.min(config.pot());
            let Action::Decide(d) = prescribed_action(&r, &config, state.history(), round, Some(offer)).unwrap().nominal_action() else {
                unreachable!()
            };
            state = state.play_round(offer, d).unwrap().0;
        }
        let report = check_adherence(&p, &r, &config, state.history(), AdherenceTolerance::uniform(Money::ZERO));
        prop_assert!(report.adherent(Role::Proposer) && report.adherent(Role::Receiver), "{:?}", report.deviations);
    }
}

const PROPOSER_CLAUSES: [&str; 4] = [
    "Initial offer: offer $0.30 to the receiver.",
    "If the receiver accepts, keep the same offer.",
    "If the receiver rejects, increase the offer by $0.05.",
    "Cut-off: never offer more than $0.50.",
];

const RECEIVER_CLAUSES: [&str; 3] = [
    "Accept offers of $0.55 or more.",
    "If offers stay low, lower the threshold by $0.05.",
    "In the final round, accept any non-zero offer.",
];

fn shuffled<const N: usize>(clauses: [&'static str; N]) -> impl Strategy<Value = (Vec<&'static str>, Vec<bool>)> {
    (
        Just(clauses.to_vec()).prop_shuffle(),
        proptest::collection::vec(any::<bool>(), N),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn clause_order_does_not_change_verdicts((clauses, keep) in shuffled(PROPOSER_CLAUSES), (rclauses, rkeep) in shuffled(RECEIVER_CLAUSES)) {
        let config = GameConfig::default();
        for (role, clauses, keep) in [(Role::Proposer, clauses, keep), (Role::Receiver, rclauses, rkeep)] {
            let kept: Vec<&str> = clauses.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
            let mut sorted = kept.clone();
            sorted.sort_unstable();
            let (a, _) = parse_strategy_text(&kept.join("\n\n"), role, &config);
            let (b, _) = parse_strategy_text(&sorted.join("\n\n"), role, &config);
            prop_assert_eq!(check_completeness(&a, &config), check_completeness(&b, &config));
            for personality in [Personality::Fair, Personality::Greedy] {
                prop_assert_eq!(
                    check_personality_consistency(&a, personality, &config).outcome,
                    check_personality_consistency(&b, personality, &config).outcome
                );
            }
            prop_assert_eq!(&a.parsed, &b.parsed);
        }
    }
}

#[test]
fn reordered_strategy_is_fully_parsed() {
    let config = GameConfig::default();
    let (p, _) = parse_strategy_text(&PROPOSER_CLAUSES.join(" "), Role::Proposer, &config);
    assert!(check_completeness(&p, &config).complete());
    let expected = ParsedStrategy::Proposer(ProposerStrategy {
        initial_offer: Some(Money::from_cents(30)),
        on_accept: Some(AdjustRule::Keep),
        on_reject: Some(AdjustRule::IncreaseBy(Step::Exact(Money::from_cents(5)))),
        cutoff: Some(Cutoff::At(Money::from_cents(50))),
    });
    assert_eq!(p.parsed, expected);
    let (r, _) = parse_strategy_text(&RECEIVER_CLAUSES.join("\n"), Role::Receiver, &config);
    let expected = ParsedStrategy::Receiver(ReceiverStrategy {
        default_threshold: Some(Money::from_cents(55)),
        round_thresholds: BTreeMap::new(),
        concession: Some(AdjustRule::DecreaseBy(Step::Exact(Money::from_cents(5)))),
        final_round_rule: Some(FinalRoundRule::AcceptAnyNonzero),
    });
    assert_eq!(r.parsed, expected);
}
