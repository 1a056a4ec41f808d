use std::collections::BTreeMap;

use ultimatum_core::rubric::ErrorClass;
use ultimatum_core::stats::{chi_square_2x2, two_proportion_z, ContingencyTable2x2, GroupRate};
use ultimatum_core::{PersonalityPair, Role, Structure, TestResultF64};

use super::record::RunRecord;
use crate::orchestrator::FailureCause;

const EMPTY: GroupRate = GroupRate { successes: 0, count: 0 };

fn tally(rate: &mut GroupRate, success: bool) {
    rate.count += 1;
    rate.successes += u64::from(success);
}

/// Errors among completed runs, split by source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBreakdown {
    pub total: u64,
    /// Runs with a strategy error, alone or together with a gameplay error.
    pub strategy: u64,
    pub gameplay: u64,
    pub both: u64,
    /// Strategy share against gameplay share; `None` when degenerate.
    pub z: Option<TestResultF64>,
}

impl ErrorBreakdown {
    pub fn from_counts(strategy_only: u64, gameplay_only: u64, both: u64) -> Self {
        let total = strategy_only + gameplay_only + both;
        let strategy = strategy_only + both;
        let gameplay = gameplay_only + both;
        ErrorBreakdown {
            total,
            strategy,
            gameplay,
            both,
            z: two_proportion_z::<f64>(strategy, total, gameplay, total).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub label: String,
    pub structure: Structure,
    pub model: String,
    pub runs: u64,
    pub failed: u64,
    pub failures: BTreeMap<FailureCause, u64>,
    pub human_consistent: GroupRate,
    pub errors: ErrorBreakdown,
    pub by_pair: BTreeMap<PersonalityPair, GroupRate>,
    pub both_complete: GroupRate,
    pub both_consistent: GroupRate,
    pub robust: GroupRate,
    pub proposer_complete: GroupRate,
    pub proposer_consistent: GroupRate,
    pub receiver_complete: GroupRate,
    pub receiver_consistent: GroupRate,
}

/// Best multi-agent group against best single-model group.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub multi_agent: String,
    pub single_model: String,
    pub table: ContingencyTable2x2,
    pub result: Option<TestResultF64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTables {
    /// Multi-agent groups first, then single-model, each by model name.
    pub groups: Vec<GroupSummary>,
    pub pairs: Vec<PersonalityPair>,
    /// Human-consistent outcomes.
    pub headline: Option<Comparison>,
    /// Robust strategies: both complete and consistent.
    pub robustness: Option<Comparison>,
}

struct Counts {
    runs: u64,
    failed: u64,
    failures: BTreeMap<FailureCause, u64>,
    classes: BTreeMap<ErrorClass, u64>,
    by_pair: BTreeMap<PersonalityPair, GroupRate>,
    rates: [GroupRate; 8],
}

impl Counts {
    fn new() -> Self {
        Counts {
            runs: 0,
            failed: 0,
            failures: BTreeMap::new(),
            classes: BTreeMap::new(),
            by_pair: BTreeMap::new(),
            rates: [EMPTY; 8],
        }
    }
}

// Indices into `Counts::rates`.
const HUMAN: usize = 0;
const BOTH_COMPLETE: usize = 1;
const BOTH_CONSISTENT: usize = 2;
const ROBUST: usize = 3;
const P_COMPLETE: usize = 4;
const P_CONSISTENT: usize = 5;
const R_COMPLETE: usize = 6;
const R_CONSISTENT: usize = 7;

/// Computes every table. Failed runs are counted but kept out of rate
/// denominators.
pub fn aggregate(records: &[RunRecord]) -> SummaryTables {
    let mut groups: BTreeMap<(std::cmp::Reverse<Structure>, String), Counts> = BTreeMap::new();
    let mut pairs: Vec<PersonalityPair> = Vec::new();
    for r in records {
        let key = (std::cmp::Reverse(r.config.structure), r.config.model.clone());
        let c = groups.entry(key).or_insert_with(Counts::new);
        c.runs += 1;
        if !pairs.contains(&r.config.pair) {
            pairs.push(r.config.pair);
        }
        let Some(v) = r.verdict() else {
            c.failed += 1;
            *c.failures
                .entry(r.failure().expect("failed run has a cause"))
                .or_default() += 1;
            continue;
        };
        *c.classes.entry(v.error_class).or_default() += 1;
        tally(c.by_pair.entry(r.config.pair).or_insert(EMPTY), v.human_consistent());
        tally(&mut c.rates[HUMAN], v.human_consistent());
        tally(
            &mut c.rates[BOTH_COMPLETE],
            v.proposer_strategy_complete && v.receiver_strategy_complete,
        );
        tally(
            &mut c.rates[BOTH_CONSISTENT],
            v.proposer_strategy_consistent && v.receiver_strategy_consistent,
        );
        tally(&mut c.rates[ROBUST], v.strategies_robust());
        tally(&mut c.rates[P_COMPLETE], v.proposer_strategy_complete);
        tally(&mut c.rates[P_CONSISTENT], v.proposer_strategy_consistent);
        tally(&mut c.rates[R_COMPLETE], v.receiver_strategy_complete);
        tally(&mut c.rates[R_CONSISTENT], v.receiver_strategy_consistent);
    }
    pairs.sort();

    let groups: Vec<GroupSummary> = groups
        .into_iter()
        .map(|((std::cmp::Reverse(structure), model), c)| {
            let class = |k: ErrorClass| c.classes.get(&k).copied().unwrap_or(0);
            GroupSummary {
                label: format!("{}-{}", structure.table_label(), model),
                structure,
                model,
                runs: c.runs,
                failed: c.failed,
                failures: c.failures,
                human_consistent: c.rates[HUMAN],
                errors: ErrorBreakdown::from_counts(
                    class(ErrorClass::StrategyOnly),
                    class(ErrorClass::GameplayOnly),
                    class(ErrorClass::Both),
                ),
                by_pair: c.by_pair,
                both_complete: c.rates[BOTH_COMPLETE],
                both_consistent: c.rates[BOTH_CONSISTENT],
                robust: c.rates[ROBUST],
                proposer_complete: c.rates[P_COMPLETE],
                proposer_consistent: c.rates[P_CONSISTENT],
                receiver_complete: c.rates[R_COMPLETE],
                receiver_consistent: c.rates[R_CONSISTENT],
            }
        })
        .collect();

    let headline = compare(&groups, |g| g.human_consistent);
    let robustness = compare(&groups, |g| g.robust);
    SummaryTables {
        groups,
        pairs,
        headline,
        robustness,
    }
}

fn best(
    groups: &[GroupSummary],
    structure: Structure,
    rate: impl Fn(&GroupSummary) -> GroupRate,
) -> Option<&GroupSummary> {
    groups
        .iter()
        .filter(|g| g.structure == structure)
        .filter_map(|g| rate(g).rate().map(|r| (g, r)))
        .fold(None, |acc: Option<(&GroupSummary, _)>, (g, r)| match acc {
            Some((_, best)) if best >= r => acc,
            _ => Some((g, r)),
        })
        .map(|(g, _)| g)
}

fn compare(groups: &[GroupSummary], rate: impl Fn(&GroupSummary) -> GroupRate + Copy) -> Option<Comparison> {
    let a = best(groups, Structure::MultiAgent, rate)?;
    let b = best(groups, Structure::SingleModel, rate)?;
    let (ra, rb) = (rate(a), rate(b));
    let table = ContingencyTable2x2::from_proportions(ra.successes, ra.count, rb.successes, rb.count)?;
    Some(Comparison {
        multi_agent: a.label.clone(),
        single_model: b.label.clone(),
        table,
        result: chi_square_2x2::<f64>(&table).ok(),
    })
}

impl GroupSummary {
    pub fn strategy_complete(&self, role: Role) -> GroupRate {
        match role {
            Role::Proposer => self.proposer_complete,
            Role::Receiver => self.receiver_complete,
        }
    }

    pub fn strategy_consistent(&self, role: Role) -> GroupRate {
        match role {
            Role::Proposer => self.proposer_consistent,
            Role::Receiver => self.receiver_consistent,
        }
    }
}
