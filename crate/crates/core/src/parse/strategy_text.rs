//! Strategy extraction from free text.
//!
//! Tier one reads `key = value` lines (see [`canonical_strategy_text`]).
//! Tier two walks paragraphs and sentences: a conditional clause ("if the
//! offer is rejected") sets the branch, and the rest of the sentence, or the
//! following sentences of the same paragraph, supply the rule.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::amounts::{extract_amounts, AmountMatch};
use super::text::{decision_after, find_word, has_word, number_value, ordinal_word, paragraphs, sentences, tokens};
use super::ParseDiagnostics;
use crate::game::{Decision, GameConfig, Money};
use crate::strategy::{
    AdjustRule, Cutoff, FinalRoundRule, ParsedStrategy, ProposerStrategy, ReceiverStrategy, Role, Step, StrategySpec,
};

const CONDITION_WORDS: [&str; 11] = [
    "if",
    "when",
    "whenever",
    "after",
    "once",
    "upon",
    "following",
    "should",
    "case",
    "each",
    "every",
];
const OFFER_WORDS: [&str; 11] = [
    "offer",
    "offers",
    "offered",
    "offering",
    "propose",
    "proposes",
    "proposed",
    "proposing",
    "give",
    "gives",
    "giving",
];
const INCREASE_WORDS: [&str; 10] = [
    "increase",
    "increases",
    "increasing",
    "raise",
    "raises",
    "raising",
    "bump",
    "boost",
    "higher",
    "upward",
];
const DECREASE_WORDS: [&str; 14] = [
    "decrease",
    "decreases",
    "decreasing",
    "lower",
    "lowers",
    "lowering",
    "reduce",
    "reduces",
    "reducing",
    "drop",
    "dropping",
    "relax",
    "relaxing",
    "loosen",
];
const KEEP_WORDS: [&str; 9] = [
    "keep",
    "keeps",
    "maintain",
    "maintains",
    "continue",
    "continues",
    "same",
    "stick",
    "repeat",
];
const THRESHOLD_NOUNS: [&str; 9] = [
    "threshold",
    "thresholds",
    "minimum",
    "standards",
    "expectations",
    "demands",
    "bar",
    "requirement",
    "limit",
];

static CANONICAL_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(initial_offer|on_accept|on_reject|cutoff|threshold|threshold_round_\d+|concession|final_round)\s*=\s*(.*?)\s*$")
        .expect("canonical strategy regex")
});

const AMOUNT_RE: &str = r"(\$\s?\d*(?:\.\d+)?|\d+\s*(?:cents?|¢))";

static THRESHOLD_CUES: LazyLock<Vec<(Regex, u32)>> = LazyLock::new(|| {
    let cue = |pattern: &str, bump: u32| {
        let full = pattern.replace("AMT", AMOUNT_RE);
        (Regex::new(&format!("(?i){full}")).expect("threshold cue regex"), bump)
    };
    vec![
        cue(r"AMT\s+or\s+(?:more|higher|above|greater|better)", 0),
        cue(
            r"(?:at\s+or\s+above|equal\s+to\s+or\s+(?:greater|more|higher)\s+than)\s+AMT",
            0,
        ),
        cue(
            r"(?:at\s+least|no\s+less\s+than|not\s+less\s+than|minimum(?:\s+of)?|min\.?)\s+(?:of\s+)?AMT",
            0,
        ),
        cue(r"(?:below|under|less\s+than|lower\s+than)\s+AMT", 0),
        cue(
            r"(?:above|more\s+than|greater\s+than|exceeding|over|higher\s+than)\s+AMT",
            1,
        ),
        cue(r"threshold(?:\s+(?:of|at|is|to|=))?\s*:?\s*AMT", 0),
        cue(r"AMT\s+(?:\w+\s+)?threshold", 0),
    ]
});

static ROUND_RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\brounds?\s+(\d+|one|two|three|four|five)\s*(?:-|–|to|through|and)\s*(\d+|one|two|three|four|five)\b",
    )
    .expect("round range regex")
});

static FIRST_N_ROUNDS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bfirst\s+(\d+|two|three|four|five|six|seven|eight|nine)\s+rounds\b").expect("first rounds regex")
});

static SINGLE_ROUND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bround\s+(\d+|one|two|three|four|five)\b").expect("round regex"));

/// Parses a declared strategy for `role`. The raw text is kept verbatim.
pub fn parse_strategy_text(text: &str, role: Role, config: &GameConfig) -> (StrategySpec, ParseDiagnostics) {
    let mut diag = ParseDiagnostics::default();
    let canonical: Vec<(String, String)> = text
        .lines()
        .filter_map(|line| {
            let caps = CANONICAL_LINE.captures(line)?;
            Some((caps[1].to_string(), caps[2].to_string()))
        })
        .collect();
    let parsed = if !canonical.is_empty() {
        parse_canonical_lines(&canonical, role, config, &mut diag)
    } else {
        diag.heuristic();
        match role {
            Role::Proposer => ParsedStrategy::Proposer(heuristic_proposer(text, config, &mut diag)),
            Role::Receiver => ParsedStrategy::Receiver(heuristic_receiver(text, config, &mut diag)),
        }
    };
    (StrategySpec::new(text.trim(), parsed), diag)
}

/// Renders a parsed strategy as tier-one `key = value` lines.
pub fn canonical_strategy_text(parsed: &ParsedStrategy) -> String {
    let mut lines = Vec::new();
    match parsed {
        ParsedStrategy::Proposer(p) => {
            lines.push(format!("initial_offer = {}", opt_money(p.initial_offer)));
            lines.push(format!("on_accept = {}", opt_rule(p.on_accept)));
            lines.push(format!("on_reject = {}", opt_rule(p.on_reject)));
            let cutoff = match p.cutoff {
                None => "none".to_string(),
                Some(Cutoff::Unspecified) => "unspecified".to_string(),
                Some(Cutoff::At(m)) => m.to_string(),
            };
            lines.push(format!("cutoff = {cutoff}"));
        }
        ParsedStrategy::Receiver(r) => {
            lines.push(format!("threshold = {}", opt_money(r.default_threshold)));
            for (round, m) in &r.round_thresholds {
                lines.push(format!("threshold_round_{round} = {m}"));
            }
            lines.push(format!("concession = {}", opt_rule(r.concession)));
            let final_rule = match r.final_round_rule {
                None => "none",
                Some(FinalRoundRule::KeepThreshold) => "keep_threshold",
                Some(FinalRoundRule::AcceptAnyNonzero) => "accept_any_nonzero",
            };
            lines.push(format!("final_round = {final_rule}"));
        }
    }
    lines.join("\n")
}

fn opt_money(m: Option<Money>) -> String {
    m.map_or_else(|| "none".to_string(), |m| m.to_string())
}

fn opt_rule(rule: Option<AdjustRule>) -> String {
    let step = |s: Step| match s {
        Step::Exact(m) => m.to_string(),
        Step::Open => "open".to_string(),
    };
    match rule {
        None => "none".to_string(),
        Some(AdjustRule::Keep) => "keep".to_string(),
        Some(AdjustRule::IncreaseBy(s)) => format!("increase {}", step(s)),
        Some(AdjustRule::DecreaseBy(s)) => format!("decrease {}", step(s)),
        Some(AdjustRule::SetTo(m)) => format!("set {m}"),
    }
}

fn single_amount(value: &str) -> Option<Money> {
    match extract_amounts(value).as_slice() {
        [only] => Some(only.amount),
        _ => None,
    }
}

fn parse_rule_value(value: &str) -> Result<Option<AdjustRule>, String> {
    let lower = value.trim().to_ascii_lowercase();
    let (verb, rest) = lower.split_once(char::is_whitespace).unwrap_or((lower.as_str(), ""));
    let rest = rest.trim();
    let step = || -> Result<Step, String> {
        if rest == "open" {
            Ok(Step::Open)
        } else {
            single_amount(rest)
                .map(Step::Exact)
                .ok_or_else(|| format!("bad step `{rest}`"))
        }
    };
    match verb {
        "none" if rest.is_empty() => Ok(None),
        "keep" if rest.is_empty() => Ok(Some(AdjustRule::Keep)),
        "increase" => Ok(Some(AdjustRule::IncreaseBy(step()?))),
        "decrease" => Ok(Some(AdjustRule::DecreaseBy(step()?))),
        "set" => single_amount(rest)
            .map(|m| Some(AdjustRule::SetTo(m)))
            .ok_or_else(|| format!("bad amount `{rest}`")),
        _ => Err(format!("unknown rule `{value}`")),
    }
}

fn parse_money_value(value: &str) -> Result<Option<Money>, String> {
    if value.trim().eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    single_amount(value)
        .map(Some)
        .ok_or_else(|| format!("bad amount `{value}`"))
}

fn parse_canonical_lines(
    lines: &[(String, String)],
    role: Role,
    config: &GameConfig,
    diag: &mut ParseDiagnostics,
) -> ParsedStrategy {
    let mut proposer = ProposerStrategy::default();
    let mut receiver = ReceiverStrategy::default();
    for (key, value) in lines {
        let key_role = match key.as_str() {
            "initial_offer" | "on_accept" | "on_reject" | "cutoff" => Role::Proposer,
            _ => Role::Receiver,
        };
        if key_role != role {
            diag.warn(
                key.clone(),
                format!("{} key in a {} strategy ignored", key_role.name(), role.name()),
            );
            continue;
        }
        let result: Result<(), String> = match key.as_str() {
            "initial_offer" => parse_money_value(value).map(|m| proposer.initial_offer = m),
            "on_accept" => parse_rule_value(value).map(|r| proposer.on_accept = r),
            "on_reject" => parse_rule_value(value).map(|r| proposer.on_reject = r),
            "cutoff" => match value.trim().to_ascii_lowercase().as_str() {
                "none" => Ok(None),
                "unspecified" => Ok(Some(Cutoff::Unspecified)),
                other => single_amount(other)
                    .map(|m| Some(Cutoff::At(m)))
                    .ok_or_else(|| format!("bad cutoff `{value}`")),
            }
            .map(|c| proposer.cutoff = c),
            "threshold" => parse_money_value(value).map(|m| receiver.default_threshold = m),
            "concession" => parse_rule_value(value).map(|r| receiver.concession = r),
            "final_round" => match value.trim().to_ascii_lowercase().as_str() {
                "none" => Ok(None),
                "keep_threshold" => Ok(Some(FinalRoundRule::KeepThreshold)),
                "accept_any_nonzero" => Ok(Some(FinalRoundRule::AcceptAnyNonzero)),
                other => Err(format!("unknown final-round rule `{other}`")),
            }
            .map(|r| receiver.final_round_rule = r),
            round_key => {
                let round: u32 = round_key["threshold_round_".len()..].parse().unwrap_or(0);
                if round == 0 || round > config.rounds() {
                    Err(format!("round {round} outside 1..={}", config.rounds()))
                } else {
                    parse_money_value(value).map(|m| {
                        if let Some(m) = m {
                            receiver.round_thresholds.insert(round, m);
                        }
                    })
                }
            }
        };
        if let Err(message) = result {
            diag.warn(key.clone(), message);
        }
    }
    match role {
        Role::Proposer => ParsedStrategy::Proposer(proposer),
        Role::Receiver => ParsedStrategy::Receiver(receiver),
    }
}

/// Branch set by a conditional clause, with the byte offset of the condition word.
fn condition_branch(sentence: &str) -> Option<(Decision, usize)> {
    let toks = tokens(sentence);
    let cond = toks.iter().find(|t| CONDITION_WORDS.contains(&t.text.as_str()))?;
    decision_after(sentence, cond.start, true).map(|(d, _)| (d, cond.start))
}

/// An offer with an amount and no adjustment verb: "offer $0.30".
fn states_offer(clause: &str) -> bool {
    has_word(clause, &OFFER_WORDS)
        && !extract_amounts(clause).is_empty()
        && !has_word(clause, &INCREASE_WORDS)
        && !has_word(clause, &DECREASE_WORDS)
        && !has_word(clause, &KEEP_WORDS)
}

fn amounts_within_pot(text: &str, config: &GameConfig, diag: &mut ParseDiagnostics) -> Vec<AmountMatch> {
    extract_amounts(text)
        .into_iter()
        .filter(|m| {
            let ok = m.amount <= config.pot();
            if !ok {
                diag.warn(
                    text.chars().take(40).collect::<String>(),
                    format!("amount {} exceeds the pot", m.amount),
                );
            }
            ok
        })
        .collect()
}

/// First amount after byte `from`, else the nearest one before it.
fn amount_near(amounts: &[AmountMatch], from: usize) -> Option<Money> {
    amounts
        .iter()
        .find(|m| m.span.start >= from)
        .or_else(|| amounts.iter().rev().find(|m| m.span.start < from))
        .map(|m| m.amount)
}

/// Rule stated by a clause: a direction verb with an optional magnitude,
/// a keep verb, or a bare amount.
fn extract_rule(clause: &str, amounts: &[AmountMatch]) -> Option<AdjustRule> {
    let inc = find_word(clause, &INCREASE_WORDS);
    let dec = find_word(clause, &DECREASE_WORDS);
    let direction = match (inc, dec) {
        (Some(i), Some(d)) => Some((i < d, i.min(d))),
        (Some(i), None) => Some((true, i)),
        (None, Some(d)) => Some((false, d)),
        (None, None) => None,
    };
    if let Some((up, at)) = direction {
        let toks = tokens(clause);
        let after = |word: &str| toks.iter().find(|t| t.start > at && t.text == word).map(|t| t.start);
        if let Some(by) = after("by") {
            if let Some(m) = amounts.iter().find(|m| m.span.start > by) {
                return Some(if up {
                    AdjustRule::IncreaseBy(Step::Exact(m.amount))
                } else {
                    AdjustRule::DecreaseBy(Step::Exact(m.amount))
                });
            }
        }
        if let Some(to) = after("to") {
            if let Some(m) = amounts.iter().find(|m| m.span.start > to) {
                return Some(AdjustRule::SetTo(m.amount));
            }
        }
        return Some(if up {
            AdjustRule::IncreaseBy(Step::Open)
        } else {
            AdjustRule::DecreaseBy(Step::Open)
        });
    }
    if let Some(m) = amounts.first() {
        if has_word(clause, &["more", "extra", "additional"]) {
            return Some(AdjustRule::IncreaseBy(Step::Exact(m.amount)));
        }
        if has_word(clause, &["less", "fewer"]) {
            return Some(AdjustRule::DecreaseBy(Step::Exact(m.amount)));
        }
    }
    if has_word(clause, &KEEP_WORDS) {
        return Some(AdjustRule::Keep);
    }
    if has_word(clause, &OFFER_WORDS) {
        return amount_near(amounts, 0).map(AdjustRule::SetTo);
    }
    None
}

/// Stores `rule` in an empty slot, or fills in the magnitude of an open rule
/// pointing the same way.
fn merge_rule(slot: &mut Option<AdjustRule>, rule: AdjustRule) {
    match (*slot, rule) {
        (None, r) => *slot = Some(r),
        (Some(AdjustRule::IncreaseBy(Step::Open)), AdjustRule::IncreaseBy(Step::Exact(m)))
        | (Some(AdjustRule::DecreaseBy(Step::Open)), AdjustRule::DecreaseBy(Step::Exact(m))) => {
            *slot = Some(slot.expect("slot is set").resolve_open(m));
        }
        _ => {}
    }
}

fn is_cutoff_sentence(sentence: &str) -> bool {
    let lower = sentence.to_lowercase();
    [
        "cut-off",
        "cutoff",
        "cut off",
        "maximum",
        "upper limit",
        "never offer more",
        "never go above",
    ]
    .iter()
    .any(|k| lower.contains(k))
}

fn heuristic_proposer(text: &str, config: &GameConfig, diag: &mut ParseDiagnostics) -> ProposerStrategy {
    let mut strategy = ProposerStrategy::default();
    for paragraph in paragraphs(text) {
        let mut context: Option<Decision> = None;
        for sentence in sentences(&paragraph) {
            if is_cutoff_sentence(sentence) {
                if strategy.cutoff.is_none() {
                    let amounts = amounts_within_pot(sentence, config, diag);
                    strategy.cutoff = Some(amounts.first().map_or(Cutoff::Unspecified, |m| Cutoff::At(m.amount)));
                }
                continue;
            }
            let lower = sentence.to_lowercase();
            let (first, second) = match lower.find("otherwise") {
                Some(i) => (&sentence[..i], Some(&sentence[i..])),
                None => (sentence, None),
            };
            let mut first = first;
            if let Some((branch, at)) = condition_branch(first) {
                context = Some(branch);
                let verb = [&INCREASE_WORDS[..], &DECREASE_WORDS[..], &KEEP_WORDS[..]]
                    .iter()
                    .filter_map(|words| find_word(first, words))
                    .min()
                    .unwrap_or(at);
                let (pre, post) = first.split_at(at.min(verb));
                if strategy.initial_offer.is_none() && states_offer(pre) {
                    let amounts = amounts_within_pot(pre, config, diag);
                    strategy.initial_offer = find_word(pre, &OFFER_WORDS).and_then(|w| amount_near(&amounts, w));
                    first = post;
                }
            }
            let amounts = amounts_within_pot(first, config, diag);
            match context {
                None => {
                    if let Some(at) = find_word(first, &OFFER_WORDS) {
                        if strategy.initial_offer.is_none() {
                            strategy.initial_offer = amount_near(&amounts, at);
                        }
                    }
                }
                Some(branch) => {
                    if let Some(rule) = extract_rule(first, &amounts) {
                        merge_rule(branch_slot(&mut strategy, branch), rule);
                    }
                }
            }
            if let (Some(rest), Some(branch)) = (second, context) {
                let flipped = opposite(branch);
                let amounts = amounts_within_pot(rest, config, diag);
                if let Some(rule) = extract_rule(rest, &amounts) {
                    merge_rule(branch_slot(&mut strategy, flipped), rule);
                }
            }
        }
    }
    strategy
}

fn opposite(d: Decision) -> Decision {
    match d {
        Decision::Accept => Decision::Reject,
        Decision::Reject => Decision::Accept,
    }
}

fn branch_slot(strategy: &mut ProposerStrategy, branch: Decision) -> &mut Option<AdjustRule> {
    match branch {
        Decision::Accept => &mut strategy.on_accept,
        Decision::Reject => &mut strategy.on_reject,
    }
}

fn mentions_final_round(sentence: &str, rounds: u32) -> bool {
    let lower = sentence.to_lowercase();
    if lower.contains("final round") || lower.contains("last round") || lower.contains("final offer") {
        return true;
    }
    if let Some(ord) = ordinal_word(rounds) {
        if lower.contains(&format!("{ord} round")) {
            return true;
        }
    }
    if ROUND_RANGE.is_match(sentence) {
        return false;
    }
    SINGLE_ROUND
        .captures_iter(sentence)
        .any(|c| number_value(&c[1]) == Some(rounds))
}

/// Rounds named by a qualifier such as "rounds 1-3", "first 4 rounds" or "round 2".
fn qualified_rounds(sentence: &str, rounds: u32) -> Option<Vec<u32>> {
    if let Some(c) = ROUND_RANGE.captures(sentence) {
        let (a, b) = (number_value(&c[1])?, number_value(&c[2])?);
        return Some((a.min(b)..=a.max(b).min(rounds)).collect());
    }
    if let Some(c) = FIRST_N_ROUNDS.captures(sentence) {
        let n = number_value(&c[1])?;
        return Some((1..=n.min(rounds)).collect());
    }
    if let Some(c) = SINGLE_ROUND.captures(sentence) {
        let n = number_value(&c[1])?;
        if (1..=rounds).contains(&n) {
            return Some(vec![n]);
        }
    }
    None
}

/// The threshold a sentence states, from its earliest cue.
fn threshold_cue(sentence: &str, config: &GameConfig) -> Option<Money> {
    THRESHOLD_CUES
        .iter()
        .filter_map(|(re, bump)| {
            let caps = re.captures(sentence)?;
            let whole = caps.get(0)?;
            let amount = extract_amounts(caps.get(1)?.as_str()).first()?.amount;
            Some((whole.start(), amount.saturating_add(Money::from_cents(*bump))))
        })
        .filter(|(_, m)| *m <= config.pot().saturating_add(Money::from_cents(1)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, m)| m)
}

/// A decrease word used as a verb: not "lower than" and not "the lower limit".
fn has_decrease_verb(sentence: &str) -> bool {
    let toks = tokens(sentence);
    toks.iter().enumerate().any(|(i, t)| {
        DECREASE_WORDS.contains(&t.text.as_str())
            && toks.get(i + 1).is_none_or(|n| n.text != "than")
            && (i == 0 || !matches!(toks[i - 1].text.as_str(), "the" | "a" | "my" | "any" | "its"))
    })
}

fn accepts_anything(sentence: &str) -> bool {
    let lower = sentence.to_lowercase();
    [
        "any non-zero",
        "any nonzero",
        "any non zero",
        "any offer",
        "any positive",
        "anything",
        "whatever",
    ]
    .iter()
    .any(|k| lower.contains(k))
}

fn heuristic_receiver(text: &str, config: &GameConfig, diag: &mut ParseDiagnostics) -> ReceiverStrategy {
    let mut strategy = ReceiverStrategy::default();
    let mut overrides: BTreeMap<u32, Money> = BTreeMap::new();
    let rounds = config.rounds();
    for paragraph in paragraphs(text) {
        let mut final_context = false;
        let clauses = sentences(&paragraph)
            .into_iter()
            .flat_map(|s| s.split(", but ").flat_map(|c| c.split(" but ")))
            .collect::<Vec<_>>();
        for sentence in clauses {
            final_context |= rounds > 1 && mentions_final_round(sentence, rounds);
            let amounts = amounts_within_pot(sentence, config, diag);
            if final_context {
                if accepts_anything(sentence) {
                    strategy
                        .final_round_rule
                        .get_or_insert(FinalRoundRule::AcceptAnyNonzero);
                } else if let Some(t) = threshold_cue(sentence, config) {
                    overrides.entry(rounds).or_insert(t);
                }
                continue;
            }
            let lowers = has_decrease_verb(sentence) && has_word(sentence, &THRESHOLD_NOUNS);
            if lowers {
                if let Some(rule) = extract_rule(sentence, &amounts) {
                    let rule = match rule {
                        AdjustRule::IncreaseBy(s) => AdjustRule::DecreaseBy(s),
                        other => other,
                    };
                    merge_rule(&mut strategy.concession, rule);
                }
                continue;
            }
            let Some(threshold) = threshold_cue(sentence, config) else {
                continue;
            };
            match qualified_rounds(sentence, rounds) {
                Some(list) => {
                    for r in list {
                        overrides.entry(r).or_insert(threshold);
                    }
                }
                None => {
                    strategy.default_threshold.get_or_insert(threshold);
                }
            }
        }
    }
    strategy.round_thresholds = overrides;
    strategy
}
