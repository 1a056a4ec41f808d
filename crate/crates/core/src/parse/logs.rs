//! Single-model combined logs, per-agent logs, and one-shot action replies.

use thiserror::Error;

use super::amounts::extract_amounts;
use super::canonical::{parse_canonical, CANONICAL_HEADER};
use super::strategy_text::parse_strategy_text;
use super::text::{decision_after, find_word, marker_payload, round_marker, split_label, strip_markup, tokens};
use super::{Confidence, ParseDiagnostics, ParseError};
use crate::game::{Decision, GameConfig, GameState, Money, RoundOutcome};
use crate::strategy::{Action, PersonalityPair, Role, StrategySpec};
use crate::transcript::{RawLog, Structure, Transcript};

const OFFER_WORDS: [&str; 12] = [
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
    "proposal",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("reply carries a {found} marker, expected {expected}")]
    WrongMarker {
        expected: &'static str,
        found: &'static str,
    },
    #[error("no {0} found in reply")]
    NoAction(&'static str),
    #[error("offer {offer} exceeds the pot {pot}")]
    OutOfRange { offer: Money, pot: Money },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct RoundRead {
    offer: Option<Money>,
    decision: Option<Decision>,
    payoffs: Option<(Money, Money)>,
}

fn decision_marker(payload: &str) -> Option<Decision> {
    let first = tokens(payload).into_iter().next()?;
    match first.text.as_str() {
        "accept" | "accepted" | "yes" => Some(Decision::Accept),
        "reject" | "rejected" | "no" => Some(Decision::Reject),
        _ => None,
    }
}

fn first_within_pot(text: &str, pot: Money) -> Option<Money> {
    extract_amounts(text).into_iter().map(|m| m.amount).find(|m| *m <= pot)
}

/// Offer stated in free text: the first amount after an offer keyword, else
/// the nearest one before it. Amounts above the pot are excluded with a warning.
fn heuristic_offer(line: &str, pot: Money, location: &str, diag: &mut ParseDiagnostics) -> Option<(Money, usize)> {
    let at = find_word(line, &OFFER_WORDS)?;
    let mut amounts = extract_amounts(line);
    amounts.retain(|m| {
        let ok = m.amount <= pot;
        if !ok {
            diag.warn(location, format!("amount {} exceeds the pot; ignored", m.amount));
        }
        ok
    });
    amounts
        .iter()
        .find(|m| m.span.start >= at)
        .or_else(|| amounts.iter().rev().find(|m| m.span.start < at))
        .map(|m| (m.amount, m.span.end))
}

fn read_round(lines: &[&str], round: u32, config: &GameConfig, diag: &mut ParseDiagnostics) -> RoundRead {
    let location = format!("round {round}");
    let pot = config.pot();
    let mut read = RoundRead::default();
    for line in lines {
        if let Some(p) = marker_payload(line, "OFFER:") {
            if read.offer.is_none() {
                read.offer = first_within_pot(p, pot);
                if read.offer.is_none() {
                    diag.warn(
                        &location,
                        format!("OFFER marker without a usable amount: `{}`", p.trim()),
                    );
                }
            }
        } else if let Some(p) = marker_payload(line, "DECISION:") {
            if read.decision.is_none() {
                read.decision = decision_marker(p);
            }
        } else if let Some(p) = marker_payload(line, "OUTCOME:") {
            if let [a, b, ..] = extract_amounts(p).as_slice() {
                read.payoffs = Some((a.amount, b.amount));
            }
        }
    }
    if read.offer.is_none() {
        let mut offer_at = None;
        for (i, line) in lines.iter().enumerate() {
            if let Some((m, end)) = heuristic_offer(line, pot, &location, diag) {
                read.offer = Some(m);
                offer_at = Some((i, end));
                diag.heuristic();
                break;
            }
        }
        if offer_at.is_none() {
            offer_at = labelled_offer(lines, pot);
            if let Some((i, _)) = offer_at {
                read.offer = first_within_pot(lines[i], pot);
                diag.heuristic();
            }
        }
        if read.decision.is_none() {
            if let Some((i, end)) = offer_at {
                read.decision = heuristic_decision(&lines[i + 1..])
                    .or_else(|| decision_after(lines[i], end, false).map(|(d, _)| d))
                    .or_else(|| decision_after(lines[i], end, true).map(|(d, _)| d));
            }
        }
    }
    if read.decision.is_none() && read.offer.is_some() {
        if let Some(d) = heuristic_decision(lines) {
            read.decision = Some(d);
            diag.heuristic();
        }
    }
    read
}

/// A line spoken by the proposer that names an amount.
fn labelled_offer(lines: &[&str], pot: Money) -> Option<(usize, usize)> {
    lines.iter().enumerate().find_map(|(i, l)| {
        let (label, _) = split_label(l)?;
        if !label.eq_ignore_ascii_case("proposer") {
            return None;
        }
        let m = extract_amounts(l).into_iter().find(|m| m.amount <= pot)?;
        Some((i, m.span.end))
    })
}

fn heuristic_decision(lines: &[&str]) -> Option<Decision> {
    lines
        .iter()
        .find_map(|l| decision_after(l, 0, false).map(|(d, _)| d))
        .or_else(|| lines.iter().find_map(|l| decision_after(l, 0, true).map(|(d, _)| d)))
}

/// Index of the line where gameplay starts: the last round-one marker that is
/// followed by a round-two marker, else the last round-one marker.
fn gameplay_start(lines: &[&str]) -> Option<usize> {
    let markers: Vec<(usize, u32)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| round_marker(l).map(|r| (i, r)))
        .collect();
    let ones: Vec<usize> = markers.iter().filter(|(_, r)| *r == 1).map(|(i, _)| *i).collect();
    ones.iter()
        .rev()
        .find(|&&i| {
            markers
                .iter()
                .find(|(j, r)| *j > i && *r != 1)
                .is_some_and(|(_, r)| *r == 2)
        })
        .or(ones.last())
        .copied()
}

/// Splits gameplay lines into round blocks. A new block starts only at the
/// next round number; any other marker is kept in the current block.
fn round_blocks<'a>(lines: &[&'a str], diag: &mut ParseDiagnostics) -> Vec<Vec<&'a str>> {
    let mut blocks: Vec<Vec<&'a str>> = Vec::new();
    for line in lines {
        match round_marker(line) {
            Some(r) if r as usize == blocks.len() + 1 => blocks.push(vec![line]),
            Some(r) if r as usize == blocks.len() => blocks.last_mut().expect("block").push(line),
            Some(r) => {
                diag.warn(
                    format!("round {}", blocks.len()),
                    format!("out-of-order marker for round {r}"),
                );
                if let Some(b) = blocks.last_mut() {
                    b.push(line);
                }
            }
            None => {
                if let Some(b) = blocks.last_mut() {
                    b.push(line);
                }
            }
        }
    }
    blocks
}

fn read_rounds(lines: &[&str], config: &GameConfig, diag: &mut ParseDiagnostics) -> Vec<RoundRead> {
    let blocks = round_blocks(lines, diag);
    if blocks.len() as u32 > config.rounds() {
        diag.warn(
            "gameplay",
            format!(
                "{} round blocks found; only {} are played",
                blocks.len(),
                config.rounds()
            ),
        );
    }
    blocks
        .iter()
        .take(config.rounds() as usize)
        .enumerate()
        .map(|(i, b)| read_round(b, i as u32 + 1, config, diag))
        .collect()
}

/// Replays complete reads through the engine and checks stated payoffs.
fn settle_rounds(
    reads: &[RoundRead],
    config: &GameConfig,
    diag: &mut ParseDiagnostics,
) -> Result<Vec<RoundOutcome>, ParseError> {
    let mut state = GameState::new(*config).map_err(|e| ParseError::Unparseable(e.to_string()))?;
    let mut out = Vec::new();
    for round in 1..=config.rounds() {
        let read = reads.get(round as usize - 1).copied().unwrap_or_default();
        let (Some(offer), Some(decision)) = (read.offer, read.decision) else {
            return Err(ParseError::MissingRound(round));
        };
        let (next, outcome) = state
            .play_round(offer, decision)
            .map_err(|e| ParseError::Unparseable(format!("round {round}: {e}")))?;
        if let Some((p, r)) = read.payoffs {
            if (p, r) != (outcome.proposer_payoff, outcome.receiver_payoff) {
                diag.warn(
                    format!("round {round}"),
                    format!(
                        "stated payoffs {p}/{r} disagree with the engine ({}/{})",
                        outcome.proposer_payoff, outcome.receiver_payoff
                    ),
                );
            }
        }
        out.push(outcome);
        state = next;
    }
    Ok(out)
}

fn role_in(line: &str) -> Option<Role> {
    let toks = tokens(line);
    let has = |w: &str| {
        toks.iter()
            .any(|t| t.text == w || t.text == format!("{w}'s") || t.text == format!("{w}s"))
    };
    match (has("proposer"), has("receiver")) {
        (true, false) => Some(Role::Proposer),
        (false, true) => Some(Role::Receiver),
        _ => None,
    }
}

/// Strategy heading: the explicit marker, or a short line naming one role.
fn strategy_heading(line: &str) -> Option<(Role, bool)> {
    let bare = strip_markup(line);
    let upper = bare.to_ascii_uppercase();
    for role in [Role::Proposer, Role::Receiver] {
        if upper.starts_with(&format!("{} STRATEGY:", role.name().to_ascii_uppercase())) {
            return Some((role, true));
        }
    }
    let (head, has_colon) = match bare.split_once(':') {
        Some((head, _)) => (head, true),
        None => (bare, false),
    };
    if head.len() > 80 {
        return None;
    }
    let lower = head.to_lowercase();
    if ["if ", "when ", "after "].iter().any(|p| lower.starts_with(p)) {
        return None;
    }
    let role = role_in(head)?;
    let words = head.split_whitespace().count();
    let heading = lower.contains("strateg") || (words <= 4 && has_colon);
    heading.then_some((role, false))
}

/// Content following a heading on its own line ("PROPOSER STRATEGY: offer $0.50").
fn heading_tail(line: &str) -> &str {
    let bare = strip_markup(line);
    bare.split_once(':')
        .map_or("", |(_, rest)| rest.trim_start_matches(['*', '_']).trim())
}

fn strategy_sections(lines: &[&str], diag: &mut ParseDiagnostics) -> [Option<String>; 2] {
    let headings: Vec<(usize, Role, bool)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| strategy_heading(l).map(|(r, exact)| (i, r, exact)))
        .collect();
    let any_exact = headings.iter().any(|h| h.2);
    let headings: Vec<_> = headings.into_iter().filter(|h| h.2 || !any_exact).collect();
    if !any_exact && !headings.is_empty() {
        diag.heuristic();
    }
    let mut out: [Option<String>; 2] = [None, None];
    for (k, &(i, role, _)) in headings.iter().enumerate() {
        if out[role as usize].is_some() {
            continue;
        }
        let end = headings.get(k + 1).map_or(lines.len(), |h| h.0);
        let mut body: Vec<&str> = Vec::new();
        let tail = heading_tail(lines[i]);
        if !tail.is_empty() {
            body.push(tail);
        }
        body.extend(&lines[i + 1..end]);
        out[role as usize] = Some(body.join("\n").trim().to_string());
    }
    out
}

fn parse_strategy(
    text: Option<String>,
    role: Role,
    config: &GameConfig,
    diag: &mut ParseDiagnostics,
) -> Result<StrategySpec, ParseError> {
    let text = text
        .filter(|t| !t.trim().is_empty())
        .ok_or(ParseError::MissingStrategy(role))?;
    let (spec, d) = parse_strategy_text(&text, role, config);
    diag.absorb(d);
    Ok(spec)
}

/// Parses one combined log holding both strategies and every round.
/// Canonical transcripts are accepted as well and parsed exactly.
pub fn parse_single_model_log(
    text: &str,
    pair: PersonalityPair,
    config: GameConfig,
) -> Result<(Transcript, ParseDiagnostics), ParseError> {
    if text.trim_start().starts_with(CANONICAL_HEADER) {
        let mut diag = ParseDiagnostics::default();
        let t = parse_canonical(text)?;
        if t.pair != pair || t.config != config {
            diag.warn("header", "canonical header disagrees with the requested pair or game");
        }
        return Ok((t, diag));
    }
    if text.trim().is_empty() {
        return Err(ParseError::Unparseable("empty log".into()));
    }
    let mut diag = ParseDiagnostics::default();
    let lines: Vec<&str> = text.lines().collect();
    let start = gameplay_start(&lines).ok_or(ParseError::MissingRound(1))?;
    let [proposer_text, receiver_text] = strategy_sections(&lines[..start], &mut diag);
    let proposer_strategy = parse_strategy(proposer_text, Role::Proposer, &config, &mut diag)?;
    let receiver_strategy = parse_strategy(receiver_text, Role::Receiver, &config, &mut diag)?;
    let reads = read_rounds(&lines[start..], &config, &mut diag);
    let rounds = settle_rounds(&reads, &config, &mut diag)?;
    let transcript = Transcript {
        config,
        pair,
        structure: Structure::SingleModel,
        proposer_strategy,
        receiver_strategy,
        rounds,
        raw_logs: vec![RawLog::new("combined", text)],
    };
    Ok((transcript, diag))
}

/// Speaker-labelled messages; indented or blank lines continue the previous one.
fn messages(text: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let continuation = line.starts_with(char::is_whitespace) || line.trim().is_empty();
        match (continuation, split_label(line)) {
            (false, Some((label, rest))) => out.push((label.to_string(), rest.to_string())),
            _ => {
                if let Some(last) = out.last_mut() {
                    last.1.push('\n');
                    last.1.push_str(line.trim());
                }
            }
        }
    }
    out
}

struct AgentRead {
    strategy: Option<String>,
    rounds: Vec<RoundRead>,
}

fn read_agent_log(text: &str, role: Role, config: &GameConfig, diag: &mut ParseDiagnostics) -> AgentRead {
    let lines: Vec<&str> = text.lines().collect();
    let start = gameplay_start(&lines).unwrap_or(lines.len());
    let preamble = lines[..start].join("\n");
    let strategy = messages(&preamble)
        .into_iter()
        .find(|(label, _)| label.eq_ignore_ascii_case(role.name()))
        .map(|(_, body)| {
            let body = body.trim();
            body.strip_prefix("STRATEGY:").unwrap_or(body).trim().to_string()
        });
    let rounds = read_rounds(&lines[start..], config, diag);
    AgentRead { strategy, rounds }
}

fn merge<T: PartialEq + Copy + std::fmt::Display>(
    round: u32,
    what: &str,
    a: Option<T>,
    b: Option<T>,
) -> Result<Option<T>, ParseError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(ParseError::InconsistentLogs {
            round,
            detail: format!("proposer log has {what} {x}, receiver log has {y}"),
        }),
        (x, y) => Ok(x.or(y)),
    }
}

/// Parses the two per-agent logs of a multi-agent run, aligning offers and
/// decisions by round.
pub fn parse_agent_log(
    proposer_log: &str,
    receiver_log: &str,
    pair: PersonalityPair,
    config: GameConfig,
) -> Result<(Transcript, ParseDiagnostics), ParseError> {
    for (role, log) in [(Role::Proposer, proposer_log), (Role::Receiver, receiver_log)] {
        if log.trim().is_empty() {
            return Err(ParseError::Unparseable(format!(
                "{} log is empty",
                role.name().to_lowercase()
            )));
        }
    }
    let mut diag = ParseDiagnostics::default();
    let p = read_agent_log(proposer_log, Role::Proposer, &config, &mut diag);
    let r = read_agent_log(receiver_log, Role::Receiver, &config, &mut diag);
    let proposer_strategy = parse_strategy(p.strategy, Role::Proposer, &config, &mut diag)?;
    let receiver_strategy = parse_strategy(r.strategy, Role::Receiver, &config, &mut diag)?;
    let mut reads = Vec::new();
    for round in 1..=config.rounds() {
        let a = p.rounds.get(round as usize - 1).copied().unwrap_or_default();
        let b = r.rounds.get(round as usize - 1).copied().unwrap_or_default();
        let payoffs = match (a.payoffs, b.payoffs) {
            (Some(x), Some(y)) if x != y => {
                diag.warn(format!("round {round}"), "the two logs state different payoffs");
                Some(x)
            }
            (x, y) => x.or(y),
        };
        reads.push(RoundRead {
            offer: merge(round, "offer", a.offer, b.offer)?,
            decision: merge(round, "decision", a.decision, b.decision)?,
            payoffs,
        });
    }
    let rounds = settle_rounds(&reads, &config, &mut diag)?;
    let transcript = Transcript {
        config,
        pair,
        structure: Structure::MultiAgent,
        proposer_strategy,
        receiver_strategy,
        rounds,
        raw_logs: vec![
            RawLog::new("proposer", proposer_log),
            RawLog::new("receiver", receiver_log),
        ],
    };
    Ok((transcript, diag))
}

/// Reads a single in-game reply from a model-backed agent acting as `role`.
pub fn parse_action_reply(text: &str, role: Role, pot: Money) -> Result<(Action, Confidence), ReplyError> {
    let has = |marker: &str| text.lines().any(|l| marker_payload(l, marker).is_some());
    match role {
        Role::Proposer => {
            if let Some(p) = text.lines().find_map(|l| marker_payload(l, "OFFER:")) {
                let amount = extract_amounts(p)
                    .first()
                    .map(|m| m.amount)
                    .ok_or(ReplyError::NoAction("offer"))?;
                if amount > pot {
                    return Err(ReplyError::OutOfRange { offer: amount, pot });
                }
                return Ok((Action::Offer(amount), Confidence::Exact));
            }
            if has("DECISION:") {
                return Err(ReplyError::WrongMarker {
                    expected: "OFFER",
                    found: "DECISION",
                });
            }
            let mut diag = ParseDiagnostics::default();
            text.lines()
                .find_map(|l| heuristic_offer(l, pot, "reply", &mut diag))
                .map(|(m, _)| (Action::Offer(m), Confidence::Heuristic))
                .ok_or(ReplyError::NoAction("offer"))
        }
        Role::Receiver => {
            if let Some(p) = text.lines().find_map(|l| marker_payload(l, "DECISION:")) {
                return decision_marker(p)
                    .map(|d| (Action::Decide(d), Confidence::Exact))
                    .ok_or(ReplyError::NoAction("decision"));
            }
            if has("OFFER:") {
                return Err(ReplyError::WrongMarker {
                    expected: "DECISION",
                    found: "OFFER",
                });
            }
            let lines: Vec<&str> = text.lines().collect();
            heuristic_decision(&lines)
                .map(|d| (Action::Decide(d), Confidence::Heuristic))
                .ok_or(ReplyError::NoAction("decision"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Personality::Fair;

    const FAIR: PersonalityPair = PersonalityPair::new(Fair, Fair);

    fn tier_one_log(rounds: u32) -> String {
        let mut s = String::from(
            "PROPOSER STRATEGY:\ninitial_offer = $0.50\non_accept = keep\non_reject = increase $0.05\ncutoff = none\n\n\
RECEIVER STRATEGY:\nthreshold = $0.50\nconcession = none\nfinal_round = none\n\n",
        );
        for r in 1..=rounds {
            s.push_str(&format!(
                "ROUND {r}\nProposer: OFFER: $0.50\nReceiver: DECISION: ACCEPT\nOUTCOME: Proposer $0.50, Receiver $0.50\n"
            ));
        }
        s
    }

    #[test]
    fn tier_one_log_is_exact() {
        let (t, d) = parse_single_model_log(&tier_one_log(5), FAIR, GameConfig::default()).unwrap();
        assert_eq!(d.confidence, Confidence::Exact, "{d:?}");
        assert!(d.warnings.is_empty());
        assert_eq!(t.rounds.len(), 5);
        assert!(t
            .rounds
            .iter()
            .all(|r| r.offer.cents() == 50 && r.decision == Decision::Accept));
    }

    #[test]
    fn truncated_log_names_missing_round() {
        let err = parse_single_model_log(&tier_one_log(4), FAIR, GameConfig::default()).unwrap_err();
        assert_eq!(err, ParseError::MissingRound(5));
    }

    #[test]
    fn payoff_mismatch_is_a_warning() {
        let log = tier_one_log(5).replacen("Proposer $0.50, Receiver $0.50", "Proposer $0.60, Receiver $0.40", 1);
        let (t, d) = parse_single_model_log(&log, FAIR, GameConfig::default()).unwrap();
        assert_eq!(t.rounds[0].receiver_payoff.cents(), 50);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn heuristic_round_lines() {
        let log = "Proposer strategy: offer $0.50 every round.\nReceiver strategy: accept $0.50 or more.\n\n\
Round 1: The proposer offers $0.50. The receiver accepts.\nRound 2:\nProposer offers $0.45 this time.\nReceiver: I do not accept that.\n\
Round 3: Proposer offers $2.00 or rather $0.55; the receiver accepts.\nRound 4: The proposer offers 50 cents and it is accepted.\n\
Round 5: Offer: $0.50. Receiver declines.";
        let (t, d) = parse_single_model_log(log, FAIR, GameConfig::default()).unwrap();
        assert_eq!(d.confidence, Confidence::Heuristic);
        let got: Vec<(u32, Decision)> = t.rounds.iter().map(|r| (r.offer.cents(), r.decision)).collect();
        use Decision::*;
        assert_eq!(
            got,
            vec![(50, Accept), (45, Reject), (55, Accept), (50, Accept), (50, Reject)]
        );
    }

    #[test]
    fn action_replies() {
        let pot = Money::DOLLAR;
        assert_eq!(
            parse_action_reply("Thinking...\nOFFER: $0.45", Role::Proposer, pot),
            Ok((Action::Offer(Money::from_cents(45)), Confidence::Exact))
        );
        assert_eq!(
            parse_action_reply("DECISION: REJECT", Role::Receiver, pot),
            Ok((Action::Decide(Decision::Reject), Confidence::Exact))
        );
        assert!(matches!(
            parse_action_reply("DECISION: ACCEPT", Role::Proposer, pot),
            Err(ReplyError::WrongMarker { .. })
        ));
        assert_eq!(
            parse_action_reply("I will offer 40 cents.", Role::Proposer, pot),
            Ok((Action::Offer(Money::from_cents(40)), Confidence::Heuristic))
        );
        assert!(matches!(
            parse_action_reply("OFFER: $1.50", Role::Proposer, pot),
            Err(ReplyError::OutOfRange { .. })
        ));
    }
}
