//! The canonical line-oriented transcript format. The schema lives in
//! `docs/transcript-format.md`.

use std::collections::BTreeMap;

use super::ParseError;
use crate::game::{Decision, GameConfig, GameState, Money, RoundOutcome};
use crate::strategy::{
    AdjustRule, Cutoff, FinalRoundRule, ParsedStrategy, PersonalityPair, ProposerStrategy, ReceiverStrategy, Role,
    Step, StrategySpec,
};
use crate::transcript::{RawLog, Structure, Transcript};

pub const CANONICAL_HEADER: &str = "ultimatum-transcript/1";

const HEADER_PREFIX: &str = "ultimatum-transcript/";

pub fn serialize_canonical(t: &Transcript) -> String {
    let mut out = vec![CANONICAL_HEADER.to_string()];
    out.push(record(
        "game",
        &[
            ("pot", t.config.pot().cents().to_string()),
            ("rounds", t.config.rounds().to_string()),
            ("pair", t.pair.to_string()),
            ("structure", t.structure.as_str().to_string()),
        ],
    ));
    for spec in [&t.proposer_strategy, &t.receiver_strategy] {
        out.push(strategy_record(spec));
    }
    for r in &t.rounds {
        out.push(record(
            "round",
            &[
                ("n", r.round.to_string()),
                ("offer", r.offer.cents().to_string()),
                ("decision", r.decision.as_str().to_ascii_lowercase()),
                ("proposer", r.proposer_payoff.cents().to_string()),
                ("receiver", r.receiver_payoff.cents().to_string()),
            ],
        ));
    }
    for log in &t.raw_logs {
        out.push(record("log", &[("label", json(&log.label)), ("text", json(&log.text))]));
    }
    let mut s = out.join("\n");
    s.push('\n');
    s
}

fn json(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn record(kind: &str, fields: &[(&str, String)]) -> String {
    let mut s = kind.to_string();
    for (k, v) in fields {
        s.push('\t');
        s.push_str(k);
        s.push('=');
        s.push_str(v);
    }
    s
}

fn money_token(m: Option<Money>) -> String {
    m.map_or_else(|| "none".into(), |m| m.cents().to_string())
}

fn rule_token(rule: Option<AdjustRule>) -> String {
    let step = |s: Step| match s {
        Step::Exact(m) => m.cents().to_string(),
        Step::Open => "open".into(),
    };
    match rule {
        None => "none".into(),
        Some(AdjustRule::Keep) => "keep".into(),
        Some(AdjustRule::IncreaseBy(s)) => format!("increase:{}", step(s)),
        Some(AdjustRule::DecreaseBy(s)) => format!("decrease:{}", step(s)),
        Some(AdjustRule::SetTo(m)) => format!("set:{}", m.cents()),
    }
}

fn strategy_record(spec: &StrategySpec) -> String {
    let raw = json(&spec.raw_text);
    match &spec.parsed {
        ParsedStrategy::Proposer(p) => record(
            "strategy",
            &[
                ("role", "proposer".into()),
                ("raw", raw),
                ("initial", money_token(p.initial_offer)),
                ("accept", rule_token(p.on_accept)),
                ("reject", rule_token(p.on_reject)),
                (
                    "cutoff",
                    match p.cutoff {
                        None => "none".into(),
                        Some(Cutoff::Unspecified) => "unspecified".into(),
                        Some(Cutoff::At(m)) => m.cents().to_string(),
                    },
                ),
            ],
        ),
        ParsedStrategy::Receiver(r) => {
            let per_round = if r.round_thresholds.is_empty() {
                "none".to_string()
            } else {
                r.round_thresholds
                    .iter()
                    .map(|(k, v)| format!("{k}:{}", v.cents()))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let final_rule = match r.final_round_rule {
                None => "none",
                Some(FinalRoundRule::KeepThreshold) => "keep",
                Some(FinalRoundRule::AcceptAnyNonzero) => "any-nonzero",
            };
            record(
                "strategy",
                &[
                    ("role", "receiver".into()),
                    ("raw", raw),
                    ("threshold", money_token(r.default_threshold)),
                    ("per_round", per_round),
                    ("concession", rule_token(r.concession)),
                    ("final", final_rule.into()),
                ],
            )
        }
    }
}

struct Fields<'a> {
    line: usize,
    values: Vec<(&'a str, &'a str)>,
    next: usize,
}

impl<'a> Fields<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str, ParseError> {
        let found = self.values.get(self.next).copied();
        match found {
            Some((k, v)) if k == key => {
                self.next += 1;
                Ok(v)
            }
            Some((k, _)) => Err(self.err(format!("expected field `{key}`, found `{k}`"))),
            None => Err(self.err(format!("missing field `{key}`"))),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.values.get(self.next) {
            Some((k, _)) => Err(self.err(format!("unexpected field `{k}`"))),
            None => Ok(()),
        }
    }

    fn err(&self, message: String) -> ParseError {
        ParseError::MalformedRecord {
            line: self.line,
            message,
        }
    }

    fn string(&mut self, key: &str) -> Result<String, ParseError> {
        let v = self.take(key)?;
        serde_json::from_str(v).map_err(|e| self.err(format!("field `{key}`: {e}")))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ParseError> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| self.err(format!("field `{key}`: bad value `{v}`")))
    }

    fn money(&mut self, key: &str) -> Result<Option<Money>, ParseError> {
        let v = self.take(key)?;
        parse_money_token(v).map_err(|m| self.err(format!("field `{key}`: {m}")))
    }

    fn rule(&mut self, key: &str) -> Result<Option<AdjustRule>, ParseError> {
        let v = self.take(key)?;
        parse_rule_token(v).map_err(|m| self.err(format!("field `{key}`: {m}")))
    }
}

fn parse_money_token(v: &str) -> Result<Option<Money>, String> {
    if v == "none" {
        return Ok(None);
    }
    v.parse()
        .map(|c| Some(Money::from_cents(c)))
        .map_err(|_| format!("bad amount `{v}`"))
}

fn parse_rule_token(v: &str) -> Result<Option<AdjustRule>, String> {
    let cents = |s: &str| {
        s.parse()
            .map(Money::from_cents)
            .map_err(|_| format!("bad amount `{s}`"))
    };
    let step = |s: &str| {
        if s == "open" {
            Ok(Step::Open)
        } else {
            cents(s).map(Step::Exact)
        }
    };
    match v.split_once(':') {
        None if v == "none" => Ok(None),
        None if v == "keep" => Ok(Some(AdjustRule::Keep)),
        Some(("increase", s)) => step(s).map(|s| Some(AdjustRule::IncreaseBy(s))),
        Some(("decrease", s)) => step(s).map(|s| Some(AdjustRule::DecreaseBy(s))),
        Some(("set", s)) => cents(s).map(|m| Some(AdjustRule::SetTo(m))),
        _ => Err(format!("unknown rule `{v}`")),
    }
}

fn fields(line_no: usize, line: &str) -> Result<(&str, Fields<'_>), ParseError> {
    let mut parts = line.split('\t');
    let kind = parts.next().unwrap_or_default();
    let values = parts
        .map(|p| {
            p.split_once('=').ok_or(ParseError::MalformedRecord {
                line: line_no,
                message: format!("field without `=`: `{p}`"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((
        kind,
        Fields {
            line: line_no,
            values,
            next: 0,
        },
    ))
}

fn parse_strategy(f: &mut Fields<'_>, expected: Role) -> Result<StrategySpec, ParseError> {
    let role: Role = f.parse("role")?;
    if role != expected {
        return Err(f.err(format!("expected the {} strategy", expected.name().to_lowercase())));
    }
    let raw = f.string("raw")?;
    let parsed = match role {
        Role::Proposer => {
            let initial_offer = f.money("initial")?;
            let on_accept = f.rule("accept")?;
            let on_reject = f.rule("reject")?;
            let cutoff = match f.take("cutoff")? {
                "none" => None,
                "unspecified" => Some(Cutoff::Unspecified),
                v => Some(Cutoff::At(
                    parse_money_token(v)
                        .ok()
                        .flatten()
                        .ok_or_else(|| f.err(format!("bad cutoff `{v}`")))?,
                )),
            };
            ParsedStrategy::Proposer(ProposerStrategy {
                initial_offer,
                on_accept,
                on_reject,
                cutoff,
            })
        }
        Role::Receiver => {
            let default_threshold = f.money("threshold")?;
            let per_round = f.take("per_round")?;
            let mut round_thresholds = BTreeMap::new();
            if per_round != "none" {
                for item in per_round.split(',') {
                    let parsed = item
                        .split_once(':')
                        .and_then(|(r, c)| Some((r.parse::<u32>().ok()?, c.parse::<u32>().ok()?)));
                    let (r, c) = parsed.ok_or_else(|| f.err(format!("bad per-round threshold `{item}`")))?;
                    if round_thresholds.insert(r, Money::from_cents(c)).is_some() {
                        return Err(f.err(format!("duplicate threshold for round {r}")));
                    }
                }
            }
            let concession = f.rule("concession")?;
            let final_round_rule = match f.take("final")? {
                "none" => None,
                "keep" => Some(FinalRoundRule::KeepThreshold),
                "any-nonzero" => Some(FinalRoundRule::AcceptAnyNonzero),
                v => return Err(f.err(format!("bad final-round rule `{v}`"))),
            };
            ParsedStrategy::Receiver(ReceiverStrategy {
                default_threshold,
                round_thresholds,
                concession,
                final_round_rule,
            })
        }
    };
    f.finish()?;
    Ok(StrategySpec::new(raw, parsed))
}

pub fn parse_canonical(text: &str) -> Result<Transcript, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| ParseError::SchemaVersion(String::new()))?;
    let header = header.trim();
    if header != CANONICAL_HEADER {
        return Err(ParseError::SchemaVersion(
            header.strip_prefix(HEADER_PREFIX).unwrap_or(header).to_string(),
        ));
    }
    let malformed = |line: usize, message: &str| ParseError::MalformedRecord {
        line,
        message: message.to_string(),
    };

    let (n, line) = lines.next().ok_or_else(|| malformed(1, "missing game record"))?;
    let (kind, mut f) = fields(n, line)?;
    if kind != "game" {
        return Err(malformed(n, "expected a game record"));
    }
    let pot: u32 = f.parse("pot")?;
    let rounds: u32 = f.parse("rounds")?;
    let pair: PersonalityPair = f.parse("pair")?;
    let structure: Structure = f.parse("structure")?;
    f.finish()?;
    let config = GameConfig::new(Money::from_cents(pot), rounds).map_err(|e| malformed(n, &e.to_string()))?;

    let mut specs = Vec::new();
    for role in [Role::Proposer, Role::Receiver] {
        let (n, line) = lines.next().ok_or_else(|| malformed(n, "missing strategy record"))?;
        let (kind, mut f) = fields(n, line)?;
        if kind != "strategy" {
            return Err(malformed(n, "expected a strategy record"));
        }
        specs.push(parse_strategy(&mut f, role)?);
    }
    let receiver_strategy = specs.pop().expect("two strategies");
    let proposer_strategy = specs.pop().expect("two strategies");

    let mut state = GameState::new(config).map_err(|e| malformed(n, &e.to_string()))?;
    let mut played: Vec<RoundOutcome> = Vec::new();
    let mut raw_logs = Vec::new();
    for (n, line) in lines {
        let (kind, mut f) = fields(n, line)?;
        match kind {
            "round" if raw_logs.is_empty() => {
                let round: u32 = f.parse("n")?;
                let offer = Money::from_cents(f.parse("offer")?);
                let decision = match f.take("decision")? {
                    "accept" => Decision::Accept,
                    "reject" => Decision::Reject,
                    v => return Err(f.err(format!("bad decision `{v}`"))),
                };
                let proposer = Money::from_cents(f.parse("proposer")?);
                let receiver = Money::from_cents(f.parse("receiver")?);
                f.finish()?;
                if round as usize != played.len() + 1 {
                    return Err(malformed(n, &format!("round {round} out of order")));
                }
                let (next, outcome) = state
                    .play_round(offer, decision)
                    .map_err(|e| malformed(n, &e.to_string()))?;
                if (outcome.proposer_payoff, outcome.receiver_payoff) != (proposer, receiver) {
                    return Err(malformed(n, "payoffs disagree with the offer and decision"));
                }
                state = next;
                played.push(outcome);
            }
            "log" => {
                let label = f.string("label")?;
                let text = f.string("text")?;
                f.finish()?;
                raw_logs.push(RawLog { label, text });
            }
            other => return Err(malformed(n, &format!("unexpected `{other}` record"))),
        }
    }
    Ok(Transcript {
        config,
        pair,
        structure,
        proposer_strategy,
        receiver_strategy,
        rounds: played,
        raw_logs,
    })
}
