//! Shared lexical helpers: decision keywords, round markers, labels, and
//! paragraph/sentence splitting.

use std::sync::LazyLock;

use regex::Regex;

use crate::game::Decision;

const NUMBER_WORDS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

const ORDINAL_WORDS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

const NEGATIONS: [&str; 12] = [
    "not",
    "no",
    "never",
    "don't",
    "doesn't",
    "didn't",
    "won't",
    "cannot",
    "can't",
    "isn't",
    "wouldn't",
    "shouldn't",
];

static ROUND_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^[^A-Za-z0-9]*(?:[A-Za-z]+\s*:\s*[^A-Za-z0-9]*)?round\s+(\d+|one|two|three|four|five|six|seven|eight|nine|ten)\b")
        .expect("round marker regex")
});

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\[?([A-Za-z][A-Za-z ]{0,20}?)\]?\s*:\s?").expect("label regex"));

/// Parses "3" or "three".
pub(crate) fn number_value(word: &str) -> Option<u32> {
    let w = word.to_ascii_lowercase();
    w.parse()
        .ok()
        .or_else(|| NUMBER_WORDS.iter().position(|n| *n == w).map(|i| i as u32 + 1))
}

pub(crate) fn ordinal_word(n: u32) -> Option<&'static str> {
    ORDINAL_WORDS.get((n as usize).checked_sub(1)?).copied()
}

/// Round number if the line opens with a round marker, optionally behind a
/// speaker label and markup ("**Round 2:**", "Game: Round 2 of 5").
pub(crate) fn round_marker(line: &str) -> Option<u32> {
    let caps = ROUND_MARKER.captures(line)?;
    number_value(caps.get(1)?.as_str())
}

/// Every round marker in `text` as (line index, round).
pub fn round_markers(text: &str) -> Vec<(usize, u32)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| round_marker(line).map(|r| (i, r)))
        .collect()
}

/// Splits a leading speaker label off a line: "Proposer: I offer" -> ("Proposer", "I offer").
pub(crate) fn split_label(line: &str) -> Option<(&str, &str)> {
    let caps = LABEL.captures(line)?;
    let label = caps.get(1)?.as_str().trim();
    Some((label, &line[caps.get(0)?.end()..]))
}

/// Content after an optional speaker label, starting with `marker` (e.g. "OFFER:").
pub(crate) fn marker_payload<'a>(line: &'a str, marker: &str) -> Option<&'a str> {
    let trimmed = line.trim_start();
    if let Some(rest) = trimmed.strip_prefix(marker) {
        return Some(rest);
    }
    let (_, rest) = split_label(trimmed)?;
    rest.trim_start().strip_prefix(marker)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub text: String,
    pub start: usize,
}

pub(crate) fn tokens(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        let word_char = ch.is_alphanumeric() || ch == '\'' || ch == '’';
        match (word_char, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Token {
                    text: normalize_token(&text[s..i]),
                    start: s,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: normalize_token(&text[s..]),
            start: s,
        });
    }
    out
}

fn normalize_token(raw: &str) -> String {
    raw.to_lowercase().replace('’', "'")
}

/// Decision-family word, verbs only unless `nouns` is set.
pub(crate) fn decision_word(token: &str, nouns: bool) -> Option<Decision> {
    match token {
        "accept" | "accepts" | "accepted" | "accepting" => Some(Decision::Accept),
        "reject" | "rejects" | "rejected" | "rejecting" | "decline" | "declines" | "declined" | "declining"
        | "refuse" | "refuses" | "refused" | "refusing" => Some(Decision::Reject),
        "acceptance" if nouns => Some(Decision::Accept),
        "rejection" | "rejections" if nouns => Some(Decision::Reject),
        _ => None,
    }
}

/// Polarity of the first decision keyword at or after byte `from`, with a
/// negation in the three preceding tokens flipping it. Returns the decision
/// and the keyword's byte offset.
pub(crate) fn decision_after(text: &str, from: usize, nouns: bool) -> Option<(Decision, usize)> {
    let toks = tokens(text);
    for (i, tok) in toks.iter().enumerate() {
        if tok.start < from {
            continue;
        }
        let Some(decision) = decision_word(&tok.text, nouns) else {
            continue;
        };
        let negated = toks[i.saturating_sub(3)..i].iter().any(|t| {
            (NEGATIONS.contains(&t.text.as_str()) || t.text.ends_with("n't"))
                && !text[t.start..tok.start].contains([',', '.', ';', ':', '!', '?'])
        });
        let decision = match (negated, decision) {
            (false, d) => d,
            (true, Decision::Accept) => Decision::Reject,
            (true, Decision::Reject) => Decision::Accept,
        };
        return Some((decision, tok.start));
    }
    None
}

/// The decision a sentence expresses, if any.
pub fn detect_decision(text: &str) -> Option<Decision> {
    decision_after(text, 0, false).map(|(d, _)| d)
}

pub(crate) fn has_word(text: &str, words: &[&str]) -> bool {
    tokens(text).iter().any(|t| words.contains(&t.text.as_str()))
}

/// Byte offset of the first token in `words`.
pub(crate) fn find_word(text: &str, words: &[&str]) -> Option<usize> {
    tokens(text)
        .into_iter()
        .find(|t| words.contains(&t.text.as_str()))
        .map(|t| t.start)
}

static BULLET: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:[-*•]\s+|\d{1,2}[.)]\s+|\*\*[^*]+\*\*\s*:?|[A-Z][A-Za-z0-9' -]{2,40}:\s)")
        .expect("bullet regex")
});

/// Splits text into paragraphs at blank lines and at bullet or numbered items.
pub(crate) fn paragraphs(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        let trimmed = trimmed.trim_end_matches("\\\\").trim();
        if trimmed.is_empty() {
            if !current.trim().is_empty() {
                out.push(std::mem::take(&mut current));
            }
            current.clear();
            continue;
        }
        if BULLET.is_match(line) && !current.trim().is_empty() {
            out.push(std::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(trimmed);
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

/// Splits a paragraph into sentences at `.`, `!`, `?` or `;` followed by
/// whitespace. Decimal points inside amounts never split.
pub(crate) fn sentences(paragraph: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = paragraph.as_bytes();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?' | b';') {
            let next_is_space = bytes.get(i + 1).is_none_or(|n| n.is_ascii_whitespace());
            if next_is_space {
                let s = paragraph[start..=i].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = i + 1;
            }
        }
    }
    let tail = paragraph[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Removes surrounding markdown decoration from a line.
pub(crate) fn strip_markup(line: &str) -> &str {
    line.trim()
        .trim_start_matches(['#', '*', '_', '>', '-', '•', '[', ' '])
        .trim_end_matches(['*', '_', ']', ' '])
}
