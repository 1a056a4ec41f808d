use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use crate::game::Money;

static AMOUNT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\$\s?(?P<dollars>\d+)?(?:\.(?P<cents>\d+))?|(?P<count>\d+(?:\.\d+)?)\s*(?:cents?\b|¢)")
        .expect("amount regex")
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmountMatch {
    pub amount: Money,
    /// Byte span of the match in the source text.
    pub span: Range<usize>,
}

/// Finds dollar and cent amounts ("$0.50", "$.50", "50 cents", "$1") in
/// document order. Amounts that are not a whole number of cents are skipped.
pub fn extract_amounts(text: &str) -> Vec<AmountMatch> {
    AMOUNT
        .captures_iter(text)
        .filter_map(|caps| {
            let whole = caps.get(0)?;
            let amount = if let Some(count) = caps.name("count") {
                let count = count.as_str();
                if count.contains('.') {
                    return None;
                }
                count.parse::<u32>().ok()?
            } else {
                let dollars = caps.name("dollars").map(|m| m.as_str());
                let cents = caps.name("cents").map(|m| m.as_str());
                if dollars.is_none() && cents.is_none() {
                    return None;
                }
                let dollars: u32 = dollars.map_or(Some(0), |d| d.parse().ok())?;
                let cents = match cents {
                    None => 0,
                    Some(c) => parse_cents(c)?,
                };
                dollars.checked_mul(100)?.checked_add(cents)?
            };
            Some(AmountMatch {
                amount: Money::from_cents(amount),
                span: whole.range(),
            })
        })
        .collect()
}

/// "5" -> 50, "05" -> 5, "500" -> 50; "505" is a fractional cent.
fn parse_cents(digits: &str) -> Option<u32> {
    let (head, tail) = digits.split_at(digits.len().min(2));
    if !tail.chars().all(|c| c == '0') {
        return None;
    }
    let value: u32 = head.parse().ok()?;
    Some(if head.len() == 1 { value * 10 } else { value })
}
