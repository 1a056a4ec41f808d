use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;
use ultimatum_core::stats::GroupRate;
use ultimatum_core::{Role, TestResultF64};

use super::aggregate::{Comparison, GroupSummary, SummaryTables};

type RateFn = dyn Fn(&GroupSummary) -> GroupRate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("unsupported report format `{0}` (expected markdown or csv)")]
    UnsupportedFormat(String),
    #[error("csv output: {0}")]
    Csv(String),
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(ReportError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn render_report(tables: &SummaryTables, format: ReportFormat) -> Result<String, ReportError> {
    match format {
        ReportFormat::Markdown => Ok(markdown(tables)),
        ReportFormat::Csv => csv(tables),
    }
}

fn cell(rate: &GroupRate) -> String {
    match rate.rate() {
        Some(_) => format!("{} ({}/{})", rate.percent_label(), rate.successes, rate.count),
        None => "-".to_string(),
    }
}

fn bold_if(text: String, bold: bool) -> String {
    if bold {
        format!("**{text}**")
    } else {
        text
    }
}

/// Whether `rate` is the largest defined rate in `column`.
fn is_max<'a>(rate: &GroupRate, column: impl Iterator<Item = &'a GroupRate>) -> bool {
    let Some(r) = rate.rate() else { return false };
    column.filter_map(GroupRate::rate).all(|other| other <= r)
}

fn p_value(p: f64) -> String {
    if p < 1e-5 {
        "p < 0.00001".to_string()
    } else {
        format!("p = {p:.6}")
    }
}

fn z_text(z: &Option<TestResultF64>) -> String {
    z.map_or_else(
        || "n/a".to_string(),
        |t| format!("z = {:.4}, {}", t.statistic, p_value(t.p_two_tailed)),
    )
}

fn comparison_text(c: &Comparison) -> String {
    match c.result {
        Some(t) => format!(
            "{} vs {}: χ²(1, N = {}) = {:.4}, {}",
            c.multi_agent,
            c.single_model,
            c.table.total(),
            t.statistic,
            p_value(t.p_two_tailed)
        ),
        None => format!("{} vs {}: test undefined for this table", c.multi_agent, c.single_model),
    }
}

fn rate_table(
    out: &mut String,
    title: &str,
    headers: &[&str],
    groups: &[GroupSummary],
    columns: &[&RateFn],
    bold: bool,
) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "| Structure | {} |", headers.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(headers.len()));
    let all: Vec<Vec<GroupRate>> = columns.iter().map(|c| groups.iter().map(c).collect()).collect();
    for (row, g) in groups.iter().enumerate() {
        let best: Vec<bool> = all.iter().map(|col| bold && is_max(&col[row], col.iter())).collect();
        let cells: Vec<String> = all
            .iter()
            .zip(&best)
            .map(|(col, &b)| bold_if(cell(&col[row]), b))
            .collect();
        let best_row = best.first().copied().unwrap_or(false);
        let _ = writeln!(
            out,
            "| {} | {} |",
            bold_if(g.label.clone(), best_row),
            cells.join(" | ")
        );
    }
    out.push('\n');
}

fn markdown(t: &SummaryTables) -> String {
    let mut out = String::from("# Ultimatum game results\n\n");
    if t.groups.is_empty() {
        out.push_str("**No runs recorded.**\n");
        return out;
    }
    let runs: u64 = t.groups.iter().map(|g| g.runs).sum();
    let failed: u64 = t.groups.iter().map(|g| g.failed).sum();
    let _ = writeln!(
        out,
        "Runs: {runs} ({failed} failed). Rates count completed runs only.\n"
    );

    rate_table(
        &mut out,
        "Human-consistent simulations",
        &["Human Consistent Simulations (%)"],
        &t.groups,
        &[&|g| g.human_consistent],
        true,
    );

    out.push_str("## Error sources\n\n");
    out.push_str("| Structure | Total Errors | Strategy Errors | Gameplay Errors | Both Errors | z-test |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for g in &t.groups {
        let e = &g.errors;
        let share = |k: u64| GroupRate {
            successes: k,
            count: e.total,
        };
        let (s, p) = (share(e.strategy), share(e.gameplay));
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            g.label,
            e.total,
            bold_if(cell(&s), e.total > 0 && e.strategy >= e.gameplay),
            bold_if(cell(&p), e.total > 0 && e.gameplay > e.strategy),
            cell(&share(e.both)),
            z_text(&e.z)
        );
    }
    out.push('\n');

    let pair_headers: Vec<String> = t.pairs.iter().map(|p| p.label()).collect();
    let pair_refs: Vec<&str> = pair_headers.iter().map(String::as_str).collect();
    let pair_fns: Vec<Box<RateFn>> = t
        .pairs
        .iter()
        .map(|p| {
            let p = *p;
            Box::new(move |g: &GroupSummary| {
                g.by_pair
                    .get(&p)
                    .copied()
                    .unwrap_or(GroupRate { successes: 0, count: 0 })
            }) as Box<RateFn>
        })
        .collect();
    let pair_cols: Vec<&RateFn> = pair_fns.iter().map(|f| f.as_ref()).collect();
    rate_table(
        &mut out,
        "Human-consistent simulations by personality pair",
        &pair_refs,
        &t.groups,
        &pair_cols,
        true,
    );

    rate_table(
        &mut out,
        "Strategy robustness",
        &[
            "Strategies Complete",
            "Strategies Consistent with Personality",
            "Strategies Complete & Consistent",
        ],
        &t.groups,
        &[&|g| g.both_complete, &|g| g.both_consistent, &|g| g.robust],
        true,
    );
    for role in [Role::Proposer, Role::Receiver] {
        let name = role.name();
        rate_table(
            &mut out,
            &format!("{name} strategies"),
            &["Strategies Complete", "Strategies Consistent with Personality"],
            &t.groups,
            &[&move |g| g.strategy_complete(role), &move |g| {
                g.strategy_consistent(role)
            }],
            false,
        );
    }

    out.push_str("## Comparisons\n\n");
    match &t.headline {
        Some(c) => {
            let _ = writeln!(out, "- Human-consistent outcomes: {}", comparison_text(c));
        }
        None => out.push_str("- Human-consistent outcomes: needs completed runs from both structures\n"),
    }
    match &t.robustness {
        Some(c) => {
            let _ = writeln!(out, "- Robust strategies: {}", comparison_text(c));
        }
        None => out.push_str("- Robust strategies: needs completed runs from both structures\n"),
    }

    if failed > 0 {
        out.push_str("\n## Failed runs\n\n| Structure | Cause | Runs |\n|---|---|---|\n");
        for g in &t.groups {
            for (cause, n) in &g.failures {
                let cause = serde_json::to_value(cause)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string));
                let _ = writeln!(out, "| {} | {} | {n} |", g.label, cause.unwrap_or_default());
            }
        }
    }
    out
}

fn csv(t: &SummaryTables) -> Result<String, ReportError> {
    let err = |e: csv::Error| ReportError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["table", "group", "column", "successes", "count", "percent"])
        .map_err(err)?;
    for g in &t.groups {
        let mut rows: Vec<(&str, String, GroupRate)> = vec![("human_consistent", "all".into(), g.human_consistent)];
        let e = &g.errors;
        for (col, k) in [("strategy", e.strategy), ("gameplay", e.gameplay), ("both", e.both)] {
            rows.push((
                "errors",
                col.into(),
                GroupRate {
                    successes: k,
                    count: e.total,
                },
            ));
        }
        for (pair, rate) in &g.by_pair {
            rows.push(("by_pair", pair.label(), *rate));
        }
        rows.push(("strategies", "complete".into(), g.both_complete));
        rows.push(("strategies", "consistent".into(), g.both_consistent));
        rows.push(("strategies", "complete_and_consistent".into(), g.robust));
        rows.push(("proposer", "complete".into(), g.proposer_complete));
        rows.push(("proposer", "consistent".into(), g.proposer_consistent));
        rows.push(("receiver", "complete".into(), g.receiver_complete));
        rows.push(("receiver", "consistent".into(), g.receiver_consistent));
        for (table, column, rate) in rows {
            let percent = if rate.count > 0 {
                rate.percent_label()
            } else {
                String::new()
            };
            w.write_record([
                table,
                &g.label,
                &column,
                &rate.successes.to_string(),
                &rate.count.to_string(),
                &percent,
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
