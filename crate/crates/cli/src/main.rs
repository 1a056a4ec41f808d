use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;
use ultimatum_core::stats::{chi_square_2x2, two_proportion_z, ContingencyTable2x2};
use ultimatum_core::{GameConfig, Money, PersonalityPair, RawLog, Structure, TestResultF64};
use ultimatum_harness::experiment::{
    aggregate, regrade_logs, render_report, run_batch, Backend, ExperimentPlan, ReportFormat, RunStore,
};
use ultimatum_harness::gateway::ChatGateway;
use ultimatum_harness::{HttpGateway, RecordingGateway, ReplayGateway, SimulationConfig};

#[derive(Parser)]
#[command(name = "ultimatum", version, about = "Run and grade ultimatum game simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Oracle,
    Replay,
    Live,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch and append records to the run store.
    Run {
        /// Plan file (TOML). Without one, the full oracle grid is run.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "oracle")]
        mode: Mode,
        /// Overrides the plan seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run store path; overrides the plan's output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recorded exchanges to serve in replay mode.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// In live mode, also record every exchange here.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Overrides runs per cell.
        #[arg(long)]
        runs: Option<u32>,
    },
    /// Re-grade stored records, or grade external logs.
    Grade {
        /// Run store to re-grade.
        #[arg(long, conflicts_with = "log")]
        store: Option<PathBuf>,
        /// One combined log (single-model) or proposer then receiver logs (multi-agent).
        #[arg(long, num_args = 1..=2)]
        log: Vec<PathBuf>,
        #[arg(long, default_value = "fair-fair")]
        pair: String,
        #[arg(long, default_value = "100")]
        pot_cents: u32,
        #[arg(long, default_value = "5")]
        rounds: u32,
    },
    /// Render summary tables from a run store.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ad-hoc tests on counts.
    Stats {
        #[command(subcommand)]
        test: StatsTest,
    },
}

#[derive(Subcommand)]
enum StatsTest {
    /// Pearson chi-square on a 2x2 table: successes and failures of two groups.
    Chi2 { a: u64, b: u64, c: u64, d: u64 },
    /// Pooled two-proportion z-test.
    Z { s1: u64, n1: u64, s2: u64, n2: u64 },
}

/// Error carrying its process exit code.
struct Exit {
    code: u8,
    error: anyhow::Error,
}

fn invalid(error: anyhow::Error) -> Exit {
    Exit { code: 2, error }
}

fn failed(error: anyhow::Error) -> Exit {
    Exit { code: 1, error }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            plan,
            mode,
            seed,
            out,
            replay,
            record,
            runs,
        } => run(plan.as_deref(), mode, seed, out, replay, record, runs),
        Command::Grade {
            store,
            log,
            pair,
            pot_cents,
            rounds,
        } => match store {
            Some(store) => regrade_store(&store),
            None => grade_logs(&log, &pair, pot_cents, rounds),
        },
        Command::Report { store, format, out } => report(&store, &format, out.as_deref()),
        Command::Stats { test } => stats(test),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn run(
    plan_path: Option<&Path>,
    mode: Mode,
    seed: Option<u64>,
    out: Option<PathBuf>,
    replay: Option<PathBuf>,
    record: Option<PathBuf>,
    runs: Option<u32>,
) -> Result<(), Exit> {
    let mut plan = match plan_path {
        Some(path) => ExperimentPlan::load(path).map_err(|e| invalid(e.into()))?,
        None => ExperimentPlan::oracle(10, 0),
    };
    if let Some(seed) = seed {
        plan.seed = seed;
    }
    if let Some(runs) = runs {
        if runs == 0 {
            return Err(invalid(anyhow!("--runs must be at least 1")));
        }
        plan.runs_per_cell = runs;
    }
    let backend = match mode {
        Mode::Oracle => Backend::Oracle,
        Mode::Replay => {
            let path = replay.ok_or_else(|| invalid(anyhow!("replay mode needs --replay <file>")))?;
            let gateway = ReplayGateway::open(&path).map_err(|e| invalid(e.into()))?;
            Backend::Gateway(Arc::new(gateway))
        }
        Mode::Live => {
            let endpoint = plan
                .endpoint
                .clone()
                .ok_or_else(|| invalid(anyhow!("live mode needs an [endpoint] section in the plan")))?;
            let http = HttpGateway::from_config(&endpoint).map_err(|e| invalid(e.into()))?;
            let gateway: Arc<dyn ChatGateway> = match record {
                Some(path) => Arc::new(RecordingGateway::create(http, &path).map_err(|e| invalid(e.into()))?),
                None => Arc::new(http),
            };
            Backend::Gateway(gateway)
        }
    };
    let out = out
        .or_else(|| plan.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs.jsonl"));
    let store = RunStore::open(&out).map_err(|e| failed(e.into()))?;
    let records = run_batch(&plan, &backend, Some(&store)).map_err(|e| failed(e.into()))?;
    let failures = records.iter().filter(|r| r.verdict().is_none()).count();
    let markdown = render_report(&aggregate(&records), ReportFormat::Markdown).map_err(|e| failed(e.into()))?;
    print!("{markdown}");
    eprintln!(
        "{} runs written to {} ({failures} failed)",
        records.len(),
        out.display()
    );
    if failures > 0 {
        return Err(failed(anyhow!("{failures} of {} runs failed", records.len())));
    }
    Ok(())
}

fn regrade_store(path: &Path) -> Result<(), Exit> {
    let records = RunStore::load(path).map_err(|e| invalid(e.into()))?;
    let mut problems = 0;
    for r in &records {
        let Some(stored) = r.verdict() else {
            println!("run {}: failed run ({:?}), not graded", r.run_index, r.failure());
            continue;
        };
        match r.regrade() {
            Ok(v) if &v == stored => println!("run {}: {:?} (unchanged)", r.run_index, v.error_class),
            Ok(v) => {
                problems += 1;
                println!(
                    "run {}: {:?} (stored {:?})",
                    r.run_index, v.error_class, stored.error_class
                );
            }
            Err(e) => {
                problems += 1;
                println!("run {}: cannot regrade: {e}", r.run_index);
            }
        }
    }
    if problems > 0 {
        return Err(failed(anyhow!(
            "{problems} of {} records did not regrade cleanly",
            records.len()
        )));
    }
    Ok(())
}

fn grade_logs(logs: &[PathBuf], pair: &str, pot_cents: u32, rounds: u32) -> Result<(), Exit> {
    let pair: PersonalityPair = pair.parse().map_err(|e| invalid(anyhow!("{e}")))?;
    let game = GameConfig::new(Money::from_cents(pot_cents), rounds).map_err(|e| invalid(e.into()))?;
    let read = |p: &PathBuf| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let (structure, raw) = match logs {
        [one] => (
            Structure::SingleModel,
            vec![RawLog::new("combined", read(one).map_err(invalid)?)],
        ),
        [p, r] => (
            Structure::MultiAgent,
            vec![
                RawLog::new("proposer", read(p).map_err(invalid)?),
                RawLog::new("receiver", read(r).map_err(invalid)?),
            ],
        ),
        _ => return Err(invalid(anyhow!("pass --store, or one or two --log files"))),
    };
    let mut config = SimulationConfig::oracle(structure, pair, 0);
    config.game = game;
    let verdict = regrade_logs(&config, &raw).map_err(|e| failed(e.into()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).expect("verdicts serialize")
    );
    Ok(())
}

fn report(store: &Path, format: &str, out: Option<&Path>) -> Result<(), Exit> {
    let format: ReportFormat = format
        .parse()
        .map_err(|e: ultimatum_harness::experiment::ReportError| invalid(e.into()))?;
    let records = RunStore::load(store).map_err(|e| invalid(e.into()))?;
    let text = render_report(&aggregate(&records), format).map_err(|e| failed(e.into()))?;
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(failed),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_result(name: &str, r: &TestResultF64) {
    let df = r.df.map(|d| format!(", df = {d}")).unwrap_or_default();
    println!("{name} = {:.4}{df}, p = {:.6}", r.statistic, r.p_two_tailed);
    if r.low_expected_count {
        println!("warning: an expected cell count is below 5");
    }
}

fn stats(test: StatsTest) -> Result<(), Exit> {
    let result = match test {
        StatsTest::Chi2 { a, b, c, d } => {
            chi_square_2x2::<f64>(&ContingencyTable2x2::new(a, b, c, d)).map(|r| ("chi2", r))
        }
        StatsTest::Z { s1, n1, s2, n2 } => {
            if s1 > n1 || s2 > n2 {
                return Err(invalid(anyhow!("successes cannot exceed group size")));
            }
            two_proportion_z::<f64>(s1, n1, s2, n2).map(|r| ("z", r))
        }
    };
    match result {
        Ok((name, r)) => {
            print_result(name, &r);
            Ok(())
        }
        Err(e) => Err(invalid(e.into())),
    }
}
