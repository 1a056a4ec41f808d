use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;
use tracing::info;
use ultimatum_core::Structure;

use super::plan::ExperimentPlan;
use super::record::RunRecord;
use super::store::{RunStore, StoreError};
use crate::gateway::ChatGateway;
use crate::oracle::OracleGateway;
use crate::orchestrator::{
    model_players, run_multi_agent, run_single_model, scripted_players, Simulation, SimulationConfig,
};

/// Where players come from.
#[derive(Clone)]
pub enum Backend {
    /// Scripted players; flaws in the config apply.
    Oracle,
    /// A chat-completion gateway: live, replayed, or recording.
    Gateway(Arc<dyn ChatGateway>),
}

impl Backend {
    /// Default parallelism: unbounded for scripted runs, four for gateways.
    fn default_concurrency(&self) -> usize {
        match self {
            Backend::Oracle => 0,
            Backend::Gateway(_) => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("run store failed after {} completed runs: {source}", completed.len())]
    Store {
        source: StoreError,
        completed: Vec<RunRecord>,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

pub fn run_simulation(config: &SimulationConfig, backend: &Backend) -> Simulation {
    match (backend, config.structure) {
        (Backend::Oracle, Structure::SingleModel) => {
            run_single_model(config, &OracleGateway::new(config.game, config.flaws.clone()))
        }
        (Backend::Oracle, Structure::MultiAgent) => run_multi_agent(config, scripted_players(config)),
        (Backend::Gateway(g), Structure::SingleModel) => run_single_model(config, g.as_ref()),
        (Backend::Gateway(g), Structure::MultiAgent) => run_multi_agent(config, model_players(config, g.clone())),
    }
}

/// Runs every cell of the plan. Records are appended to `store` as they
/// finish; failed runs are recorded, never dropped. Returned records are in
/// plan order.
pub fn run_batch(
    plan: &ExperimentPlan,
    backend: &Backend,
    store: Option<&RunStore>,
) -> Result<Vec<RunRecord>, BatchError> {
    let runs = plan.runs();
    let threads = plan.concurrency.unwrap_or_else(|| backend.default_concurrency());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let aborted = AtomicBool::new(false);
    let store_error: Mutex<Option<StoreError>> = Mutex::new(None);
    info!(runs = runs.len(), threads, "starting batch");

    let mut records: Vec<RunRecord> = pool.install(|| {
        runs.into_par_iter()
            .enumerate()
            .filter_map(|(index, config)| {
                if aborted.load(Ordering::SeqCst) {
                    return None;
                }
                let started = Instant::now();
                let sim = run_simulation(&config, backend);
                let elapsed = started.elapsed().as_millis() as u64;
                let record = RunRecord::from_simulation(index, config, sim, elapsed);
                if let Some(store) = store {
                    if let Err(e) = store.append(&record) {
                        aborted.store(true, Ordering::SeqCst);
                        store_error.lock().expect("error slot").get_or_insert(e);
                        return None;
                    }
                }
                Some(record)
            })
            .collect()
    });
    records.sort_by_key(|r| r.run_index);
    match store_error.into_inner().expect("error slot") {
        Some(source) => Err(BatchError::Store {
            source,
            completed: records,
        }),
        None => Ok(records),
    }
}
