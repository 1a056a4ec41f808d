//! Agents, model gateways, simulation orchestration and batch experiments
//! for the ultimatum game.

pub mod agents;
pub mod experiment;
pub mod gateway;
pub mod oracle;
pub mod orchestrator;
pub mod prompts;

pub use agents::{AgentProfile, Flaw, ModelAgent, Observation, Player, ScriptedAgent};
pub use gateway::{ChatGateway, HttpGateway, RecordingGateway, ReplayGateway, SamplingParams};
pub use oracle::OracleGateway;
pub use orchestrator::{run_multi_agent, run_single_model, RunError, Simulation, SimulationConfig};
