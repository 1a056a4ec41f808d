mod common;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use proptest::prelude::*;
use ultimatum_core::rubric::RuleViolation;
use ultimatum_core::{Decision, ErrorClass, GameConfig, Personality, PersonalityPair, Role, Structure};
use ultimatum_harness::experiment::RunRecord;
use ultimatum_harness::gateway::{ChatGateway, ChatRequest, ChatResponse, ChatRole, GatewayError, RetryPolicy};
use ultimatum_harness::orchestrator::{model_players, scripted_players, FailureCause};
use ultimatum_harness::{
    run_multi_agent, run_single_model, Flaw, HttpGateway, RecordingGateway, ReplayGateway, SimulationConfig,
};

use common::ScriptedChat;
use Personality::{Fair, Greedy};

/// Returns the same text for every request.
struct Canned(String);

impl ChatGateway for Canned {
    fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        Ok(ChatResponse::text(self.0.clone()))
    }
}

/// Keeps every request it forwards.
struct Spy<G> {
    inner: G,
    seen: Mutex<Vec<ChatRequest>>,
}

impl<G: ChatGateway> ChatGateway for Spy<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.seen.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}

fn single(pair: PersonalityPair) -> SimulationConfig {
    SimulationConfig::oracle(Structure::SingleModel, pair, 1)
}

fn record(cfg: &SimulationConfig, sim: ultimatum_harness::Simulation) -> RunRecord {
    RunRecord::from_simulation(0, cfg.clone(), sim, 0)
}

#[test]
fn figure_one_replayed_grades_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("figure1.jsonl");
    let cfg = single(PersonalityPair::new(Fair, Fair));
    let recorder = RecordingGateway::create(Canned(common::core_fixture("figure1_single_model.txt")), &path).unwrap();
    let first = record(&cfg, run_single_model(&cfg, &recorder));
    drop(recorder);

    let replay = ReplayGateway::open(&path).unwrap();
    let second = record(&cfg, run_single_model(&cfg, &replay));
    assert_eq!(replay.remaining(), 0);
    assert_eq!(first, second);
    let v = second.verdict().expect("completed run");
    assert_eq!(v.error_class, ErrorClass::None, "{v:#?}");
}

#[test]
fn stubborn_greedy_receiver_is_flagged_in_round_five() {
    let text = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/greedy_stubborn_single_model.txt"),
    )
    .unwrap();
    let cfg = single(PersonalityPair::new(Greedy, Greedy));
    let sim = run_single_model(&cfg, &Canned(text));
    let done = sim.result.expect("completed run");
    let offers: Vec<u32> = done.transcript.rounds.iter().map(|r| r.offer.cents()).collect();
    assert_eq!(offers, vec![25, 30, 35, 40, 45]);
    assert!(done.transcript.rounds.iter().all(|r| r.decision == Decision::Reject));
    let flag = done
        .verdict
        .per_round_flags
        .iter()
        .find(|f| f.round == 5 && f.role == Role::Receiver)
        .expect("round-5 receiver flag");
    assert_eq!(flag.rule, RuleViolation::FinalRoundHoldout);
    assert!(!flag.attributed_to_strategy);
    assert_eq!(done.verdict.error_class, ErrorClass::GameplayOnly);
}

#[test]
fn timeout_becomes_a_failed_transport_run() {
    let server = common::MockServer::silent();
    let gateway = HttpGateway::new(&server.url, None, Duration::from_millis(200))
        .unwrap()
        .with_retry(RetryPolicy {
            max_retries: 0,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        });
    let cfg = single(PersonalityPair::new(Fair, Greedy));
    let rec = record(&cfg, run_single_model(&cfg, &gateway));
    assert_eq!(rec.failure(), Some(FailureCause::Transport));
    assert!(!rec.prompts.is_empty());
}

#[test]
fn single_model_prompt_names_the_pair() {
    let spy = Spy {
        inner: ScriptedChat::new(GameConfig::default()),
        seen: Mutex::new(Vec::new()),
    };
    let cfg = single(PersonalityPair::new(Greedy, Fair));
    assert!(run_single_model(&cfg, &spy).result.is_ok());
    let seen = spy.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    let prompt = &seen[0].messages[0].content;
    assert!(prompt.starts_with(
        "Create a strategy for a greedy proposer and a fair receiver in playing the ultimatum game five times with $1."
    ));
    assert_eq!(seen[0].seed, Some(cfg.seed));
}

#[test]
fn unparseable_log_is_retried_once_then_recorded() {
    let cfg = single(PersonalityPair::new(Fair, Fair));
    let rec = record(&cfg, run_single_model(&cfg, &Canned("I would rather not play.".into())));
    assert_eq!(rec.failure(), Some(FailureCause::UnparseableLog));
    let rejected = rec.raw_logs().iter().filter(|l| l.label == "rejected").count();
    assert_eq!(rejected, 2);
}

/// Plays the receiver as a proposer: always answers with an offer.
struct OfferingReceiver(ScriptedChat);

impl ChatGateway for OfferingReceiver {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let receiver = request.messages[0].content.starts_with("You are Receiver");
        let last = &request.messages.last().unwrap().content;
        if receiver && !last.contains("Create a strategy") {
            return Ok(ChatResponse::text("OFFER: $0.50"));
        }
        self.0.complete(request)
    }
}

#[test]
fn receiver_offering_twice_is_a_turn_order_violation() {
    let cfg = SimulationConfig::oracle(Structure::MultiAgent, PersonalityPair::new(Fair, Fair), 2);
    let gateway: Arc<dyn ChatGateway> = Arc::new(OfferingReceiver(ScriptedChat::new(cfg.game)));
    let rec = record(&cfg, run_multi_agent(&cfg, model_players(&cfg, gateway)));
    assert_eq!(rec.failure(), Some(FailureCause::TurnOrderViolation));
    let protocol = rec
        .raw_logs()
        .iter()
        .find(|l| l.label == "protocol")
        .expect("protocol log");
    assert_eq!(protocol.text.matches("OFFER: $0.50").count(), 2);
}

#[test]
fn clean_oracles_reproduce_the_hand_traces() {
    let traces = [
        ((Fair, Fair), vec![50, 50, 50, 50, 50], "AAAAA"),
        ((Greedy, Fair), vec![20, 25, 30, 35, 40], "RRRRA"),
        ((Fair, Greedy), vec![50, 55, 55, 55, 55], "RAAAA"),
        ((Greedy, Greedy), vec![20, 25, 30, 35, 40], "RRRRA"),
    ];
    for ((p, r), offers, codes) in traces {
        let cfg = SimulationConfig::oracle(Structure::MultiAgent, PersonalityPair::new(p, r), 8);
        let done = run_multi_agent(&cfg, scripted_players(&cfg))
            .result
            .expect("completed run");
        let got: Vec<u32> = done.transcript.rounds.iter().map(|o| o.offer.cents()).collect();
        let decisions: String = done
            .transcript
            .rounds
            .iter()
            .map(|o| if o.decision == Decision::Accept { 'A' } else { 'R' })
            .collect();
        assert_eq!((got, decisions.as_str()), (offers, codes), "{p:?}-{r:?}");
        assert_eq!(done.verdict.error_class, ErrorClass::None);
    }
}

#[test]
fn model_agents_over_a_scripted_chat_grade_clean() {
    for pair in PersonalityPair::all() {
        let cfg = SimulationConfig::oracle(Structure::MultiAgent, pair, 3);
        let gateway: Arc<dyn ChatGateway> = Arc::new(ScriptedChat::new(cfg.game));
        let done = run_multi_agent(&cfg, model_players(&cfg, gateway))
            .result
            .expect("completed run");
        assert_eq!(done.verdict.error_class, ErrorClass::None, "{}", pair.label());
    }
}

#[test]
fn replayed_runs_are_bit_identical_in_both_structures() {
    let dir = tempfile::tempdir().unwrap();
    for structure in [Structure::SingleModel, Structure::MultiAgent] {
        let path = dir.path().join(format!("{structure}.jsonl"));
        let cfg = SimulationConfig::oracle(structure, PersonalityPair::new(Greedy, Fair), 21);
        let run = |g: Arc<dyn ChatGateway>| {
            let sim = match structure {
                Structure::SingleModel => run_single_model(&cfg, g.as_ref()),
                Structure::MultiAgent => run_multi_agent(&cfg, model_players(&cfg, g)),
            };
            serde_json::to_string(&record(&cfg, sim)).unwrap()
        };
        let recorded = run(Arc::new(
            RecordingGateway::create(ScriptedChat::new(cfg.game), &path).unwrap(),
        ));
        let replayed = run(Arc::new(ReplayGateway::open(&path).unwrap()));
        assert_eq!(recorded, replayed, "{structure}");
    }
}

#[test]
fn scripted_runs_are_deterministic_per_seed() {
    for flaws in [
        vec![],
        vec![Flaw::Deviator],
        vec![Flaw::InconsistentThreshold, Flaw::Deviator],
    ] {
        for seed in 0..20 {
            let cfg = SimulationConfig::oracle(Structure::MultiAgent, PersonalityPair::new(Fair, Greedy), seed)
                .with_flaws(&flaws);
            let a = record(&cfg, run_multi_agent(&cfg, scripted_players(&cfg)));
            let b = record(&cfg, run_multi_agent(&cfg, scripted_players(&cfg)));
            assert_eq!(a, b);
        }
    }
}

fn personality() -> impl Strategy<Value = Personality> {
    prop_oneof![Just(Fair), Just(Greedy)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn private_biographies_never_reach_the_opponent(p in personality(), r in personality(), seed in any::<u64>()) {
        let cfg = SimulationConfig::oracle(Structure::MultiAgent, PersonalityPair::new(p, r), seed);
        let spy = Arc::new(Spy { inner: ScriptedChat::new(cfg.game), seen: Mutex::new(Vec::new()) });
        let sim = run_multi_agent(&cfg, model_players(&cfg, spy.clone()));
        prop_assert!(sim.result.is_ok());
        let bios = [
            format!("Proposer is {}.", p.adjective()),
            format!("Receiver is {}.", r.adjective()),
        ];
        for request in spy.seen.lock().unwrap().iter() {
            let own = if request.messages[0].content.starts_with("You are Proposer") { 0 } else { 1 };
            for m in request.messages.iter().filter(|m| m.role != ChatRole::Assistant) {
                prop_assert!(!m.content.contains(&bios[1 - own]), "leak in {:?}", m.content);
            }
        }
    }
}
