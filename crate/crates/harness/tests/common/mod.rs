#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::{json, Value};
use ultimatum_core::strategy::{prescribed_action, Action, StrategySpec};
use ultimatum_core::{Decision, GameConfig, Money, Personality, Role, RoundOutcome};
use ultimatum_harness::agents::oracle_strategy;
use ultimatum_harness::gateway::{
    ChatGateway, ChatMessage, ChatRequest, ChatResponse, ChatRole, GatewayError, SamplingParams,
};
use ultimatum_harness::OracleGateway;

pub fn core_fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub type Handler = Arc<dyn Fn(&Value) -> (u16, String) + Send + Sync>;

/// Minimal HTTP/1.1 server for chat-completion requests.
pub struct MockServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start(handler: Handler) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let handler = handler.clone();
                let counter = counter.clone();
                thread::spawn(move || serve(stream, handler, counter));
            }
        });
        MockServer { url, hits }
    }

    /// Accepts connections and never answers.
    pub fn silent() -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        thread::spawn(move || {
            let mut held = Vec::new();
            for stream in listener.incoming().flatten() {
                held.push(stream);
            }
        });
        MockServer {
            url,
            hits: Arc::new(AtomicUsize::new(0)),
        }
    }
}

fn serve(stream: TcpStream, handler: Handler, hits: Arc<AtomicUsize>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut length = 0usize;
        let mut line = String::new();
        let mut first = true;
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            if line == "\r\n" && !first {
                break;
            }
            first = false;
            if let Some((name, value)) = line.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; length];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        hits.fetch_add(1, Ordering::SeqCst);
        let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let (status, text) = handler(&request);
        let reply = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{text}",
            text.len()
        );
        if out.write_all(reply.as_bytes()).is_err() {
            return;
        }
    }
}

pub fn completion(content: &str) -> String {
    json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5},
    })
    .to_string()
}

fn request_of(body: &Value) -> ChatRequest {
    let messages = body["messages"]
        .as_array()
        .map(|ms| {
            ms.iter()
                .map(|m| {
                    let content = m["content"].as_str().unwrap_or_default();
                    match m["role"].as_str() {
                        Some("system") => ChatMessage::system(content),
                        Some("assistant") => ChatMessage::assistant(content),
                        _ => ChatMessage::user(content),
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    ChatRequest {
        model: body["model"].as_str().unwrap_or_default().to_string(),
        messages,
        sampling: SamplingParams::default(),
        seed: body["seed"].as_u64(),
    }
}

fn dollars(text: &str) -> Option<Money> {
    let amount = text.trim().trim_start_matches('$');
    let (whole, frac) = amount.split_once('.').unwrap_or((amount, "0"));
    let cents = whole.parse::<u32>().ok()? * 100 + format!("{frac:0<2}")[..2].parse::<u32>().ok()?;
    Some(Money::from_cents(cents))
}

/// Plays the scripted policy for whichever agent the conversation belongs to.
fn agent_reply(req: &ChatRequest, game: GameConfig) -> String {
    let system = &req.messages[0].content;
    let role = if system.starts_with("You are Proposer") {
        Role::Proposer
    } else {
        Role::Receiver
    };
    let personality = if system.contains("is greedy") {
        Personality::Greedy
    } else {
        Personality::Fair
    };
    let spec = StrategySpec::new("", oracle_strategy(role, personality, game.pot()));
    let last = &req.messages.last().unwrap().content;
    if last.contains("Create a strategy") {
        return format!(
            "STRATEGY:\n{}",
            ultimatum_core::parse::canonical_strategy_text(&spec.parsed)
        );
    }
    let (mut offers, mut decisions) = (Vec::new(), Vec::new());
    for m in req.messages.iter().filter(|m| m.role != ChatRole::System) {
        for line in m.content.lines() {
            if let Some(rest) = line.trim().strip_prefix("OFFER:") {
                offers.extend(dollars(rest));
            } else if let Some(rest) = line.trim().strip_prefix("DECISION:") {
                decisions.push(if rest.trim() == "ACCEPT" {
                    Decision::Accept
                } else {
                    Decision::Reject
                });
            }
        }
    }
    let history: Vec<RoundOutcome> = offers
        .iter()
        .zip(&decisions)
        .enumerate()
        .map(|(i, (o, d))| RoundOutcome::settle(i as u32 + 1, game.pot(), *o, *d))
        .collect();
    let pending = (offers.len() > decisions.len()).then(|| *offers.last().unwrap());
    let round = history.len() as u32 + 1;
    match prescribed_action(&spec, &game, &history, round, pending).map(|p| p.nominal_action()) {
        Ok(Action::Offer(m)) => format!("OFFER: {m}"),
        Ok(Action::Decide(Decision::Accept)) => "DECISION: ACCEPT".to_string(),
        Ok(Action::Decide(Decision::Reject)) => "DECISION: REJECT".to_string(),
        Err(e) => format!("I am not sure ({e})."),
    }
}

/// A chat "model" that plays the clean scripted policies in either structure.
pub struct ScriptedChat {
    game: GameConfig,
    oracle: OracleGateway,
}

impl ScriptedChat {
    pub fn new(game: GameConfig) -> Self {
        ScriptedChat {
            game,
            oracle: OracleGateway::new(game, Vec::new()),
        }
    }
}

impl ChatGateway for ScriptedChat {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        match request.messages.first() {
            None => Err(GatewayError::Protocol("no messages".into())),
            Some(m) if m.role == ChatRole::System => Ok(ChatResponse::text(agent_reply(request, self.game))),
            Some(_) => self.oracle.complete(request),
        }
    }
}

/// HTTP handler serving [`ScriptedChat`].
pub fn scripted_endpoint(game: GameConfig) -> Handler {
    let chat = ScriptedChat::new(game);
    Arc::new(move |body| match chat.complete(&request_of(body)) {
        Ok(r) => (200, completion(&r.text)),
        Err(e) => (400, json!({"error": e.to_string()}).to_string()),
    })
}
