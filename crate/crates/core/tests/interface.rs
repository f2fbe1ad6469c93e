use std::io::Cursor;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sparse_wm::corpus::data::{bundled_script, Dataset, CATEGORIZATION};
use sparse_wm::corpus::script::Entry;
use sparse_wm::interface::server::{event_stream, AppState, EVENT_QUEUE};
use sparse_wm::interface::snapshot::{from_bytes, to_bytes};
use sparse_wm::interface::{load_snapshot, repl, router, save_snapshot, Console};
use sparse_wm::{Config, Error, Session};
use tokio_stream::StreamExt;
use tower::ServiceExt;

fn config() -> Config {
    Config {
        vocab_capacity: 512,
        phrase_capacity: 2048,
        assoc_capacity: 16384,
        saann_capacity: 4096,
        auto_exploit: true,
        ..Config::default()
    }
}

fn categorization_session() -> Session {
    let d = Dataset::parse("categorization", CATEGORIZATION).unwrap();
    let mut s = Session::new(Config {
        auto_exploit: false,
        ..config()
    })
    .unwrap();
    for l in &d.facts.lines {
        if let Entry::Line(line) = &l.entry {
            s.process_line(line).unwrap();
        }
    }
    s.process_text("#####").unwrap();
    let item = &d.group("tell_category").unwrap().items[0];
    s.process_line(&item.question).unwrap();
    for c in &item.training {
        s.process_line(c).unwrap();
    }
    s
}

fn answers(s: &mut Session) -> Vec<String> {
    ["mammal", "bird", "fish", "reptile", "amphibian", "insect"]
        .iter()
        .map(|c| {
            let article = if c.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            s.process_text(&format!("? tell me {article} {c}")).unwrap();
            s.exploit().unwrap().text()
        })
        .collect()
}

#[test]
fn snapshot_round_trip_is_byte_identical_and_behaves_the_same() {
    let mut s = categorization_session();
    let bytes = to_bytes(&s).unwrap();
    let mut loaded = from_bytes(&bytes).unwrap();
    assert_eq!(to_bytes(&loaded).unwrap(), bytes);
    assert_eq!(answers(&mut loaded), answers(&mut s));
}

#[test]
fn snapshot_files_reject_damage() {
    let s = categorization_session();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.snap");
    save_snapshot(&s, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_snapshot(&path), Err(Error::Integrity(_))));
    let mut newer = bytes.clone();
    newer[8..12].copy_from_slice(&7u32.to_le_bytes());
    std::fs::write(&path, &newer).unwrap();
    let err = load_snapshot(&path).unwrap_err();
    assert!(matches!(err, Error::Version { found: 7, expected: 1 }));
    assert!(err.to_string().contains('7'));
}

fn run_repl(console: &mut Console, text: &str) -> Vec<String> {
    let mut out = Vec::new();
    repl(console, Cursor::new(text.to_string()), &mut out).unwrap();
    String::from_utf8(out).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn repl_runs_the_pronoun_transcript() {
    let (text, _) = bundled_script("pronouns").unwrap();
    let mut console = Console::new(Session::new(config()).unwrap());
    let out = run_repl(&mut console, text);
    let tail: Vec<&str> = out.iter().rev().take(3).rev().map(String::as_str).collect();
    assert_eq!(
        tail,
        ["he is read -ing a book", "she is write -ing a letter", "she is drive -ing the car"]
    );
}

#[test]
fn repl_commands_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.snap");
    let mut console = Console::new(Session::new(config()).unwrap());
    let script = format!(
        "the turtle is a reptile\n.bogus\n? tell me a reptile\n.word_group a reptile\n.monitor WGB\n.stat\n.save {p}\n.load {p}\n.monitor nonsense\n.monitor wgb\n",
        p = path.display()
    );
    let out = run_repl(&mut console, &script);
    assert!(out.iter().any(|l| l.starts_with("error: protocol error") && l.contains(".bogus")));
    assert!(out.iter().any(|l| l == "word_group: a reptile"));
    let stat = out.iter().find(|l| l.starts_with("learnable connections")).unwrap();
    assert!(stat.contains("allocated of"));
    assert!(out.iter().any(|l| l.starts_with("saved ")));
    assert!(out.iter().any(|l| l.starts_with("loaded ")));
    assert!(out.iter().any(|l| l.contains("nonsense")));
    assert_eq!(out.iter().filter(|l| *l == "word_group: a reptile").count(), 2);
}

#[test]
fn console_and_session_agree_on_plain_lines() {
    let lines = ["the dog is a mammal", "? tell me a mammal", ".word_group dog", ".reward", "? tell me a mammal"];
    let mut console = Console::new(Session::new(config()).unwrap());
    let mut session = Session::new(config()).unwrap();
    for l in lines {
        let via_console = console.submit(l).unwrap();
        let direct = session.process_text(l).unwrap();
        assert_eq!(via_console.reply, Some(direct.clone()));
        assert_eq!(via_console.output, direct.text().into_iter().collect::<Vec<_>>());
    }
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn body_parts_console() -> Console {
    let mut console = Console::new(Session::new(config()).unwrap());
    for l in [
        "the nose is in the face",
        "#####",
        "the ear is in the head",
        "#####",
        "the hand is in the arm",
        "#####",
    ] {
        console.submit(l).unwrap();
    }
    console
}

#[tokio::test]
async fn service_answers_questions_after_training() {
    let app = router(AppState::new(body_parts_console()));
    let (status, r) = call(&app, "POST", "/line", Some(json!({"line": "? where is the ear"}))).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    let (_, r) = call(&app, "POST", "/target", Some(json!({"kind": "word_group", "words": "ear"}))).await;
    assert_eq!(r["reply"]["kind"], "explored", "{r}");
    let (_, r) = call(&app, "POST", "/target", Some(json!({"kind": "phrase", "words": "the ear is in the head"}))).await;
    assert_eq!(r["reply"]["kind"], "explored", "{r}");
    call(&app, "POST", "/target", Some(json!({"kind": "word_group", "words": "in the head"}))).await;
    let (_, before) = call(&app, "GET", "/stats", None).await;
    let (status, r) = call(&app, "POST", "/reward", Some(json!({"kind": "full"}))).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    assert_eq!(r["reply"]["kind"], "rewarded");
    let (_, after) = call(&app, "GET", "/stats", None).await;
    assert!(after["stats"]["policy_neurons"].as_u64() > before["stats"]["policy_neurons"].as_u64());
    assert!(!after["actions"].as_array().unwrap().is_empty());

    let (status, r) = call(&app, "POST", "/line", Some(json!({"line": "? where is the nose"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["output"][0], "in the face", "{r}");
    assert_eq!(r["reply"]["answer"]["lines"][0], "in the face");
}

#[tokio::test]
async fn state_endpoint_names_every_component() {
    let app = router(AppState::new(body_parts_console()));
    call(&app, "POST", "/line", Some(json!({"line": "the eye is in the face"}))).await;
    let (status, r) = call(&app, "GET", "/state", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = r["components"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for c in sparse_wm::stm::COMPONENTS {
        assert!(names.contains(&c), "{c} missing from {names:?}");
    }
    let working = r["components"].as_array().unwrap().iter().find(|c| c["name"] == "working_phrase").unwrap();
    assert_eq!(working["decoded"], "the eye is in the face");
    assert!(!working["active"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn malformed_requests_get_structured_errors() {
    let app = router(AppState::new(body_parts_console()));
    let (status, r) = call(&app, "POST", "/line", Some(json!({"text": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(r["error"]["kind"], "malformed_request");
    let (status, r) = call(&app, "POST", "/line", Some(json!({"line": ".nothing"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(r["error"]["kind"], "protocol");
    let (status, r) = call(&app, "POST", "/line", Some(json!({"line": "one two three four five six seven eight nine ten eleven"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(r["error"]["kind"], "length");
    let (status, r) = call(&app, "POST", "/line", Some(json!({"line": ".exploitation"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(r["error"]["kind"], "policy_empty");
    let (status, r) = call(&app, "POST", "/reward", Some(json!({"kind": "lavish"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(r["error"]["kind"], "malformed_request");
}

#[tokio::test]
async fn event_stream_is_throttled_and_drops_the_oldest() {
    let state = AppState::new(body_parts_console());
    let (tx, rx) = tokio::sync::broadcast::channel(EVENT_QUEUE);
    drop(tx);
    assert!(Box::pin(event_stream(rx)).next().await.is_none());

    let app = router(state.clone());
    let console = state.console();
    // Subscribe through the service, then produce more steps than the queue
    // holds while nobody reads.
    let resp = app
        .clone()
        .oneshot(Request::builder().uri("/events").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    tokio::task::spawn_blocking(move || {
        let mut c = console.lock().unwrap();
        c.submit("? where is the ear").unwrap();
        c.submit(".word_group ear").unwrap();
        c.submit(".phrase the ear is in the head").unwrap();
    })
    .await
    .unwrap();
    let mut body = resp.into_body().into_data_stream();
    let start = std::time::Instant::now();
    let mut events = 0;
    while events < 10 {
        let chunk = tokio::time::timeout(Duration::from_secs(5), body.next()).await.unwrap().unwrap().unwrap();
        let text = String::from_utf8(chunk.to_vec()).unwrap();
        if text.contains("event: step") {
            assert!(text.contains("\"layers\""));
            events += 1;
        }
    }
    assert!(start.elapsed() >= Duration::from_millis(9 * 1000 / 30 - 10));
}

#[tokio::test]
async fn slow_subscribers_lose_the_oldest_events() {
    use sparse_wm::executive::{MentalAction, SessionMode};
    use sparse_wm::session::StepEvent;
    use std::sync::Arc;

    let (tx, rx) = tokio::sync::broadcast::channel(EVENT_QUEUE);
    let s = Session::new(config()).unwrap();
    for i in 0..EVENT_QUEUE + 50 {
        tx.send(Arc::new(StepEvent {
            mode: SessionMode::Exploration,
            action: MentalAction::NextW,
            changed: true,
            attempt: Some(i),
            buffers: s.buffers(),
            state: s.full_snapshot(),
        }))
        .unwrap();
    }
    drop(tx);
    let mut stream = Box::pin(event_stream(rx));
    let first = stream.next().await.unwrap();
    assert_eq!(first.attempt, Some(50));
    let mut last = first.attempt;
    let mut count = 1;
    while let Some(e) = stream.next().await {
        last = e.attempt;
        count += 1;
    }
    assert_eq!(count, EVENT_QUEUE);
    assert_eq!(last, Some(EVENT_QUEUE + 49));
}
