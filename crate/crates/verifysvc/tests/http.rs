use std::net::SocketAddr;
use std::path::Path;

use fasa_core::dataset::{emit_manifest, Manifest, PcmAudio, RecordSource, SegmentRecord, SpeakerMeta};
use fasa_core::review::{write_verify_items, VerifyItem};
use fasa_core::transcript::words;
use fasa_core::Thresholds;
use fasa_verifysvc::{ReviewQueue, Server, ServiceError, StatusFilter, DECISION_LOG, FINAL_MANIFEST};
use serde_json::{json, Value};

fn item(id: &str, wer: f64) -> VerifyItem {
    VerifyItem {
        id: id.into(),
        audio: format!("verify_segments/{id}.wav").into(),
        source_audio: "story.wav".into(),
        start_s: 1.0,
        end_s: 2.0,
        gt: words("the frog jumped out"),
        pred: words("the fog jumped"),
        wer,
        speaker: SpeakerMeta::default(),
    }
}

/// A run directory with one auto-aligned record and three queued items
/// (WER 0.4, 0.2, 0.3 in queue order).
fn session(dir: &Path) {
    std::fs::create_dir_all(dir.join("segments")).unwrap();
    std::fs::create_dir_all(dir.join("verify_segments")).unwrap();
    let items = vec![item("u1", 0.4), item("u2", 0.2), item("u3", 0.3)];
    for (k, it) in items.iter().enumerate() {
        let audio = PcmAudio::from_samples(vec![k as i16 + 1; 1600]);
        audio.write(&dir.join(&it.audio)).unwrap();
    }
    write_verify_items(&dir.join("data_verify.jsonl"), &items).unwrap();
    PcmAudio::from_samples(vec![7; 800]).write(&dir.join("segments/a1.wav")).unwrap();
    let mut auto = Manifest::new("test", Thresholds::default(), "asr");
    auto.records.push(SegmentRecord {
        id: "a1".into(),
        audio_path: "segments/a1.wav".into(),
        source_audio: "story.wav".into(),
        start_s: 0.0,
        end_s: 0.05,
        transcript: words("once upon a time"),
        source: RecordSource::Auto,
        speaker_meta: SpeakerMeta::default(),
    });
    emit_manifest(&auto, &dir.join("data_align.manifest.jsonl")).unwrap();
}

fn start(dir: &Path) -> Server {
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    Server::start(ReviewQueue::open(dir).unwrap(), addr, None).unwrap()
}

struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    fn new(server: &Server) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Client { agent, base: server.url() }
    }

    fn get(&self, path: &str) -> (u16, Vec<u8>) {
        let mut resp = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_vec().unwrap())
    }

    fn get_json(&self, path: &str) -> (u16, Value) {
        let (status, body) = self.get(path);
        (status, serde_json::from_slice(&body).unwrap())
    }

    fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body.to_string())
            .unwrap();
        let status = resp.status().as_u16();
        (status, serde_json::from_slice(&resp.body_mut().read_to_vec().unwrap()).unwrap())
    }
}

fn ids(page: &Value) -> Vec<String> {
    page["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["id"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn decision_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    let server = start(dir.path());
    let c = Client::new(&server);

    let (status, page) = c.get_json("/api/items");
    assert_eq!(status, 200);
    assert_eq!(ids(&page), ["u1", "u3", "u2"]);
    assert_eq!((page["total"].as_u64(), page["pending"].as_u64()), (Some(3), Some(3)));
    assert_eq!(page["items"][0]["status"], "pending");
    assert_eq!(page["items"][0]["gt"], json!(["the", "frog", "jumped", "out"]));

    assert_eq!(ids(&c.get_json("/api/items?page=1&page_size=2").1), ["u1", "u3"]);
    assert_eq!(ids(&c.get_json("/api/items?page=2&page_size=2").1), ["u2"]);
    assert!(ids(&c.get_json("/api/items?page=3&page_size=2").1).is_empty());
    assert_eq!(c.get("/api/items?page=0").0, 400);

    let (status, audio) = c.get("/api/audio/u3");
    assert_eq!(status, 200);
    assert_eq!(audio, std::fs::read(dir.path().join("verify_segments/u3.wav")).unwrap());
    assert_eq!(c.get("/api/audio/nope").0, 404);
    assert_eq!(c.get("/api/items/nope").0, 404);

    let (status, view) = c.post("/api/decisions", &json!({"item_id": "u1", "action": "accept_pred"}));
    assert_eq!(status, 200);
    assert_eq!(view["status"], "decided");
    assert_eq!(view["decision"]["action"], "accept_pred");
    let log = std::fs::read_to_string(dir.path().join(DECISION_LOG)).unwrap();
    assert_eq!(log.lines().count(), 1);

    // identical repeat is a no-op with the same response
    let (status, again) = c.post("/api/decisions", &json!({"item_id": "u1", "action": "accept_pred"}));
    assert_eq!((status, &again), (200, &view));
    assert_eq!(std::fs::read_to_string(dir.path().join(DECISION_LOG)).unwrap(), log);

    let (status, err) = c.post("/api/decisions", &json!({"item_id": "u1", "action": "reject"}));
    assert_eq!((status, err["error"].as_str()), (409, Some("already_decided")));
    let (status, err) = c.post("/api/decisions", &json!({"item_id": "u2", "action": "manual", "manual_text": " "}));
    assert_eq!((status, err["error"].as_str()), (422, Some("missing_manual_text")));
    let (status, _) = c.post("/api/decisions", &json!({"item_id": "zz", "action": "reject"}));
    assert_eq!(status, 404);
    let (status, _) = c.post("/api/decisions", &json!({"item_id": "u2", "action": "shrug"}));
    assert_eq!(status, 422);

    let (status, _) = c.post("/api/decisions", &json!({"item_id": "u2", "action": "manual", "manual_text": "The frog, out!"}));
    assert_eq!(status, 200);
    let (_, pending) = c.get_json("/api/items?status=pending");
    assert_eq!(ids(&pending), ["u3"]);
    let (_, decided) = c.get_json("/api/items?status=decided");
    assert_eq!(ids(&decided), ["u1", "u2"]);
    // decided items stay playable
    assert_eq!(c.get("/api/audio/u1").0, 200);

    let (status, summary) = c.post("/api/export", &json!({}));
    assert_eq!(status, 200);
    assert_eq!((summary["auto_records"].as_u64(), summary["added"].as_u64()), (Some(1), Some(2)));
    let final_text = std::fs::read_to_string(dir.path().join(FINAL_MANIFEST)).unwrap();
    let records: Vec<Value> = final_text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    assert_eq!(records[0]["id"], "a1");
    assert_eq!(records[0]["source"], "auto");
    assert_eq!((records[1]["id"].as_str(), records[1]["source"].as_str()), (Some("u1"), Some("user_selected")));
    assert_eq!(records[1]["transcript"], json!(["the", "fog", "jumped"]));
    assert_eq!(records[2]["transcript"], json!(["the", "frog", "out"]));
    assert_eq!(records[2]["source"], "user_manual");
    server.stop().unwrap();
}

#[test]
fn export_without_decisions_is_auto_manifest() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    let queue = ReviewQueue::open(dir.path()).unwrap();
    let summary = queue.export().unwrap();
    assert_eq!((summary.records, summary.added), (1, 0));
    let a = std::fs::read(dir.path().join("data_align.manifest.jsonl")).unwrap();
    assert_eq!(std::fs::read(dir.path().join(FINAL_MANIFEST)).unwrap(), a);
}

#[test]
fn restart_replays_log() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    let server = start(dir.path());
    let c = Client::new(&server);
    c.post("/api/decisions", &json!({"item_id": "u3", "action": "accept_gt"}));
    c.post("/api/decisions", &json!({"item_id": "u1", "action": "reject"}));
    let (_, before) = c.get_json("/api/items?status=all");
    server.stop().unwrap();

    let server = start(dir.path());
    let c = Client::new(&server);
    let (_, after) = c.get_json("/api/items?status=all");
    assert_eq!(before, after);
    assert_eq!(after["decided"].as_u64(), Some(2));
}

#[test]
fn torn_tail_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    let log = dir.path().join(DECISION_LOG);
    std::fs::write(&log, "{\"item_id\":\"u1\",\"action\":\"reject\"}\n{\"item_id\":\"u2\",\"act").unwrap();
    let mut queue = ReviewQueue::open(dir.path()).unwrap();
    assert_eq!(queue.decisions().len(), 1);
    assert_eq!(queue.list(StatusFilter::Pending, 1, 50).unwrap().items.len(), 2);
    queue
        .decide(fasa_core::review::VerifyDecision::new("u2", fasa_core::review::VerifyAction::AcceptGt))
        .unwrap();
    drop(queue);
    let text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.ends_with('\n'));
    assert_eq!(ReviewQueue::open(dir.path()).unwrap().decisions().len(), 2);
}

#[test]
fn corrupt_log_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    std::fs::write(
        dir.path().join(DECISION_LOG),
        "{\"item_id\":\"u1\",\"action\":\"reject\"}\n{\"item_id\":\"u1\",\"action\":\"accept_gt\"}\n",
    )
    .unwrap();
    assert!(matches!(
        ReviewQueue::open(dir.path()),
        Err(ServiceError::CorruptLog { line: 2, .. })
    ));
}

#[test]
fn serves_static_ui() {
    let dir = tempfile::tempdir().unwrap();
    session(dir.path());
    let ui = dir.path().join("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<h1>review</h1>").unwrap();
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let server = Server::start(ReviewQueue::open(dir.path()).unwrap(), addr, Some(ui)).unwrap();
    let c = Client::new(&server);
    assert_eq!(c.get("/").1, b"<h1>review</h1>");
    assert_eq!(c.get("/api/items").0, 200);
}
