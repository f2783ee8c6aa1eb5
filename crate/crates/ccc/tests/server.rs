mod common;

use std::net::SocketAddr;
use std::time::Duration;

use bytes::Bytes;
use dcage_ccc::server::{codec, start, ServeConfig};
use dcage_ccc::CccConfig;
use dcage_core::state::DrivingMode;
use dcage_protocol::log::read_log;
use dcage_protocol::{decode, encode, Ack, AckOutcome, Body, Command, Direction, WireMessage};
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_util::codec::Framed;

async fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> (u16, Value) {
    let mut s = TcpStream::connect(addr).await.unwrap();
    let body = body.unwrap_or("");
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: test\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await.unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).await.unwrap();
    let status: u16 = raw[9..12].parse().unwrap();
    let json = raw.split_once("\r\n\r\n").map(|(_, b)| b).unwrap_or("");
    (status, serde_json::from_str(json).unwrap_or(Value::Null))
}

async fn next_msg(v: &mut Framed<TcpStream, tokio_util::codec::LengthDelimitedCodec>) -> WireMessage {
    let frame = tokio::time::timeout(Duration::from_secs(5), v.next()).await.unwrap().unwrap().unwrap();
    decode(&frame).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn vehicle_operator_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("events.ndjson");
    let running = start(ServeConfig {
        tcp_addr: "127.0.0.1:0".parse().unwrap(),
        http_addr: "127.0.0.1:0".parse().unwrap(),
        log_path: log_path.clone(),
        ccc: CccConfig { connection_timeout_ms: 3000, ack_timeout_ms: 500 },
    })
    .await
    .unwrap();
    let http_addr = running.http_addr;

    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{http_addr}/stream")).await.unwrap();
    let (_, mut ws_rx) = ws.split();

    let mut v = Framed::new(TcpStream::connect(running.tcp_addr).await.unwrap(), codec());
    v.send(Bytes::from(encode(&common::register("pluto", 1)))).await.unwrap();
    v.send(Bytes::from(encode(&common::telemetry("pluto", 2, DrivingMode::EmergencyStop)))).await.unwrap();

    // The stream carries log entries as they are appended.
    let first = tokio::time::timeout(Duration::from_secs(5), ws_rx.next()).await.unwrap().unwrap().unwrap();
    let first: Value = serde_json::from_str(first.to_text().unwrap()).unwrap();
    assert_eq!(first["global_seq"], 0);
    assert_eq!(first["message"]["type"], "Register");

    let mut fleet = Value::Null;
    for _ in 0..50 {
        fleet = http(http_addr, "GET", "/fleet", None).await.1;
        if fleet[0]["last_summary"].is_object() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert_eq!(fleet.as_array().unwrap().len(), 1);
    assert_eq!(fleet[0]["connection"], "connected");
    assert_eq!(fleet[0]["last_summary"]["driving_mode"], "emergency stop");
    assert_eq!(fleet[0]["last_summary"]["cage_state"], "safe zone occupied");

    let (status, detail) = http(http_addr, "GET", "/vehicle/pluto", None).await;
    assert_eq!(status, 200);
    assert_eq!(detail["telemetry"]["summary"]["driving_mode"], "emergency stop");
    assert_eq!(http(http_addr, "GET", "/vehicle/nobody", None).await.0, 404);

    // Operator command: forwarded, acknowledged, outcome returned to the caller.
    let body = r#"{"command":"SetDrivingMode","args":{"mode":"limited autonomous driving"}}"#;
    let post = tokio::spawn(async move { http(http_addr, "POST", "/vehicle/pluto/command", Some(body)).await });
    let cmd = next_msg(&mut v).await;
    assert_eq!(cmd.body, Body::Command(Command::SetDrivingMode { mode: DrivingMode::Lad }));
    let ack = WireMessage::new("pluto", 3, 150, Body::Ack(Ack { ref_seq: cmd.seq, outcome: AckOutcome::Accepted }));
    v.send(Bytes::from(encode(&ack))).await.unwrap();
    let (status, outcome) = post.await.unwrap();
    assert_eq!(status, 200);
    assert_eq!(outcome["outcome"], "accepted");
    assert_eq!(outcome["ref_seq"], cmd.seq);

    // An unanswered command times out.
    let post = tokio::spawn(async move { http(http_addr, "POST", "/vehicle/pluto/command", Some(body)).await });
    let _ = next_msg(&mut v).await;
    assert_eq!(post.await.unwrap().1["outcome"], "timeout");

    let (status, outcome) = http(http_addr, "POST", "/vehicle/ghost/command", Some(body)).await;
    assert_eq!(status, 404);
    assert_eq!(outcome["reason"], "unknown vehicle");

    // Garbage gets a protocol error and the connection stays usable.
    v.send(Bytes::from_static(b"{not json")).await.unwrap();
    assert!(matches!(next_msg(&mut v).await.body, Body::ProtocolError(_)));
    v.send(Bytes::from(encode(&common::telemetry("pluto", 4, DrivingMode::Lad)))).await.unwrap();
    for _ in 0..50 {
        let f = http(http_addr, "GET", "/fleet", None).await.1;
        if f[0]["last_summary"]["driving_mode"] == "limited autonomous driving" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert_eq!(http(http_addr, "GET", "/fleet", None).await.1[0]["last_summary"]["driving_mode"], "limited autonomous driving");

    drop(v);
    tokio::time::sleep(Duration::from_millis(100)).await;
    assert_eq!(http(http_addr, "GET", "/fleet", None).await.1[0]["connection"], "lost");
    let (_, outcome) = http(http_addr, "POST", "/vehicle/pluto/command", Some(body)).await;
    assert_eq!(outcome["reason"], "disconnected");

    running.stop().await;
    let log = read_log(std::io::BufReader::new(std::fs::File::open(&log_path).unwrap())).unwrap();
    assert!(log.iter().any(|e| e.direction == Direction::Internal));
    assert_eq!(dcage_ccc::check::exactly_one_ack(&log), Ok(2));
}
