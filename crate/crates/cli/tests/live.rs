use std::time::Duration;

use dcage_ccc::server::{start, ServeConfig};
use dcage_ccc::{CccConfig, Connection};
use dcage_cli::live::{run_live, LiveOptions};
use dcage_core::state::DrivingMode;
use dcage_protocol::Command;
use dcage_sim::resolve_scenario;

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn vehicle_registers_streams_and_obeys_the_control_centre() {
    let dir = tempfile::tempdir().unwrap();
    let running = start(ServeConfig {
        tcp_addr: "127.0.0.1:0".parse().unwrap(),
        http_addr: "127.0.0.1:0".parse().unwrap(),
        log_path: dir.path().join("ccc.ndjson"),
        ccc: CccConfig::default(),
    })
    .await
    .unwrap();

    let mut scenario = resolve_scenario("empty_lot").unwrap();
    scenario.mission = None;
    scenario.sim.max_time_ms = 2000;
    scenario.vehicle_id = "live-1".into();
    let record = dir.path().join("vehicle.ndjson");
    let opts = LiveOptions { ccc_addr: running.tcp_addr.to_string(), record: Some(record.clone()) };
    let vehicle = tokio::task::spawn_blocking(move || run_live(&scenario, &opts));

    let hub = running.hub.clone();
    let mut outcome = None;
    for _ in 0..40 {
        tokio::time::sleep(Duration::from_millis(50)).await;
        let fleet = hub.fleet();
        if fleet.iter().any(|v| v.vehicle_id == "live-1" && v.last_summary.is_some()) {
            outcome = Some(hub.command("live-1", Command::SetDrivingMode { mode: DrivingMode::Lad }).await);
            break;
        }
    }
    let (seq, outcome) = outcome.expect("vehicle appeared in the fleet");
    assert!(seq.is_some());
    assert_eq!(outcome, dcage_protocol::AckOutcome::Accepted);

    let summary = vehicle.await.unwrap().unwrap();
    assert_eq!(summary.sim_time_ms, 2000);
    let record_of = || hub.fleet().into_iter().find(|v| v.vehicle_id == "live-1").unwrap();
    assert_eq!(record_of().last_summary.unwrap().driving_mode, DrivingMode::Lad);
    // The vehicle process has exited, so its connection closes.
    let mut lost = false;
    for _ in 0..40 {
        if record_of().connection == Connection::Lost {
            lost = true;
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert!(lost);
    running.stop().await;
    assert!(std::fs::read_to_string(record).unwrap().lines().count() > 5);
}
