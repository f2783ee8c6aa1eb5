use std::collections::BTreeSet;

use dcage_core::camera::{CameraId, InvalidReason};
use dcage_core::state::{
    Brake, CageMode, CageState, DoorAction, DoorState, DrivingMode, MissionState, Validity, VehicleStateSummary,
    Waypoint,
};
use dcage_core::{ActuationCommand, VehicleGeometry, VehiclePose};
use dcage_protocol::framing::{read_frame, write_frame};
use dcage_protocol::log::read_log;
use dcage_protocol::*;
use proptest::prelude::*;
use serde_json::{json, Value};

fn num() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e4..1e4f64,
        prop::num::f64::NORMAL.prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(0.1),
        Just(1e-300),
    ]
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof!["[a-z0-9_ -]{0,12}", any::<String>()]
}

fn mode() -> impl Strategy<Value = DrivingMode> {
    prop::sample::select(DrivingMode::ALL.to_vec())
}
fn cage_mode() -> impl Strategy<Value = CageMode> {
    prop::sample::select(vec![CageMode::Active, CageMode::Passive])
}
fn cage_state() -> impl Strategy<Value = CageState> {
    prop::sample::select(vec![CageState::Free, CageState::Occupied])
}
fn validity() -> impl Strategy<Value = Validity> {
    prop::sample::select(vec![Validity::Valid, Validity::Invalid])
}
fn mission_state() -> impl Strategy<Value = MissionState> {
    prop::sample::select(vec![
        MissionState::Inactive,
        MissionState::Active,
        MissionState::Blocked,
        MissionState::Completed,
    ])
}
fn door() -> impl Strategy<Value = DoorState> {
    prop::sample::select(vec![DoorState::Open, DoorState::Closed, DoorState::NoData])
}

fn waypoint() -> impl Strategy<Value = Waypoint> {
    (text(), num(), num()).prop_map(|(name, x, y)| Waypoint { name, x, y })
}

fn ring() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec([num(), num()], 0..8)
}

fn register() -> impl Strategy<Value = Register> {
    (
        (num(), num(), num(), num()),
        prop::collection::vec(waypoint(), 0..4),
        prop::collection::vec(text(), 0..4),
        prop::collection::vec((text(), ring()).prop_map(|(name, polygon)| ObstacleInfo { name, polygon }), 0..3),
    )
        .prop_map(|((wheelbase, width, front_overhang, rear_overhang), delivery_points, route, obstacles)| Register {
            protocol_version: PROTOCOL_VERSION,
            geometry: VehicleGeometry { wheelbase, width, front_overhang, rear_overhang },
            map: MapInfo { delivery_points, route, obstacles },
        })
}

fn summary() -> impl Strategy<Value = VehicleStateSummary> {
    (text(), validity(), mission_state(), door(), mode(), cage_state(), any::<u64>(), any::<u64>()).prop_map(
        |(vehicle_id, sensor_data, mission_state, door_state, driving_mode, cage_state, timestamp, seq)| {
            VehicleStateSummary { vehicle_id, sensor_data, mission_state, door_state, driving_mode, cage_state, timestamp, seq }
        },
    )
}

fn reasons() -> impl Strategy<Value = BTreeSet<InvalidReason>> {
    prop::collection::btree_set(
        prop::sample::select(vec![
            InvalidReason::Stale,
            InvalidReason::Frozen,
            InvalidReason::Underexposed,
            InvalidReason::Overexposed,
        ]),
        0..4,
    )
}

fn telemetry() -> impl Strategy<Value = Telemetry> {
    (
        summary(),
        cage_mode(),
        (num(), num(), num(), num(), num()),
        ring(),
        ring(),
        prop::option::of(num()),
        prop::collection::vec([num(), num(), num()], 0..MAX_TELEMETRY_POINTS),
        prop::collection::vec(
            (prop::sample::select(vec![CameraId::Front, CameraId::Back]), validity(), reasons())
                .prop_map(|(camera_id, validity, reasons)| CameraStatus { camera_id, validity, reasons }),
            0..3,
        ),
        (prop::option::of(text()), mission_state(), prop::collection::vec(waypoint(), 0..4), prop::option::of(0usize..10)),
        (num(), any::<bool>(), any::<bool>()),
    )
        .prop_map(|(summary, cage_mode, p, zone, offending_points, nearest, scan, cameras, m, a)| Telemetry {
            summary,
            cage_mode,
            pose: VehiclePose { x: p.0, y: p.1, heading: p.2, speed: p.3, steering: p.4 },
            zone,
            offending_points,
            nearest_obstacle_m: nearest,
            scan,
            cameras,
            mission: MissionInfo { id: m.0, state: m.1, waypoints: m.2, current_target: m.3 },
            actuation: ActuationCommand {
                speed_cap: a.0,
                brake: if a.1 { Brake::Full } else { Brake::None },
                steering_hold: a.2,
            },
        })
}

fn event() -> impl Strategy<Value = DcEvent> {
    prop_oneof![
        (mode(), mode()).prop_map(|(from, to)| DcEvent::ModeChanged { from, to }),
        (cage_state(), cage_state()).prop_map(|(from, to)| DcEvent::CageStateChanged { from, to }),
        (mission_state(), mission_state()).prop_map(|(from, to)| DcEvent::MissionStateChanged { from, to }),
        (door(), door()).prop_map(|(from, to)| DcEvent::DoorStateChanged { from, to }),
        (validity(), validity()).prop_map(|(from, to)| DcEvent::SensorDataChanged { from, to }),
        (cage_mode(), cage_mode()).prop_map(|(from, to)| DcEvent::CageModeChanged { from, to }),
    ]
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        mode().prop_map(|mode| Command::SetDrivingMode { mode }),
        cage_mode().prop_map(|mode| Command::SetCageMode { mode }),
        prop::sample::select(vec![DoorAction::Open, DoorAction::Close]).prop_map(|action| Command::DoorCommand { action }),
        (text(), prop::collection::vec(waypoint(), 0..4))
            .prop_map(|(mission_id, waypoints)| Command::AssignMission { mission_id, waypoints }),
        (num(), num()).prop_map(|(speed, steering)| Command::ManualControl { speed, steering }),
    ]
}

fn ack() -> impl Strategy<Value = Ack> {
    (
        any::<u64>(),
        prop_oneof![
            Just(AckOutcome::Accepted),
            text().prop_map(AckOutcome::rejected),
            Just(AckOutcome::Timeout),
        ],
    )
        .prop_map(|(ref_seq, outcome)| Ack { ref_seq, outcome })
}

fn body() -> impl Strategy<Value = Body> {
    prop_oneof![
        register().prop_map(Body::Register),
        telemetry().prop_map(|t| Body::TelemetrySnapshot(Box::new(t))),
        event().prop_map(Body::Event),
        command().prop_map(Body::Command),
        ack().prop_map(Body::Ack),
        (text(), prop::option::of(any::<u64>()))
            .prop_map(|(reason, ref_seq)| Body::ProtocolError(ProtocolErrorReply { reason, ref_seq })),
    ]
}

fn message() -> impl Strategy<Value = WireMessage> {
    (text(), any::<u64>(), any::<u64>(), body()).prop_map(|(v, seq, ts, b)| WireMessage::new(v, seq, ts, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn decode_inverts_encode(msg in message()) {
        let bytes = encode(&msg);
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn framed_stream_preserves_messages(msgs in prop::collection::vec(message(), 0..6)) {
        let mut buf = Vec::new();
        for m in &msgs {
            write_frame(&mut buf, &encode(m)).unwrap();
        }
        let mut r = &buf[..];
        let mut got = Vec::new();
        while let Some(frame) = read_frame(&mut r).unwrap() {
            got.push(decode(&frame).unwrap());
        }
        prop_assert_eq!(got, msgs);
    }

    #[test]
    fn decode_never_panics_on_garbage(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode(&bytes);
    }

    #[test]
    fn log_lines_round_trip(msgs in prop::collection::vec(message(), 1..5), start in 0u64..1000) {
        let entries: Vec<EventLogEntry> = msgs
            .into_iter()
            .enumerate()
            .map(|(i, message)| EventLogEntry {
                global_seq: start + i as u64,
                wall_time: 17,
                direction: [Direction::FromVehicle, Direction::ToVehicle, Direction::Internal][i % 3],
                message,
            })
            .collect();
        let text: String = entries.iter().map(EventLogEntry::to_line).collect();
        prop_assert_eq!(text.lines().count(), entries.len());
        prop_assert_eq!(read_log(text.as_bytes()).unwrap(), entries);
    }
}

fn envelope(kind: &str, payload: Value) -> Vec<u8> {
    serde_json::to_vec(&json!({"type": kind, "vehicle_id": "v1", "seq": 9, "timestamp": 100, "payload": payload})).unwrap()
}

#[test]
fn envelope_field_names_are_fixed() {
    let msg = WireMessage::new("v1", 3, 42, Body::Ack(Ack { ref_seq: 2, outcome: AckOutcome::rejected("nope") }));
    let v: Value = serde_json::from_slice(&encode(&msg)).unwrap();
    assert_eq!(
        v,
        json!({"type": "Ack", "vehicle_id": "v1", "seq": 3, "timestamp": 42,
               "payload": {"ref_seq": 2, "outcome": "rejected", "reason": "nope"}})
    );
}

#[test]
fn command_wire_shape() {
    let msg = WireMessage::new("v1", 1, 0, Body::Command(Command::SetDrivingMode { mode: DrivingMode::Lad }));
    let v: Value = serde_json::from_slice(&encode(&msg)).unwrap();
    assert_eq!(v["payload"], json!({"command": "SetDrivingMode", "args": {"mode": "limited autonomous driving"}}));
}

#[test]
fn unknown_type_keeps_sender_identity() {
    match decode(&envelope("Teleport", json!({}))) {
        Err(DecodeError::UnknownType { kind, vehicle_id, seq }) => {
            assert_eq!((kind.as_str(), vehicle_id.as_str(), seq), ("Teleport", "v1", 9));
        }
        other => panic!("expected unknown type, got {other:?}"),
    }
}

#[test]
fn bad_payload_is_reported_with_kind() {
    let err = decode(&envelope("Command", json!({"command": "SetDrivingMode", "args": {"mode": "warp"}}))).unwrap_err();
    assert!(matches!(err, DecodeError::BadPayload { ref kind, seq: 9, .. } if kind == "Command"), "{err:?}");
    let err = decode(&envelope("Event", json!({"event": "mode_changed", "from": "emergency stop"}))).unwrap_err();
    assert!(matches!(err, DecodeError::BadPayload { .. }), "{err:?}");
}

#[test]
fn envelope_errors_are_malformed() {
    assert!(matches!(decode(b"not json"), Err(DecodeError::Malformed(_))));
    assert!(matches!(decode(br#"{"type":"Ack","seq":1}"#), Err(DecodeError::Malformed(_))));
    let extra = br#"{"type":"Ack","vehicle_id":"v","seq":1,"timestamp":0,"payload":{},"x":1}"#;
    assert!(matches!(decode(extra), Err(DecodeError::Malformed(_))));
}

#[test]
fn corrupt_log_line_is_located() {
    let good = EventLogEntry {
        global_seq: 0,
        wall_time: 0,
        direction: Direction::Internal,
        message: WireMessage::new("v", 0, 0, Body::Ack(Ack { ref_seq: 0, outcome: AckOutcome::Timeout })),
    };
    let text = format!("{}{{broken\n", good.to_line());
    match read_log(text.as_bytes()) {
        Err(dcage_protocol::log::LogReadError::Corrupt { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}
