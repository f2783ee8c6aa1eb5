use dcage_core::mode::{self, ModeCaps, ModeInputs, RequestOutcome};
use dcage_core::state::{Brake, CageMode, CageState, DrivingMode, Validity};

const CAGE: [CageState; 2] = [CageState::Free, CageState::Occupied];
const CAM: [Validity; 2] = [Validity::Valid, Validity::Invalid];
const CAGE_MODES: [CageMode; 2] = [CageMode::Active, CageMode::Passive];

/// Hand-written rendering of the truth table, kept independent of `step`.
fn oracle(i: &ModeInputs<f64>) -> (DrivingMode, Option<Result<(), &'static str>>) {
    use DrivingMode::*;
    let trigger = i.cage_mode == CageMode::Active
        && matches!(i.current_mode, Fad | Lad | Rmd)
        && (i.cage_state_current == CageState::Occupied || i.camera_validity == Validity::Invalid);
    if trigger {
        return (EmergencyStop, i.operator_request.map(|_| Err("fail-safe triggered")));
    }
    let Some(req) = i.operator_request else {
        return (i.current_mode, None);
    };
    let free = i.cage_state_requested == Some(CageState::Free);
    let verdict = match (i.current_mode, req) {
        (_, EmergencyStop) => Ok(()),
        (EmergencyStop, Rmd | Imd) => Ok(()),
        (EmergencyStop, _) if !free => Err("requested mode safe zone occupied"),
        (EmergencyStop, _) if i.camera_validity == Validity::Invalid => Err("camera data invalid"),
        (EmergencyStop, _) => Ok(()),
        _ if free => Ok(()),
        _ => Err("requested mode safe zone occupied"),
    };
    let next = if verdict.is_ok() { req } else { i.current_mode };
    (next, Some(verdict))
}

fn all_inputs() -> Vec<ModeInputs<f64>> {
    let mut out = Vec::new();
    for current in DrivingMode::ALL {
        for cage in CAGE {
            for cam in CAM {
                for req in std::iter::once(None).chain(DrivingMode::ALL.map(Some)) {
                    for cm in CAGE_MODES {
                        let requested_states: Vec<Option<CageState>> =
                            if req.is_some() { CAGE.map(Some).to_vec() } else { vec![None] };
                        for rs in requested_states {
                            out.push(ModeInputs {
                                current_mode: current,
                                cage_state_current: cage,
                                cage_state_requested: rs,
                                camera_validity: cam,
                                operator_request: req,
                                cage_mode: cm,
                                speed: 1.0,
                                steering_angle: 0.0,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn exhaustive_truth_table() {
    let caps = ModeCaps::default();
    let inputs = all_inputs();
    assert_eq!(inputs.len(), 5 * 2 * 2 * 2 * (1 + 5 * 2));
    for i in &inputs {
        let d = mode::step(i, &caps);
        let (want_mode, want_outcome) = oracle(i);
        assert_eq!(d.new_mode, want_mode, "{i:?}");
        let got = d.request_outcome.as_ref().map(|o| match o {
            RequestOutcome::Accepted => Ok(()),
            RequestOutcome::Rejected { reason } => Err(reason.clone()),
        });
        assert_eq!(got, want_outcome.map(|r| r.map_err(String::from)), "{i:?}");
        assert_eq!(d.speed_cap, mode::mode_speed_cap(d.new_mode, &caps));
        if d.new_mode == DrivingMode::EmergencyStop {
            assert_eq!((d.brake, d.speed_cap), (Brake::Full, 0.0));
        } else {
            assert_eq!(d.brake, Brake::None);
        }
    }
}

#[test]
fn no_silent_emergency_exit() {
    for i in all_inputs()
        .iter()
        .filter(|i| i.current_mode == DrivingMode::EmergencyStop && i.operator_request.is_none())
    {
        assert_eq!(mode::step(i, &ModeCaps::default()).new_mode, DrivingMode::EmergencyStop);
    }
}

#[test]
fn autonomy_regranted_only_under_free_zone() {
    for i in all_inputs().iter().filter(|i| i.current_mode == DrivingMode::EmergencyStop) {
        let d = mode::step(i, &ModeCaps::default());
        if d.new_mode.is_autonomous() {
            assert_eq!(i.cage_state_requested, Some(CageState::Free));
            assert_eq!(i.camera_validity, Validity::Valid);
        }
    }
}

#[test]
fn emergency_stop_and_operator_release() {
    let caps = ModeCaps::default();
    let base = ModeInputs {
        current_mode: DrivingMode::Fad,
        cage_state_current: CageState::Occupied,
        cage_state_requested: None,
        camera_validity: Validity::Valid,
        operator_request: None,
        cage_mode: CageMode::Active,
        speed: 2.0,
        steering_angle: 0.0,
    };
    assert_eq!(mode::step(&base, &caps).new_mode, DrivingMode::EmergencyStop);
    let release = ModeInputs {
        current_mode: DrivingMode::EmergencyStop,
        operator_request: Some(DrivingMode::Lad),
        cage_state_requested: Some(CageState::Free),
        speed: 0.0,
        ..base
    };
    let d = mode::step(&release, &caps);
    assert_eq!(d.new_mode, DrivingMode::Lad);
    assert_eq!(d.request_outcome, Some(RequestOutcome::Accepted));
    assert_eq!(d.speed_cap, 1.0);
}
