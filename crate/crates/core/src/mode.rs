//! Mode control: the cage's fail-safe reaction and graceful degradation.
//!
//! `step` is a total function over [`ModeInputs`]. Under an active cage any
//! occupied zone or invalid camera while the vehicle is moving under
//! machine supervision (FAD, LAD, RMD) forces an emergency stop. Only an
//! operator request leaves the emergency stop, and autonomy is only granted
//! back when the requested mode's zone is verified free.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::state::{Brake, CageMode, CageState, DrivingMode, Validity};

pub const REASON_FAIL_SAFE: &str = "fail-safe triggered";
pub const REASON_ZONE_OCCUPIED: &str = "requested mode safe zone occupied";
pub const REASON_CAMERA_INVALID: &str = "camera data invalid";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCaps<T> {
    pub fad: T,
    pub lad: T,
}

impl<T: Scalar> Default for ModeCaps<T> {
    fn default() -> Self {
        Self { fad: T::lit(3.0), lad: T::lit(1.0) }
    }
}

/// Configured speed cap of `mode`. Remote manual driving shares the LAD cap;
/// in-place manual driving and emergency stop allow no motion.
pub fn mode_speed_cap<T: Scalar>(mode: DrivingMode, caps: &ModeCaps<T>) -> T {
    match mode {
        DrivingMode::Fad => caps.fad,
        DrivingMode::Lad | DrivingMode::Rmd => caps.lad,
        DrivingMode::Imd | DrivingMode::EmergencyStop => T::zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeInputs<T> {
    pub current_mode: DrivingMode,
    /// Zone verdict for the zone of the current mode.
    pub cage_state_current: CageState,
    /// Zone verdict for the zone of the requested mode.
    pub cage_state_requested: Option<CageState>,
    pub camera_validity: Validity,
    pub operator_request: Option<DrivingMode>,
    pub cage_mode: CageMode,
    pub speed: T,
    pub steering_angle: T,
}

impl<T: Scalar> ModeInputs<T> {
    pub fn is_well_formed(&self) -> bool {
        self.cage_state_requested.is_some() == self.operator_request.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RequestOutcome {
    Accepted,
    Rejected { reason: String },
}

impl RequestOutcome {
    pub fn rejected(reason: &str) -> Self {
        RequestOutcome::Rejected { reason: reason.to_string() }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, RequestOutcome::Accepted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecision<T> {
    pub new_mode: DrivingMode,
    pub speed_cap: T,
    pub brake: Brake,
    pub request_outcome: Option<RequestOutcome>,
}

/// True when occupancy or invalid camera data must stop the vehicle.
pub fn fail_safe_triggered<T: Scalar>(inputs: &ModeInputs<T>) -> bool {
    let supervised = matches!(
        inputs.current_mode,
        DrivingMode::Fad | DrivingMode::Lad | DrivingMode::Rmd
    );
    inputs.cage_mode == CageMode::Active
        && supervised
        && (inputs.cage_state_current == CageState::Occupied
            || inputs.camera_validity == Validity::Invalid)
}

pub fn step<T: Scalar>(inputs: &ModeInputs<T>, caps: &ModeCaps<T>) -> ModeDecision<T> {
    if fail_safe_triggered(inputs) {
        return decide(
            DrivingMode::EmergencyStop,
            caps,
            inputs.operator_request.map(|_| RequestOutcome::rejected(REASON_FAIL_SAFE)),
        );
    }

    let Some(requested) = inputs.operator_request else {
        return decide(inputs.current_mode, caps, None);
    };
    // A missing requested-zone verdict is treated as occupied.
    let requested_free = inputs.cage_state_requested == Some(CageState::Free);

    let outcome = if requested == DrivingMode::EmergencyStop {
        RequestOutcome::Accepted
    } else if inputs.current_mode == DrivingMode::EmergencyStop {
        if requested.is_human_controlled() {
            RequestOutcome::Accepted
        } else if !requested_free {
            RequestOutcome::rejected(REASON_ZONE_OCCUPIED)
        } else if !inputs.camera_validity.is_valid() {
            RequestOutcome::rejected(REASON_CAMERA_INVALID)
        } else {
            RequestOutcome::Accepted
        }
    } else if requested_free {
        RequestOutcome::Accepted
    } else {
        RequestOutcome::rejected(REASON_ZONE_OCCUPIED)
    };

    let new_mode = if outcome.is_accepted() {
        requested
    } else {
        inputs.current_mode
    };
    decide(new_mode, caps, Some(outcome))
}

/// Speed cap and brake that go with `mode`, with no request involved.
pub fn decision_for<T: Scalar>(mode: DrivingMode, caps: &ModeCaps<T>) -> ModeDecision<T> {
    decide(mode, caps, None)
}

fn decide<T: Scalar>(
    mode: DrivingMode,
    caps: &ModeCaps<T>,
    request_outcome: Option<RequestOutcome>,
) -> ModeDecision<T> {
    ModeDecision {
        new_mode: mode,
        speed_cap: mode_speed_cap(mode, caps),
        brake: if mode == DrivingMode::EmergencyStop {
            Brake::Full
        } else {
            Brake::None
        },
        request_outcome,
    }
}
