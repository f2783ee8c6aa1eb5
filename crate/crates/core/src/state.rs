//! Vehicle state vocabulary shown to the remote operator.
//!
//! The serialized strings are part of the wire format and must stay verbatim.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DrivingMode {
    #[serde(rename = "fully autonomous driving")]
    Fad,
    #[serde(rename = "limited autonomous driving")]
    Lad,
    #[serde(rename = "remote manual driving")]
    Rmd,
    #[serde(rename = "in-place manual driving")]
    Imd,
    #[serde(rename = "emergency stop")]
    EmergencyStop,
}

impl DrivingMode {
    pub const ALL: [DrivingMode; 5] = [
        DrivingMode::Fad,
        DrivingMode::Lad,
        DrivingMode::Rmd,
        DrivingMode::Imd,
        DrivingMode::EmergencyStop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DrivingMode::Fad => "fully autonomous driving",
            DrivingMode::Lad => "limited autonomous driving",
            DrivingMode::Rmd => "remote manual driving",
            DrivingMode::Imd => "in-place manual driving",
            DrivingMode::EmergencyStop => "emergency stop",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            DrivingMode::Fad => "FAD",
            DrivingMode::Lad => "LAD",
            DrivingMode::Rmd => "RMD",
            DrivingMode::Imd => "IMD",
            DrivingMode::EmergencyStop => "ES",
        }
    }

    /// Modes in which the ADS drives the vehicle on its own.
    pub fn is_autonomous(self) -> bool {
        matches!(self, DrivingMode::Fad | DrivingMode::Lad)
    }

    /// Modes in which a human holds the controls.
    pub fn is_human_controlled(self) -> bool {
        matches!(self, DrivingMode::Rmd | DrivingMode::Imd)
    }

    /// Parses either the full name or the short code (`FAD`, `ES`, ...).
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s) || m.short().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for DrivingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CageMode {
    #[default]
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CageState {
    #[default]
    #[serde(rename = "safe zone free")]
    Free,
    #[serde(rename = "safe zone occupied")]
    Occupied,
}

impl CageState {
    pub fn is_free(self) -> bool {
        self == CageState::Free
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    #[default]
    Valid,
    Invalid,
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissionState {
    #[default]
    Inactive,
    Active,
    Blocked,
    Completed,
}

impl MissionState {
    /// Edges of the mission lifecycle graph (self-loops excluded).
    pub fn may_transition_to(self, next: MissionState) -> bool {
        use MissionState::*;
        matches!(
            (self, next),
            (Inactive, Active)
                | (Active, Blocked)
                | (Blocked, Active)
                | (Active, Completed)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DoorState {
    #[serde(rename = "open")]
    Open,
    #[default]
    #[serde(rename = "closed")]
    Closed,
    #[serde(rename = "no data")]
    NoData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorAction {
    Open,
    Close,
}

/// A named delivery point in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Brake {
    #[default]
    None,
    Full,
}

/// What the cage allows the ADS to do during the next control period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationCommand<T> {
    pub speed_cap: T,
    pub brake: Brake,
    pub steering_hold: bool,
}

/// The per-vehicle summary shown in the operator's car-selection widget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleStateSummary {
    pub vehicle_id: String,
    pub sensor_data: Validity,
    pub mission_state: MissionState,
    pub door_state: DoorState,
    pub driving_mode: DrivingMode,
    pub cage_state: CageState,
    pub timestamp: u64,
    pub seq: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_strings_are_verbatim() {
        let s = |v: &dyn erased::Ser| v.json();
        assert_eq!(s(&DrivingMode::Fad), "\"fully autonomous driving\"");
        assert_eq!(s(&DrivingMode::Lad), "\"limited autonomous driving\"");
        assert_eq!(s(&DrivingMode::Rmd), "\"remote manual driving\"");
        assert_eq!(s(&DrivingMode::Imd), "\"in-place manual driving\"");
        assert_eq!(s(&DrivingMode::EmergencyStop), "\"emergency stop\"");
        assert_eq!(s(&CageState::Free), "\"safe zone free\"");
        assert_eq!(s(&CageState::Occupied), "\"safe zone occupied\"");
        assert_eq!(s(&DoorState::NoData), "\"no data\"");
        assert_eq!(s(&MissionState::Blocked), "\"blocked\"");
        assert_eq!(s(&Validity::Invalid), "\"invalid\"");
    }

    mod erased {
        pub trait Ser {
            fn json(&self) -> String;
        }
        impl<T: serde::Serialize> Ser for T {
            fn json(&self) -> String {
                serde_json::to_string(self).unwrap()
            }
        }
    }

    #[test]
    fn parse_accepts_short_codes() {
        assert_eq!(DrivingMode::parse("LAD"), Some(DrivingMode::Lad));
        assert_eq!(DrivingMode::parse("es"), Some(DrivingMode::EmergencyStop));
        assert_eq!(DrivingMode::parse("remote manual driving"), Some(DrivingMode::Rmd));
        assert_eq!(DrivingMode::parse("warp"), None);
    }

    #[test]
    fn mission_graph() {
        use MissionState::*;
        assert!(Inactive.may_transition_to(Active));
        assert!(!Inactive.may_transition_to(Completed));
        assert!(!Blocked.may_transition_to(Completed));
        assert!(!Completed.may_transition_to(Active));
    }
}
