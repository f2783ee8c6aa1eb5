use serde::{Deserialize, Serialize};

use dcage_core::camera::CameraId;

/// Half-open interval `[start_ms, end_ms)` of simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl TimeWindow {
    pub fn contains(&self, t: u64) -> bool {
        self.start_ms <= t && t < self.end_ms
    }
}

/// Axis-aligned box in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhostFault {
    pub window: TimeWindow,
    pub count: usize,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFreeze {
    pub camera: CameraId,
    pub window: TimeWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFault {
    pub window: TimeWindow,
    pub drop_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultSchedule {
    pub ghost_points: Vec<GhostFault>,
    pub camera_freeze: Vec<CameraFreeze>,
    pub link_faults: Vec<LinkFault>,
}

impl FaultSchedule {
    pub fn validate(&self) -> Result<(), (String, String)> {
        fn ordered<'a>(list: &str, windows: impl Iterator<Item = &'a TimeWindow>) -> Result<(), (String, String)> {
            let mut prev_start = 0;
            for (i, w) in windows.enumerate() {
                if w.start_ms >= w.end_ms {
                    return Err((format!("{list}[{i}].window"), "start_ms must be below end_ms".into()));
                }
                if w.start_ms < prev_start {
                    return Err((format!("{list}[{i}].window"), "windows must be sorted by start_ms".into()));
                }
                prev_start = w.start_ms;
            }
            Ok(())
        }
        ordered("ghost_points", self.ghost_points.iter().map(|g| &g.window))?;
        ordered("camera_freeze", self.camera_freeze.iter().map(|c| &c.window))?;
        ordered("link_faults", self.link_faults.iter().map(|l| &l.window))?;
        for (i, g) in self.ghost_points.iter().enumerate() {
            let r = g.region;
            if !(r.x_min < r.x_max && r.y_min < r.y_max) {
                return Err((format!("ghost_points[{i}].region"), "empty region".into()));
            }
        }
        for (i, l) in self.link_faults.iter().enumerate() {
            if !(0.0..=1.0).contains(&l.drop_probability) {
                return Err((
                    format!("link_faults[{i}].drop_probability"),
                    format!("must be in [0, 1], got {}", l.drop_probability),
                ));
            }
        }
        Ok(())
    }

    pub fn ghosts_at(&self, t: u64) -> impl Iterator<Item = &GhostFault> {
        self.ghost_points.iter().filter(move |g| g.window.contains(t))
    }

    pub fn camera_frozen(&self, camera: CameraId, t: u64) -> bool {
        self.camera_freeze.iter().any(|c| c.camera == camera && c.window.contains(t))
    }

    /// Highest drop probability among the link faults active at `t`.
    pub fn link_drop_probability(&self, t: u64) -> f64 {
        self.link_faults
            .iter()
            .filter(|l| l.window.contains(t))
            .map(|l| l.drop_probability)
            .fold(0.0, f64::max)
    }
}
