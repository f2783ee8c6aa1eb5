//! Plausibility checks on camera frames delivered to the ADS.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::Validity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraId {
    Front,
    Back,
}

/// Grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub timestamp: u64,
    pub seq: u64,
    pub camera_id: CameraId,
}

impl CameraFrame {
    pub fn mean_intensity(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        let sum: u64 = self.pixels.iter().map(|&p| p as u64).sum();
        sum as f64 / self.pixels.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub max_age_ms: u64,
    pub frozen_repeat_count: usize,
    pub mean_low: f64,
    pub mean_high: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            max_age_ms: 500,
            frozen_repeat_count: 3,
            mean_low: 10.0,
            mean_high: 245.0,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.mean_low < self.mean_high) {
            return Err(CameraError::Config {
                field: "mean_low",
                reason: format!("must be below mean_high ({}), got {}", self.mean_high, self.mean_low),
            });
        }
        for (field, v) in [("mean_low", self.mean_low), ("mean_high", self.mean_high)] {
            if !(0.0..=255.0).contains(&v) {
                return Err(CameraError::Config {
                    field,
                    reason: format!("must lie in [0, 255], got {v}"),
                });
            }
        }
        if self.frozen_repeat_count < 2 {
            return Err(CameraError::Config {
                field: "frozen_repeat_count",
                reason: "must be >= 2".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidReason {
    Stale,
    Frozen,
    Underexposed,
    Overexposed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub validity: Validity,
    pub reasons: BTreeSet<InvalidReason>,
}

impl ValidityVerdict {
    pub fn from_reasons(reasons: BTreeSet<InvalidReason>) -> Self {
        Self {
            validity: if reasons.is_empty() {
                Validity::Valid
            } else {
                Validity::Invalid
            },
            reasons,
        }
    }

    /// Verdict used when no frame is available at all.
    pub fn missing() -> Self {
        Self::from_reasons([InvalidReason::Stale].into())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("frame buffer holds {actual} bytes, expected {expected} ({width}x{height})")]
    BufferLength {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("invalid camera config {field}: {reason}")]
    Config { field: &'static str, reason: String },
}

/// `history` holds earlier frames of the same camera, oldest first.
pub fn validate_frame(
    frame: &CameraFrame,
    history: &[CameraFrame],
    now: u64,
    cfg: &CameraConfig,
) -> Result<ValidityVerdict, CameraError> {
    let expected = frame.width as usize * frame.height as usize;
    if frame.pixels.len() != expected {
        return Err(CameraError::BufferLength {
            width: frame.width,
            height: frame.height,
            expected,
            actual: frame.pixels.len(),
        });
    }
    let mut reasons = BTreeSet::new();
    if now.saturating_sub(frame.timestamp) > cfg.max_age_ms {
        reasons.insert(InvalidReason::Stale);
    }
    let needed = cfg.frozen_repeat_count.saturating_sub(1);
    if needed > 0 && history.len() >= needed {
        let frozen = history[history.len() - needed..]
            .iter()
            .all(|h| h.width == frame.width && h.height == frame.height && h.pixels == frame.pixels);
        if frozen {
            reasons.insert(InvalidReason::Frozen);
        }
    }
    let mean = frame.mean_intensity();
    if mean < cfg.mean_low {
        reasons.insert(InvalidReason::Underexposed);
    }
    if mean > cfg.mean_high {
        reasons.insert(InvalidReason::Overexposed);
    }
    Ok(ValidityVerdict::from_reasons(reasons))
}
