use dcage_core::camera::{validate_frame, CameraConfig, CameraFrame, CameraId, InvalidReason, ValidityVerdict};
use dcage_core::state::Validity;
use proptest::prelude::*;

fn frame(seq: u64, pixels: Vec<u8>) -> CameraFrame {
    CameraFrame { width: 8, height: 8, pixels, timestamp: 1000, seq, camera_id: CameraId::Front }
}

proptest! {
    #[test]
    fn single_pixel_change_clears_frozen(base in 20u8..230, idx in 0usize..64) {
        let cfg = CameraConfig::default();
        let a = frame(1, vec![base; 64]);
        let b = frame(2, vec![base; 64]);
        let frozen = validate_frame(&frame(3, vec![base; 64]), &[a.clone(), b.clone()], 1000, &cfg).unwrap();
        prop_assert!(frozen.reasons.contains(&InvalidReason::Frozen));
        let mut px = vec![base; 64];
        px[idx] = base + 1;
        let moved = validate_frame(&frame(3, px), &[a, b], 1000, &cfg).unwrap();
        prop_assert!(!moved.reasons.contains(&InvalidReason::Frozen));
        prop_assert_eq!(moved.validity, Validity::Valid);
    }

    #[test]
    fn verdict_round_trips(stale: bool, frozen: bool, under: bool, over: bool) {
        let mut reasons = std::collections::BTreeSet::new();
        for (on, r) in [(stale, InvalidReason::Stale), (frozen, InvalidReason::Frozen),
                        (under, InvalidReason::Underexposed), (over, InvalidReason::Overexposed)] {
            if on {
                reasons.insert(r);
            }
        }
        let v = ValidityVerdict::from_reasons(reasons);
        prop_assert_eq!(v.validity == Validity::Invalid, !v.reasons.is_empty());
        let text = serde_json::to_string(&v).unwrap();
        let back: ValidityVerdict = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, v);
    }
}

#[test]
fn stale_and_overexposed() {
    let cfg = CameraConfig { mean_high: 230.0, ..CameraConfig::default() };
    let f = CameraFrame { timestamp: 0, ..frame(1, vec![255; 64]) };
    let v = validate_frame(&f, &[], 2000, &cfg).unwrap();
    assert_eq!(v.validity, Validity::Invalid);
    assert!(v.reasons.contains(&InvalidReason::Stale));
    assert!(v.reasons.contains(&InvalidReason::Overexposed));
}
