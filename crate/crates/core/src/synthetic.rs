//! Synthetic square-wave gait recordings for tests, examples and the guide.
//!
//! A gait pattern is a list of `(stance_s, swing_s)` phases. During stance
//! the foot's total force is a constant load spread evenly over its eight
//! sensors; during swing it is zero. Recordings start in stance at `t = 0`
//! and are sampled at 100 Hz.

use crate::class::{Class, Dataset};
use crate::vgrf_io::{VgrfRecording, DEFAULT_SAMPLE_RATE_HZ, SENSORS_PER_FOOT, SENSOR_COUNT};

fn samples(seconds: f64) -> usize {
    (seconds * DEFAULT_SAMPLE_RATE_HZ).round() as usize
}

/// Per-sample swing mask for a pattern played once.
fn swing_mask(pattern: &[(f64, f64)]) -> Vec<bool> {
    let mut mask = Vec::new();
    for &(stance, swing) in pattern {
        mask.extend(std::iter::repeat_n(false, samples(stance)));
        mask.extend(std::iter::repeat_n(true, samples(swing)));
    }
    mask
}

fn build(left: Vec<bool>, right: Vec<bool>, n: usize, load_n: f64) -> VgrfRecording {
    let force = |mask: &[bool], i: usize| {
        if mask.get(i).copied().unwrap_or(false) {
            0.0
        } else {
            load_n
        }
    };
    let total_left_n: Vec<f64> = (0..n).map(|i| force(&left, i)).collect();
    let total_right_n: Vec<f64> = (0..n).map(|i| force(&right, i)).collect();
    let per_sensor = |total: &[f64]| -> Vec<f64> {
        total.iter().map(|f| f / SENSORS_PER_FOOT as f64).collect()
    };
    let mut sensors_n = Vec::with_capacity(SENSOR_COUNT);
    for _ in 0..SENSORS_PER_FOOT {
        sensors_n.push(per_sensor(&total_left_n));
    }
    for _ in 0..SENSORS_PER_FOOT {
        sensors_n.push(per_sensor(&total_right_n));
    }
    VgrfRecording {
        subject_id: "SynPt01".into(),
        record_id: "SynPt01_01".into(),
        cohort: Class::Patient,
        dataset: Dataset::Ga,
        sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        time_s: (0..n).map(|i| i as f64 / DEFAULT_SAMPLE_RATE_HZ).collect(),
        sensors_n,
        total_left_n,
        total_right_n,
        segment_starts: vec![0],
    }
}

/// Both feet cycle through `pattern` for `duration_s` seconds.
pub fn square_wave_recording(pattern: &[(f64, f64)], duration_s: f64, load_n: f64) -> VgrfRecording {
    let n = samples(duration_s) + 1;
    let cycle = swing_mask(pattern);
    let mask: Vec<bool> = cycle.iter().copied().cycle().take(n).collect();
    build(mask.clone(), mask, n, load_n)
}

/// Each foot plays its own pattern once; the shorter foot is padded with
/// stance and one extra stance sample closes the final swing.
pub fn pattern_recording(
    left: &[(f64, f64)],
    right: &[(f64, f64)],
    load_n: f64,
) -> VgrfRecording {
    let left = swing_mask(left);
    let right = swing_mask(right);
    let n = left.len().max(right.len()) + 1;
    build(left, right, n, load_n)
}
