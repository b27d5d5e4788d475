//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance harness.
#![allow(dead_code)]

use pd_it2fnn::gait_features::{compute_raw_features, segment_strides, Foot, RawFeatures};
use pd_it2fnn::synthetic::{pattern_recording, square_wave_recording};
use pd_it2fnn::vgrf_io::VgrfRecording;
use pd_it2fnn::{Class, Dataset, FeatureRecord, FeatureVector, RuleBase};

/// Straight-line evaluation of the network: Gaussian bounds, min t-norm,
/// two weighted averages and their sum. Returns `(y_lower, y_upper, y)`.
pub fn brute_force(x: &[f64], rules: &[(Vec<f64>, f64, f64, f64)]) -> (f64, f64, f64) {
    let mut num_lo = 0.0;
    let mut den_lo = 0.0;
    let mut num_up = 0.0;
    let mut den_up = 0.0;
    for (centers, consequent, s_lo, s_up) in rules {
        let mut phi_lo = 1.0f64;
        let mut phi_up = 1.0f64;
        for j in 0..x.len() {
            let d = x[j] - centers[j];
            let mu_lo = (-(d * d) / (2.0 * s_lo * s_lo)).exp();
            let mu_up = (-(d * d) / (2.0 * s_up * s_up)).exp();
            if mu_lo < phi_lo {
                phi_lo = mu_lo;
            }
            if mu_up < phi_up {
                phi_up = mu_up;
            }
        }
        num_lo += phi_lo * consequent;
        den_lo += phi_lo;
        num_up += phi_up * consequent;
        den_up += phi_up;
    }
    let y_lo = if den_lo < 1e-300 { 0.0 } else { num_lo / den_lo };
    let y_up = if den_up < 1e-300 { 0.0 } else { num_up / den_up };
    (y_lo, y_up, y_lo + y_up)
}

/// The rules of a rule base in the oracle's tuple form.
pub fn oracle_rules(rb: &RuleBase) -> Vec<(Vec<f64>, f64, f64, f64)> {
    rb.rules
        .iter()
        .map(|r| {
            let w = r.widths(rb.widths());
            (r.centers.to_vec(), r.consequent, w.lower, w.upper)
        })
        .collect()
}

/// Four normalised samples in two well-separated groups.
pub fn toy_samples() -> Vec<FeatureVector> {
    let pts: [([f64; 10], Class); 4] = [
        ([0.20, 0.25, 0.22, 0.30, 0.18, 0.21, 0.27, 0.24, 0.19, 0.23], Class::Patient),
        ([0.24, 0.21, 0.26, 0.27, 0.22, 0.25, 0.23, 0.20, 0.24, 0.26], Class::Patient),
        ([0.76, 0.80, 0.74, 0.79, 0.81, 0.77, 0.75, 0.78, 0.82, 0.76], Class::Healthy),
        ([0.79, 0.77, 0.78, 0.75, 0.78, 0.80, 0.79, 0.81, 0.77, 0.80], Class::Healthy),
    ];
    pts.iter()
        .enumerate()
        .map(|(k, (x, label))| FeatureVector {
            subject_id: format!("T{k}"),
            dataset: Dataset::Ga,
            label: *label,
            x: *x,
        })
        .collect()
}

/// Chronological strides with swing `0.35 * s` on the left and `0.42 * s`
/// on the right, `s` alternating between 1 and 2. The paired ratio is a
/// constant 0.35/0.42 while the swing times still vary.
pub fn asymmetric_recording() -> VgrfRecording {
    let scale = |k: usize| if k % 2 == 0 { 1.0 } else { 2.0 };
    let left: Vec<(f64, f64)> = (0..10).map(|k| (0.6, 0.35 * scale(k))).collect();
    let right: Vec<(f64, f64)> = (0..10).map(|k| (0.6, 0.42 * scale(k))).collect();
    pattern_recording(&left, &right, 600.0)
}

/// Both feet walk the same varying pattern.
pub fn symmetric_recording() -> VgrfRecording {
    square_wave_recording(&[(0.6, 0.4), (0.62, 0.45), (0.58, 0.38)], 30.0, 600.0)
}

pub fn raw_features(rec: &VgrfRecording) -> RawFeatures {
    let l = segment_strides(rec, Foot::Left, 20.0).unwrap();
    let r = segment_strides(rec, Foot::Right, 20.0).unwrap();
    compute_raw_features(&l, &r).unwrap()
}

/// Synthetic feature records: patients have higher values on the first
/// inputs. `jitter` decides how much the classes overlap.
pub fn synthetic_records(subjects: usize, walks: usize, seed: u64, jitter: f64) -> Vec<FeatureRecord> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in 0..subjects {
        let label = if s % 2 == 0 { Class::Patient } else { Class::Healthy };
        let base = if label == Class::Patient { 0.7 } else { 0.3 };
        for _ in 0..walks {
            let values = std::array::from_fn(|j| {
                let centre = if j < 5 { base } else { 0.5 };
                centre + jitter * (rng.random::<f64>() - 0.5)
            });
            out.push(FeatureRecord {
                subject_id: format!("S{s:02}"),
                dataset: Dataset::ALL[s % 3],
                label,
                values,
            });
        }
    }
    out
}
