//! Rule learning.
//!
//! Batch learning clusters the training set with fuzzy c-means after
//! appending each sample's desired output (`+1` / `-1`) as an extra
//! coordinate, so clusters respect class boundaries. Each cluster becomes a
//! rule: the first ten centre coordinates are the antecedent centres, and
//! the consequent is the membership-weighted average of the desired outputs,
//! `y_i = Σ_k u_ik^m y*_k / Σ_k u_ik^m`. The 11th centre coordinate is
//! dropped. All rules share the width interval `[σ1, σ2]`.
//!
//! Online learning only reacts to a misclassified sample that the existing
//! rules barely cover: if the summed firing strength is below `theta_c`, a
//! rule centred on the sample is appended, voting for its label, with widths
//! `ε · σ`.

use serde::{Deserialize, Serialize};

use crate::class::Class;
use crate::error::{Error, Result};
use crate::fcm::{fcm_cluster, FcmConfig};
use crate::gait_features::{
    apply_normalization, fit_normalization, FeatureRecord, FeatureVector, Inputs,
    NormalizationParams, FEATURE_COUNT,
};
use crate::it2fnn::{FuzzyRule, RuleBase, Widths};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub rules: usize,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub m: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        let fcm = FcmConfig::default();
        BatchConfig {
            rules: 8,
            sigma_1: 0.01,
            sigma_2: 0.1,
            m: fcm.m,
            tol: fcm.tol,
            max_iter: fcm.max_iter,
            seed: fcm.seed,
        }
    }
}

impl BatchConfig {
    pub fn fcm(&self) -> FcmConfig {
        FcmConfig {
            clusters: self.rules,
            m: self.m,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    pub fn widths(&self) -> Result<Widths> {
        Widths::new(self.sigma_1, self.sigma_2)
            .map_err(|_| Error::Config(format!(
                "widths must satisfy 0 < sigma_1 <= sigma_2, got ({}, {})",
                self.sigma_1, self.sigma_2
            )))
    }
}

/// Train a rule base on normalised samples. `normalization` is stored in the
/// model so raw features can be scaled the same way at prediction time.
pub fn batch_train(
    samples: &[FeatureVector],
    normalization: NormalizationParams,
    cfg: &BatchConfig,
) -> Result<RuleBase> {
    let widths = cfg.widths()?;
    if cfg.rules == 0 {
        return Err(Error::Config("rule count must be at least 1".into()));
    }
    if cfg.rules > samples.len() {
        return Err(Error::Config(format!(
            "rule count {} exceeds training sample count {}",
            cfg.rules,
            samples.len()
        )));
    }
    if samples.iter().all(|s| s.label == samples[0].label) {
        log::warn!(
            "training set contains only {} samples; every consequent will share one sign",
            samples[0].label
        );
    }

    let augmented: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut v = s.x.to_vec();
            v.push(s.y_star());
            v
        })
        .collect();
    let clusters = fcm_cluster(&augmented, &cfg.fcm())?;

    let rules = (0..cfg.rules)
        .map(|i| {
            let (num, den) = samples.iter().zip(&clusters.memberships).fold(
                (0.0, 0.0),
                |(n, d), (s, row)| {
                    let w = row[i].powf(cfg.m);
                    (n + w * s.y_star(), d + w)
                },
            );
            let consequent = if den > 0.0 { (num / den).clamp(-1.0, 1.0) } else { 0.0 };
            let centers: Inputs = std::array::from_fn(|j| clusters.centers[i][j]);
            FuzzyRule {
                centers,
                consequent,
                sigma_override: None,
            }
        })
        .collect();

    RuleBase::new(rules, widths, normalization)
}

/// Fit the normalisation on `records`, then train on the scaled records.
pub fn train_from_records(records: &[FeatureRecord], cfg: &BatchConfig) -> Result<RuleBase> {
    let params = fit_normalization(records)?;
    let samples: Vec<FeatureVector> = records
        .iter()
        .map(|r| apply_normalization(r, &params))
        .collect();
    batch_train(&samples, params, cfg)
}

/// Which firing bound measures coverage during online learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoverageBound {
    #[default]
    Mean,
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    /// Coverage threshold below which a misclassified sample spawns a rule.
    pub theta_c: f64,
    /// Width scale for added rules.
    pub epsilon: f64,
    pub coverage_bound: CoverageBound,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            theta_c: 0.1,
            epsilon: 1.0,
            coverage_bound: CoverageBound::Mean,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_c > 0.0) {
            return Err(Error::Config(format!("theta_c must be > 0, got {}", self.theta_c)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UpdateOutcome {
    /// The sample was already classified correctly.
    NoChange,
    /// Misclassified, but the existing rules cover it at least `theta_c`.
    MisclassifiedButCovered { coverage: f64 },
    RuleAdded { coverage: f64, rule_index: usize },
}

/// Summed firing strength of all rules at `x`.
pub fn coverage(rb: &RuleBase, x: &Inputs, bound: CoverageBound) -> f64 {
    rb.firing(x)
        .into_iter()
        .map(|(lo, up)| match bound {
            CoverageBound::Mean => 0.5 * (lo + up),
            CoverageBound::Upper => up,
            CoverageBound::Lower => lo,
        })
        .sum()
}

/// Present one labelled, normalised sample to the network. Existing rules
/// are never modified; at most one rule is appended.
pub fn online_update(
    rb: &mut RuleBase,
    x_new: &Inputs,
    y_new: Class,
    cfg: &OnlineConfig,
) -> Result<UpdateOutcome> {
    cfg.validate()?;
    if let Some(j) = x_new
        .iter()
        .position(|v| !(v.is_finite() && *v >= -1e-9 && *v <= 1.0 + 1e-9))
    {
        return Err(Error::Contract(format!(
            "online sample is not normalised: x{} = {}",
            j + 1,
            x_new[j]
        )));
    }
    if rb.classify(x_new)? == y_new {
        return Ok(UpdateOutcome::NoChange);
    }
    let s = coverage(rb, x_new, cfg.coverage_bound);
    if s >= cfg.theta_c {
        return Ok(UpdateOutcome::MisclassifiedButCovered { coverage: s });
    }
    rb.rules.push(FuzzyRule {
        centers: *x_new,
        consequent: y_new.target(),
        sigma_override: Some(rb.widths().scaled(cfg.epsilon)),
    });
    Ok(UpdateOutcome::RuleAdded {
        coverage: s,
        rule_index: rb.rules.len() - 1,
    })
}

/// Feed a stream of samples in order. Each sample is scaled with the model's
/// own normalisation (clipped to `[0, 1]`).
pub fn online_stream(
    rb: &mut RuleBase,
    stream: &[FeatureRecord],
    cfg: &OnlineConfig,
) -> Result<Vec<UpdateOutcome>> {
    stream
        .iter()
        .map(|r| {
            let x = rb.normalize(&r.values);
            online_update(rb, &x, r.label, cfg)
        })
        .collect()
}

const _: () = assert!(FEATURE_COUNT == 10);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::Dataset;

    fn sample(x: f64, label: Class) -> FeatureVector {
        FeatureVector {
            subject_id: format!("s{x}"),
            dataset: Dataset::Ga,
            label,
            x: [x; FEATURE_COUNT],
        }
    }

    fn tight(rules: usize) -> BatchConfig {
        BatchConfig {
            rules,
            tol: 1e-12,
            max_iter: 2000,
            ..BatchConfig::default()
        }
    }

    #[test]
    fn single_class_consequents() {
        let samples: Vec<_> = (0..6).map(|k| sample(0.1 * k as f64, Class::Patient)).collect();
        let rb = batch_train(&samples, NormalizationParams::unit(), &tight(3)).unwrap();
        assert!(rb.rules.iter().all(|r| (r.consequent - 1.0).abs() < 1e-12));
        assert_eq!(rb.len(), 3);
        assert_eq!((rb.sigma_lower, rb.sigma_upper), (0.01, 0.1));
    }

    #[test]
    fn one_rule_per_sample() {
        let samples = vec![
            sample(0.0, Class::Patient),
            sample(0.3, Class::Healthy),
            sample(0.7, Class::Patient),
            sample(1.0, Class::Healthy),
        ];
        let rb = batch_train(&samples, NormalizationParams::unit(), &tight(4)).unwrap();
        for s in &samples {
            let r = rb
                .rules
                .iter()
                .min_by(|a, b| {
                    (a.centers[0] - s.x[0]).abs().total_cmp(&(b.centers[0] - s.x[0]).abs())
                })
                .unwrap();
            assert!((r.centers[0] - s.x[0]).abs() < 1e-4, "{:?}", r.centers);
            assert!((r.consequent - s.y_star()).abs() < 1e-4, "{}", r.consequent);
        }
    }

    #[test]
    fn too_many_rules() {
        let samples = vec![sample(0.0, Class::Patient), sample(1.0, Class::Healthy)];
        assert!(matches!(
            batch_train(&samples, NormalizationParams::unit(), &tight(3)),
            Err(Error::Config(_))
        ));
        let bad = BatchConfig { sigma_1: 0.2, sigma_2: 0.1, ..tight(1) };
        assert!(batch_train(&samples, NormalizationParams::unit(), &bad).is_err());
    }

    fn two_rule_base() -> RuleBase {
        RuleBase::new(
            vec![
                FuzzyRule { centers: [0.2; FEATURE_COUNT], consequent: 1.0, sigma_override: None },
                FuzzyRule { centers: [0.4; FEATURE_COUNT], consequent: -1.0, sigma_override: None },
            ],
            Widths::new(0.01, 0.1).unwrap(),
            NormalizationParams::unit(),
        )
        .unwrap()
    }

    #[test]
    fn correct_sample_changes_nothing() {
        let mut rb = two_rule_base();
        let before = rb.clone();
        let out = online_update(&mut rb, &[0.2; FEATURE_COUNT], Class::Patient, &OnlineConfig::default())
            .unwrap();
        assert_eq!(out, UpdateOutcome::NoChange);
        assert_eq!(rb, before);
    }

    #[test]
    fn uncovered_misclassified_sample_adds_rule() {
        let mut rb = two_rule_base();
        let x = [0.9; FEATURE_COUNT];
        assert_eq!(rb.classify(&x).unwrap(), Class::Healthy);
        let out = online_update(&mut rb, &x, Class::Patient, &OnlineConfig::default()).unwrap();
        match out {
            UpdateOutcome::RuleAdded { coverage, rule_index } => {
                assert!(coverage < 0.1);
                assert_eq!(rule_index, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        let t = rb.infer(&x).unwrap();
        assert_eq!(t.rules[2].firing_lower, 1.0);
        assert_eq!(t.rules[2].firing_upper, 1.0);
        assert_eq!(t.decision, Class::Patient);
        assert_eq!(rb.rules[2].sigma_override, Some(Widths { lower: 0.01, upper: 0.1 }));
    }

    #[test]
    fn covered_misclassified_sample_is_left_alone() {
        let mut rb = two_rule_base();
        let x = [0.4; FEATURE_COUNT];
        let out = online_update(&mut rb, &x, Class::Patient, &OnlineConfig::default()).unwrap();
        assert!(matches!(out, UpdateOutcome::MisclassifiedButCovered { coverage } if coverage >= 0.1));
        assert_eq!(rb.len(), 2);
    }

    #[test]
    fn unnormalised_input_rejected() {
        let mut rb = two_rule_base();
        let mut x = [0.5; FEATURE_COUNT];
        x[3] = 1.2;
        assert!(matches!(
            online_update(&mut rb, &x, Class::Patient, &OnlineConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn epsilon_scales_new_widths() {
        let mut rb = two_rule_base();
        let cfg = OnlineConfig { epsilon: 0.5, ..OnlineConfig::default() };
        online_update(&mut rb, &[0.9; FEATURE_COUNT], Class::Patient, &cfg).unwrap();
        assert_eq!(rb.rules[2].sigma_override, Some(Widths { lower: 0.005, upper: 0.05 }));
    }
}
