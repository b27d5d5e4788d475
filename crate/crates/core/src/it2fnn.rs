//! The interval type-2 fuzzy neural network.
//!
//! Every rule `i` holds one Gaussian interval type-2 set per input, with
//! centre `c_ij` and an uncertain width in `[σ_lower, σ_upper]`:
//!
//! ```text
//! μ_lower_ij(x_j) = exp(-½ (x_j − c_ij)² / σ_lower²)
//! μ_upper_ij(x_j) = exp(-½ (x_j − c_ij)² / σ_upper²)
//! ```
//!
//! The rule fires with the interval `[φ_lower_i, φ_upper_i]` given by the
//! minimum over inputs of the lower and upper memberships. Each bound of
//! the output is a firing-weighted average of the rule consequents, and the
//! crisp output is their sum,
//!
//! ```text
//! y_lower = Σ y_i φ_lower_i / Σ φ_lower_i
//! y_upper = Σ y_i φ_upper_i / Σ φ_upper_i
//! y       = y_lower + y_upper
//! ```
//!
//! which is read as *patient* when `y > 0` and *healthy* otherwise.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::class::Class;
use crate::error::{Error, Result};
use crate::gait_features::{Inputs, NormalizationParams, FEATURE_COUNT};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Firing-strength sums below this are treated as no coverage.
pub const COVERAGE_FLOOR: f64 = 1e-300;

/// Widths of the lower and upper membership functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    pub lower: f64,
    pub upper: f64,
}

impl Widths {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let w = Widths { lower, upper };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower <= self.upper && self.upper.is_finite()) {
            return Err(Error::Model(format!(
                "widths must satisfy 0 < lower <= upper, got ({}, {})",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Widths {
        Widths {
            lower: factor * self.lower,
            upper: factor * self.upper,
        }
    }
}

/// Lower and upper membership of `x` in the set centred at `center`.
pub fn membership_bounds(x: f64, center: f64, widths: Widths) -> (f64, f64) {
    let d2 = (x - center) * (x - center);
    let lower = (-0.5 * d2 / (widths.lower * widths.lower)).exp();
    let upper = (-0.5 * d2 / (widths.upper * widths.upper)).exp();
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub centers: Inputs,
    /// Consequent in `[-1, 1]`; `+1` votes patient, `-1` healthy.
    pub consequent: f64,
    /// Set only on rules added online, whose widths are scaled copies of
    /// the global ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_override: Option<Widths>,
}

impl FuzzyRule {
    pub fn widths(&self, global: Widths) -> Widths {
        self.sigma_override.unwrap_or(global)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.consequent) {
            return Err(Error::Model(format!(
                "rule consequent {} outside [-1, 1]",
                self.consequent
            )));
        }
        if self.centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Model("rule centre is not finite".into()));
        }
        if let Some(w) = &self.sigma_override {
            w.validate()?;
        }
        Ok(())
    }
}

/// Per-rule activation for one input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleActivation {
    /// `(μ_lower, μ_upper)` for each input.
    pub memberships: Vec<(f64, f64)>,
    pub firing_lower: f64,
    pub firing_upper: f64,
    /// Input that attained the minimum of the upper memberships.
    pub limiting_feature: usize,
}

/// Lower and upper firing strength of one rule under the min t-norm.
pub fn fire_rule(x: &Inputs, rule: &FuzzyRule, widths: Widths) -> (f64, f64) {
    x.iter()
        .zip(&rule.centers)
        .map(|(&xj, &c)| membership_bounds(xj, c, widths))
        .fold((1.0f64, 1.0f64), |(lo, up), (l, u)| (lo.min(l), up.min(u)))
}

fn activate(x: &Inputs, rule: &FuzzyRule, widths: Widths) -> RuleActivation {
    let memberships: Vec<(f64, f64)> = x
        .iter()
        .zip(&rule.centers)
        .map(|(&xj, &c)| membership_bounds(xj, c, widths))
        .collect();
    let (firing_lower, firing_upper) = memberships
        .iter()
        .fold((1.0f64, 1.0f64), |(lo, up), &(l, u)| (lo.min(l), up.min(u)));
    // Both bounds decrease with |x_j - c_j| under one shared width pair, so
    // the farthest coordinate sets the minimum. Distances stay informative
    // where the memberships underflow to zero.
    let limiting_feature = x
        .iter()
        .zip(&rule.centers)
        .map(|(xj, c)| (xj - c).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, d)| if d > best.1 { (j, d) } else { best })
        .0;
    RuleActivation {
        memberships,
        firing_lower,
        firing_upper,
        limiting_feature,
    }
}

/// Full record of one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceTrace {
    pub rules: Vec<RuleActivation>,
    pub y_lower: f64,
    pub y_upper: f64,
    pub y: f64,
    pub decision: Class,
    /// Lower firing strengths all underflowed.
    pub lower_uncovered: bool,
    /// Upper firing strengths all underflowed.
    pub upper_uncovered: bool,
}

impl InferenceTrace {
    /// No rule fired at all; the output defaulted to 0 (healthy).
    pub fn no_coverage(&self) -> bool {
        self.lower_uncovered && self.upper_uncovered
    }
}

/// Weighted average of consequents, or `None` when the weights vanish.
fn weighted_consequent(weights: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = weights.fold((0.0, 0.0), |(n, d), (y, w)| (n + y * w, d + w));
    (den >= COVERAGE_FLOOR).then(|| num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    pub rules: Vec<FuzzyRule>,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub normalization: NormalizationParams,
}

/// On-disk layout of a rule base.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    sigma_lower: f64,
    sigma_upper: f64,
    normalization: NormalizationParams,
    rules: Vec<FuzzyRule>,
}

impl RuleBase {
    pub fn new(
        rules: Vec<FuzzyRule>,
        widths: Widths,
        normalization: NormalizationParams,
    ) -> Result<Self> {
        let rb = RuleBase {
            rules,
            sigma_lower: widths.lower,
            sigma_upper: widths.upper,
            normalization,
        };
        rb.validate()?;
        Ok(rb)
    }

    pub fn widths(&self) -> Widths {
        Widths {
            lower: self.sigma_lower,
            upper: self.sigma_upper,
        }
    }

    /// Same rules and normalisation with different global widths.
    pub fn with_widths(&self, widths: Widths) -> RuleBase {
        RuleBase {
            sigma_lower: widths.lower,
            sigma_upper: widths.upper,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.widths().validate()?;
        self.normalization
            .validate()
            .map_err(|e| Error::Model(format!("normalisation: {e}")))?;
        for r in &self.rules {
            r.validate()?;
        }
        Ok(())
    }

    /// Firing intervals of every rule.
    pub fn firing(&self, x: &Inputs) -> Vec<(f64, f64)> {
        let global = self.widths();
        self.rules
            .iter()
            .map(|r| fire_rule(x, r, r.widths(global)))
            .collect()
    }

    /// Forward pass on a normalised input.
    pub fn infer(&self, x: &Inputs) -> Result<InferenceTrace> {
        if self.rules.is_empty() {
            return Err(Error::Model("rule base has no rules".into()));
        }
        let global = self.widths();
        let rules: Vec<RuleActivation> = self
            .rules
            .iter()
            .map(|r| activate(x, r, r.widths(global)))
            .collect();
        let consequents = self.rules.iter().map(|r| r.consequent);
        let lower = weighted_consequent(consequents.clone().zip(rules.iter().map(|a| a.firing_lower)));
        let upper = weighted_consequent(consequents.zip(rules.iter().map(|a| a.firing_upper)));
        let y_lower = lower.unwrap_or(0.0);
        let y_upper = upper.unwrap_or(0.0);
        let y = y_lower + y_upper;
        Ok(InferenceTrace {
            rules,
            y_lower,
            y_upper,
            y,
            decision: Class::from_output(y),
            lower_uncovered: lower.is_none(),
            upper_uncovered: upper.is_none(),
        })
    }

    /// Crisp output `y` without building a trace.
    pub fn output(&self, x: &Inputs) -> Result<f64> {
        if self.rules.is_empty() {
            return Err(Error::Model("rule base has no rules".into()));
        }
        let firing = self.firing(x);
        let consequents = self.rules.iter().map(|r| r.consequent);
        let lower = weighted_consequent(consequents.clone().zip(firing.iter().map(|f| f.0)));
        let upper = weighted_consequent(consequents.zip(firing.iter().map(|f| f.1)));
        Ok(lower.unwrap_or(0.0) + upper.unwrap_or(0.0))
    }

    pub fn classify(&self, x: &Inputs) -> Result<Class> {
        self.output(x).map(Class::from_output)
    }

    /// Normalise an unnormalised feature vector with this model's scaling.
    pub fn normalize(&self, raw: &Inputs) -> Inputs {
        self.normalization.apply(raw)
    }

    pub fn to_json_writer<W: Write>(&self, out: W) -> Result<()> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            sigma_lower: self.sigma_lower,
            sigma_upper: self.sigma_upper,
            normalization: self.normalization.clone(),
            rules: self.rules.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_json_writer(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json_reader<R: Read>(input: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(input)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => return Err(Error::Model(format!("unsupported model version {v}"))),
            None => return Err(Error::Model("model file has no version field".into())),
        }
        let file: ModelFile = serde_json::from_value(value)?;
        let rb = RuleBase {
            rules: file.rules,
            sigma_lower: file.sigma_lower,
            sigma_upper: file.sigma_upper,
            normalization: file.normalization,
        };
        rb.validate()?;
        Ok(rb)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_reader(std::io::BufReader::new(f))
    }
}

const _: () = assert!(FEATURE_COUNT == 10);

#[cfg(test)]
mod tests {
    use super::*;

    const W: Widths = Widths { lower: 0.01, upper: 0.1 };

    fn rule(center: f64, consequent: f64) -> FuzzyRule {
        FuzzyRule {
            centers: [center; FEATURE_COUNT],
            consequent,
            sigma_override: None,
        }
    }

    fn base(rules: Vec<FuzzyRule>, w: Widths) -> RuleBase {
        RuleBase::new(rules, w, NormalizationParams::unit()).unwrap()
    }

    #[test]
    fn membership_at_center_and_one_width() {
        assert_eq!(membership_bounds(0.3, 0.3, W), (1.0, 1.0));
        let (lo, up) = membership_bounds(0.4, 0.3, W);
        assert!((up - (-0.5f64).exp()).abs() < 1e-12);
        assert!(lo <= up);
        let (lo, up) = membership_bounds(0.3 + 10.0 * 0.1, 0.3, W);
        assert!(up < 1e-20 && lo < 1e-20 && lo <= up);
    }

    #[test]
    fn firing_picks_off_center_coordinate() {
        let r = rule(0.5, 1.0);
        assert_eq!(fire_rule(&[0.5; FEATURE_COUNT], &r, W), (1.0, 1.0));
        let mut x = [0.5; FEATURE_COUNT];
        x[4] = 0.6;
        let (lo, up) = fire_rule(&x, &r, W);
        assert!((up - (-0.5f64).exp()).abs() < 1e-12);
        assert!(lo <= up);
        let act = activate(&x, &r, W);
        assert_eq!(act.limiting_feature, 4);
        assert_eq!((act.firing_lower, act.firing_upper), (lo, up));
    }

    #[test]
    fn single_rule_outputs() {
        let rb = base(vec![rule(0.5, 1.0)], W);
        let t = rb.infer(&[0.5; FEATURE_COUNT]).unwrap();
        assert_eq!((t.y_lower, t.y_upper, t.y), (1.0, 1.0, 2.0));
        assert_eq!(t.decision, Class::Patient);

        let rb = base(vec![rule(0.5, -1.0)], W);
        let t = rb.infer(&[0.51; FEATURE_COUNT]).unwrap();
        assert_eq!(t.y, -2.0);
        assert_eq!(t.decision, Class::Healthy);
    }

    #[test]
    fn symmetric_rules_tie_to_healthy() {
        let rb = base(vec![rule(0.4, 1.0), rule(0.6, -1.0)], W);
        let t = rb.infer(&[0.5; FEATURE_COUNT]).unwrap();
        assert!(t.y.abs() < 1e-15);
        assert_eq!(t.decision, Class::Healthy);
    }

    #[test]
    fn far_input_has_no_coverage() {
        let narrow = Widths::new(0.005, 0.01).unwrap();
        let rb = base(vec![rule(0.0, 1.0)], narrow);
        let t = rb.infer(&[1.0; FEATURE_COUNT]).unwrap();
        assert!(t.no_coverage());
        assert_eq!(t.y, 0.0);
        assert_eq!(t.decision, Class::Healthy);
        // Lower bound underflows first.
        let rb = base(vec![rule(0.0, 1.0)], W);
        let t = rb.infer(&[0.5; FEATURE_COUNT]).unwrap();
        assert!(t.lower_uncovered && !t.upper_uncovered);
        assert_eq!(t.y, 1.0);
    }

    #[test]
    fn empty_rule_base_is_an_error() {
        let rb = RuleBase {
            rules: vec![],
            sigma_lower: 0.01,
            sigma_upper: 0.1,
            normalization: NormalizationParams::unit(),
        };
        assert!(matches!(rb.infer(&[0.0; FEATURE_COUNT]), Err(Error::Model(_))));
    }

    #[test]
    fn json_roundtrip_and_version() {
        let mut r = rule(0.25, -0.5);
        r.sigma_override = Some(W.scaled(0.5));
        let rb = base(vec![rule(0.5, 1.0), r], W);
        let text = rb.to_json_string().unwrap();
        assert!(text.contains("\"version\": 1"));
        let back = RuleBase::from_json_reader(text.as_bytes()).unwrap();
        assert_eq!(back, rb);

        let no_version = text.replace("\"version\": 1,", "");
        assert!(matches!(
            RuleBase::from_json_reader(no_version.as_bytes()),
            Err(Error::Model(_))
        ));
        let bad = text.replace("-0.5", "-1.5");
        assert!(RuleBase::from_json_reader(bad.as_bytes()).is_err());
    }

    #[test]
    fn output_matches_trace() {
        let rb = base(vec![rule(0.4, 0.7), rule(0.55, -0.3), rule(0.9, 1.0)], W);
        for k in 0..20 {
            let x = [0.3 + 0.02 * k as f64; FEATURE_COUNT];
            assert_eq!(rb.output(&x).unwrap(), rb.infer(&x).unwrap().y);
        }
    }
}
