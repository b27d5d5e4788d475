//! Human-readable views of a trained rule base: sampled membership curves
//! for every fuzzy set, the rule grid (one row per rule, one column per
//! input, plus the consequent), and per-decision explanations ranking the
//! rules by how strongly they fired.

use std::io::Write;

use serde::Serialize;

use crate::class::Class;
use crate::error::{Error, Result};
use crate::gait_features::{Inputs, FEATURE_COUNT, FEATURE_NAMES};
use crate::it2fnn::{membership_bounds, RuleBase};

pub const DEFAULT_CURVE_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Zero-based input index.
    pub feature: usize,
    /// Zero-based rule index.
    pub rule: usize,
    pub x: f64,
    pub mu_lower: f64,
    pub mu_upper: f64,
}

/// Lower and upper membership of every rule's set on every input, sampled
/// on an even grid over `[0, 1]`. Points are ordered by feature, then rule,
/// then `x`.
pub fn export_fuzzy_sets(rb: &RuleBase, samples_per_curve: usize) -> Result<Vec<CurvePoint>> {
    if samples_per_curve < 2 {
        return Err(Error::Config("a curve needs at least 2 samples".into()));
    }
    let global = rb.widths();
    let step = 1.0 / (samples_per_curve - 1) as f64;
    let mut points = Vec::with_capacity(FEATURE_COUNT * rb.len() * samples_per_curve);
    for feature in 0..FEATURE_COUNT {
        for (rule, r) in rb.rules.iter().enumerate() {
            let widths = r.widths(global);
            for k in 0..samples_per_curve {
                let x = k as f64 * step;
                let (mu_lower, mu_upper) = membership_bounds(x, r.centers[feature], widths);
                points.push(CurvePoint { feature, rule, x, mu_lower, mu_upper });
            }
        }
    }
    Ok(points)
}

/// `feature,rule,x,mu_lower,mu_upper` with `x1..x10` and `R1..Rn` labels.
pub fn write_fuzzy_sets_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "rule", "x", "mu_lower", "mu_upper"])?;
    for p in points {
        w.write_record([
            FEATURE_NAMES[p.feature].to_string(),
            format!("R{}", p.rule + 1),
            p.x.to_string(),
            p.mu_lower.to_string(),
            p.mu_upper.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<fuzzy set csv>", e))?;
    Ok(())
}

/// Which class a consequent leans towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lean {
    Patient,
    Healthy,
    Neutral,
}

impl Lean {
    pub fn of(consequent: f64) -> Lean {
        if consequent > 0.0 {
            Lean::Patient
        } else if consequent < 0.0 {
            Lean::Healthy
        } else {
            Lean::Neutral
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleGridRow {
    pub name: String,
    pub centers: Inputs,
    pub consequent: f64,
    pub lean: Lean,
    /// Rule was appended by online learning.
    pub online: bool,
}

pub fn export_rule_grid(rb: &RuleBase) -> Vec<RuleGridRow> {
    rb.rules
        .iter()
        .enumerate()
        .map(|(i, r)| RuleGridRow {
            name: format!("R{}", i + 1),
            centers: r.centers,
            consequent: r.consequent,
            lean: Lean::of(r.consequent),
            online: r.sigma_override.is_some(),
        })
        .collect()
}

/// `rule,x1..x10,consequent,lean,online`; centres to two decimals.
pub fn write_rule_grid_csv<W: Write>(out: W, rows: &[RuleGridRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["rule"];
    header.extend(FEATURE_NAMES);
    header.extend(["consequent", "lean", "online"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.name.clone()];
        rec.extend(r.centers.iter().map(|c| format!("{c:.2}")));
        rec.push(format!("{:.4}", r.consequent));
        rec.push(format!("{:?}", r.lean));
        rec.push(r.online.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<rule grid csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedRule {
    /// Zero-based rule index.
    pub rule: usize,
    pub firing_lower: f64,
    pub firing_upper: f64,
    pub mean_firing: f64,
    pub consequent: f64,
    /// Input (zero-based) that set the min t-norm.
    pub limiting_feature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub ranked: Vec<RankedRule>,
    pub y_lower: f64,
    pub y_upper: f64,
    pub y: f64,
    pub decision: Class,
    pub no_coverage: bool,
}

/// Rules ranked by mean firing strength, strongest first, alongside the
/// network output.
pub fn explain(x: &Inputs, rb: &RuleBase) -> Result<Explanation> {
    let trace = rb.infer(x)?;
    let mut ranked: Vec<RankedRule> = trace
        .rules
        .iter()
        .zip(&rb.rules)
        .enumerate()
        .map(|(i, (a, r))| RankedRule {
            rule: i,
            firing_lower: a.firing_lower,
            firing_upper: a.firing_upper,
            mean_firing: 0.5 * (a.firing_lower + a.firing_upper),
            consequent: r.consequent,
            limiting_feature: a.limiting_feature,
        })
        .collect();
    ranked.sort_by(|a, b| b.mean_firing.total_cmp(&a.mean_firing));
    Ok(Explanation {
        ranked,
        y_lower: trace.y_lower,
        y_upper: trace.y_upper,
        y: trace.y,
        decision: trace.decision,
        no_coverage: trace.no_coverage(),
    })
}
