//! Classification metrics and the evaluation experiments: leave-one-out
//! cross-validation, the rule-count sweep, the noise-robustness comparison
//! against a type-1 network, and the online-learning experiment.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class::{Class, Dataset};
use crate::error::{Error, Result};
use crate::gait_features::{FeatureRecord, Inputs};
use crate::it2fnn::{RuleBase, Widths};
use crate::learning::{online_stream, train_from_records, BatchConfig, OnlineConfig, UpdateOutcome};

/// Confusion counts with Patient as the positive class, plus the derived
/// ratios in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No positive predictions; precision reported as 0.
    pub precision_undefined: bool,
    /// No positive truths; recall reported as 0.
    pub recall_undefined: bool,
    /// Precision + recall is 0; F1 reported as 0.
    pub f1_undefined: bool,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> MetricsReport {
        let total = tp + tn + fp + fn_;
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (accuracy, _) = ratio(tp + tn, total);
        let (precision, precision_undefined) = ratio(tp, tp + fp);
        let (recall, recall_undefined) = ratio(tp, tp + fn_);
        let (f1, f1_undefined) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        MetricsReport {
            tp,
            tn,
            fp,
            fn_,
            accuracy,
            precision,
            recall,
            f1,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Rows of the confusion matrix in percent of each true class:
    /// `[[H→H, H→P], [P→H, P→P]]`.
    pub fn confusion_percentages(&self) -> [[f64; 2]; 2] {
        let pct = |a: usize, b: usize| {
            if a + b == 0 {
                [0.0, 0.0]
            } else {
                let n = (a + b) as f64;
                [100.0 * a as f64 / n, 100.0 * b as f64 / n]
            }
        };
        [pct(self.tn, self.fp), pct(self.fn_, self.tp)]
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Accuracy   {:6.2}", 100.0 * self.accuracy)?;
        writeln!(f, "Precision  {:6.2}", 100.0 * self.precision)?;
        writeln!(f, "Recall     {:6.2}", 100.0 * self.recall)?;
        writeln!(f, "F1 Score   {:6.2}", 100.0 * self.f1)?;
        let [h, p] = self.confusion_percentages();
        writeln!(f, "            H       P")?;
        writeln!(f, "True H  {:6.2}  {:6.2}", h[0], h[1])?;
        write!(f, "True P  {:6.2}  {:6.2}", p[0], p[1])
    }
}

pub fn compute_metrics(truths: &[Class], predictions: &[Class]) -> Result<MetricsReport> {
    if truths.len() != predictions.len() {
        return Err(Error::Contract(format!(
            "{} truths but {} predictions",
            truths.len(),
            predictions.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::Contract("cannot score an empty prediction set".into()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (t, p) in truths.iter().zip(predictions) {
        match (t, p) {
            (Class::Patient, Class::Patient) => tp += 1,
            (Class::Healthy, Class::Healthy) => tn += 1,
            (Class::Healthy, Class::Patient) => fp += 1,
            (Class::Patient, Class::Healthy) => fn_ += 1,
        }
    }
    Ok(MetricsReport::from_counts(tp, tn, fp, fn_))
}

/// Score a trained model on raw (unnormalised) records.
pub fn evaluate_model(rb: &RuleBase, records: &[FeatureRecord]) -> Result<MetricsReport> {
    let truths: Vec<Class> = records.iter().map(|r| r.label).collect();
    let preds = records
        .iter()
        .map(|r| rb.classify(&rb.normalize(&r.values)))
        .collect::<Result<Vec<_>>>()?;
    compute_metrics(&truths, &preds)
}

/// Unit held out in one cross-validation fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Grouping {
    /// All walks of a subject are held out together.
    #[default]
    Subject,
    /// Every record is its own fold.
    Sample,
}

impl std::str::FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subject" => Ok(Grouping::Subject),
            "sample" | "record" | "walk" => Ok(Grouping::Sample),
            other => Err(Error::Config(format!("unknown grouping {other:?}"))),
        }
    }
}

/// Record indices per fold, folds ordered by first appearance.
pub fn fold_groups(records: &[FeatureRecord], grouping: Grouping) -> Vec<Vec<usize>> {
    match grouping {
        Grouping::Sample => (0..records.len()).map(|i| vec![i]).collect(),
        Grouping::Subject => {
            let mut order: Vec<Vec<usize>> = Vec::new();
            let mut slot: HashMap<&str, usize> = HashMap::new();
            for (i, r) in records.iter().enumerate() {
                let k = *slot.entry(r.subject_id.as_str()).or_insert_with(|| {
                    order.push(Vec::new());
                    order.len() - 1
                });
                order[k].push(i);
            }
            order
        }
    }
}

/// Train on every fold's complement in parallel and hand the model and the
/// held-out indices to `score`. Results come back in fold order.
fn run_folds<T, F>(
    records: &[FeatureRecord],
    cfg: &BatchConfig,
    grouping: Grouping,
    score: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&RuleBase, &[usize]) -> Result<T> + Sync,
{
    let folds = fold_groups(records, grouping);
    if folds.len() < 2 {
        return Err(Error::Config(format!(
            "cross-validation needs at least 2 groups, found {}",
            folds.len()
        )));
    }
    folds
        .par_iter()
        .map(|held_out| {
            let train: Vec<FeatureRecord> = records
                .iter()
                .enumerate()
                .filter(|(i, _)| !held_out.contains(i))
                .map(|(_, r)| r.clone())
                .collect();
            let rb = train_from_records(&train, cfg)?;
            score(&rb, held_out)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub index: usize,
    pub truth: Class,
    pub predicted: Class,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub report: MetricsReport,
    pub folds: usize,
    /// One entry per record, in record order.
    pub predictions: Vec<Prediction>,
}

impl CrossValidation {
    /// Metrics restricted to records of one dataset.
    pub fn report_for(&self, records: &[FeatureRecord], dataset: Dataset) -> Option<MetricsReport> {
        let (t, p): (Vec<Class>, Vec<Class>) = self
            .predictions
            .iter()
            .filter(|pr| records[pr.index].dataset == dataset)
            .map(|pr| (pr.truth, pr.predicted))
            .unzip();
        compute_metrics(&t, &p).ok()
    }
}

/// Leave-one-group-out cross-validation. Each fold fits its own
/// normalisation and rule base on the remaining records; confusion counts
/// are pooled over folds.
pub fn loocv(records: &[FeatureRecord], cfg: &BatchConfig, grouping: Grouping) -> Result<CrossValidation> {
    let per_fold = run_folds(records, cfg, grouping, |rb, held_out| {
        held_out
            .iter()
            .map(|&i| {
                let r = &records[i];
                let y = rb.output(&rb.normalize(&r.values))?;
                Ok(Prediction {
                    index: i,
                    truth: r.label,
                    predicted: Class::from_output(y),
                    y,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let folds = per_fold.len();
    let mut predictions: Vec<Prediction> = per_fold.into_iter().flatten().collect();
    predictions.sort_by_key(|p| p.index);
    let (t, p): (Vec<Class>, Vec<Class>) = predictions.iter().map(|p| (p.truth, p.predicted)).unzip();
    Ok(CrossValidation {
        report: compute_metrics(&t, &p)?,
        folds,
        predictions,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rules: usize,
    /// LOOCV F1 per seed, in seed order.
    pub f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
    pub recommended_rules: usize,
}

impl SweepResult {
    /// `rules,mean_f1,std_f1` summary.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rules", "mean_f1", "std_f1", "recommended"])?;
        for r in &self.rows {
            w.write_record([
                r.rules.to_string(),
                r.mean_f1.to_string(),
                r.std_f1.to_string(),
                (r.rules == self.recommended_rules).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    /// One `rules,seed,f1` line per run, for plotting.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rules", "seed", "f1"])?;
        for r in &self.rows {
            for (seed, f1) in self.seeds.iter().zip(&r.f1) {
                w.write_record([r.rules.to_string(), seed.to_string(), f1.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }
}

/// Smallest rule count whose mean F1 lies within one pooled standard
/// deviation of the best mean. The pooled deviation is the root of the mean
/// per-row variance.
pub fn recommend_rule_count(rows: &[SweepRow]) -> Option<usize> {
    let best = rows.iter().map(|r| r.mean_f1).fold(f64::NEG_INFINITY, f64::max);
    let pooled = (rows.iter().map(|r| r.std_f1 * r.std_f1).sum::<f64>() / rows.len() as f64).sqrt();
    rows.iter()
        .filter(|r| r.mean_f1 >= best - pooled)
        .map(|r| r.rules)
        .min()
}

/// LOOCV F1 for every rule count in `rule_counts` and every seed
/// `base.seed, base.seed + 1, ...` (`n_seeds` of them).
pub fn sweep_rule_count(
    records: &[FeatureRecord],
    rule_counts: &[usize],
    n_seeds: usize,
    base: &BatchConfig,
    grouping: Grouping,
) -> Result<SweepResult> {
    if rule_counts.is_empty() || n_seeds == 0 {
        return Err(Error::Config("sweep needs at least one rule count and one seed".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|s| base.seed.wrapping_add(s)).collect();
    let rows = rule_counts
        .iter()
        .map(|&rules| {
            let f1 = seeds
                .iter()
                .map(|&seed| {
                    let cfg = BatchConfig { rules, seed, ..base.clone() };
                    loocv(records, &cfg, grouping).map(|cv| cv.report.f1)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean_f1, std_f1) = mean_std(&f1);
            Ok(SweepRow { rules, f1, mean_f1, std_f1 })
        })
        .collect::<Result<Vec<_>>>()?;
    let recommended_rules = recommend_rule_count(&rows).expect("rows are non-empty");
    Ok(SweepResult { seeds, rows, recommended_rules })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Interval type-2 network with widths `(σ1, σ2)`.
    IT2,
    /// Type-1 network with both widths at `(σ1 + σ2) / 2`.
    T1,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::IT2 => "IT2",
            Variant::T1 => "T1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub batch: BatchConfig,
    pub noise_sigmas: Vec<f64>,
    pub noise_seed: u64,
    pub grouping: Grouping,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            batch: BatchConfig { rules: 10, ..BatchConfig::default() },
            noise_sigmas: vec![0.1, 0.3],
            noise_seed: 42,
            grouping: Grouping::Subject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub noise_sigma: f64,
    /// `None` for the pooled set.
    pub dataset: Option<Dataset>,
    pub variant: Variant,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseExperimentResult {
    pub rows: Vec<NoiseRow>,
}

impl NoiseExperimentResult {
    pub fn get(&self, noise_sigma: f64, dataset: Option<Dataset>, variant: Variant) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.noise_sigma == noise_sigma && r.dataset == dataset && r.variant == variant)
            .map(|r| &r.metrics)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "noise", "dataset", "method", "tp", "tn", "fp", "fn", "accuracy", "precision", "recall", "f1",
        ])?;
        for r in &self.rows {
            let m = &r.metrics;
            w.write_record([
                r.noise_sigma.to_string(),
                r.dataset.map_or("all".to_string(), |d| d.to_string()),
                r.variant.to_string(),
                m.tp.to_string(),
                m.tn.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                format!("{:.2}", 100.0 * m.accuracy),
                format!("{:.2}", 100.0 * m.precision),
                format!("{:.2}", 100.0 * m.recall),
                format!("{:.2}", 100.0 * m.f1),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<noise csv>", e))?;
        Ok(())
    }
}

/// Zero-mean Gaussian perturbation of a normalised input, clipped back into
/// `[0, 1]`. The generator is keyed by `(seed, stream)` so a record receives
/// the same noise however folds are scheduled.
pub fn perturb(x: &Inputs, sigma: f64, seed: u64, stream: u64) -> Inputs {
    if sigma == 0.0 {
        return *x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, sigma).expect("noise sigma must be finite and non-negative");
    std::array::from_fn(|j| (x[j] + normal.sample(&mut rng)).clamp(0.0, 1.0))
}

/// Cross-validated comparison of the interval type-2 network with its
/// type-1 counterpart on noisy held-out inputs. Both variants share the
/// trained rules and see identical perturbed inputs.
pub fn noise_experiment(records: &[FeatureRecord], cfg: &NoiseConfig) -> Result<NoiseExperimentResult> {
    let it2 = cfg.batch.widths()?;
    let mid = 0.5 * (it2.lower + it2.upper);
    let t1 = Widths { lower: mid, upper: mid };
    for &s in &cfg.noise_sigmas {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("noise sigma must be >= 0, got {s}")));
        }
    }

    // per fold: for each noise level, for each held-out record: (index, IT2, T1)
    let per_fold = run_folds(records, &cfg.batch, cfg.grouping, |rb, held_out| {
        let t1_rb = rb.with_widths(t1);
        cfg.noise_sigmas
            .iter()
            .enumerate()
            .map(|(level, &sigma)| {
                held_out
                    .iter()
                    .map(|&i| {
                        let x = rb.normalize(&records[i].values);
                        let stream = (level as u64) << 32 | i as u64;
                        let noisy = perturb(&x, sigma, cfg.noise_seed, stream);
                        Ok((i, rb.classify(&noisy)?, t1_rb.classify(&noisy)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    for (level, &sigma) in cfg.noise_sigmas.iter().enumerate() {
        let mut preds: Vec<(usize, Class, Class)> = per_fold
            .iter()
            .flat_map(|fold| fold[level].iter().copied())
            .collect();
        preds.sort_by_key(|p| p.0);
        let scopes = std::iter::once(None).chain(Dataset::ALL.into_iter().map(Some));
        for dataset in scopes {
            let subset: Vec<&(usize, Class, Class)> = preds
                .iter()
                .filter(|p| dataset.is_none_or(|d| records[p.0].dataset == d))
                .collect();
            if subset.is_empty() {
                continue;
            }
            let truths: Vec<Class> = subset.iter().map(|p| records[p.0].label).collect();
            for variant in [Variant::IT2, Variant::T1] {
                let predicted: Vec<Class> = subset
                    .iter()
                    .map(|p| if variant == Variant::IT2 { p.1 } else { p.2 })
                    .collect();
                rows.push(NoiseRow {
                    noise_sigma: sigma,
                    dataset,
                    variant,
                    metrics: compute_metrics(&truths, &predicted)?,
                });
            }
        }
    }
    Ok(NoiseExperimentResult { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineExperimentResult {
    pub rules_before: usize,
    pub rules_after: usize,
    /// Metrics per named evaluation set before streaming.
    pub before: Vec<(String, MetricsReport)>,
    pub after: Vec<(String, MetricsReport)>,
    pub outcomes: Vec<UpdateOutcome>,
    pub model: RuleBase,
}

/// Batch-train on `initial`, stream `additional` through online learning,
/// and score the named evaluation sets before and after.
pub fn online_experiment(
    initial: &[FeatureRecord],
    additional: &[FeatureRecord],
    eval_sets: &[(&str, &[FeatureRecord])],
    batch: &BatchConfig,
    online: &OnlineConfig,
) -> Result<OnlineExperimentResult> {
    let mut rb = train_from_records(initial, batch)?;
    let rules_before = rb.len();
    let score = |rb: &RuleBase| {
        eval_sets
            .iter()
            .map(|(name, set)| Ok((name.to_string(), evaluate_model(rb, set)?)))
            .collect::<Result<Vec<_>>>()
    };
    let before = score(&rb)?;
    let outcomes = online_stream(&mut rb, additional, online)?;
    let after = score(&rb)?;
    Ok(OnlineExperimentResult {
        rules_before,
        rules_after: rb.len(),
        before,
        after,
        outcomes,
        model: rb,
    })
}
