//! Gait-cycle segmentation and clinical timing features.
//!
//! Swing phases are the maximal runs where a foot's total force sits below
//! a threshold. A stride runs from one heel strike (end of a swing) to the
//! next, so it consists of a stance phase followed by a swing phase.
//!
//! From the left and right stride tables fourteen raw features `z1..z14`
//! are computed, then folded into the ten network inputs `x1..x10` by
//! averaging the per-foot pairs.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::class::{Class, Dataset};
use crate::error::{Error, Result};
use crate::preprocess::{preprocess, PreprocessConfig, RemovedInterval};
use crate::vgrf_io::VgrfRecording;

pub const FEATURE_COUNT: usize = 10;
pub const RAW_FEATURE_COUNT: usize = 14;
pub const DEFAULT_SWING_THRESHOLD_N: f64 = 20.0;
pub const MIN_STRIDES: usize = 5;
pub const MIN_STRIDE_S: f64 = 0.4;
pub const MAX_STRIDE_S: f64 = 4.0;

/// The ten network inputs `x1..x10`.
pub type Inputs = [f64; FEATURE_COUNT];

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] =
    ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Foot {
    Left,
    Right,
}

/// One gait cycle of one foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stride {
    pub foot: Foot,
    /// Sample index of the heel strike opening the stride.
    pub start_index: usize,
    /// Sample index of the heel strike closing it (exclusive).
    pub end_index: usize,
    pub stance_start_s: f64,
    pub swing_start_s: f64,
    pub stride_end_s: f64,
}

impl Stride {
    pub fn duration_s(&self) -> f64 {
        self.stride_end_s - self.stance_start_s
    }

    pub fn swing_s(&self) -> f64 {
        self.stride_end_s - self.swing_start_s
    }

    pub fn swing_pct(&self) -> f64 {
        100.0 * self.swing_s() / self.duration_s()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrideTable {
    pub foot: Foot,
    pub strides: Vec<Stride>,
}

impl StrideTable {
    pub fn len(&self) -> usize {
        self.strides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strides.is_empty()
    }

    pub fn swing_durations(&self) -> Vec<f64> {
        self.strides.iter().map(Stride::swing_s).collect()
    }

    pub fn stride_durations(&self) -> Vec<f64> {
        self.strides.iter().map(Stride::duration_s).collect()
    }

    pub fn swing_pcts(&self) -> Vec<f64> {
        self.strides.iter().map(Stride::swing_pct).collect()
    }
}

/// Strides in one contiguous series. Strides outside
/// `[MIN_STRIDE_S, MAX_STRIDE_S]` are dropped.
pub fn strides_in_series(
    time_s: &[f64],
    force: &[f64],
    threshold_n: f64,
    foot: Foot,
    index_offset: usize,
) -> Vec<Stride> {
    debug_assert_eq!(time_s.len(), force.len());
    // (swing_start, heel_strike) sample pairs; a swing still open at the end
    // of the series has no heel strike and is ignored.
    let mut swings: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &f) in force.iter().enumerate() {
        match (f < threshold_n, open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                swings.push((start, i));
                open = None;
            }
            _ => {}
        }
    }

    swings
        .windows(2)
        .map(|w| {
            let strike = w[0].1;
            let (swing_start, next_strike) = w[1];
            Stride {
                foot,
                start_index: strike + index_offset,
                end_index: next_strike + index_offset,
                stance_start_s: time_s[strike],
                swing_start_s: time_s[swing_start],
                stride_end_s: time_s[next_strike],
            }
        })
        .filter(|s| (MIN_STRIDE_S..=MAX_STRIDE_S).contains(&s.duration_s()))
        .collect()
}

fn foot_force(rec: &VgrfRecording, foot: Foot) -> &[f64] {
    match foot {
        Foot::Left => &rec.total_left_n,
        Foot::Right => &rec.total_right_n,
    }
}

/// All valid strides of one foot, segment by segment so that no stride
/// crosses a cut.
pub fn detect_strides(rec: &VgrfRecording, foot: Foot, threshold_n: f64) -> Vec<Stride> {
    let force = foot_force(rec, foot);
    rec.segments()
        .into_iter()
        .flat_map(|seg| {
            strides_in_series(
                &rec.time_s[seg.clone()],
                &force[seg.clone()],
                threshold_n,
                foot,
                seg.start,
            )
        })
        .collect()
}

/// Stride table for one foot; fails when fewer than [`MIN_STRIDES`] valid
/// strides are found.
pub fn segment_strides(rec: &VgrfRecording, foot: Foot, threshold_n: f64) -> Result<StrideTable> {
    if !(threshold_n > 0.0) {
        return Err(Error::Config(format!(
            "swing threshold must be positive, got {threshold_n}"
        )));
    }
    let strides = detect_strides(rec, foot, threshold_n);
    if strides.len() < MIN_STRIDES {
        return Err(Error::InsufficientGait {
            found: strides.len(),
            required: MIN_STRIDES,
        });
    }
    Ok(StrideTable { foot, strides })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Relative spread below which a timing series counts as constant; absorbs
/// round-off in timestamp differences.
const CONSTANT_SERIES_TOL: f64 = 1e-9;

/// Coefficient of variation in percent, `100 * std / mean`.
pub fn coefficient_of_variation(values: &[f64], what: &str) -> Result<f64> {
    let m = mean(values);
    if m == 0.0 || !m.is_finite() {
        return Err(Error::DegenerateGait(format!("zero mean {what}")));
    }
    let ratio = population_std(values) / m;
    Ok(if ratio.abs() <= CONSTANT_SERIES_TOL { 0.0 } else { 100.0 * ratio })
}

/// Gait asymmetry of one stride pair, `100 * |ln(short / long)|`.
pub fn gait_asymmetry(short_s: f64, long_s: f64) -> f64 {
    100.0 * (short_s / long_s).ln().abs()
}

/// The fourteen raw timing features. `z(1)` is `z1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures(pub [f64; RAW_FEATURE_COUNT]);

impl RawFeatures {
    pub fn z(&self, n: usize) -> f64 {
        self.0[n - 1]
    }
}

/// Per-pair short and long swing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingPairs {
    pub short_s: Vec<f64>,
    pub long_s: Vec<f64>,
}

impl SwingPairs {
    /// Pair the k-th left stride with the k-th right stride; trailing
    /// unmatched strides are dropped.
    pub fn from_tables(left: &StrideTable, right: &StrideTable) -> SwingPairs {
        let (short_s, long_s) = left
            .strides
            .iter()
            .zip(&right.strides)
            .map(|(l, r)| {
                let (a, b) = (l.swing_s(), r.swing_s());
                (a.min(b), a.max(b))
            })
            .unzip();
        SwingPairs { short_s, long_s }
    }

    pub fn mean_asymmetry(&self) -> f64 {
        let per_pair: Vec<f64> = self
            .short_s
            .iter()
            .zip(&self.long_s)
            .map(|(&s, &l)| gait_asymmetry(s, l))
            .collect();
        mean(&per_pair)
    }
}

pub fn compute_raw_features(left: &StrideTable, right: &StrideTable) -> Result<RawFeatures> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InsufficientGait {
            found: left.len().min(right.len()),
            required: 1,
        });
    }
    let pairs = SwingPairs::from_tables(left, right);
    let (swing_l, swing_r) = (left.swing_durations(), right.swing_durations());
    let (stride_l, stride_r) = (left.stride_durations(), right.stride_durations());

    let cv_short = coefficient_of_variation(&pairs.short_s, "short swing time")?;
    let cv_long = coefficient_of_variation(&pairs.long_s, "long swing time")?;
    if cv_short == 0.0 || cv_long == 0.0 {
        return Err(Error::DegenerateGait(
            "zero variability of short or long swing time makes the asymmetry CV undefined".into(),
        ));
    }

    Ok(RawFeatures([
        mean(&pairs.short_s),
        mean(&pairs.long_s),
        pairs.mean_asymmetry(),
        mean(&left.swing_pcts()),
        mean(&right.swing_pcts()),
        mean(&swing_l),
        mean(&swing_r),
        cv_short,
        cv_long,
        100.0 * (cv_short / cv_long).ln().abs(),
        coefficient_of_variation(&swing_l, "left swing time")?,
        coefficient_of_variation(&swing_r, "right swing time")?,
        coefficient_of_variation(&stride_l, "left stride time")?,
        coefficient_of_variation(&stride_r, "right stride time")?,
    ]))
}

/// Fold the fourteen raw features into the ten inputs, averaging each
/// left/right pair.
pub fn reduce_features(z: &RawFeatures) -> Inputs {
    let z = |n| z.z(n);
    [
        z(1),
        z(2),
        z(3),
        (z(4) + z(5)) / 2.0,
        (z(6) + z(7)) / 2.0,
        z(8),
        z(9),
        z(10),
        (z(11) + z(12)) / 2.0,
        (z(13) + z(14)) / 2.0,
    ]
}

/// Per-feature min/max learned on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: Inputs,
    pub maxs: Inputs,
}

impl NormalizationParams {
    pub fn fit<'a>(train: impl IntoIterator<Item = &'a Inputs>) -> Result<Self> {
        let mut mins = [f64::INFINITY; FEATURE_COUNT];
        let mut maxs = [f64::NEG_INFINITY; FEATURE_COUNT];
        let mut any = false;
        for v in train {
            any = true;
            for j in 0..FEATURE_COUNT {
                if !v[j].is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite value for {} in training data",
                        FEATURE_NAMES[j]
                    )));
                }
                mins[j] = mins[j].min(v[j]);
                maxs[j] = maxs[j].max(v[j]);
            }
        }
        if !any {
            return Err(Error::Config("cannot fit normalization on an empty set".into()));
        }
        let params = NormalizationParams { mins, maxs };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..FEATURE_COUNT {
            if !(self.maxs[j] > self.mins[j]) {
                return Err(Error::DegenerateFeature {
                    feature: FEATURE_NAMES[j].to_string(),
                    value: self.mins[j],
                });
            }
        }
        Ok(())
    }

    /// Min-max scale into `[0, 1]`, clipping out-of-range values.
    pub fn apply(&self, v: &Inputs) -> Inputs {
        std::array::from_fn(|j| {
            ((v[j] - self.mins[j]) / (self.maxs[j] - self.mins[j])).clamp(0.0, 1.0)
        })
    }

    /// Identity scaling, for data that is already in `[0, 1]`.
    pub fn unit() -> Self {
        NormalizationParams {
            mins: [0.0; FEATURE_COUNT],
            maxs: [1.0; FEATURE_COUNT],
        }
    }
}

/// A labelled, unnormalised feature row as stored in the feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub subject_id: String,
    pub dataset: Dataset,
    pub label: Class,
    pub values: Inputs,
}

/// A labelled network input after normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub subject_id: String,
    pub dataset: Dataset,
    pub label: Class,
    pub x: Inputs,
}

impl FeatureVector {
    pub fn y_star(&self) -> f64 {
        self.label.target()
    }
}

pub fn apply_normalization(record: &FeatureRecord, params: &NormalizationParams) -> FeatureVector {
    FeatureVector {
        subject_id: record.subject_id.clone(),
        dataset: record.dataset,
        label: record.label,
        x: params.apply(&record.values),
    }
}

pub fn fit_normalization(train: &[FeatureRecord]) -> Result<NormalizationParams> {
    NormalizationParams::fit(train.iter().map(|r| &r.values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub preprocess: PreprocessConfig,
    pub swing_threshold_n: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            preprocess: PreprocessConfig::default(),
            swing_threshold_n: DEFAULT_SWING_THRESHOLD_N,
        }
    }
}

/// Everything derived from one recording.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub record_id: String,
    pub raw: RawFeatures,
    pub features: FeatureRecord,
    pub removed: Vec<RemovedInterval>,
    pub left_strides: usize,
    pub right_strides: usize,
}

/// Preprocess one recording and compute its features.
pub fn extract_recording(rec: &VgrfRecording, cfg: &ExtractConfig) -> Result<Extraction> {
    let mut pre = cfg.preprocess.clone();
    pre.swing_threshold_n = cfg.swing_threshold_n;
    let (clean, removed) = preprocess(rec, &pre)?;
    let left = segment_strides(&clean, Foot::Left, cfg.swing_threshold_n)?;
    let right = segment_strides(&clean, Foot::Right, cfg.swing_threshold_n)?;
    let raw = compute_raw_features(&left, &right)?;
    Ok(Extraction {
        record_id: rec.record_id.clone(),
        features: FeatureRecord {
            subject_id: rec.subject_id.clone(),
            dataset: rec.dataset,
            label: rec.cohort,
            values: reduce_features(&raw),
        },
        raw,
        removed,
        left_strides: left.len(),
        right_strides: right.len(),
    })
}

fn label_str(c: Class) -> &'static str {
    match c {
        Class::Patient => "1",
        Class::Healthy => "-1",
    }
}

/// Write rows as `subject_id,dataset,label,x1..x10`.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject_id", "dataset", "label"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.subject_id.clone(),
            r.dataset.to_string(),
            label_str(r.label).to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

/// Raw sidecar: `record_id,subject_id,dataset,label,z1..z14`.
pub fn write_raw_feature_csv<W: Write>(out: W, rows: &[Extraction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["record_id", "subject_id", "dataset", "label"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=RAW_FEATURE_COUNT).map(|n| format!("z{n}")));
    w.write_record(&header)?;
    for e in rows {
        let mut rec = vec![
            e.record_id.clone(),
            e.features.subject_id.clone(),
            e.features.dataset.to_string(),
            label_str(e.features.label).to_string(),
        ];
        rec.extend(e.raw.0.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<raw feature csv>", e))?;
    Ok(())
}

pub fn read_feature_csv_from<R: Read>(input: R, origin: &Path) -> Result<Vec<FeatureRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            row: 1,
            message: format!("missing column {name}"),
        })
    };
    let subject_col = col("subject_id")?;
    let dataset_col = col("dataset")?;
    let label_col = col("label")?;
    let feature_cols = FEATURE_NAMES
        .iter()
        .map(|n| col(n))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let bad = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            row,
            message,
        };
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let dataset = field(dataset_col)
            .parse::<Dataset>()
            .map_err(|e| bad(e.to_string()))?;
        let label = field(label_col)
            .parse::<Class>()
            .map_err(|e| bad(e.to_string()))?;
        let mut values = [0.0; FEATURE_COUNT];
        for (v, &c) in values.iter_mut().zip(&feature_cols) {
            *v = field(c)
                .parse::<f64>()
                .map_err(|_| bad(format!("non-numeric value {:?}", field(c))))?;
            if !v.is_finite() {
                return Err(bad("non-finite feature value".into()));
            }
        }
        rows.push(FeatureRecord {
            subject_id: field(subject_col).to_string(),
            dataset,
            label,
            values,
        });
    }
    Ok(rows)
}

pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_csv_from(file, path)
}
