//! Reading and writing vertical ground reaction force recordings.
//!
//! Recordings use the layout of the public gait-in-Parkinson's database: one
//! sample per line, 19 whitespace-separated columns.
//!
//! | column | content                         |
//! |--------|---------------------------------|
//! | 1      | time (s)                        |
//! | 2..=9  | left foot sensors L1..L8 (N)    |
//! | 10..=17| right foot sensors R1..R8 (N)   |
//! | 18     | total force under left foot (N) |
//! | 19     | total force under right foot (N)|
//!
//! Files are named `<Dataset><Cohort><nn>_<walk>.txt`, e.g. `GaPt03_01.txt`
//! (dataset `Ga`, patient, subject 03, walk 01). The cohort token (`Pt` or
//! `Co`) can be overridden by an explicit label table.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::class::{Class, Dataset};
use crate::error::{Error, Result};

pub const SENSORS_PER_FOOT: usize = 8;
pub const SENSOR_COUNT: usize = 2 * SENSORS_PER_FOOT;
pub const COLUMN_COUNT: usize = 1 + SENSOR_COUNT + 2;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 100.0;

/// Relative tolerance on the spacing between consecutive timestamps.
const SPACING_JITTER: f64 = 0.01;

/// One walk of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct VgrfRecording {
    pub subject_id: String,
    /// File stem, unique per walk (`GaPt03_01`).
    pub record_id: String,
    pub cohort: Class,
    pub dataset: Dataset,
    pub sample_rate_hz: f64,
    pub time_s: Vec<f64>,
    /// 16 force channels: indices 0..8 left foot, 8..16 right foot.
    pub sensors_n: Vec<Vec<f64>>,
    pub total_left_n: Vec<f64>,
    pub total_right_n: Vec<f64>,
    /// Sample indices where a contiguous segment begins. Always starts with
    /// 0; further entries mark cuts left behind by turnaround removal, and
    /// no stride may span one.
    pub segment_starts: Vec<usize>,
}

impl VgrfRecording {
    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.time_s.first(), self.time_s.last()) {
            (Some(first), Some(last)) => last - first,
            _ => 0.0,
        }
    }

    /// Half-open sample ranges of the contiguous segments.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut bounds = self.segment_starts.clone();
        bounds.push(self.len());
        bounds
            .windows(2)
            .filter(|w| w[0] < w[1])
            .map(|w| w[0]..w[1])
            .collect()
    }

    /// All 18 force channels (16 sensors then the two totals).
    pub fn force_channels(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.sensors_n
            .iter()
            .chain(std::iter::once(&self.total_left_n))
            .chain(std::iter::once(&self.total_right_n))
    }

    pub fn force_channels_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.sensors_n
            .iter_mut()
            .chain(std::iter::once(&mut self.total_left_n))
            .chain(std::iter::once(&mut self.total_right_n))
    }

    /// Keep only the samples whose index satisfies `keep`, recording a new
    /// segment boundary wherever a run of dropped samples sits between kept
    /// ones.
    pub(crate) fn retain_samples(&mut self, keep: &[bool]) {
        debug_assert_eq!(keep.len(), self.len());
        let old_starts: BTreeSet<usize> = self.segment_starts.iter().copied().collect();
        let mut new_starts = Vec::new();
        let mut kept = 0usize;
        let mut pending_cut = true;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                if pending_cut || old_starts.contains(&i) {
                    new_starts.push(kept);
                }
                pending_cut = false;
                kept += 1;
            } else {
                pending_cut = true;
            }
        }
        if new_starts.is_empty() {
            new_starts.push(0);
        }
        let filter = |v: &mut Vec<f64>| {
            let mut it = keep.iter();
            v.retain(|_| *it.next().unwrap());
        };
        filter(&mut self.time_s);
        for ch in self.force_channels_mut() {
            filter(ch);
        }
        self.segment_starts = new_starts;
    }

    /// Checks the structural invariants of a recording.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Validation(format!("{}: no samples", self.record_id)));
        }
        if self.sensors_n.len() != SENSOR_COUNT {
            return Err(Error::Validation(format!(
                "{}: expected {SENSOR_COUNT} sensor channels, got {}",
                self.record_id,
                self.sensors_n.len()
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Validation(format!(
                "{}: sample rate must be positive",
                self.record_id
            )));
        }
        for ch in self.force_channels() {
            if ch.len() != n {
                return Err(Error::Validation(format!(
                    "{}: channel length {} differs from time axis length {n}",
                    self.record_id,
                    ch.len()
                )));
            }
            if let Some(bad) = ch.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Validation(format!(
                    "{}: force value {bad} is negative or not finite",
                    self.record_id
                )));
            }
        }
        let nominal = 1.0 / self.sample_rate_hz;
        let cuts: BTreeSet<usize> = self.segment_starts.iter().copied().collect();
        for i in 1..n {
            let dt = self.time_s[i] - self.time_s[i - 1];
            if !(dt > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: time axis not strictly increasing at sample {i}",
                    self.record_id
                )));
            }
            if !cuts.contains(&i) && (dt - nominal).abs() > SPACING_JITTER * nominal {
                return Err(Error::Validation(format!(
                    "{}: sample spacing {dt} s at sample {i} deviates from nominal {nominal} s",
                    self.record_id
                )));
            }
        }
        Ok(())
    }
}

/// Subject identity decoded from a file name such as `SiCo12_02.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordName {
    pub subject_id: String,
    pub record_id: String,
    pub dataset: Dataset,
    pub cohort: Class,
}

/// Decode `<Ga|Ju|Si><Pt|Co><digits>_<digits>.txt`. Returns `None` for
/// anything else (database metadata files, README, ...).
pub fn decode_record_name(path: &Path) -> Option<RecordName> {
    if path.extension()?.to_str()? != "txt" {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let (subject, walk) = stem.split_once('_')?;
    if subject.len() < 5 || walk.is_empty() || !walk.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let dataset = subject.get(0..2)?.parse::<Dataset>().ok()?;
    let cohort = match subject.get(2..4)? {
        "Pt" => Class::Patient,
        "Co" => Class::Healthy,
        _ => return None,
    };
    if !subject[4..].bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(RecordName {
        subject_id: subject.to_string(),
        record_id: stem.to_string(),
        dataset,
        cohort,
    })
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    subject_id: String,
    cohort: String,
    dataset: String,
}

/// Explicit subject labels, read from a `subject_id,cohort,dataset` CSV.
#[derive(Debug, Clone, Default)]
pub struct LabelTable {
    entries: HashMap<String, (Class, Dataset)>,
}

impl LabelTable {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut entries = HashMap::new();
        for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
            let row = row?;
            let parse_err = |e: Error| Error::Parse {
                path: path.to_path_buf(),
                row: i + 2,
                message: e.to_string(),
            };
            let cohort = row.cohort.parse::<Class>().map_err(parse_err)?;
            let dataset = row.dataset.parse::<Dataset>().map_err(parse_err)?;
            entries.insert(row.subject_id.trim().to_string(), (cohort, dataset));
        }
        Ok(LabelTable { entries })
    }

    pub fn insert(&mut self, subject_id: impl Into<String>, cohort: Class, dataset: Dataset) {
        self.entries.insert(subject_id.into(), (cohort, dataset));
    }

    pub fn get(&self, subject_id: &str) -> Option<(Class, Dataset)> {
        self.entries.get(subject_id).copied()
    }
}

fn resolve_identity(path: &Path, labels: Option<&LabelTable>) -> Result<RecordName> {
    let decoded = decode_record_name(path);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let subject_guess = decoded
        .as_ref()
        .map(|d| d.subject_id.clone())
        .unwrap_or_else(|| stem.split('_').next().unwrap_or(&stem).to_string());
    match (decoded, labels.and_then(|l| l.get(&subject_guess))) {
        (Some(mut name), Some((cohort, dataset))) => {
            name.cohort = cohort;
            name.dataset = dataset;
            Ok(name)
        }
        (Some(name), None) => Ok(name),
        (None, Some((cohort, dataset))) => Ok(RecordName {
            subject_id: subject_guess,
            record_id: stem,
            dataset,
            cohort,
        }),
        (None, None) => Err(Error::Validation(format!(
            "{}: cannot determine cohort and dataset from file name and no label entry exists",
            path.display()
        ))),
    }
}

/// Parse the text body of a recording. `identity` supplies the labels.
pub fn parse_recording_str(
    text: &str,
    path: &Path,
    identity: RecordName,
    sample_rate_hz: f64,
) -> Result<VgrfRecording> {
    let mut time_s = Vec::new();
    let mut sensors_n = vec![Vec::new(); SENSOR_COUNT];
    let mut total_left_n = Vec::new();
    let mut total_right_n = Vec::new();
    let mut values = [0.0f64; COLUMN_COUNT];

    for (line_no, line) in text.lines().enumerate() {
        let row = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for token in line.split_whitespace() {
            if count < COLUMN_COUNT {
                values[count] = token.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    message: format!("column {} is not numeric: {token:?}", count + 1),
                })?;
            }
            count += 1;
        }
        if count != COLUMN_COUNT {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("expected {COLUMN_COUNT} columns, found {count}"),
            });
        }
        if let Some(col) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("column {} is not finite", col + 1),
            });
        }
        if let Some(col) = values[1..].iter().position(|v| *v < 0.0) {
            return Err(Error::Validation(format!(
                "{}: row {row}: negative force {} in column {}",
                path.display(),
                values[col + 1],
                col + 2
            )));
        }
        time_s.push(values[0]);
        for (ch, v) in sensors_n.iter_mut().zip(&values[1..=SENSOR_COUNT]) {
            ch.push(*v);
        }
        total_left_n.push(values[COLUMN_COUNT - 2]);
        total_right_n.push(values[COLUMN_COUNT - 1]);
    }

    if time_s.is_empty() {
        return Err(Error::EmptyRecording(path.to_path_buf()));
    }

    let rec = VgrfRecording {
        subject_id: identity.subject_id,
        record_id: identity.record_id,
        cohort: identity.cohort,
        dataset: identity.dataset,
        sample_rate_hz,
        time_s,
        sensors_n,
        total_left_n,
        total_right_n,
        segment_starts: vec![0],
    };
    rec.validate()?;
    Ok(rec)
}

/// Read and validate one recording file.
pub fn parse_recording(path: &Path, labels: Option<&LabelTable>) -> Result<VgrfRecording> {
    let identity = resolve_identity(path, labels)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_recording_str(&text, path, identity, DEFAULT_SAMPLE_RATE_HZ)
}

/// Load every recognised recording in `dir` whose dataset is in `filter`
/// (all datasets when `filter` is empty), ordered by file name.
pub fn load_dataset(
    dir: &Path,
    filter: &[Dataset],
    labels: Option<&LabelTable>,
) -> Result<Vec<VgrfRecording>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut recordings = Vec::new();
    for path in paths {
        let identity = match resolve_identity(&path, labels) {
            Ok(id) => id,
            Err(_) => {
                log::warn!("skipping unrecognised file {}", path.display());
                continue;
            }
        };
        if !filter.is_empty() && !filter.contains(&identity.dataset) {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        recordings.push(parse_recording_str(
            &text,
            &path,
            identity,
            DEFAULT_SAMPLE_RATE_HZ,
        )?);
    }
    if recordings.is_empty() {
        return Err(Error::EmptyDataset(dir.to_path_buf()));
    }
    Ok(recordings)
}

/// Render a recording in the 19-column text layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_recording(rec: &VgrfRecording) -> String {
    let mut out = String::with_capacity(rec.len() * COLUMN_COUNT * 8);
    for i in 0..rec.len() {
        write!(out, "{}", rec.time_s[i]).unwrap();
        for v in rec.force_channels().map(|ch| ch[i]) {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_recording(rec: &VgrfRecording, path: &Path) -> Result<()> {
    fs::write(path, format_recording(rec)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, left: f64, right: f64) -> String {
        let mut cols = vec![t.to_string()];
        cols.extend(std::iter::repeat_n("1.5".to_string(), SENSOR_COUNT));
        cols.push(left.to_string());
        cols.push(right.to_string());
        cols.join("\t")
    }

    fn identity() -> RecordName {
        decode_record_name(Path::new("GaPt03_01.txt")).unwrap()
    }

    #[test]
    fn maps_columns() {
        let text = format!("{}\n{}\n", row(0.0, 612.0, 598.3), row(0.01, 600.0, 590.0));
        let rec = parse_recording_str(&text, Path::new("GaPt03_01.txt"), identity(), 100.0)
            .unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.total_left_n[0], 612.0);
        assert_eq!(rec.total_right_n[0], 598.3);
        assert_eq!(rec.sensors_n[15][1], 1.5);
        assert_eq!(rec.dataset, Dataset::Ga);
        assert_eq!(rec.cohort, Class::Patient);
        assert_eq!(rec.subject_id, "GaPt03");
    }

    #[test]
    fn short_row_reports_row_number() {
        let mut bad = row(0.01, 1.0, 1.0);
        bad.truncate(bad.rfind('\t').unwrap());
        let text = format!("{}\n{}\n", row(0.0, 1.0, 1.0), bad);
        let err = parse_recording_str(&text, Path::new("x.txt"), identity(), 100.0).unwrap_err();
        match err {
            Error::Parse { row, message, .. } => {
                assert_eq!(row, 2);
                assert!(message.contains("found 18"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_empty_and_negative() {
        let text = row(0.0, 1.0, 1.0).replace("1.5", "abc");
        assert!(matches!(
            parse_recording_str(&text, Path::new("x.txt"), identity(), 100.0),
            Err(Error::Parse { row: 1, .. })
        ));
        assert!(matches!(
            parse_recording_str("\n\n", Path::new("x.txt"), identity(), 100.0),
            Err(Error::EmptyRecording(_))
        ));
        let text = row(0.0, -3.0, 1.0);
        assert!(matches!(
            parse_recording_str(&text, Path::new("x.txt"), identity(), 100.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn irregular_time_axis_rejected() {
        let text = format!("{}\n{}\n", row(0.0, 1.0, 1.0), row(0.05, 1.0, 1.0));
        assert!(matches!(
            parse_recording_str(&text, Path::new("x.txt"), identity(), 100.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn record_names() {
        let n = decode_record_name(Path::new("/data/SiCo12_02.txt")).unwrap();
        assert_eq!(n.dataset, Dataset::Si);
        assert_eq!(n.cohort, Class::Healthy);
        assert_eq!(n.subject_id, "SiCo12");
        assert_eq!(n.record_id, "SiCo12_02");
        assert!(decode_record_name(Path::new("demographics.txt")).is_none());
        assert!(decode_record_name(Path::new("GaPt03_01.csv")).is_none());
        assert!(decode_record_name(Path::new("XxPt03_01.txt")).is_none());
    }

    #[test]
    fn retain_marks_cuts() {
        let n = 10;
        let mut rec = VgrfRecording {
            subject_id: "s".into(),
            record_id: "s_1".into(),
            cohort: Class::Patient,
            dataset: Dataset::Ga,
            sample_rate_hz: 100.0,
            time_s: (0..n).map(|i| i as f64 * 0.01).collect(),
            sensors_n: vec![vec![0.0; n]; SENSOR_COUNT],
            total_left_n: (0..n).map(|i| i as f64).collect(),
            total_right_n: vec![0.0; n],
            segment_starts: vec![0],
        };
        let keep: Vec<bool> = (0..n).map(|i| !(3..6).contains(&i)).collect();
        rec.retain_samples(&keep);
        assert_eq!(rec.total_left_n, vec![0.0, 1.0, 2.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(rec.segment_starts, vec![0, 3]);
        assert_eq!(rec.segments(), vec![0..3, 3..7]);
        rec.validate().unwrap();
    }
}
