//! Signal cleanup applied before gait segmentation: edge trimming, a
//! sliding median filter on every force channel and excision of
//! turnaround strides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait_features::{detect_strides, Foot, Stride, MIN_STRIDES};
use crate::vgrf_io::VgrfRecording;

/// Scale factor turning a median absolute deviation into a consistent
/// estimate of the standard deviation under normality.
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Seconds removed from both ends of the walk.
    pub trim_s: f64,
    /// Median filter window in samples.
    pub median_window: usize,
    /// Outlier cut-off for stride durations, in scaled MADs.
    pub turnaround_mad_k: f64,
    pub remove_turnarounds: bool,
    /// Force threshold used to locate swing phases when looking for
    /// turnaround strides.
    pub swing_threshold_n: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            trim_s: 20.0,
            median_window: 10,
            turnaround_mad_k: 3.0,
            remove_turnarounds: true,
            swing_threshold_n: crate::gait_features::DEFAULT_SWING_THRESHOLD_N,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.trim_s >= 0.0 && self.trim_s.is_finite()) {
            return Err(Error::Config(format!("trim_s must be >= 0, got {}", self.trim_s)));
        }
        if self.median_window == 0 {
            return Err(Error::Config("median_window must be >= 1".into()));
        }
        if !(self.turnaround_mad_k > 0.0) {
            return Err(Error::Config(format!(
                "turnaround_mad_k must be > 0, got {}",
                self.turnaround_mad_k
            )));
        }
        if !(self.swing_threshold_n > 0.0) {
            return Err(Error::Config("swing threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Drop everything before `t0 + trim_s` and after `t_end - trim_s`.
pub fn trim_edges(rec: &VgrfRecording, trim_s: f64) -> Result<VgrfRecording> {
    let duration = rec.duration_s();
    if duration <= 2.0 * trim_s {
        return Err(Error::TooShort {
            duration_s: duration,
            required_s: 2.0 * trim_s,
        });
    }
    let t0 = rec.time_s[0] + trim_s;
    let t1 = rec.time_s[rec.len() - 1] - trim_s;
    // Half a sample of slack so that decimal timestamps on the boundary are kept.
    let slack = 0.5 / rec.sample_rate_hz;
    let keep: Vec<bool> = rec
        .time_s
        .iter()
        .map(|&t| t >= t0 - slack && t <= t1 + slack)
        .collect();
    let mut out = rec.clone();
    out.retain_samples(&keep);
    Ok(out)
}

fn median_of(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (_, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Sliding median. The window for sample `k` covers
/// `k - window/2 ..= k + (window-1)/2`, clipped to the series; even-sized
/// windows take the mean of the two middle order statistics.
pub fn median_filter(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "median window must be at least 1");
    let n = series.len();
    let back = window / 2;
    let ahead = (window - 1) / 2;
    let mut buf = Vec::with_capacity(window);
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(back);
            let hi = (k + ahead).min(n - 1);
            buf.clear();
            buf.extend_from_slice(&series[lo..=hi]);
            median_of(&mut buf)
        })
        .collect()
}

/// Apply [`median_filter`] to all 18 force channels.
pub fn median_filter_recording(rec: &VgrfRecording, window: usize) -> VgrfRecording {
    let mut out = rec.clone();
    for ch in out.force_channels_mut() {
        *ch = median_filter(ch, window);
    }
    out
}

/// Time interval cut out of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemovedInterval {
    pub foot: Foot,
    pub start_s: f64,
    pub end_s: f64,
}

/// Strides whose duration is more than `k` scaled MADs from the median
/// stride duration (pooled over both feet).
pub fn flag_outlier_strides<'a>(
    strides: impl IntoIterator<Item = &'a Stride> + Clone,
    k: f64,
    sample_period_s: f64,
) -> Vec<&'a Stride> {
    let mut durations: Vec<f64> = strides.clone().into_iter().map(Stride::duration_s).collect();
    if durations.is_empty() {
        return Vec::new();
    }
    let median = median_of(&mut durations);
    let mut deviations: Vec<f64> = durations.iter().map(|d| (d - median).abs()).collect();
    let mad = MAD_SCALE * median_of(&mut deviations);
    // Durations are quantised to the sample period; ignore sub-sample noise.
    let cutoff = k * mad + 0.5 * sample_period_s;
    strides
        .into_iter()
        .filter(|s| (s.duration_s() - median).abs() > cutoff)
        .collect()
}

/// Excise turnaround strides, detected as stride-duration outliers on
/// either foot. Kept samples are concatenated with a segment boundary at
/// each cut.
pub fn remove_turnarounds(
    rec: &VgrfRecording,
    cfg: &PreprocessConfig,
) -> Result<(VgrfRecording, Vec<RemovedInterval>)> {
    let left = detect_strides(rec, Foot::Left, cfg.swing_threshold_n);
    let right = detect_strides(rec, Foot::Right, cfg.swing_threshold_n);
    let found = left.len().min(right.len());
    if found < MIN_STRIDES {
        return Err(Error::InsufficientGait {
            found,
            required: MIN_STRIDES,
        });
    }
    let period = 1.0 / rec.sample_rate_hz;
    let flagged = flag_outlier_strides(left.iter().chain(right.iter()), cfg.turnaround_mad_k, period);
    if flagged.is_empty() {
        return Ok((rec.clone(), Vec::new()));
    }

    let mut keep = vec![true; rec.len()];
    let mut removed: Vec<RemovedInterval> = flagged
        .iter()
        .map(|s| {
            keep[s.start_index..s.end_index].iter_mut().for_each(|k| *k = false);
            RemovedInterval {
                foot: s.foot,
                start_s: s.stance_start_s,
                end_s: s.stride_end_s,
            }
        })
        .collect();
    removed.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));

    let mut out = rec.clone();
    out.retain_samples(&keep);
    Ok((out, removed))
}

/// Full cleanup: trim, median filter, then (optionally) turnaround removal.
/// The filter runs before stride detection so that swing phases read as
/// near-zero force.
pub fn preprocess(
    rec: &VgrfRecording,
    cfg: &PreprocessConfig,
) -> Result<(VgrfRecording, Vec<RemovedInterval>)> {
    cfg.validate()?;
    let trimmed = trim_edges(rec, cfg.trim_s)?;
    let filtered = median_filter_recording(&trimmed, cfg.median_window);
    if cfg.remove_turnarounds {
        remove_turnarounds(&filtered, cfg)
    } else {
        Ok((filtered, Vec::new()))
    }
}
