//! Peak features from smoothed pressure channels.
//!
//! Every channel is smoothed with a centered moving average, split into
//! above-threshold intervals, and summarised by at most two peaks. Each peak
//! contributes amplitude, time-to-peak, width and skewness, so a trace with
//! ten channels maps to 80 values laid out channel-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::procedure::{SensorTrace, Shape};
use crate::scalar::Real;

pub const FEATURES_PER_PEAK: usize = 4;
pub const FEATURE_NAMES: [&str; FEATURES_PER_PEAK] = ["amplitude", "ttp", "width", "skewness"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct FeatureConfig<T> {
    /// Moving-average window, samples.
    pub window: usize,
    /// Absolute floor of the peak threshold, pressure units.
    pub abs_threshold: T,
    /// Threshold as a fraction of the channel maximum.
    pub rel_threshold: T,
    pub peaks_per_channel: usize,
}

impl<T: Real> Default for FeatureConfig<T> {
    fn default() -> Self {
        Self {
            window: 20,
            abs_threshold: T::lit(0.05),
            rel_threshold: T::lit(0.2),
            peaks_per_channel: 2,
        }
    }
}

impl<T: Real> FeatureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0
            || self.peaks_per_channel == 0
            || !(self.abs_threshold >= T::zero())
            || !(self.rel_threshold >= T::zero() && self.rel_threshold <= T::one())
        {
            return Err(Error::InvalidConfig(format!("invalid feature settings: {self:?}")));
        }
        Ok(())
    }

    pub fn features_per_channel(&self) -> usize {
        self.peaks_per_channel * FEATURES_PER_PEAK
    }
}

/// Centered moving average. Output `i` averages inputs `i - w/2 ..= i + (w-1)/2`
/// that exist, so windows shrink at both ends.
pub fn smooth<T: Real>(series: &[T], window: usize) -> Result<Vec<T>> {
    if window == 0 || series.len() < window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    let back = window / 2;
    let ahead = window - 1 - back;
    let n = series.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + ahead).min(n - 1);
            let sum: T = series[lo..=hi].iter().copied().sum();
            sum / T::from_usize_lossy(hi - lo + 1)
        })
        .collect())
}

/// `max(abs, rel * channel max)`.
pub fn peak_threshold<T: Real>(series: &[T], abs: T, rel: T) -> T {
    let max = series.iter().copied().fold(T::neg_infinity(), T::max);
    if max.is_finite() {
        abs.max(rel * max)
    } else {
        abs
    }
}

/// Sample indices of one above-threshold interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakSpan {
    /// First sample strictly above the threshold.
    pub start: usize,
    /// First later sample strictly below the threshold, or the last sample
    /// if the series ends inside the peak.
    pub end: usize,
    /// First sample holding the interval maximum.
    pub ttp: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub span: PeakSpan,
    pub amplitude: T,
}

/// Segments a series into peaks against `threshold`.
///
/// A peak opens on a sample strictly above the threshold and stays open while
/// samples are at or above it. A peak that would have zero width (a single
/// sample at the very end of the series) is dropped.
pub fn detect_peaks_with<T: Real>(series: &[T], threshold: T) -> Vec<Peak<T>> {
    let n = series.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        if !(series[i] > threshold) {
            i += 1;
            continue;
        }
        let start = i;
        let mut ttp = i;
        while i < n && !(series[i] < threshold) {
            if series[i] > series[ttp] {
                ttp = i;
            }
            i += 1;
        }
        let end = i.min(n - 1);
        if end > start {
            peaks.push(Peak {
                span: PeakSpan { start, end, ttp },
                amplitude: series[ttp],
            });
        }
    }
    peaks
}

pub fn detect_peaks<T: Real>(series: &[T], config: &FeatureConfig<T>) -> Vec<Peak<T>> {
    let t = peak_threshold(series, config.abs_threshold, config.rel_threshold);
    detect_peaks_with(series, t)
}

/// `100 * (midpoint - ttp) / width`; positive when the maximum comes early.
pub fn skewness<T: Real>(start: T, end: T, ttp: T) -> Result<T> {
    let width = end - start;
    if !(width > T::zero()) {
        return Err(Error::ZeroWidth);
    }
    Ok(T::lit(100.0) * ((start + end) * T::half() - ttp) / width)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakFeature<T> {
    pub amplitude: T,
    /// Time of the maximum from the start of the procedure, s.
    pub ttp: T,
    pub width: T,
    pub skewness: T,
}

impl<T: Real> PeakFeature<T> {
    pub fn from_peak(peak: &Peak<T>, timestamps: &[T]) -> Result<Self> {
        let s = timestamps[peak.span.start];
        let e = timestamps[peak.span.end];
        let m = timestamps[peak.span.ttp];
        Ok(Self {
            amplitude: peak.amplitude,
            ttp: m,
            width: e - s,
            skewness: skewness(s, e, m)?,
        })
    }

    pub fn to_array(self) -> [T; FEATURES_PER_PEAK] {
        [self.amplitude, self.ttp, self.width, self.skewness]
    }
}

/// Keeps the `keep` largest peaks (ties go to the earlier one) in time order.
pub fn select_peaks<T: Real>(peaks: &[Peak<T>], keep: usize) -> Vec<Peak<T>> {
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| {
        peaks[b]
            .amplitude
            .partial_cmp(&peaks[a].amplitude)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(peaks[a].span.ttp.cmp(&peaks[b].span.ttp))
    });
    order.truncate(keep);
    let mut kept: Vec<Peak<T>> = order.into_iter().map(|i| peaks[i]).collect();
    kept.sort_by_key(|p| p.span.ttp);
    kept
}

/// Peak features of one raw channel, already selected and ordered.
pub fn channel_features<T: Real>(
    series: &[T],
    timestamps: &[T],
    config: &FeatureConfig<T>,
) -> Result<Vec<PeakFeature<T>>> {
    let smoothed = smooth(series, config.window)?;
    select_peaks(&detect_peaks(&smoothed, config), config.peaks_per_channel)
        .iter()
        .map(|p| PeakFeature::from_peak(p, timestamps))
        .collect()
}

/// Position of one feature in the flattened vector.
pub fn feature_index(channel: usize, slot: usize, feature: usize, peaks_per_channel: usize) -> usize {
    (channel * peaks_per_channel + slot) * FEATURES_PER_PEAK + feature
}

/// Column names such as `s3_p2_width` (channel and peak numbered from 1).
pub fn feature_names(channels: usize, peaks_per_channel: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(channels * peaks_per_channel * FEATURES_PER_PEAK);
    for c in 0..channels {
        for p in 0..peaks_per_channel {
            for f in FEATURE_NAMES {
                names.push(format!("s{}_p{}_{f}", c + 1, p + 1));
            }
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureVector<T> {
    pub label: Shape,
    pub values: Vec<T>,
}

/// Flattens a trace into its feature vector; absent peaks are zero-filled.
pub fn assemble<T: Real>(trace: &SensorTrace<T>, config: &FeatureConfig<T>) -> Result<FeatureVector<T>> {
    config.validate()?;
    let label = trace.meta.label;
    let times = trace.timestamps();
    let channels = trace.channel_count();
    let mut values = vec![T::zero(); channels * config.features_per_channel()];
    for c in 0..channels {
        let feats = channel_features(&trace.channel(c), &times, config)?;
        for (slot, f) in feats.iter().enumerate() {
            for (k, v) in f.to_array().into_iter().enumerate() {
                values[feature_index(c, slot, k, config.peaks_per_channel)] = v;
            }
        }
    }
    Ok(FeatureVector { label, values })
}

/// Labelled N x D feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureMatrix<T> {
    pub names: Vec<String>,
    pub labels: Vec<Shape>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn from_vectors(names: Vec<String>, vectors: Vec<FeatureVector<T>>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.values.len() != names.len()) {
            return Err(Error::DegenerateData(format!(
                "feature vector of length {} for {} columns",
                v.values.len(),
                names.len()
            )));
        }
        let (labels, rows) = vectors.into_iter().map(|v| (v.label, v.values)).unzip();
        Ok(Self { names, labels, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn class_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|s| s.index()).collect()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
    }
}

/// Feature matrix for a batch of traces, processed in parallel, input order kept.
pub fn extract_all<T: Real>(traces: &[SensorTrace<T>], config: &FeatureConfig<T>) -> Result<FeatureMatrix<T>> {
    use rayon::prelude::*;
    let channels = traces.first().map_or(0, |t| t.channel_count());
    if let Some(t) = traces.iter().find(|t| t.channel_count() != channels) {
        return Err(Error::DegenerateData(format!(
            "trace {} has {} channels, expected {channels}",
            t.meta.seed,
            t.channel_count()
        )));
    }
    let vectors = traces
        .par_iter()
        .map(|t| assemble(t, config))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_vectors(feature_names(channels, config.peaks_per_channel), vectors)
}
