//! Trace analysis: force-wave extrema, response times, strategy
//! classification, and the aggregate statistics used to compare
//! strategies across a trial cohort.

pub mod stats;

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::contact::Wrench;
use crate::control::StrategyKind;
use crate::pose::TiltPair;

pub use stats::{paired_ttest, rm_anova, AnovaResult, StatsError, TTestResult};

/// Errors from trace analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisError {
    /// Extrema detection needs at least three samples.
    TooFewSamples,
    /// The trace does not cover enough of an oscillation to classify.
    TraceTooShort,
    /// Oscillation is present on both axes but fits no known signature.
    AmbiguousStrategy,
    EmptyCollection,
    /// Trace timestamps must be strictly increasing.
    NonMonotonicTime,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::TooFewSamples => write!(f, "need at least 3 samples"),
            AnalysisError::TraceTooShort => write!(f, "trace shorter than one oscillation period"),
            AnalysisError::AmbiguousStrategy => write!(f, "oscillation fits no known strategy signature"),
            AnalysisError::EmptyCollection => write!(f, "empty trace collection"),
            AnalysisError::NonMonotonicTime => write!(f, "trace timestamps must strictly increase"),
        }
    }
}

/// Which task phase a trace covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TracePhase {
    PlugIn,
    PlugOut,
    /// Whole trial: plug-in up to the depth apex, plug-out after it.
    Full,
}

/// Trace metadata carried alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceMeta {
    /// Generating strategy, when known.
    pub strategy: Option<StrategyKind>,
    /// Seed of the trial that produced the trace.
    pub seed: u64,
    pub phase: TracePhase,
}

impl Default for TraceMeta {
    fn default() -> Self {
        Self {
            strategy: None,
            seed: 0,
            phase: TracePhase::Full,
        }
    }
}

/// One recorded sensor sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    /// Time, s.
    pub t: f64,
    /// Sensed wrench.
    pub wrench: Wrench,
    /// Unsigned tilt magnitudes, degrees.
    pub tilt: TiltPair,
    /// Insertion depth, mm.
    pub depth: f64,
}

/// A recorded trial signal: samples at the sensor rate plus metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn new(samples: Vec<TraceSample>, meta: TraceMeta) -> Self {
        Self { samples, meta }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for pair in self.samples.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(AnalysisError::NonMonotonicTime);
            }
        }
        Ok(())
    }

    /// Extracts a `(t, value)` series for one channel.
    pub fn series(&self, f: impl Fn(&TraceSample) -> f64) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, f(s))).collect()
    }

    /// Splits the samples into the plug-in and plug-out portions. For
    /// full-trial traces the boundary is the depth apex; single-phase
    /// traces land entirely on their own side.
    pub fn phase_segments(&self) -> (&[TraceSample], &[TraceSample]) {
        match self.meta.phase {
            TracePhase::PlugIn => (&self.samples, &[]),
            TracePhase::PlugOut => (&[], &self.samples),
            TracePhase::Full => {
                let apex = self
                    .samples
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.depth.partial_cmp(&b.1.depth).expect("finite depths"))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                (&self.samples[..=apex.min(self.samples.len() - 1)], &self.samples[apex..])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// A detected turning point of a scalar series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub t: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Finds the alternating maxima/minima of a time series, ignoring
/// reversals smaller than `min_prominence`.
///
/// A turning point is confirmed only once the series has moved away
/// from it by at least the prominence floor, so noise below the floor
/// cannot split or invent extrema. Endpoints are not reported: the
/// leading and trailing runs never see a confirmed reversal on both
/// sides. A constant series yields no extrema.
pub fn find_extrema(
    series: &[(f64, f64)],
    min_prominence: f64,
) -> Result<Vec<Extremum>, AnalysisError> {
    if series.len() < 3 {
        return Err(AnalysisError::TooFewSamples);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Dir {
        Unknown,
        Rising,
        Falling,
    }
    let mut out = Vec::new();
    let mut dir = Dir::Unknown;
    let mut cand_max = series[0];
    let mut cand_min = series[0];
    for &(t, v) in &series[1..] {
        match dir {
            Dir::Unknown => {
                if v > cand_max.1 {
                    cand_max = (t, v);
                }
                if v < cand_min.1 {
                    cand_min = (t, v);
                }
                // The leading extremum is not a reversal; just lock the
                // direction once the series has moved by the floor.
                if v >= cand_min.1 + min_prominence && v >= cand_max.1 {
                    dir = Dir::Rising;
                    cand_max = (t, v);
                } else if v <= cand_max.1 - min_prominence && v <= cand_min.1 {
                    dir = Dir::Falling;
                    cand_min = (t, v);
                }
            }
            Dir::Rising => {
                if v > cand_max.1 {
                    cand_max = (t, v);
                } else if v <= cand_max.1 - min_prominence {
                    out.push(Extremum {
                        t: cand_max.0,
                        value: cand_max.1,
                        kind: ExtremumKind::Maximum,
                    });
                    dir = Dir::Falling;
                    cand_min = (t, v);
                }
            }
            Dir::Falling => {
                if v < cand_min.1 {
                    cand_min = (t, v);
                } else if v >= cand_min.1 + min_prominence {
                    out.push(Extremum {
                        t: cand_min.0,
                        value: cand_min.1,
                        kind: ExtremumKind::Minimum,
                    });
                    dir = Dir::Rising;
                    cand_max = (t, v);
                }
            }
        }
    }
    Ok(out)
}

/// Prominence floor used throughout: 10% of the series peak-to-peak.
pub fn default_prominence(series: &[(f64, f64)]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(_, v) in series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi > lo {
        0.1 * (hi - lo)
    } else {
        0.0
    }
}

/// A scalar measurement that may come from degenerate input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaMeasure {
    pub value: f64,
    /// Set when fewer than two extrema were available.
    pub degenerate: bool,
}

/// Largest difference between consecutive extrema values (the
/// peak-to-peak wave measure). Fewer than two extrema yield zero with
/// the degenerate flag set.
pub fn max_consecutive_delta(extrema: &[Extremum]) -> DeltaMeasure {
    if extrema.len() < 2 {
        return DeltaMeasure {
            value: 0.0,
            degenerate: true,
        };
    }
    let value = extrema
        .windows(2)
        .map(|w| (w[0].value - w[1].value).abs())
        .fold(0.0f64, f64::max);
    DeltaMeasure {
        value,
        degenerate: false,
    }
}

/// Spacing between consecutive extrema timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResponseTime {
    /// Mean spacing, s.
    pub mean: f64,
    /// Largest spacing, s.
    pub max: f64,
    pub degenerate: bool,
}

/// Time between consecutive extrema; both the mean and the maximum
/// spacing are reported.
pub fn response_time(extrema: &[Extremum]) -> ResponseTime {
    if extrema.len() < 2 {
        return ResponseTime {
            mean: 0.0,
            max: 0.0,
            degenerate: true,
        };
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for w in extrema.windows(2) {
        let gap = w[1].t - w[0].t;
        sum += gap;
        max = max.max(gap);
    }
    ResponseTime {
        mean: sum / (extrema.len() - 1) as f64,
        max,
        degenerate: false,
    }
}

/// Tunables for strategy classification.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ClassifierConfig {
    /// One lateral channel dominates when its band energy exceeds the
    /// other's by this ratio.
    pub dominance_ratio: f64,
    /// Half-width of the analysis band around the dominant frequency,
    /// as a fraction of that frequency.
    pub band_fraction: f64,
    /// Band variance below this floor counts as no oscillation, N^2.
    pub energy_floor: f64,
    /// Tolerance around the 90 degree spiral phase offset, degrees.
    pub phase_tolerance: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            dominance_ratio: 4.0,
            band_fraction: 0.3,
            energy_floor: 1.0,
            phase_tolerance: 35.0,
        }
    }
}

/// Classifies which strategy produced a trace from its lateral-force
/// signature: oscillation mainly in `F_y` is left-right, mainly in
/// `F_x` is up-down, both with a quarter-period offset is the spiral,
/// and no oscillation at all is straight-back.
///
/// The dominant oscillation period comes from the autocorrelation of
/// the de-meaned lateral channels; per-channel oscillation strength is
/// the spectral variance inside a band around that frequency.
pub fn classify_strategy(
    trace: &Trace,
    config: &ClassifierConfig,
) -> Result<StrategyKind, AnalysisError> {
    let n = trace.len();
    if n < 8 {
        return Err(AnalysisError::TraceTooShort);
    }
    let fx = demeaned(trace, |s| s.wrench.fx);
    let fy = demeaned(trace, |s| s.wrench.fy);

    let period = match dominant_period(&fx, &fy) {
        Some(p) => p,
        // No periodicity anywhere in the lateral channels.
        None => return Ok(StrategyKind::StraightBack),
    };
    if period * 2 > n {
        return Err(AnalysisError::TraceTooShort);
    }

    let band = band_of(n, period, config.band_fraction);
    let (energy_x, phase_x) = band_energy_and_phase(&fx, &band, n, period);
    let (energy_y, phase_y) = band_energy_and_phase(&fy, &band, n, period);

    let sig_x = energy_x >= config.energy_floor;
    let sig_y = energy_y >= config.energy_floor;
    match (sig_x, sig_y) {
        (false, false) => Ok(StrategyKind::StraightBack),
        (false, true) => Ok(StrategyKind::LeftRight),
        (true, false) => Ok(StrategyKind::UpDown),
        (true, true) => {
            if energy_y >= config.dominance_ratio * energy_x {
                Ok(StrategyKind::LeftRight)
            } else if energy_x >= config.dominance_ratio * energy_y {
                Ok(StrategyKind::UpDown)
            } else {
                // Comparable energy on both axes: the spiral shows a
                // quarter-period phase offset between them.
                let mut diff = (phase_y - phase_x).to_degrees().abs() % 360.0;
                if diff > 180.0 {
                    diff = 360.0 - diff;
                }
                if (diff - 90.0).abs() <= config.phase_tolerance {
                    Ok(StrategyKind::Spiral)
                } else {
                    Err(AnalysisError::AmbiguousStrategy)
                }
            }
        }
    }
}

fn demeaned(trace: &Trace, f: impl Fn(&TraceSample) -> f64) -> Vec<f64> {
    let n = trace.len() as f64;
    let mean = trace.samples.iter().map(&f).sum::<f64>() / n;
    trace.samples.iter().map(|s| f(s) - mean).collect()
}

/// Dominant oscillation period in samples, from the summed
/// autocovariance of the two channels: the first zero crossing
/// separates the self-similarity peak at zero lag from the genuine
/// oscillation peak that follows.
fn dominant_period(x: &[f64], y: &[f64]) -> Option<usize> {
    let n = x.len();
    let acov = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += x[i] * x[i + lag] + y[i] * y[i + lag];
        }
        s
    };
    let c0 = acov(0);
    if c0 <= 0.0 {
        return None;
    }
    let max_lag = n / 2;
    let mut crossed = None;
    for lag in 1..=max_lag {
        if acov(lag) < 0.0 {
            crossed = Some(lag);
            break;
        }
    }
    let start = crossed?;
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in start..=max_lag {
        let c = acov(lag);
        if c > best.1 {
            best = (lag, c);
        }
    }
    // Demand a real recurrence, not noise ripple.
    if best.1 < 0.05 * c0 {
        return None;
    }
    Some(best.0)
}

/// Frequency-bin range covering `band_fraction` around the oscillation
/// frequency for an `n`-sample series with the given period.
fn band_of(n: usize, period: usize, band_fraction: f64) -> (usize, usize) {
    let k0 = n as f64 / period as f64;
    let lo = (k0 * (1.0 - band_fraction)).floor().max(1.0) as usize;
    let hi = ((k0 * (1.0 + band_fraction)).ceil() as usize).min(n / 2);
    (lo, hi.max(lo))
}

/// Band variance (N^2) plus the signal phase at the oscillation
/// frequency, via direct Fourier sums over the band bins.
fn band_energy_and_phase(x: &[f64], band: &(usize, usize), n: usize, period: usize) -> (f64, f64) {
    let mut energy = 0.0;
    let mut phase = 0.0;
    let k_phase = (n as f64 / period as f64).round().max(1.0) as usize;
    for k in band.0..=band.1 {
        let (re, im) = fourier_bin(x, k);
        energy += 2.0 * (re * re + im * im) / (n as f64 * n as f64);
        if k == k_phase {
            phase = im.atan2(re);
        }
    }
    (energy, phase)
}

fn fourier_bin(x: &[f64], k: usize) -> (f64, f64) {
    let n = x.len() as f64;
    let w = -core::f64::consts::TAU * k as f64 / n;
    let mut re = 0.0;
    let mut im = 0.0;
    for (j, &v) in x.iter().enumerate() {
        let (s, c) = (w * j as f64).sin_cos();
        re += v * c;
        im += v * s;
    }
    (re, im)
}

/// Per-trace wave statistics: peak-to-peak deltas of the tilt angles
/// and lateral forces, the axial-force extremes per phase, and the
/// response time between force extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaStats {
    /// Peak-to-peak x tilt wave, degrees.
    pub delta_theta_x: f64,
    /// Peak-to-peak y tilt wave, degrees.
    pub delta_theta_y: f64,
    /// Peak-to-peak `F_x` wave, N.
    pub delta_f_x: f64,
    /// Peak-to-peak `F_y` wave, N.
    pub delta_f_y: f64,
    /// Most negative axial force during plug-in, N.
    pub f_z_plugin: f64,
    /// Most positive axial force during plug-out, N.
    pub f_z_plugout: f64,
    /// Mean spacing between consecutive force extrema, s.
    pub t_response_mean: f64,
    /// Largest spacing between consecutive force extrema, s.
    pub t_response_max: f64,
    /// Set when any ingredient had fewer than two extrema.
    pub degenerate: bool,
}

/// Computes the per-trace statistics. Wave deltas use the 10%
/// peak-to-peak prominence floor; the response time is measured on the
/// lateral force channel with the larger swing.
pub fn delta_stats(trace: &Trace) -> Result<DeltaStats, AnalysisError> {
    if trace.len() < 3 {
        return Err(AnalysisError::TooFewSamples);
    }
    let (plugin, plugout) = trace.phase_segments();

    let theta_x = trace.series(|s| s.tilt.theta_x);
    let theta_y = trace.series(|s| s.tilt.theta_y);
    let fx = trace.series(|s| s.wrench.fx);
    let fy = trace.series(|s| s.wrench.fy);

    let wave = |series: &[(f64, f64)]| -> Result<(DeltaMeasure, Vec<Extremum>), AnalysisError> {
        let extrema = find_extrema(series, default_prominence(series))?;
        Ok((max_consecutive_delta(&extrema), extrema))
    };

    let (d_theta_x, _) = wave(&theta_x)?;
    let (d_theta_y, _) = wave(&theta_y)?;
    let (d_f_x, ex_fx) = wave(&fx)?;
    let (d_f_y, ex_fy) = wave(&fy)?;

    let dominant = if d_f_y.value >= d_f_x.value { &ex_fy } else { &ex_fx };
    let t_resp = response_time(dominant);

    let f_z_plugin = plugin
        .iter()
        .map(|s| s.wrench.fz)
        .fold(f64::INFINITY, f64::min);
    let f_z_plugout = plugout
        .iter()
        .map(|s| s.wrench.fz)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(DeltaStats {
        delta_theta_x: d_theta_x.value,
        delta_theta_y: d_theta_y.value,
        delta_f_x: d_f_x.value,
        delta_f_y: d_f_y.value,
        f_z_plugin: if plugin.is_empty() { 0.0 } else { f_z_plugin },
        f_z_plugout: if plugout.is_empty() { 0.0 } else { f_z_plugout },
        t_response_mean: t_resp.mean,
        t_response_max: t_resp.max,
        degenerate: d_theta_x.degenerate
            || d_theta_y.degenerate
            || d_f_x.degenerate
            || d_f_y.degenerate
            || t_resp.degenerate,
    })
}

/// Mean, extreme, and sample standard deviation of one quantity over a
/// cohort. The extreme is the largest-magnitude value with its sign
/// kept, so axial plug-in forces report their most negative excursion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantitySummary {
    pub mean: f64,
    pub extreme: f64,
    pub std: f64,
}

fn summarize_quantity(values: &[f64]) -> QuantitySummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let extreme = values
        .iter()
        .copied()
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    QuantitySummary { mean, extreme, std }
}

/// Cohort summary of the per-trace statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SummaryStats {
    pub delta_theta_x: QuantitySummary,
    pub delta_theta_y: QuantitySummary,
    pub delta_f_x: QuantitySummary,
    pub delta_f_y: QuantitySummary,
    pub f_z_plugin: QuantitySummary,
    pub f_z_plugout: QuantitySummary,
    pub t_response: QuantitySummary,
    pub n: usize,
}

/// Aggregates per-trace statistics across a cohort.
pub fn summarize(cohort: &[DeltaStats]) -> Result<SummaryStats, AnalysisError> {
    if cohort.is_empty() {
        return Err(AnalysisError::EmptyCollection);
    }
    let collect = |f: fn(&DeltaStats) -> f64| -> Vec<f64> { cohort.iter().map(f).collect() };
    Ok(SummaryStats {
        delta_theta_x: summarize_quantity(&collect(|s| s.delta_theta_x)),
        delta_theta_y: summarize_quantity(&collect(|s| s.delta_theta_y)),
        delta_f_x: summarize_quantity(&collect(|s| s.delta_f_x)),
        delta_f_y: summarize_quantity(&collect(|s| s.delta_f_y)),
        f_z_plugin: summarize_quantity(&collect(|s| s.f_z_plugin)),
        f_z_plugout: summarize_quantity(&collect(|s| s.f_z_plugout)),
        t_response: summarize_quantity(&collect(|s| s.t_response_mean)),
        n: cohort.len(),
    })
}

/// Mean of the per-trace minimum and maximum of each force channel,
/// over one strategy group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForceRangeRow {
    pub mean_min_fx: f64,
    pub mean_min_fy: f64,
    pub mean_min_fz: f64,
    pub mean_max_fx: f64,
    pub mean_max_fy: f64,
    pub mean_max_fz: f64,
    pub n: usize,
}

/// Averages the per-trace force extremes over a group of traces.
pub fn force_ranges(traces: &[Trace]) -> Result<ForceRangeRow, AnalysisError> {
    if traces.is_empty() || traces.iter().any(|t| t.is_empty()) {
        return Err(AnalysisError::EmptyCollection);
    }
    let mut row = ForceRangeRow {
        n: traces.len(),
        ..ForceRangeRow::default()
    };
    for trace in traces {
        let extreme = |f: fn(&TraceSample) -> f64| -> (f64, f64) {
            trace.samples.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), s| (lo.min(f(s)), hi.max(f(s))),
            )
        };
        let (min_fx, max_fx) = extreme(|s| s.wrench.fx);
        let (min_fy, max_fy) = extreme(|s| s.wrench.fy);
        let (min_fz, max_fz) = extreme(|s| s.wrench.fz);
        row.mean_min_fx += min_fx;
        row.mean_min_fy += min_fy;
        row.mean_min_fz += min_fz;
        row.mean_max_fx += max_fx;
        row.mean_max_fy += max_fy;
        row.mean_max_fz += max_fz;
    }
    let n = traces.len() as f64;
    row.mean_min_fx /= n;
    row.mean_min_fy /= n;
    row.mean_min_fz /= n;
    row.mean_max_fx /= n;
    row.mean_max_fy /= n;
    row.mean_max_fz /= n;
    Ok(row)
}
