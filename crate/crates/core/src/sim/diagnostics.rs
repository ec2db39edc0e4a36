//! Empirical stability diagnostics computed from finished runs.
//!
//! These are heuristics: the trend verdict and drift estimate describe the
//! observed trajectory, not the stability of the underlying chain.

use serde::Serialize;

use super::{QueueState, SimError};

pub const MIN_TREND_SAMPLES: usize = 10;
/// Per-slot slope above which a series may be called growing.
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 1e-4;
/// Qualifying slots required by [`drift_probe`].
pub const MIN_DRIFT_SAMPLES: usize = 1000;
const DRIFT_BATCHES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendVerdict {
    StableLooking,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trend {
    pub verdict: TrendVerdict,
    /// Least-squares slope of `S` per slot over the last half of the samples.
    pub slope: f64,
    pub first_decile_mean: f64,
    pub last_decile_mean: f64,
}

pub fn detect_trend(samples: &[(u64, f64)]) -> Result<Trend, SimError> {
    detect_trend_with(samples, DEFAULT_SLOPE_THRESHOLD)
}

/// Growing iff the last-half slope exceeds `min_slope` and the mean of the
/// last tenth of samples is more than twice the mean of the first tenth.
pub fn detect_trend_with(samples: &[(u64, f64)], min_slope: f64) -> Result<Trend, SimError> {
    let n = samples.len();
    if n < MIN_TREND_SAMPLES {
        return Err(SimError::TooFewSamples {
            slots: samples.last().map_or(0, |s| s.0),
            sample_every: 0,
            samples: n as u64,
        });
    }
    let slope = least_squares_slope(&samples[n / 2..]);
    let decile = n / 10;
    let mean = |xs: &[(u64, f64)]| xs.iter().map(|s| s.1).sum::<f64>() / xs.len() as f64;
    let first = mean(&samples[..decile]);
    let last = mean(&samples[n - decile..]);
    let verdict = if slope > min_slope && last > 2.0 * first {
        TrendVerdict::Growing
    } else {
        TrendVerdict::StableLooking
    };
    Ok(Trend {
        verdict,
        slope,
        first_decile_mean: first,
        last_decile_mean: last,
    })
}

fn least_squares_slope(points: &[(u64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `max_i |lambda_i - departures_i / n|`.
pub fn service_frequency_check(state: &QueueState, rates: &[f64]) -> f64 {
    if state.slot == 0 {
        return 0.0;
    }
    let n = state.slot as f64;
    state
        .cum_departures
        .iter()
        .zip(rates)
        .map(|(&d, &l)| (l - d as f64 / n).abs())
        .fold(0.0, f64::max)
}

/// `(V(Q(n)), V(Q(n+1)) - V(Q(n)))` for every slot, with `V(Q) = sum Q_i^2`.
#[derive(Debug, Clone, Default)]
pub struct DriftLog {
    entries: Vec<(u64, i64)>,
}

impl DriftLog {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            entries: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, before: u64, after: u64) {
        self.entries.push((before, after as i64 - before as i64));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, i64)] {
        &self.entries
    }
}

/// `p`-quantile of `||Q(n)||` over the logged slots (nearest rank).
pub fn percentile_norm(log: &DriftLog, p: f64) -> f64 {
    if log.is_empty() {
        return 0.0;
    }
    let mut v: Vec<u64> = log.entries.iter().map(|e| e.0).collect();
    v.sort_unstable();
    let rank = ((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1);
    (v[rank] as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftProbe {
    Estimate {
        mean: f64,
        /// Batch-means standard error (consecutive slots are correlated).
        std_err: f64,
        count: usize,
    },
    InsufficientData {
        count: usize,
    },
}

impl DriftProbe {
    pub fn mean(&self) -> Option<f64> {
        match self {
            DriftProbe::Estimate { mean, .. } => Some(*mean),
            DriftProbe::InsufficientData { .. } => None,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            DriftProbe::Estimate { count, .. } | DriftProbe::InsufficientData { count } => *count,
        }
    }
}

/// Mean quadratic drift over slots with `||Q(n)|| >= threshold`.
pub fn drift_probe(log: &DriftLog, threshold: f64) -> DriftProbe {
    let min_v = threshold * threshold;
    let drifts: Vec<f64> = log
        .entries
        .iter()
        .filter(|e| e.0 as f64 >= min_v)
        .map(|e| e.1 as f64)
        .collect();
    let count = drifts.len();
    if count < MIN_DRIFT_SAMPLES {
        return DriftProbe::InsufficientData { count };
    }
    let mean = drifts.iter().sum::<f64>() / count as f64;
    let size = count / DRIFT_BATCHES;
    let batch_means: Vec<f64> = drifts
        .chunks(size)
        .filter(|c| c.len() == size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let b = batch_means.len() as f64;
    let bm = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (b - 1.0);
    DriftProbe::Estimate {
        mean,
        std_err: (var / b).sqrt(),
        count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(u64) -> f64) -> Vec<(u64, f64)> {
        (1..=1000).map(|k| (k * 100, f(k * 100))).collect()
    }

    #[test]
    fn linear_growth_is_growing() {
        // Deterministic zero-mean wiggle standing in for noise.
        let s = series(|n| 0.0667 * n as f64 + 3.0 * ((n as f64) * 0.37).sin());
        let t = detect_trend(&s).unwrap();
        assert_eq!(t.verdict, TrendVerdict::Growing);
        assert!((t.slope - 0.0667).abs() < 1e-4);
    }

    #[test]
    fn bounded_noise_is_stable() {
        let s = series(|n| 3.0 + ((n as f64) * 1.7).sin());
        let t = detect_trend(&s).unwrap();
        assert_eq!(t.verdict, TrendVerdict::StableLooking);
        assert!(t.slope.abs() < 1e-4);
    }

    #[test]
    fn zero_series() {
        let t = detect_trend(&series(|_| 0.0)).unwrap();
        assert_eq!(t.verdict, TrendVerdict::StableLooking);
        assert_eq!(t.slope, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let s: Vec<(u64, f64)> = (0..9).map(|k| (k, 1.0)).collect();
        assert!(detect_trend(&s).is_err());
    }

    #[test]
    fn drift_probe_edge_cases() {
        let mut log = DriftLog::default();
        for v in 0..500u64 {
            log.push(v, v + 1);
        }
        assert_eq!(drift_probe(&log, 1e9), DriftProbe::InsufficientData { count: 0 });
        assert_eq!(drift_probe(&log, 0.0), DriftProbe::InsufficientData { count: 500 });
        for v in 0..2000u64 {
            log.push(v, v + 3);
        }
        match drift_probe(&log, 0.0) {
            DriftProbe::Estimate { mean, count, .. } => {
                assert_eq!(count, 2500);
                assert!((mean - (500.0 + 6000.0) / 2500.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn percentile() {
        let mut log = DriftLog::default();
        for v in [0u64, 1, 4, 9, 16] {
            log.push(v, v);
        }
        assert_eq!(percentile_norm(&log, 0.5), 2.0);
        assert_eq!(percentile_norm(&log, 1.0), 4.0);
    }

    #[test]
    fn frequency_residual() {
        let mut state = QueueState::zeros(2);
        assert_eq!(service_frequency_check(&state, &[0.0, 0.0]), 0.0);
        state.slot = 10;
        state.cum_departures = vec![3, 1];
        assert!((service_frequency_check(&state, &[0.3, 0.2]) - 0.1).abs() < 1e-12);
    }
}
