//! Spreading statistics: configuration-averaged MSD series and everything
//! derived from them.
//!
//! The mean square displacement of a state is `Σ_sites (x² + y²)·prob` (squared
//! Euclidean distance from the origin; an axis-resolved variant would simply
//! split the sum). From a configuration-averaged series `msd(t)` we derive
//!
//! * the running diffusion exponent `α(t) = d ln msd / d ln t`, estimated as the
//!   slope of an unweighted least-squares line through `(ln t, ln msd)` over a
//!   centered window of fixed width in log time (raw two-point differences are
//!   noise-dominated);
//! * the running diffusion constant `D_α(t) = msd(t)/t^{α(t)}`;
//! * asymptotic fits `alpha_inf` (constant fit to α over a late-time window) and
//!   `d_inf` (geometric mean of `msd/t^{alpha_inf}`);
//! * the decay time: the first time after the global maximum of α(t) at which
//!   `α ≤ 1 + ε`, or unbounded if that never happens within the series;
//! * a qualitative spreading verdict (diffusive / subdiffusive / localizing).
//!
//! Time sampling is dense for `t ≤ 64` and ~40 points per decade beyond, which
//! resolves the log-derivative while bounding memory.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// When MSD samples are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSchedule {
    /// Record every step up to this time.
    pub dense_until: u64,
    /// Approximate log-spaced samples per decade afterwards.
    pub per_decade: u32,
}

impl Default for SampleSchedule {
    fn default() -> SampleSchedule {
        SampleSchedule {
            dense_until: 64,
            per_decade: 40,
        }
    }
}

impl SampleSchedule {
    /// Strictly increasing sample times from 0 to `t_max` inclusive.
    pub fn times(&self, t_max: u64) -> Vec<u64> {
        let mut out: Vec<u64> = (0..=t_max.min(self.dense_until)).collect();
        if t_max > self.dense_until {
            let base = self.dense_until.max(1) as f64;
            let mut k = 1u32;
            loop {
                let t = (base * 10f64.powf(k as f64 / self.per_decade as f64)).round() as u64;
                if t > t_max {
                    break;
                }
                if t > *out.last().unwrap() {
                    out.push(t);
                }
                k += 1;
            }
            if *out.last().unwrap() != t_max {
                out.push(t_max);
            }
        }
        out
    }
}

/// Convenience: default-schedule sample times up to `t_max`.
pub fn sample_times(t_max: u64) -> Vec<u64> {
    SampleSchedule::default().times(t_max)
}

/// Configuration-averaged mean-square-displacement series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsdSeries {
    /// Strictly increasing sample times.
    pub times: Vec<u64>,
    /// Mean MSD per sample time.
    pub msd: Vec<f64>,
    /// Standard error over configurations (0 for a single configuration).
    pub stderr: Vec<f64>,
    pub n_configs: usize,
    /// Per-configuration MSD rows (configuration-major), kept when error
    /// estimation or exact merging is needed.
    pub per_config: Option<Vec<Vec<f64>>>,
}

impl MsdSeries {
    /// Mean and standard error across configuration rows, reducing rows in
    /// index (ascending seed) order so results are scheduling-independent.
    pub fn from_rows(times: Vec<u64>, rows: Vec<Vec<f64>>) -> MsdSeries {
        let n = rows.len();
        assert!(n > 0, "at least one configuration required");
        let len = times.len();
        let mut mean = vec![0.0f64; len];
        for row in &rows {
            assert_eq!(row.len(), len);
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut stderr = vec![0.0f64; len];
        if n > 1 {
            for (i, s) in stderr.iter_mut().enumerate() {
                let mut ss = 0.0;
                for row in &rows {
                    let d = row[i] - mean[i];
                    ss += d * d;
                }
                *s = (ss / ((n - 1) as f64 * n as f64)).sqrt();
            }
        }
        MsdSeries {
            times,
            msd: mean,
            stderr,
            n_configs: n,
            per_config: Some(rows),
        }
    }

    /// Merge two ensembles over the same time grid. Equals a single ensemble
    /// over the concatenated seed list bit-for-bit (rows are re-reduced in
    /// order), which is the averaging-linearity contract.
    pub fn merge(&self, other: &MsdSeries) -> Result<MsdSeries> {
        if self.times != other.times {
            return Err(Error::invalid("cannot merge series on different time grids"));
        }
        let (a, b) = match (&self.per_config, &other.per_config) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::invalid(
                    "merging requires per-configuration rows on both sides",
                ))
            }
        };
        let rows: Vec<Vec<f64>> = a.iter().chain(b.iter()).cloned().collect();
        Ok(MsdSeries::from_rows(self.times.clone(), rows))
    }
}

/// MSD series with derived running exponent and diffusion constant.
#[derive(Debug, Clone)]
pub struct DiffusionSeries {
    pub base: MsdSeries,
    /// α(t) aligned with `base.times`; `None` where the window does not fit
    /// (or the MSD is nonpositive inside it).
    pub alpha: Vec<Option<f64>>,
    /// `D_α(t) = msd(t) / t^{α(t)}`, aligned like `alpha`.
    pub d_alpha: Vec<Option<f64>>,
    /// Window width in decades used for the running fit.
    pub window: f64,
}

/// Slope and intercept of the least-squares line through `(x, y)` pairs.
fn ls_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Running exponent α(t) from a windowed log-log regression.
///
/// At each sample time whose centered window (width `window` decades) fits
/// inside the sampled range, α is the slope of the least-squares line through
/// `(ln t, ln msd)` over the window's samples.
pub fn alpha_series(series: &MsdSeries, window: f64) -> Result<DiffusionSeries> {
    if series.times.len() < 10 {
        return Err(Error::invalid("need at least 10 time points"));
    }
    if window <= 0.0 {
        return Err(Error::invalid("window must be positive"));
    }
    let log_t: Vec<Option<f64>> = series
        .times
        .iter()
        .map(|&t| (t > 0).then(|| (t as f64).log10()))
        .collect();
    let lo = log_t.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = log_t.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo < window {
        return Err(Error::invalid(format!(
            "window of {window} decades does not fit in sampled range of {:.3} decades",
            hi - lo
        )));
    }
    let half = window / 2.0;
    let n = series.times.len();
    let mut alpha = vec![None; n];
    let mut d_alpha = vec![None; n];
    for i in 0..n {
        let center = match log_t[i] {
            Some(l) => l,
            None => continue,
        };
        if center - half < lo - 1e-12 || center + half > hi + 1e-12 {
            continue;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for j in 0..n {
            if let Some(l) = log_t[j] {
                if (l - center).abs() <= half + 1e-12 && series.msd[j] > 0.0 {
                    xs.push((series.times[j] as f64).ln());
                    ys.push(series.msd[j].ln());
                }
            }
        }
        if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
            continue;
        }
        let (slope, _) = ls_line(&xs, &ys);
        alpha[i] = Some(slope);
        d_alpha[i] = Some(series.msd[i] / (series.times[i] as f64).powf(slope));
    }
    Ok(DiffusionSeries {
        base: series.clone(),
        alpha,
        d_alpha,
        window,
    })
}

/// Asymptotic (late-time) fit of the running exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticFit {
    /// Constant least-squares fit to α(t) over the window (i.e. its mean).
    pub alpha_inf: f64,
    /// Geometric mean of `msd(t)/t^{alpha_inf}` over the window.
    pub d_inf: f64,
    pub t_min: u64,
    pub t_max: u64,
    /// RMS deviation of α(t) from `alpha_inf` over the window.
    pub residual: f64,
}

/// Fit `alpha_inf` and `d_inf` on the sample times within `[t_min, t_max]`.
pub fn fit_asymptotics(diff: &DiffusionSeries, t_min: u64, t_max: u64) -> Result<AsymptoticFit> {
    if t_min >= t_max {
        return Err(Error::invalid("t_min must be below t_max"));
    }
    let mut alphas = Vec::new();
    let mut log_d = Vec::new();
    for (i, &t) in diff.base.times.iter().enumerate() {
        if t < t_min || t > t_max {
            continue;
        }
        if let Some(a) = diff.alpha[i] {
            alphas.push(a);
        }
    }
    if alphas.len() < 5 {
        return Err(Error::invalid(format!(
            "only {} α samples in [{t_min}, {t_max}]; need at least 5",
            alphas.len()
        )));
    }
    let alpha_inf = alphas.iter().sum::<f64>() / alphas.len() as f64;
    for (i, &t) in diff.base.times.iter().enumerate() {
        if t < t_min || t > t_max || diff.alpha[i].is_none() {
            continue;
        }
        if diff.base.msd[i] > 0.0 {
            log_d.push(diff.base.msd[i].ln() - alpha_inf * (t as f64).ln());
        }
    }
    let d_inf = (log_d.iter().sum::<f64>() / log_d.len() as f64).exp();
    let residual = (alphas
        .iter()
        .map(|a| (a - alpha_inf) * (a - alpha_inf))
        .sum::<f64>()
        / alphas.len() as f64)
        .sqrt();
    Ok(AsymptoticFit {
        alpha_inf,
        d_inf,
        t_min,
        t_max,
        residual,
    })
}

/// Decay time of superdiffusive transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayTime {
    /// First sample time after the global maximum of α(t) with `α ≤ 1 + ε`.
    Finite(u64),
    /// α never decays to `1 + ε` within the series.
    Unbounded,
    /// Series too short to locate a maximum.
    Indeterminate,
}

/// Locate the decay time with threshold `1 + epsilon` (default ε = 0.05).
pub fn decay_time(diff: &DiffusionSeries, epsilon: f64) -> DecayTime {
    let samples: Vec<(u64, f64)> = diff
        .base
        .times
        .iter()
        .zip(&diff.alpha)
        .filter_map(|(&t, a)| a.map(|a| (t, a)))
        .collect();
    if samples.len() < 3 {
        return DecayTime::Indeterminate;
    }
    let (imax, _) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(ib, ab), (i, &(_, a))| {
            if a > ab {
                (i, a)
            } else {
                (ib, ab)
            }
        });
    for &(t, a) in &samples[imax + 1..] {
        if a <= 1.0 + epsilon {
            return DecayTime::Finite(t);
        }
    }
    DecayTime::Unbounded
}

/// Qualitative spreading verdict derived from the late-time behaviour of α(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Diffusive,
    Subdiffusive,
    LocalizingTrend,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Diffusive => "diffusive",
            Verdict::Subdiffusive => "subdiffusive",
            Verdict::LocalizingTrend => "localizing_trend",
            Verdict::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Half-width of the diffusive band around α = 1.
const VERDICT_DELTA: f64 = 0.04;
/// RMS(α) residual above which no verdict is attempted.
const VERDICT_RESIDUAL_CAP: f64 = 0.2;

/// Classify the late-time spreading over the last decade of sampled α(t):
/// diffusive when the mean exponent sits within `1 ± 0.04`; subdiffusive when
/// it sits below with a late-time slope of α(t) compatible with ≥ 0 (within
/// two standard errors); a localizing trend when that slope is negative beyond
/// noise; indeterminate otherwise (including overly noisy series).
pub fn localization_verdict(diff: &DiffusionSeries) -> Verdict {
    let samples: Vec<(f64, f64)> = diff
        .base
        .times
        .iter()
        .zip(&diff.alpha)
        .filter_map(|(&t, a)| a.map(|a| ((t as f64).log10(), a)))
        .collect();
    let Some(&(last_log_t, _)) = samples.last() else {
        return Verdict::Indeterminate;
    };
    let window: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(lt, _)| lt >= last_log_t - 1.0)
        .collect();
    if window.len() < 5 {
        return Verdict::Indeterminate;
    }
    let xs: Vec<f64> = window.iter().map(|&(lt, _)| lt).collect();
    let ys: Vec<f64> = window.iter().map(|&(_, a)| a).collect();
    let n = xs.len() as f64;
    let alpha_inf = ys.iter().sum::<f64>() / n;
    let residual = (ys
        .iter()
        .map(|a| (a - alpha_inf) * (a - alpha_inf))
        .sum::<f64>()
        / n)
        .sqrt();
    if residual > VERDICT_RESIDUAL_CAP {
        return Verdict::Indeterminate;
    }
    let (slope, intercept) = ls_line(&xs, &ys);
    // Standard error of the regression slope.
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let slope_se = if n > 2.0 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };

    if (alpha_inf - 1.0).abs() <= VERDICT_DELTA {
        Verdict::Diffusive
    } else if alpha_inf < 1.0 - VERDICT_DELTA {
        if slope < -2.0 * slope_se {
            Verdict::LocalizingTrend
        } else {
            Verdict::Subdiffusive
        }
    } else if slope < -2.0 * slope_se {
        // Still superdiffusive on average but clearly decaying: transient.
        Verdict::Indeterminate
    } else {
        Verdict::Indeterminate
    }
}
