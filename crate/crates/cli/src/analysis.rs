//! Reading error-versus-time curves: plateaus and linear growth.

use bfd_core::fit::{fit_loglog, LogLogFit};
use serde::Serialize;

/// `per_decade` log-spaced samples from `t_min` to `t_max`, both included.
pub fn log_times(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max >= t_min && per_decade > 0);
    let decades = (t_max / t_min).log10();
    let count = (decades * per_decade as f64).round() as usize;
    (0..=count)
        .map(|k| {
            if k == count {
                t_max
            } else {
                t_min * 10f64.powf(k as f64 / per_decade as f64)
            }
        })
        .collect()
}

/// A flat stretch of an error curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    /// Geometric mean of the errors on the stretch.
    pub level: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

/// Longest run of consecutive samples of a non-decreasing curve that stays
/// within a factor `band` of its first value. Needs at least `min_points`.
pub fn find_plateau(times: &[f64], envelope: &[f64], band: f64, min_points: usize) -> Option<Plateau> {
    let n = times.len().min(envelope.len());
    let mut best: Option<(usize, usize)> = None;
    let mut e = 0;
    for s in 0..n {
        if envelope[s] <= 0.0 {
            continue;
        }
        e = e.max(s + 1);
        while e < n && envelope[e] <= band * envelope[s] {
            e += 1;
        }
        if best.map_or(true, |(bs, be)| e - s > be - bs) {
            best = Some((s, e));
        }
    }
    let (s, e) = best?;
    if e - s < min_points {
        return None;
    }
    let mean_log = envelope[s..e].iter().map(|v| v.ln()).sum::<f64>() / (e - s) as f64;
    Some(Plateau {
        level: mean_log.exp(),
        t_start: times[s],
        t_end: times[e - 1],
        points: e - s,
    })
}

/// Log-log fit over the samples with `lower <= error <= upper` and `t >= t_from`.
pub fn growth_fit(times: &[f64], errors: &[f64], lower: f64, upper: f64, t_from: f64) -> Option<LogLogFit> {
    let (ts, es): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(errors)
        .filter(|(t, e)| **t >= t_from && **e >= lower && **e <= upper)
        .map(|(t, e)| (*t, *e))
        .unzip();
    if ts.len() < 3 {
        return None;
    }
    fit_loglog(&ts, &es).ok()
}

/// Summary of one error-versus-time curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveAnalysis {
    /// Flat stretch of the running maximum before saturation.
    pub plateau: Option<Plateau>,
    /// First sample time at which the error reaches saturation.
    pub saturation_time: Option<f64>,
    /// Slope over the growth regime between plateau and saturation.
    pub growth_slope: Option<f64>,
    pub growth_residual: Option<f64>,
    pub growth_points: usize,
}

/// Errors below this fraction of the data norm are free of saturation.
pub const SATURATION_FRACTION: f64 = 0.01;
/// Errors below this fraction of the data norm are treated as rounding noise.
pub const NOISE_FRACTION: f64 = 1e-11;
/// A plateau may rise by at most this factor.
pub const PLATEAU_BAND: f64 = 2.0;
/// Growth is fitted only once the error exceeds the plateau by this factor.
pub const PLATEAU_CLEARANCE: f64 = 30.0;

/// `max_{s <= t} e(s)` at every sample.
pub fn running_max(errors: &[f64]) -> Vec<f64> {
    errors
        .iter()
        .scan(0.0f64, |m, &e| {
            *m = m.max(e);
            Some(*m)
        })
        .collect()
}

/// Locates a plateau (if any) and fits the growth that follows it.
///
/// Only samples before the first saturated one count; after that the
/// error wanders at the size of the data. Without a plateau the whole
/// above-noise part is fitted.
pub fn analyse_curve(times: &[f64], errors: &[f64], data_norm: f64) -> CurveAnalysis {
    let upper = SATURATION_FRACTION * data_norm;
    let envelope = running_max(errors);
    let sat = envelope.iter().position(|&e| e > upper).unwrap_or(errors.len());
    let plateau = find_plateau(&times[..sat], &envelope[..sat], PLATEAU_BAND, 6);
    let (lower, t_from) = match plateau {
        Some(p) => ((PLATEAU_CLEARANCE * p.level).max(NOISE_FRACTION * data_norm), p.t_end),
        None => (NOISE_FRACTION * data_norm, 0.0),
    };
    let fit = growth_fit(&times[..sat], &errors[..sat], lower, upper, t_from);
    CurveAnalysis {
        plateau,
        saturation_time: times.get(sat).copied(),
        growth_slope: fit.map(|f| f.slope),
        growth_residual: fit.map(|f| f.residual),
        growth_points: fit.map_or(0, |f| f.points),
    }
}
