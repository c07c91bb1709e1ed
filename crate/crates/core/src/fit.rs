//! Least-squares slope fits for convergence studies.

use crate::error::{BfdError, Result};
use crate::linalg::{least_squares, DenseMatrix};

/// Straight-line fit `log10 y = intercept + slope * log10 x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the line, in log10 units.
    pub residual: f64,
    pub points: usize,
}

impl LogLogFit {
    /// Slope accepted only if the points really lie on a line.
    pub const ACCEPT_RESIDUAL: f64 = 0.15;

    pub fn accepted(&self) -> bool {
        self.residual < Self::ACCEPT_RESIDUAL
    }

    /// Fitted value at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        10f64.powf(self.intercept + self.slope * x.log10())
    }
}

/// Fits `log10 ys` against `log10 xs`.
///
/// Needs at least two points with positive finite coordinates; values at or
/// below `floor` are treated as hitting the rounding floor and rejected.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    fit_loglog_with_floor(xs, ys, 0.0)
}

pub fn fit_loglog_with_floor(xs: &[f64], ys: &[f64], floor: f64) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(BfdError::SizeMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(BfdError::DegenerateFit(format!(
            "need at least 2 points, got {}",
            xs.len()
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && x.is_finite()) {
            return Err(BfdError::DegenerateFit(format!("abscissa {x} not positive")));
        }
        if !(y > floor && y.is_finite()) {
            return Err(BfdError::DegenerateFit(format!(
                "value {y:e} at x = {x:e} is at or below the floor {floor:e}"
            )));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let design = DenseMatrix::from_row_major(
        lx.len(),
        2,
        lx.iter().flat_map(|&x| [1.0, x]).collect(),
    )?;
    let (coef, resid) = least_squares(&design, &ly)
        .map_err(|e| BfdError::DegenerateFit(format!("abscissae not distinct: {e}")))?;
    Ok(LogLogFit {
        slope: coef[1],
        intercept: coef[0],
        residual: resid / (lx.len() as f64).sqrt(),
        points: lx.len(),
    })
}

/// Least-squares fit of `y ~ sum_k coef_k x^{powers_k}`.
pub fn fit_powers(xs: &[f64], ys: &[f64], powers: &[i32]) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(BfdError::SizeMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < powers.len() {
        return Err(BfdError::DegenerateFit(format!(
            "{} samples for {} unknowns",
            xs.len(),
            powers.len()
        )));
    }
    // Column scaling keeps the QR well conditioned when powers differ a lot.
    let scales: Vec<f64> = powers
        .iter()
        .map(|&p| xs.iter().fold(0.0f64, |a, x| a.max(x.abs().powi(p))))
        .collect();
    let data = xs
        .iter()
        .flat_map(|&x| powers.iter().zip(&scales).map(move |(&p, s)| x.powi(p) / s))
        .collect();
    let design = DenseMatrix::from_row_major(xs.len(), powers.len(), data)?;
    let (coef, _) = least_squares(&design, ys)
        .map_err(|e| BfdError::DegenerateFit(format!("power basis ill-conditioned: {e}")))?;
    Ok(coef.iter().zip(&scales).map(|(c, s)| c / s).collect())
}
