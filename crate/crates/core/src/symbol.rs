//! Closed-form eigenanalysis of `Q(c1, c2)` through low/high frequency pairing.
//!
//! Because the two nodes of a block use different stencils, `Q` is not
//! diagonalised by single Fourier modes. It does leave invariant each plane
//! spanned by a low mode `e^{i omega x}` and its alias `e^{i nu x}`, with
//! `nu = omega - N` for `omega > 0` and `nu = omega + N` otherwise. Within a
//! plane, `Q` acts on the nodal diagonal through `mu_{1,2}` (low mode) and
//! `sigma_{1,2}` (alias), and the two eigenvalues `Qhat_{1,2}` follow in
//! closed form. Eigenvectors are `psi_k = (alpha_k e^{i omega x} + beta_k e^{i nu x}) / sqrt(L)`
//! with `|alpha_k|^2 + |beta_k|^2 = 1`.
//!
//! Everything is expressed through the dimensionless phase `theta = omega h`
//! and the block width `h`; eigenvalues carry the `1/h` factor.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{BfdError, Result};
use crate::fit::{fit_loglog, fit_powers, LogLogFit};
use crate::grid::{sample, BlockGrid, GridFunction};
use crate::operators::{BlockOperator, SchemeParams};
use crate::scalar::{cis, csqrt, imag_unit, real, DoubleDouble, Real};

/// A low-band mode index and its high-band partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair<T> {
    pub omega: i64,
    pub nu: i64,
    /// `2 pi omega h / L`.
    pub theta_h: T,
}

impl<T: Real> ModePair<T> {
    /// Pair for low-band index `omega` on a grid with `n` blocks.
    pub fn new(omega: i64, n: usize) -> Self {
        let n_i = n as i64;
        let nu = if omega > 0 { omega - n_i } else { omega + n_i };
        Self {
            omega,
            nu,
            theta_h: T::TAU() * T::from_i64_lossy(omega) / T::from_usize_lossy(n),
        }
    }

    /// `+1` for `omega > 0`, `-1` otherwise: the sign of the alias relation
    /// `e^{i nu x_{j-1/4}} = -i s e^{i omega x_{j-1/4}}`.
    pub fn alias_sign(&self) -> i32 {
        if self.omega > 0 {
            1
        } else {
            -1
        }
    }
}

/// Low-band indices `-N/2 < omega <= N/2`, one pair per invariant plane.
///
/// For even `N` the band edge `omega = N/2` is paired with `nu = -N/2`, so
/// `-N/2` does not appear separately.
pub fn low_band(n: usize) -> impl Iterator<Item = i64> {
    let lo = -(((n - 1) / 2) as i64);
    let hi = (n / 2) as i64;
    lo..=hi
}

pub fn mode_pairs<T: Real>(n: usize) -> Vec<ModePair<T>> {
    low_band(n).map(|w| ModePair::new(w, n)).collect()
}

/// Nodal symbols of `Q` on the low mode (`mu`) and on its alias (`sigma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalSymbols<T> {
    pub mu1: Complex<T>,
    pub mu2: Complex<T>,
    pub sigma1: Complex<T>,
    pub sigma2: Complex<T>,
}

/// `Q e^{i omega x} = diag(mu1, mu2, ...) e^{i omega x}` and likewise with
/// `sigma` for the alias, as functions of `theta = omega h`.
pub fn mu_sigma<T: Real>(theta: T, h: T, params: SchemeParams<T>) -> DiagonalSymbols<T> {
    let SchemeParams { c1, c2 } = params;
    let i = imag_unit::<T>();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let eight = T::lit(8.0);
    let k = T::one() / (T::lit(3.0) * h);
    let half = cis(theta / two);
    let half_conj = half.conj();
    let (sin_q, cos_q) = (theta / four).sin_cos();
    let sin_h = (theta / two).sin_cos().0;
    let sin_t = theta.sin_cos().0;
    let s4 = sin_q.powi(4);
    let c4 = cos_q.powi(4);
    let central_low = -i * real(eight * sin_h - sin_t);
    let central_high = i * real(eight * sin_h + sin_t);

    let mu1 = (central_low - (real(c1) + half * c2) * (eight * s4)) * k;
    let mu2 = (central_low + (half_conj * c1 + real(c2)) * (eight * s4)) * k;
    let sigma1 = (central_high - (real(c1) - half * c2) * (eight * c4)) * k;
    let sigma2 = (central_high - (half_conj * c1 - real(c2)) * (eight * c4)) * k;
    DiagonalSymbols {
        mu1,
        mu2,
        sigma1,
        sigma2,
    }
}

/// The two eigenvalues in a plane together with the closed-form intermediates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSymbols<T> {
    pub qhat1: Complex<T>,
    pub qhat2: Complex<T>,
    /// `Omega`, so that `Qhat_{1,2} = (Omega -/+ sqrt(2 Delta)) / (12 h)`.
    pub big_omega: Complex<T>,
    pub delta: Complex<T>,
}

/// `Omega(theta)`: half the trace of the plane operator, times `12 h`.
pub fn big_omega<T: Real>(theta: T, params: SchemeParams<T>) -> Complex<T> {
    let SchemeParams { c1, c2 } = params;
    let f = T::lit;
    let (sin, cos) = theta.sin_cos();
    Complex::new(
        f(6.0) * (c2 - c1) * cos + f(10.0) * (c2 - c1),
        f(4.0) * (c1 + c2 + T::one()) * sin,
    )
}

/// `Delta(theta)`: `2 Delta / (12 h)^2` is the discriminant of the plane operator.
pub fn delta<T: Real>(theta: T, params: SchemeParams<T>) -> Complex<T> {
    let SchemeParams { c1, c2 } = params;
    let f = T::lit;
    let (sin, cos) = theta.sin_cos();
    let cos2 = (f(2.0) * theta).sin_cos().1;
    let constant = -f(80.0) * c1 - f(256.0) + f(55.0) * c1 * c1 + f(55.0) * c2 * c2
        - f(2.0) * (f(63.0) * c1 + f(40.0)) * c2;
    let cos1 = f(4.0)
        * (f(15.0) * c1 * c1 + c1 * (f(16.0) - f(30.0) * c2) + c2 * (f(15.0) * c2 + f(16.0)) + f(64.0));
    let cos2_coef = f(13.0) * c1 * c1 + f(2.0) * c1 * (f(8.0) - f(5.0) * c2) + c2 * (f(13.0) * c2 + f(16.0));
    let im = f(8.0)
        * (c2 - c1)
        * sin
        * ((f(3.0) * c1 + f(3.0) * c2 + f(4.0)) * cos + f(5.0) * c1 + f(5.0) * c2 + f(28.0));
    Complex::new(
        constant + cos1 * cos + cos2_coef * cos2,
        im,
    )
}

/// Closed-form eigenvalues for `theta != 0`.
///
/// Of the two roots, `Qhat1` is the one closer to `-i theta / h`, the exact
/// symbol of `-d/dx`; this keeps the labelling continuous from `theta = 0`.
pub fn eigen_symbols<T: Real>(theta: T, h: T, params: SchemeParams<T>) -> Result<EigenSymbols<T>> {
    if theta == T::zero() {
        return Err(BfdError::InvalidArgument(
            "eigen_symbols requires theta != 0; use zero_mode for omega = 0".into(),
        ));
    }
    let big_omega = big_omega(theta, params);
    let delta = delta(theta, params);
    let root = csqrt(delta * T::lit(2.0));
    let denom = T::lit(12.0) * h;
    let minus = (big_omega - root) / denom;
    let plus = (big_omega + root) / denom;
    let exact = Complex::new(T::zero(), -theta / h);
    let (qhat1, qhat2) = if (minus - exact).norm() <= (plus - exact).norm() {
        (minus, plus)
    } else {
        (plus, minus)
    };
    Ok(EigenSymbols {
        qhat1,
        qhat2,
        big_omega,
        delta,
    })
}

/// `r_k = i beta_k / alpha_k` and the normalised eigenvector coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients<T> {
    /// Infinite (non-finite) when `alpha_k = 0`.
    pub r: Complex<T>,
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

/// Which eigenpair of a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The physical branch, `Qhat1 ~ -i omega`.
    First,
    /// The parasitic branch.
    Second,
}

fn degenerate_tol<T: Real>(d: &DiagonalSymbols<T>, qhat: Complex<T>) -> T {
    let scale = d.mu1.norm() + d.sigma1.norm() + qhat.norm();
    T::epsilon() * T::lit(64.0) * scale.max(T::min_positive_value())
}

/// Eigenvector coefficients from the first equation of the reduced system,
/// `mu1 - s sigma1 r = Qhat (1 - s r)`, with `s` the alias sign.
///
/// The first branch uses `alpha = 1/sqrt(1+|r|^2)`, `beta = -i r/sqrt(1+|r|^2)`.
/// The second uses the same normalisation written through `q = 1/r`:
/// `alpha = i q/sqrt(1+|q|^2)`, `beta = 1/sqrt(1+|q|^2)`, which stays finite
/// when the eigenvector is a pure alias mode.
pub fn coefficients<T: Real>(
    mode: &ModePair<T>,
    qhat: Complex<T>,
    branch: Branch,
    diag: &DiagonalSymbols<T>,
) -> Result<ModeCoefficients<T>> {
    let s = T::from_i64_lossy(mode.alias_sign() as i64);
    let num = diag.mu1 - qhat;
    let den = diag.sigma1 - qhat;
    let tol = degenerate_tol(diag, qhat);
    let i = imag_unit::<T>();
    let one = T::one();
    match branch {
        Branch::First => {
            if den.norm() <= tol {
                return Err(BfdError::DegenerateMode {
                    omega: mode.omega,
                    reason: "sigma1 equals Qhat1; first eigenvector is a pure alias mode".into(),
                });
            }
            let r = num / den * s;
            let norm = (one + r.norm_sqr()).sqrt();
            Ok(ModeCoefficients {
                r,
                alpha: real(one / norm),
                beta: -i * r / norm,
            })
        }
        Branch::Second => {
            if num.norm() <= tol {
                return Err(BfdError::DegenerateMode {
                    omega: mode.omega,
                    reason: "mu1 equals Qhat2; second eigenvector phase undefined".into(),
                });
            }
            let q = den / num * s;
            let norm = (one + q.norm_sqr()).sqrt();
            let r = if q.norm() == T::zero() {
                Complex::new(T::infinity(), T::zero())
            } else {
                q.inv()
            };
            Ok(ModeCoefficients {
                r,
                alpha: i * q / norm,
                beta: real(one / norm),
            })
        }
    }
}

/// Complete per-plane record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDecomposition<T> {
    pub mode: ModePair<T>,
    pub h: T,
    pub diag: DiagonalSymbols<T>,
    pub big_omega: Complex<T>,
    pub delta: Complex<T>,
    pub qhat1: Complex<T>,
    pub qhat2: Complex<T>,
    pub first: ModeCoefficients<T>,
    pub second: ModeCoefficients<T>,
    pub cos_theta: T,
}

impl<T: Real> SymbolDecomposition<T> {
    pub fn qhat(&self, branch: Branch) -> Complex<T> {
        match branch {
            Branch::First => self.qhat1,
            Branch::Second => self.qhat2,
        }
    }

    pub fn coeffs(&self, branch: Branch) -> &ModeCoefficients<T> {
        match branch {
            Branch::First => &self.first,
            Branch::Second => &self.second,
        }
    }

    /// Largest relative residual of the two reduced equations over both
    /// branches, written in `alpha`/`beta` so that infinite `r` is harmless:
    /// `mu1 alpha - s sigma1 i beta = Qhat (alpha - s i beta)` and
    /// `mu2 alpha + s sigma2 i beta = Qhat (alpha + s i beta)`.
    pub fn reduced_system_residual(&self) -> T {
        let s = T::from_i64_lossy(self.mode.alias_sign() as i64);
        let i = imag_unit::<T>();
        let d = &self.diag;
        let mut worst = T::zero();
        for branch in [Branch::First, Branch::Second] {
            let q = self.qhat(branch);
            let ModeCoefficients { alpha, beta, .. } = *self.coeffs(branch);
            let ib = i * beta * s;
            let e1 = d.mu1 * alpha - d.sigma1 * ib - q * (alpha - ib);
            let e2 = d.mu2 * alpha + d.sigma2 * ib - q * (alpha + ib);
            let scale = d.mu1.norm() + d.mu2.norm() + d.sigma1.norm() + d.sigma2.norm() + q.norm();
            worst = worst.max(e1.norm().max(e2.norm()) / scale.max(T::min_positive_value()));
        }
        worst
    }
}

/// Decomposition of the `omega = 0` plane: the constant mode with eigenvalue
/// 0 and the Nyquist mode `e^{i N x}` with eigenvalue `8 (c2 - c1) / (3 h)`.
pub fn zero_mode<T: Real>(n: usize, h: T, params: SchemeParams<T>) -> SymbolDecomposition<T> {
    let mode = ModePair::new(0, n);
    let zero = T::zero();
    let one = T::one();
    SymbolDecomposition {
        mode,
        h,
        diag: mu_sigma(zero, h, params),
        big_omega: big_omega(zero, params),
        delta: delta(zero, params),
        qhat1: Complex::new(zero, zero),
        qhat2: real(T::lit(8.0) * (params.c2 - params.c1) / (T::lit(3.0) * h)),
        first: ModeCoefficients {
            r: Complex::new(zero, zero),
            alpha: real(one),
            beta: Complex::new(zero, zero),
        },
        second: ModeCoefficients {
            r: Complex::new(T::infinity(), zero),
            alpha: Complex::new(zero, zero),
            beta: real(one),
        },
        cos_theta: zero,
    }
}

/// Full decomposition of the plane of `mode`.
pub fn decompose<T: Real>(
    mode: ModePair<T>,
    n: usize,
    h: T,
    params: SchemeParams<T>,
) -> Result<SymbolDecomposition<T>> {
    if mode.omega == 0 {
        return Ok(zero_mode(n, h, params));
    }
    let diag = mu_sigma(mode.theta_h, h, params);
    let eig = eigen_symbols(mode.theta_h, h, params)?;
    let first = coefficients(&mode, eig.qhat1, Branch::First, &diag)?;
    let second = coefficients(&mode, eig.qhat2, Branch::Second, &diag)?;
    let mut dec = SymbolDecomposition {
        mode,
        h,
        diag,
        big_omega: eig.big_omega,
        delta: eig.delta,
        qhat1: eig.qhat1,
        qhat2: eig.qhat2,
        first,
        second,
        cos_theta: T::zero(),
    };
    dec.cos_theta = cos_theta(&dec);
    Ok(dec)
}

/// Decompositions of every plane of an `n`-block grid of length `length`.
pub fn decompose_all<T: Real>(
    n: usize,
    length: T,
    params: SchemeParams<T>,
) -> Result<Vec<SymbolDecomposition<T>>> {
    let h = length / T::from_usize_lossy(n);
    mode_pairs(n)
        .into_iter()
        .map(|m| decompose(m, n, h, params))
        .collect()
}

/// `|conj(alpha1) alpha2 + conj(beta1) beta2|`, the cosine of the angle
/// between the two eigenvectors of a plane.
pub fn cos_theta<T: Real>(dec: &SymbolDecomposition<T>) -> T {
    (dec.first.alpha.conj() * dec.second.alpha + dec.first.beta.conj() * dec.second.beta).norm()
}

/// Samples `psi_1`, `psi_2` of a plane on the grid, normalised to unit
/// discrete L2 norm.
pub fn build_mode_vectors<T: Real>(
    grid: &Arc<BlockGrid<T>>,
    dec: &SymbolDecomposition<T>,
) -> (GridFunction<T>, GridFunction<T>) {
    let kw = grid.wavenumber(dec.mode.omega);
    let kn = grid.wavenumber(dec.mode.nu);
    let norm = grid.length().sqrt();
    let build = |c: &ModeCoefficients<T>| {
        let (alpha, beta) = (c.alpha, c.beta);
        sample(grid, move |x| (alpha * cis(kw * x) + beta * cis(kn * x)) / norm)
    };
    (build(&dec.first), build(&dec.second))
}

/// `||Q psi - Qhat psi||_inf / (||Q||_inf ||psi||_inf)`.
pub fn eigen_residual<T: Real>(
    op: &BlockOperator<T>,
    psi: &GridFunction<T>,
    qhat: Complex<T>,
) -> Result<T> {
    let qpsi = op.apply(psi)?;
    let worst = qpsi
        .values()
        .iter()
        .zip(psi.values())
        .fold(T::zero(), |m, (a, b)| m.max((a - b * qhat).norm()));
    let scale = op.to_dense_norm_inf() * psi.norms().linf;
    Ok(worst / scale.max(T::min_positive_value()))
}

impl<T: Real> BlockOperator<T> {
    /// `||Q||_inf` without forming the dense matrix.
    pub fn to_dense_norm_inf(&self) -> T {
        (0..2)
            .map(|r| {
                (0..2).fold(T::zero(), |acc, s| {
                    acc + self.a()[r][s].abs() + self.b()[r][s].abs() + self.c()[r][s].abs()
                })
            })
            .fold(T::zero(), T::max)
    }
}

/// Relative eigen-residual tolerance for mode vectors.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Builds both mode vectors and checks them against the operator.
pub fn verified_mode_vectors<T: Real>(
    grid: &Arc<BlockGrid<T>>,
    op: &BlockOperator<T>,
    dec: &SymbolDecomposition<T>,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    let (psi1, psi2) = build_mode_vectors(grid, dec);
    for (psi, q) in [(&psi1, dec.qhat1), (&psi2, dec.qhat2)] {
        let res = eigen_residual(op, psi, q)?;
        if res.to_f64_lossy() > EIGEN_RESIDUAL_TOL {
            return Err(BfdError::EigenResidual {
                omega: dec.mode.omega,
                residual: res.to_f64_lossy(),
                tolerance: EIGEN_RESIDUAL_TOL,
            });
        }
    }
    Ok((psi1, psi2))
}

/// Outcome of a von Neumann scan over `theta` for one parameter pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub c1: f64,
    pub c2: f64,
    /// Maxima of `h Re Qhat_k`, i.e. real parts in units of `1/h`.
    pub max_re_q1: f64,
    pub max_re_q2: f64,
    pub max_cos_theta: f64,
    pub stable: bool,
}

impl StabilityReport {
    pub const RE_TOL: f64 = 1e-10;
    pub const COS_BOUND: f64 = 0.4;

    pub fn max_re(&self) -> f64 {
        self.max_re_q1.max(self.max_re_q2)
    }
}

/// Scans `theta` uniformly over `[-pi, pi]` (skipping 0) plus the `omega = 0`
/// pair, at `h = 1`. The verdict is stable iff every real part is at most
/// `1e-10 / h` and `cos theta < 0.4` throughout.
pub fn stability_scan(params: SchemeParams<f64>, theta_samples: usize) -> Result<StabilityReport> {
    if theta_samples < 64 {
        return Err(BfdError::InvalidArgument(format!(
            "stability scan needs at least 64 theta samples, got {theta_samples}"
        )));
    }
    let h = 1.0;
    let zero = zero_mode(2, h, params);
    let mut max_re_q1 = zero.qhat1.re;
    let mut max_re_q2 = zero.qhat2.re;
    let mut max_cos: f64 = 0.0;
    let step = 2.0 * std::f64::consts::PI / (theta_samples - 1) as f64;
    for k in 0..theta_samples {
        let theta = -std::f64::consts::PI + step * k as f64;
        if theta.abs() < 1e-12 {
            continue;
        }
        let eig = eigen_symbols(theta, h, params)?;
        max_re_q1 = max_re_q1.max(eig.qhat1.re);
        max_re_q2 = max_re_q2.max(eig.qhat2.re);
        let diag = mu_sigma(theta, h, params);
        // Synthetic mode carrying theta; only the sign of omega matters here.
        let mode = ModePair {
            omega: if theta > 0.0 { 1 } else { -1 },
            nu: 0,
            theta_h: theta,
        };
        let c = match (
            coefficients(&mode, eig.qhat1, Branch::First, &diag),
            coefficients(&mode, eig.qhat2, Branch::Second, &diag),
        ) {
            (Ok(a), Ok(b)) => (a.alpha.conj() * b.alpha + a.beta.conj() * b.beta).norm(),
            // A collapsed eigenvector basis counts as parallel.
            _ => 1.0,
        };
        max_cos = max_cos.max(c);
    }
    let stable = max_re_q1.max(max_re_q2) <= StabilityReport::RE_TOL / h
        && max_cos < StabilityReport::COS_BOUND;
    Ok(StabilityReport {
        c1: params.c1,
        c2: params.c2,
        max_re_q1,
        max_re_q2,
        max_cos_theta: max_cos,
        stable,
    })
}

/// [`stability_scan`] over every `(c1, c2)` of a square lattice, in parallel.
pub fn stability_lattice(
    lo: f64,
    hi: f64,
    points: usize,
    theta_samples: usize,
) -> Result<Vec<StabilityReport>> {
    if points < 2 {
        return Err(BfdError::InvalidArgument("lattice needs at least 2 points per axis".into()));
    }
    let values: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let pairs: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&c1| values.iter().map(move |&c2| (c1, c2)))
        .collect();
    pairs
        .par_iter()
        .map(|&(c1, c2)| stability_scan(SchemeParams::new(c1, c2), theta_samples))
        .collect()
}

/// One fitted term of `h Qhat1 + i theta` as a power series in `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTerm {
    pub power: i32,
    pub fitted: Complex<f64>,
    pub expected: Complex<f64>,
}

impl AsymptoticTerm {
    /// `|fitted - expected| / |expected|`, or the absolute error when the
    /// expected coefficient vanishes.
    pub fn error(&self) -> f64 {
        let diff = (self.fitted - self.expected).norm();
        if self.expected.norm() > 0.0 {
            diff / self.expected.norm()
        } else {
            diff
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub c1: f64,
    pub c2: f64,
    /// Log-log slope of `|h Qhat1 + i theta|` against `theta`: the leading exponent.
    pub leading: LogLogFit,
    pub terms: Vec<AsymptoticTerm>,
}

impl AsymptoticReport {
    pub fn term(&self, power: i32) -> Option<&AsymptoticTerm> {
        self.terms.iter().find(|t| t.power == power)
    }
}

/// Evaluates `h Qhat1(theta) + i theta` in double-double precision.
fn physical_defect(theta: f64, params: SchemeParams<f64>) -> Result<Complex<f64>> {
    let p = SchemeParams::new(DoubleDouble::from(params.c1), DoubleDouble::from(params.c2));
    let th = DoubleDouble::from(theta);
    let eig = eigen_symbols(th, DoubleDouble::from(1.0), p)?;
    let d = eig.qhat1 + Complex::new(DoubleDouble::from(0.0), th);
    Ok(Complex::new(d.re.hi(), d.im.hi()))
}

/// Fits the small-`theta` expansion of `Qhat1 + i omega` at fixed `omega`
/// (equivalently in powers of `theta = omega h`) and compares with the known
/// coefficients:
///
/// * `c1 > c2`: `i/480 theta^5 - (c1+c2)/(384 (c1-c2)) theta^6 + ...`
/// * `c1 = c2 = c`: `i (1-2c)/(240 (c+2)) theta^5 - i (2c^2-6c+1)/(4032 (c+2)^2) theta^7 + ...`
///
/// The closed form is evaluated in double-double arithmetic so the probe can
/// reach `theta = 1e-3` without cancellation swamping the `theta^7` term.
pub fn asymptotic_check(
    params: SchemeParams<f64>,
    theta_min: f64,
    theta_max: f64,
    samples: usize,
) -> Result<AsymptoticReport> {
    let SchemeParams { c1, c2 } = params;
    if c1 < c2 {
        return Err(BfdError::InvalidArgument(format!(
            "asymptotic expansions assume c1 >= c2, got c1 = {c1}, c2 = {c2}"
        )));
    }
    if !(theta_min > 0.0 && theta_max > theta_min) || samples < 8 {
        return Err(BfdError::InvalidArgument(
            "need 0 < theta_min < theta_max and at least 8 samples".into(),
        ));
    }
    let ratio = (theta_max / theta_min).ln();
    let thetas: Vec<f64> = (0..samples)
        .map(|k| theta_min * (ratio * k as f64 / (samples - 1) as f64).exp())
        .collect();
    let defects = thetas
        .iter()
        .map(|&t| physical_defect(t, params))
        .collect::<Result<Vec<_>>>()?;

    let equal = (c1 - c2).abs() < 1e-14;
    let (powers, expected): (Vec<i32>, Vec<Complex<f64>>) = if equal {
        let c = c1;
        (
            vec![5, 7, 9],
            vec![
                Complex::new(0.0, (1.0 - 2.0 * c) / (240.0 * (c + 2.0))),
                Complex::new(0.0, -(2.0 * c * c - 6.0 * c + 1.0) / (4032.0 * (c + 2.0).powi(2))),
                Complex::new(f64::NAN, f64::NAN),
            ],
        )
    } else {
        (
            vec![5, 6, 7, 8, 9],
            vec![
                Complex::new(0.0, 1.0 / 480.0),
                Complex::new(-(c1 + c2) / (384.0 * (c1 - c2)), 0.0),
                Complex::new(f64::NAN, f64::NAN),
                Complex::new(f64::NAN, f64::NAN),
                Complex::new(f64::NAN, f64::NAN),
            ],
        )
    };
    let re: Vec<f64> = defects.iter().map(|d| d.re).collect();
    let im: Vec<f64> = defects.iter().map(|d| d.im).collect();
    let re_coef = fit_powers(&thetas, &re, &powers)?;
    let im_coef = fit_powers(&thetas, &im, &powers)?;
    let terms = powers
        .iter()
        .zip(expected)
        .enumerate()
        .filter(|(_, (_, e))| !e.re.is_nan())
        .map(|(k, (&power, expected))| AsymptoticTerm {
            power,
            fitted: Complex::new(re_coef[k], im_coef[k]),
            expected,
        })
        .collect();
    let mags: Vec<f64> = defects.iter().map(|d| d.norm()).collect();
    let leading = fit_loglog(&thetas, &mags)?;
    Ok(AsymptoticReport {
        c1,
        c2,
        leading,
        terms,
    })
}
