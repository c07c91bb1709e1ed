//! Time propagation of the semi-discrete system `u_t = R u`.
//!
//! Three propagators are provided: an explicit six-order Runge-Kutta method
//! for any [`TransportOperator`], the exact modal propagator for BFD operators
//! built on the closed-form eigendecomposition, and an FFT-diagonal
//! propagator for classical stencils. [`dense_expm`] is the small-`N` oracle
//! the other two are checked against.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{BfdError, Result};
use crate::grid::{BlockGrid, GridFunction};
use crate::linalg::{solve2, DenseMatrix};
use crate::operators::{SchemeParams, StencilOperator, TransportOperator};
use crate::scalar::{cis, Real, SpectralReal};
use crate::symbol::{decompose_all, SymbolDecomposition};

/// Explicit Runge-Kutta tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct RkTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

impl RkTableau {
    /// Butcher's seven-stage, sixth-order method.
    pub fn butcher6() -> Self {
        let a = vec![
            vec![],
            vec![1.0 / 3.0],
            vec![0.0, 2.0 / 3.0],
            vec![1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0],
            vec![-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0],
            vec![0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 1.0 / 2.0],
            vec![9.0 / 44.0, -9.0 / 11.0, 63.0 / 44.0, 18.0 / 11.0, 0.0, -16.0 / 11.0],
        ];
        let b = vec![
            11.0 / 120.0,
            0.0,
            27.0 / 40.0,
            27.0 / 40.0,
            -4.0 / 15.0,
            -4.0 / 15.0,
            11.0 / 120.0,
        ];
        let c = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 2.0, 1.0 / 2.0, 1.0];
        Self { a, b, c, order: 6 }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    fn a_entry(&self, i: usize, j: usize) -> f64 {
        self.a[i].get(j).copied().unwrap_or(0.0)
    }

    /// Largest violation of the order conditions `b . Phi(t) = 1 / gamma(t)`
    /// over every rooted tree with at most `order` vertices, together with
    /// the row-sum condition `c_i = sum_j a_ij`.
    pub fn order_condition_defect(&self, order: usize) -> f64 {
        let s = self.stages();
        let mut worst: f64 = 0.0;
        for i in 0..s {
            let row: f64 = (0..s).map(|j| self.a_entry(i, j)).sum();
            worst = worst.max((row - self.c[i]).abs());
        }
        for tree in rooted_trees(order) {
            let phi = self.elementary_weight(&tree);
            let lhs: f64 = self.b.iter().zip(&phi).map(|(b, p)| b * p).sum();
            worst = worst.max((lhs - 1.0 / tree.density() as f64).abs());
        }
        worst
    }

    /// Highest order whose conditions all hold to `tol`.
    pub fn verified_order(&self, tol: f64) -> usize {
        (1..=8)
            .take_while(|&p| self.order_condition_defect(p) <= tol)
            .last()
            .unwrap_or(0)
    }

    fn elementary_weight(&self, tree: &Tree) -> Vec<f64> {
        let s = self.stages();
        let mut out = vec![1.0; s];
        for child in &tree.children {
            let inner = self.elementary_weight(child);
            for (i, o) in out.iter_mut().enumerate() {
                *o *= (0..s).map(|j| self.a_entry(i, j) * inner[j]).sum::<f64>();
            }
        }
        out
    }
}

/// Unlabelled rooted tree, children in canonical order.
#[derive(Debug, Clone, PartialEq)]
struct Tree {
    children: Vec<Tree>,
}

impl Tree {
    fn order(&self) -> usize {
        1 + self.children.iter().map(Tree::order).sum::<usize>()
    }

    fn density(&self) -> usize {
        self.order() * self.children.iter().map(Tree::density).product::<usize>()
    }
}

/// All rooted trees with `1..=max_order` vertices, each exactly once.
fn rooted_trees(max_order: usize) -> Vec<Tree> {
    // by_order[n] lists the trees with n vertices.
    let mut by_order: Vec<Vec<Tree>> = vec![Vec::new(), vec![Tree { children: vec![] }]];
    for n in 2..=max_order {
        // Children form a multiset of trees with total order n - 1; enumerate
        // it as a non-decreasing sequence in the flat (order, index) listing.
        let flat: Vec<&Tree> = by_order.iter().flatten().collect();
        let mut found = Vec::new();
        let mut stack = Vec::new();
        fn extend<'a>(
            flat: &[&'a Tree],
            start: usize,
            remaining: usize,
            stack: &mut Vec<&'a Tree>,
            found: &mut Vec<Tree>,
        ) {
            if remaining == 0 {
                found.push(Tree {
                    children: stack.iter().map(|t| (*t).clone()).collect(),
                });
                return;
            }
            for k in start..flat.len() {
                let o = flat[k].order();
                if o <= remaining {
                    stack.push(flat[k]);
                    extend(flat, k, remaining - o, stack, found);
                    stack.pop();
                }
            }
        }
        extend(&flat, 0, n - 1, &mut stack, &mut found);
        by_order.push(found);
    }
    by_order.into_iter().skip(1).take(max_order).flatten().collect()
}

/// Number of steps and step size for `T` with nominal `dt = cfl * h / 2`,
/// rounded down so that the steps land exactly on `T`.
pub fn time_steps<T: Real>(t_final: T, h: T, cfl: T) -> Result<(usize, T)> {
    if !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(BfdError::InvalidArgument(format!("final time {t_final} must be finite and >= 0")));
    }
    if !(cfl > T::zero()) || !(h > T::zero()) {
        return Err(BfdError::InvalidArgument(format!("cfl {cfl} and h {h} must be positive")));
    }
    if t_final == T::zero() {
        return Ok((0, T::zero()));
    }
    let nominal = cfl * h / T::lit(2.0);
    let steps = (t_final / nominal).ceil().to_usize().ok_or_else(|| {
        BfdError::InvalidArgument(format!("{t_final} / {nominal} steps not representable"))
    })?;
    let steps = steps.max(1);
    Ok((steps, t_final / T::from_usize_lossy(steps)))
}

/// Integrates `u_t = R u` from `u0` to `t_final` with a fixed-step RK method.
pub fn rk_integrate<T: Real>(
    op: &dyn TransportOperator<T>,
    u0: &GridFunction<T>,
    t_final: T,
    cfl: T,
) -> Result<GridFunction<T>> {
    rk_integrate_with(&RkTableau::butcher6(), op, u0, t_final, cfl)
}

pub fn rk_integrate_with<T: Real>(
    tableau: &RkTableau,
    op: &dyn TransportOperator<T>,
    u0: &GridFunction<T>,
    t_final: T,
    cfl: T,
) -> Result<GridFunction<T>> {
    if op.unknowns() != u0.len() {
        return Err(BfdError::SizeMismatch {
            expected: op.unknowns(),
            found: u0.len(),
        });
    }
    let (steps, dt) = time_steps(t_final, u0.grid().h(), cfl)?;
    let mut u = u0.values().to_vec();
    let n = u.len();
    let s = tableau.stages();
    let zero = Complex::new(T::zero(), T::zero());
    let mut k = vec![vec![zero; n]; s];
    let mut stage = vec![zero; n];
    let a: Vec<Vec<T>> = (0..s)
        .map(|i| (0..i).map(|j| T::lit(tableau.a_entry(i, j)) * dt).collect())
        .collect();
    let b: Vec<T> = tableau.b.iter().map(|&v| T::lit(v) * dt).collect();
    for step in 0..steps {
        for i in 0..s {
            stage.copy_from_slice(&u);
            for (j, &aij) in a[i].iter().enumerate() {
                if aij != T::zero() {
                    for (x, kj) in stage.iter_mut().zip(&k[j]) {
                        *x += kj.scale(aij);
                    }
                }
            }
            op.rhs_into(&stage, &mut k[i])?;
        }
        for (i, &bi) in b.iter().enumerate() {
            if bi != T::zero() {
                for (x, ki) in u.iter_mut().zip(&k[i]) {
                    *x += ki.scale(bi);
                }
            }
        }
        if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(BfdError::NonFinite {
                step: step + 1,
                time: (dt * T::from_usize_lossy(step + 1)).to_f64_lossy(),
            });
        }
    }
    u0.with_values(u)
}

/// Forward DFT of nodal values and the matching inverse, with the phase
/// factor that converts bins into coefficients of `e^{i 2 pi k x / L}`.
///
/// Node `m` sits at `x_m = (m + 1/2) L / (2N)`, so
/// `e^{i 2 pi k x_m / L} = e^{i pi k / (2N)} e^{2 pi i k m / (2N)}`.
struct Spectral<T: SpectralReal> {
    grid: Arc<BlockGrid<T>>,
    forward: Arc<dyn rustfft::Fft<T>>,
    inverse: Arc<dyn rustfft::Fft<T>>,
}

impl<T: SpectralReal> Spectral<T> {
    fn new(grid: Arc<BlockGrid<T>>) -> Self {
        let mut planner = FftPlanner::new();
        let len = grid.len();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            grid,
        }
    }

    fn len(&self) -> usize {
        self.grid.len()
    }

    /// Wavenumber index in `(-N, N]` represented by a bin.
    fn index_of_bin(&self, bin: usize) -> i64 {
        let len = self.len() as i64;
        let b = bin as i64;
        if b > len / 2 {
            b - len
        } else {
            b
        }
    }

    fn bin_of_index(&self, k: i64) -> usize {
        k.rem_euclid(self.len() as i64) as usize
    }

    fn offset(&self, k: i64) -> Complex<T> {
        cis(T::PI() * T::from_i64_lossy(k) / T::from_usize_lossy(self.len()))
    }

    /// Coefficients `u_hat_k`, indexed by bin.
    fn analyse(&self, values: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let inv_len = T::one() / T::from_usize_lossy(self.len());
        buf.iter()
            .enumerate()
            .map(|(bin, v)| v * self.offset(self.index_of_bin(bin)).conj() * inv_len)
            .collect()
    }

    fn synthesise(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = coeffs
            .iter()
            .enumerate()
            .map(|(bin, c)| c * self.offset(self.index_of_bin(bin)))
            .collect();
        self.inverse.process(&mut buf);
        buf
    }
}

/// `e^{lambda t}` evaluated as `e^{(lambda + i kappa) t} e^{-i kappa s}` with
/// `s = t mod L`, so the exact-transport phase carries the same reduction as
/// the exact solution and huge `t` does not destroy it.
fn evolve_factor<T: Real>(lambda: Complex<T>, kappa: T, t: T, shift: T) -> Complex<T> {
    let defect = (lambda + Complex::new(T::zero(), kappa)) * t;
    defect.exp() * cis(-kappa * shift)
}

/// Initial data expressed in the eigenbasis of a BFD operator.
pub struct ModalExpansion<T: SpectralReal> {
    spectral: Spectral<T>,
    pub decompositions: Vec<SymbolDecomposition<T>>,
    /// `(d1, d2)` per pair, aligned with `decompositions`.
    pub amplitudes: Vec<[Complex<T>; 2]>,
    real_input: bool,
}

impl<T: SpectralReal> std::fmt::Debug for ModalExpansion<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModalExpansion")
            .field("blocks", &self.spectral.grid.blocks())
            .field("amplitudes", &self.amplitudes)
            .finish()
    }
}

/// Smallest `|det|` of the normalised pair basis accepted by [`modal_decompose`].
pub const MODAL_DET_TOL: f64 = 1e-8;

/// Projects `u0` onto the eigenvectors `psi_1, psi_2` of every frequency pair.
pub fn modal_decompose<T: SpectralReal>(
    u0: &GridFunction<T>,
    params: SchemeParams<T>,
) -> Result<ModalExpansion<T>> {
    let grid = Arc::clone(u0.grid());
    let n = grid.blocks();
    let decompositions = decompose_all(n, grid.length(), params)?;
    let spectral = Spectral::new(Arc::clone(&grid));
    let coeffs = spectral.analyse(u0.values());
    let root_l = grid.length().sqrt();
    let amplitudes = decompositions
        .iter()
        .map(|d| {
            let basis = [
                [d.first.alpha / root_l, d.second.alpha / root_l],
                [d.first.beta / root_l, d.second.beta / root_l],
            ];
            let rhs = [
                coeffs[spectral.bin_of_index(d.mode.omega)],
                coeffs[spectral.bin_of_index(d.mode.nu)],
            ];
            let det = (basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0]) * grid.length();
            if det.norm().to_f64_lossy() < MODAL_DET_TOL {
                return Err(BfdError::SingularModal {
                    omega: d.mode.omega,
                    det: det.norm().to_f64_lossy(),
                });
            }
            solve2(basis, rhs).ok_or(BfdError::SingularModal {
                omega: d.mode.omega,
                det: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalExpansion {
        spectral,
        decompositions,
        amplitudes,
        real_input: u0.is_real(T::epsilon() * T::lit(16.0)),
    })
}

impl<T: SpectralReal> ModalExpansion<T> {
    pub fn grid(&self) -> &Arc<BlockGrid<T>> {
        &self.spectral.grid
    }

    /// `sum_pairs d1 e^{Qhat1 t} psi1 + d2 e^{Qhat2 t} psi2`, sampled on the grid.
    pub fn propagate(&self, t: T) -> Result<GridFunction<T>> {
        let grid = self.grid();
        let shift = grid.wrap(t);
        let root_l = grid.length().sqrt();
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); self.spectral.len()];
        for (d, amp) in self.decompositions.iter().zip(&self.amplitudes) {
            // Each eigenvalue is referenced to the exact transport of the mode
            // it mostly lives on.
            let kw = grid.wavenumber(d.mode.omega);
            let kn = grid.wavenumber(d.mode.nu);
            let e1 = evolve_factor(d.qhat1, kw, t, shift) * amp[0] / root_l;
            let e2 = evolve_factor(d.qhat2, kn, t, shift) * amp[1] / root_l;
            coeffs[self.spectral.bin_of_index(d.mode.omega)] = d.first.alpha * e1 + d.second.alpha * e2;
            coeffs[self.spectral.bin_of_index(d.mode.nu)] = d.first.beta * e1 + d.second.beta * e2;
        }
        let mut values = self.spectral.synthesise(&coeffs);
        if self.real_input {
            for v in &mut values {
                v.im = T::zero();
            }
        }
        GridFunction::new(Arc::clone(grid), values)
    }

    /// Evaluates [`propagate`](Self::propagate) at many times in parallel.
    pub fn propagate_many(&self, times: &[T]) -> Result<Vec<GridFunction<T>>> {
        times.par_iter().map(|&t| self.propagate(t)).collect()
    }
}

/// Exact propagator for a classical stencil, diagonal in the DFT basis.
pub struct FourierPropagator<T: SpectralReal> {
    spectral: Spectral<T>,
    symbols: Vec<Complex<T>>,
    coeffs: Vec<Complex<T>>,
    real_input: bool,
}

impl<T: SpectralReal> FourierPropagator<T> {
    pub fn new(op: &StencilOperator<T>, u0: &GridFunction<T>) -> Result<Self> {
        if op.points() != u0.len() {
            return Err(BfdError::SizeMismatch {
                expected: op.points(),
                found: u0.len(),
            });
        }
        let spectral = Spectral::new(Arc::clone(u0.grid()));
        let symbols = (0..u0.len()).map(|b| op.rhs_symbol(b)).collect();
        let coeffs = spectral.analyse(u0.values());
        Ok(Self {
            spectral,
            symbols,
            coeffs,
            real_input: u0.is_real(T::epsilon() * T::lit(16.0)),
        })
    }

    pub fn propagate(&self, t: T) -> Result<GridFunction<T>> {
        let grid = &self.spectral.grid;
        let shift = grid.wrap(t);
        let evolved: Vec<Complex<T>> = self
            .coeffs
            .iter()
            .zip(&self.symbols)
            .enumerate()
            .map(|(bin, (c, &lambda))| {
                let kappa = grid.wavenumber(self.spectral.index_of_bin(bin));
                c * evolve_factor(lambda, kappa, t, shift)
            })
            .collect();
        let mut values = self.spectral.synthesise(&evolved);
        if self.real_input {
            for v in &mut values {
                v.im = T::zero();
            }
        }
        GridFunction::new(Arc::clone(grid), values)
    }
}

/// Largest `N` accepted by [`dense_expm`].
pub const DENSE_EXPM_MAX_BLOCKS: usize = 128;

/// `exp(R t)` by scaling and squaring around a truncated Taylor series.
pub fn dense_expm<T: Real>(op: &dyn TransportOperator<T>, t: T) -> Result<DenseMatrix<T>> {
    let n = op.unknowns();
    if n > 2 * DENSE_EXPM_MAX_BLOCKS {
        return Err(BfdError::TooLarge {
            n: n / 2,
            max: DENSE_EXPM_MAX_BLOCKS,
        });
    }
    expm(&op.rhs_dense().scale(t))
}

/// Matrix exponential of a square dense matrix.
pub fn expm<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows() != a.cols() {
        return Err(BfdError::SizeMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let norm = a.norm_inf();
    if !norm.is_finite() {
        return Err(BfdError::InvalidArgument("matrix has non-finite entries".into()));
    }
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm = scaled_norm * half;
        squarings += 1;
    }
    let scaled = a.scale(T::lit(2f64.powi(-(squarings as i32))));
    let mut result = DenseMatrix::identity(a.rows());
    let mut term = DenseMatrix::identity(a.rows());
    for k in 1..=30 {
        term = term.matmul(&scaled).scale(T::one() / T::from_usize_lossy(k));
        result = result.add(&term);
        if term.max_abs() <= T::epsilon() * result.max_abs() * T::lit(1e-2) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{exact_solution_real, sample, sample_real};
    use crate::operators::BlockOperator;
    use std::f64::consts::TAU;

    fn grid(n: usize) -> Arc<BlockGrid<f64>> {
        Arc::new(BlockGrid::new(n, 1.0).unwrap())
    }

    fn smooth(x: f64) -> f64 {
        (TAU * x).cos().exp()
    }

    #[test]
    fn tree_counts() {
        let trees = rooted_trees(6);
        let mut counts = [0usize; 7];
        for t in &trees {
            counts[t.order()] += 1;
        }
        assert_eq!(&counts[1..], &[1, 1, 2, 4, 9, 20]);
    }

    #[test]
    fn butcher_tableau_is_sixth_order() {
        let rk = RkTableau::butcher6();
        assert!(rk.order_condition_defect(6) < 1e-14);
        assert_eq!(rk.verified_order(1e-12), 6);
    }

    #[test]
    fn scalar_decay_order() {
        let rk = RkTableau::butcher6();
        let lambda = Complex::new(-1.0, 8.0);
        let errs: Vec<f64> = [20usize, 40, 80, 160]
            .iter()
            .map(|&steps| {
                let dt = 1.0 / steps as f64;
                let mut u = Complex::new(1.0, 0.0);
                for _ in 0..steps {
                    let mut k: Vec<Complex<f64>> = Vec::new();
                    for i in 0..rk.stages() {
                        let mut y = u;
                        for (j, kj) in k.iter().enumerate() {
                            y += kj * rk.a_entry(i, j) * dt;
                        }
                        k.push(lambda * y);
                    }
                    for (bi, ki) in rk.b.iter().zip(&k) {
                        u += ki * bi * dt;
                    }
                }
                (u - lambda.exp()).norm()
            })
            .collect();
        let hs = [1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0];
        let fit = crate::fit::fit_loglog(&hs, &errs).unwrap();
        assert!((fit.slope - 6.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn time_step_rounding() {
        let (steps, dt) = time_steps(1.1, 0.1, 0.2).unwrap();
        assert_eq!(steps, 110);
        assert!((dt * steps as f64 - 1.1).abs() < 1e-14);
        assert!(dt <= 0.2 * 0.1 / 2.0 + 1e-15);
        assert_eq!(time_steps(0.0, 0.1, 0.2).unwrap().0, 0);
        assert!(time_steps(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn expm_of_zero_and_semigroup() {
        let g = grid(8);
        let q = BlockOperator::bfd(&g, SchemeParams::new(1.0, -0.5));
        let id = dense_expm(&q, 0.0).unwrap();
        assert_eq!(id, DenseMatrix::identity(16));
        let e1 = dense_expm(&q, 0.3).unwrap();
        let e2 = dense_expm(&q, 0.7).unwrap();
        let e12 = dense_expm(&q, 1.0).unwrap();
        assert!(e1.matmul(&e2).max_abs_diff(&e12) < 1e-10);
    }

    #[test]
    fn expm_too_large() {
        let g = Arc::new(BlockGrid::new(129, 1.0).unwrap());
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.5, 0.5));
        assert!(matches!(dense_expm(&q, 1.0), Err(BfdError::TooLarge { .. })));
    }

    #[test]
    fn modal_reconstructs_at_zero() {
        let g = grid(8);
        let u0 = sample(&g, |x| Complex::new(smooth(x), (3.0 * TAU * x).sin() * 0.3));
        for (c1, c2) in [(0.0, 0.0), (1.0, -0.5), (0.5, 0.5), (1.0, 1.0)] {
            let m = modal_decompose(&u0, SchemeParams::new(c1, c2)).unwrap();
            let back = m.propagate(0.0).unwrap();
            assert!(back.distance(&u0).unwrap().linf < 1e-12);
        }
    }

    #[test]
    fn modal_of_eigenvector_is_unit_amplitude() {
        let n = 8;
        let g = grid(n);
        let p = SchemeParams::new(1.0, -0.5);
        let decs = decompose_all(n, 1.0, p).unwrap();
        let target = &decs[5];
        let (psi1, _) = crate::symbol::build_mode_vectors(&g, target);
        // unit discrete norm -> unit continuous coefficient
        let m = modal_decompose(&psi1, p).unwrap();
        for (d, amp) in m.decompositions.iter().zip(&m.amplitudes) {
            let expect = if d.mode.omega == target.mode.omega { 1.0 } else { 0.0 };
            assert!((amp[0] - expect).norm() < 1e-12, "{:?} {amp:?}", d.mode);
            assert!(amp[1].norm() < 1e-12);
        }
    }

    #[test]
    fn modal_matches_dense_expm() {
        let g = grid(8);
        let p = SchemeParams::new(1.0, -0.5);
        let q = BlockOperator::bfd(&g, p);
        let u0 = sample_real(&g, smooth);
        let m = modal_decompose(&u0, p).unwrap();
        let modal = m.propagate(5.0).unwrap();
        let e = dense_expm(&q, 5.0).unwrap();
        let dense = u0.with_values(e.matvec(u0.values()).unwrap()).unwrap();
        let rel = modal.distance(&dense).unwrap().linf / dense.norms().linf;
        assert!(rel < 1e-9, "{rel}");
    }

    #[test]
    fn modal_matches_rk() {
        let g = grid(16);
        let p = SchemeParams::new(0.5, 0.5);
        let q = BlockOperator::bfd(&g, p);
        let u0 = sample_real(&g, smooth);
        let modal = modal_decompose(&u0, p).unwrap().propagate(1.0).unwrap();
        let rk = rk_integrate(&q, &u0, 1.0, 0.2).unwrap();
        let rel = modal.distance(&rk).unwrap().linf / modal.norms().linf;
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn skew_case_conserves_norm() {
        let g = grid(16);
        let p = SchemeParams::new(0.0, 0.0);
        let u0 = sample_real(&g, smooth);
        let m = modal_decompose(&u0, p).unwrap();
        let n0 = u0.norms().l2;
        for &t in &[0.37, 12.0, 1e4, 1e8] {
            let nt = m.propagate(t).unwrap().norms().l2;
            assert!((nt - n0).abs() < 1e-10 * n0, "t={t}");
        }
    }

    #[test]
    fn fourier_propagator_matches_rk_and_exact_shift() {
        let g = grid(16);
        let u0 = sample_real(&g, smooth);
        for order in [2, 4, 6] {
            let d = StencilOperator::central(&g, order).unwrap();
            let f = FourierPropagator::new(&d, &u0).unwrap();
            let a = f.propagate(1.0).unwrap();
            let b = rk_integrate(&d, &u0, 1.0, 0.2).unwrap();
            assert!(a.distance(&b).unwrap().linf < 1e-8 * a.norms().linf);
        }
        // a single mode evolves by its discrete symbol, even at huge times
        let d = StencilOperator::central(&g, 6).unwrap();
        let u = sample(&g, |x| cis(TAU * 3.0 * x));
        let f = FourierPropagator::new(&d, &u).unwrap();
        for &t in &[3.0, 1e4] {
            let got = f.propagate(t).unwrap();
            let factor = (d.rhs_symbol(3) * t).exp();
            let expect = u.scaled(factor);
            assert!(got.distance(&expect).unwrap().linf < 1e-10 * t.max(1.0), "t={t}");
        }
    }

    #[test]
    fn rk_detects_blow_up() {
        let g = grid(16);
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.5, 0.5));
        let u0 = sample_real(&g, smooth);
        let err = rk_integrate(&q, &u0, 2000.0, 5.0).unwrap_err();
        assert!(matches!(err, BfdError::NonFinite { .. }));
    }

    #[test]
    fn rk_converges_to_exact_solution() {
        let p = SchemeParams::new(1.0, -0.5);
        let errs: Vec<f64> = [24usize, 48]
            .iter()
            .map(|&n| {
                let g = grid(n);
                let q = BlockOperator::bfd(&g, p);
                let u0 = sample_real(&g, smooth);
                let u = rk_integrate(&q, &u0, 0.5, 0.2).unwrap();
                u.distance(&exact_solution_real(&g, smooth, 0.5)).unwrap().linf
            })
            .collect();
        assert!(errs[0] / errs[1] > 10.0, "{errs:?}");
    }
}
