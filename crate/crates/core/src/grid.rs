//! Quarter-point block grid on a periodic interval and functions sampled on it.
//!
//! The interval `[0, L)` is cut into `N` blocks of width `h = L/N`. Block `j`
//! (1-based) is centred at `x_j = h(j-1) + h/2` and carries two nodes,
//! `x_j - h/4` and `x_j + h/4`, so the 2N nodes are uniformly spaced by `h/2`
//! and neither end of the interval is a node. Values are stored interleaved:
//! `(u_{1-1/4}, u_{1+1/4}, u_{2-1/4}, ...)`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{BfdError, Result};
use crate::scalar::{real, Real};

/// Smallest block count for which the three-block stencil closes periodically.
pub const MIN_BLOCKS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid<T> {
    n: usize,
    length: T,
    h: T,
    nodes: Vec<T>,
}

impl<T: Real> BlockGrid<T> {
    /// Builds the grid with `n` blocks on `[0, length)`.
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < MIN_BLOCKS {
            return Err(BfdError::InvalidGrid(format!(
                "need at least {MIN_BLOCKS} blocks, got {n}"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(BfdError::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        let h = length / T::from_usize_lossy(n);
        let quarter = h / T::lit(4.0);
        let half_spacing = h / T::lit(2.0);
        // x_m = h/4 + m h/2, computed directly rather than accumulated.
        let nodes = (0..2 * n)
            .map(|m| quarter + T::from_usize_lossy(m) * half_spacing)
            .collect();
        Ok(Self { n, length, h, nodes })
    }

    /// Number of blocks `N`.
    pub fn blocks(&self) -> usize {
        self.n
    }

    /// Number of nodes, `2N`.
    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Block width `h`.
    pub fn h(&self) -> T {
        self.h
    }

    /// Node spacing `h/2`.
    pub fn spacing(&self) -> T {
        self.h / T::lit(2.0)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Block centre `x_j` for 1-based `j`.
    pub fn centre(&self, j: usize) -> T {
        self.h * T::from_usize_lossy(j - 1) + self.h / T::lit(2.0)
    }

    /// Physical wavenumber `2 pi k / L` of integer mode index `k`.
    pub fn wavenumber(&self, k: i64) -> T {
        T::TAU() * T::from_i64_lossy(k) / self.length
    }

    /// Dimensionless phase `theta = (2 pi k / L) h` of mode index `k`.
    pub fn theta_h(&self, k: i64) -> T {
        T::TAU() * T::from_i64_lossy(k) / T::from_usize_lossy(self.n)
    }

    /// Wraps `x` into `[0, L)`.
    pub fn wrap(&self, x: T) -> T {
        let r = x % self.length;
        if r < T::zero() {
            r + self.length
        } else {
            r
        }
    }
}

/// Complex nodal values bound to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Arc<BlockGrid<T>>,
    values: Vec<Complex<T>>,
}

/// Discrete norms of a grid function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    /// `sqrt((h/2) sum |u|^2)`.
    pub l2: T,
    /// `max |u|`.
    pub linf: T,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Arc<BlockGrid<T>>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(BfdError::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<BlockGrid<T>>) -> Self {
        let values = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<BlockGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<Complex<T>>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values)
    }

    pub fn norms(&self) -> Norms<T> {
        norms_of(&self.values, self.grid.spacing())
    }

    /// Norms of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<Norms<T>> {
        if other.len() != self.len() {
            return Err(BfdError::SizeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let diff: Vec<_> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(norms_of(&diff, self.grid.spacing()))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Whether every imaginary part is below `tol` times the largest modulus.
    pub fn is_real(&self, tol: T) -> bool {
        let scale = self.norms().linf.max(T::min_positive_value());
        self.values.iter().all(|v| v.im.abs() <= tol * scale)
    }

    /// Nodal values in a real-valued copy (imaginary parts dropped).
    pub fn real_parts(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }
}

pub(crate) fn norms_of<T: Real>(values: &[Complex<T>], spacing: T) -> Norms<T> {
    let mut sum = T::zero();
    let mut linf = T::zero();
    for v in values {
        let m = v.norm();
        sum += m * m;
        linf = linf.max(m);
    }
    Norms {
        l2: (spacing * sum).sqrt(),
        linf,
    }
}

/// Samples a complex-valued function at the grid nodes.
pub fn sample<T: Real, F>(grid: &Arc<BlockGrid<T>>, f: F) -> GridFunction<T>
where
    F: Fn(T) -> Complex<T>,
{
    GridFunction {
        grid: Arc::clone(grid),
        values: grid.nodes().iter().map(|&x| f(x)).collect(),
    }
}

/// Samples a real-valued function at the grid nodes.
pub fn sample_real<T: Real, F>(grid: &Arc<BlockGrid<T>>, f: F) -> GridFunction<T>
where
    F: Fn(T) -> T,
{
    sample(grid, |x| real(f(x)))
}

/// Exact solution `f(x - t)` of `u_t + u_x = 0` with `L`-periodic data `f`.
pub fn exact_solution<T: Real, F>(grid: &Arc<BlockGrid<T>>, f: F, t: T) -> GridFunction<T>
where
    F: Fn(T) -> Complex<T>,
{
    let shift = grid.wrap(t);
    sample(grid, |x| f(grid.wrap(x - shift)))
}

/// Real-valued convenience wrapper around [`exact_solution`].
pub fn exact_solution_real<T: Real, F>(grid: &Arc<BlockGrid<T>>, f: F, t: T) -> GridFunction<T>
where
    F: Fn(T) -> T,
{
    exact_solution(grid, |x| real(f(x)), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Arc<BlockGrid<f64>> {
        Arc::new(BlockGrid::new(n, l).unwrap())
    }

    #[test]
    fn four_blocks_on_two_pi() {
        let g = grid(4, 2.0 * PI);
        assert!((g.h() - PI / 2.0).abs() < 1e-15);
        assert!((g.nodes()[0] - PI / 8.0).abs() < 1e-15);
        assert!((g.nodes()[7] - (2.0 * PI - PI / 8.0)).abs() < 1e-14);
        assert!((g.centre(1) - PI / 4.0).abs() < 1e-15);
        assert!((g.nodes()[0] - (g.centre(1) - g.h() / 4.0)).abs() < 1e-15);
        assert!((g.nodes()[1] - (g.centre(1) + g.h() / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_or_bad_domains() {
        assert!(matches!(BlockGrid::new(1, 1.0), Err(BfdError::InvalidGrid(_))));
        assert!(matches!(BlockGrid::new(2, 1.0), Err(BfdError::InvalidGrid(_))));
        assert!(BlockGrid::new(3, 0.0).is_err());
        assert!(BlockGrid::new(3, -1.0).is_err());
        assert!(BlockGrid::new(3, f64::NAN).is_err());
    }

    #[test]
    fn forty_eight_blocks_on_unit_interval() {
        let g = grid(48, 1.0);
        assert_eq!(g.len(), 96);
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - 1.0 / 96.0).abs() < 1e-15);
        }
        assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() < 1.0);
        assert!((g.nodes()[95] - (1.0 - 1.0 / 192.0)).abs() < 1e-15);
    }

    #[test]
    fn norms_of_simple_vectors() {
        let g = grid(4, 2.0 * PI);
        let ones = sample_real(&g, |_| 1.0);
        let n = ones.norms();
        assert!((n.l2 - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert_eq!(n.linf, 1.0);
        let zero = GridFunction::zeros(Arc::clone(&g)).norms();
        assert_eq!((zero.l2, zero.linf), (0.0, 0.0));
    }

    #[test]
    fn fourier_mode_has_unit_modulus_and_sqrt_l_norm() {
        let g = grid(12, 3.0);
        let w = g.wavenumber(1);
        let u = sample(&g, |x| cis(w * x));
        for v in u.values() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
        assert!((u.norms().l2 - 3.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn exact_solution_is_periodic_in_time() {
        let g = grid(48, 1.0);
        let f = |x: f64| (2.0 * PI * x).cos().exp();
        let u0 = sample_real(&g, f);
        let u1 = exact_solution_real(&g, f, 1.0);
        let d = u0.distance(&u1).unwrap();
        assert!(d.linf < 1e-12);
        let at0 = exact_solution_real(&g, f, 0.0);
        assert_eq!(at0, u0);
        for &t in &[0.3, -2.7, 17.25] {
            let a = exact_solution_real(&g, f, t);
            let b = exact_solution_real(&g, f, t + 1.0);
            assert!(a.distance(&b).unwrap().linf < 1e-12 * a.norms().linf);
        }
    }

    #[test]
    fn single_precision_grid() {
        let g = BlockGrid::<f32>::new(8, 1.0).unwrap();
        assert_eq!(g.len(), 16);
        assert!((g.nodes()[0] - 1.0 / 32.0).abs() < 1e-7);
    }

    #[test]
    fn value_count_is_checked() {
        let g = grid(4, 1.0);
        let err = GridFunction::new(g, vec![Complex::new(0.0, 0.0); 7]).unwrap_err();
        assert_eq!(err, BfdError::SizeMismatch { expected: 8, found: 7 });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn spacing_sums_to_length(n in 3usize..300, l in 0.1f64..50.0) {
                let g = BlockGrid::new(n, l).unwrap();
                let nodes = g.nodes();
                let inner: f64 = nodes.windows(2).map(|w| w[1] - w[0]).sum();
                // closing gap across the periodic boundary
                let wrap = nodes[0] + (l - nodes[nodes.len() - 1]);
                prop_assert!((inner + wrap - l).abs() < 1e-12 * l);
                prop_assert!(nodes[0] > 0.0 && nodes[nodes.len() - 1] < l);
                for w in nodes.windows(2) {
                    prop_assert!(w[1] > w[0]);
                }
            }

            #[test]
            fn l2_norm_is_homogeneous(n in 3usize..40, re in -5.0f64..5.0, im in -5.0f64..5.0) {
                let g = grid(n, 1.0);
                let u = sample_real(&g, |x| (3.0 * x).sin() + 0.5);
                let c = Complex::new(re, im);
                let lhs = u.scaled(c).norms().l2;
                let rhs = c.norm() * u.norms().l2;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
            }
        }
    }
}
