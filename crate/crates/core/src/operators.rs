//! Spatial operators on the block grid.
//!
//! [`BlockOperator`] holds a periodic block-tridiagonal operator through its
//! three 2x2 blocks: row-block `j` reads `A u_{j-1} + B u_j + C u_{j+1}`, where
//! `u_j = (u_{j-1/4}, u_{j+1/4})`. It is the right-hand side of the
//! semi-discrete transport system `u_t = Q u`, so for smooth data `Q u ~ -u_x`.
//!
//! [`StencilOperator`] is a classical central difference for `u_x` on the
//! uniform `h/2` spacing. It keeps the textbook sign; [`TransportOperator`]
//! turns either kind into a right-hand side.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{BfdError, Result};
use crate::fit::{fit_loglog_with_floor, LogLogFit};
use crate::grid::{sample_real, BlockGrid, GridFunction};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// 2x2 block, row-major.
pub type Block<T> = [[T; 2]; 2];

/// Coefficients of the two oscillatory correction stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams<T> {
    pub c1: T,
    pub c2: T,
}

impl<T: Real> SchemeParams<T> {
    pub fn new(c1: T, c2: T) -> Self {
        Self { c1, c2 }
    }

    /// The scheme is stable iff `c1 >= c2`.
    pub fn is_stable(&self) -> bool {
        self.c1 >= self.c2
    }

    /// `c1 + c2 = 0` removes the `h^3` term of the truncation error.
    pub fn is_fourth_order_truncation(&self) -> bool {
        (self.c1 + self.c2).abs() <= T::epsilon() * T::lit(16.0) * (T::one() + self.c1.abs())
    }
}

/// Periodic block-tridiagonal operator with blocks `A` (left), `B` (diagonal), `C` (right).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator<T> {
    n: usize,
    h: T,
    a: Block<T>,
    b: Block<T>,
    c: Block<T>,
    label: String,
}

fn scale_block<T: Real>(block: [[f64; 2]; 2], factor: T, shift: [[T; 2]; 2]) -> Block<T> {
    let mut out = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (T::lit(block[i][j]) + shift[i][j]) * factor;
        }
    }
    out
}

impl<T: Real> BlockOperator<T> {
    pub fn from_blocks(
        n: usize,
        h: T,
        a: Block<T>,
        b: Block<T>,
        c: Block<T>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            n,
            h,
            a,
            b,
            c,
            label: label.into(),
        }
    }

    /// The block finite difference operator `Q(c1, c2)`.
    pub fn bfd(grid: &BlockGrid<T>, params: SchemeParams<T>) -> Self {
        let n = grid.blocks();
        let h = grid.h();
        let SchemeParams { c1, c2 } = params;
        let k = T::one() / (T::lit(6.0) * h);
        let f = T::lit;
        let a = scale_block(
            [[-1.0, 8.0], [0.0, -1.0]],
            k,
            [[-c1, f(4.0) * c1 - c2], [c1, -f(4.0) * c1 + c2]],
        );
        let b = scale_block(
            [[0.0, -8.0], [8.0, 0.0]],
            k,
            [
                [-f(6.0) * c1 + f(4.0) * c2, f(4.0) * c1 - f(6.0) * c2],
                [f(6.0) * c1 - f(4.0) * c2, -f(4.0) * c1 + f(6.0) * c2],
            ],
        );
        let c = scale_block(
            [[1.0, 0.0], [-8.0, 1.0]],
            k,
            [[-c1 + f(4.0) * c2, -c2], [c1 - f(4.0) * c2, c2]],
        );
        Self::from_blocks(n, h, a, b, c, format!("bfd(c1={c1}, c2={c2})"))
    }

    pub fn blocks(&self) -> usize {
        self.n
    }

    pub fn unknowns(&self) -> usize {
        2 * self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn a(&self) -> &Block<T> {
        &self.a
    }

    pub fn b(&self) -> &Block<T> {
        &self.b
    }

    pub fn c(&self) -> &Block<T> {
        &self.c
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest entrywise difference between the blocks of two operators.
    pub fn max_block_diff(&self, other: &Self) -> T {
        let pairs = [(&self.a, &other.a), (&self.b, &other.b), (&self.c, &other.c)];
        let mut m = T::zero();
        for (x, y) in pairs {
            for i in 0..2 {
                for j in 0..2 {
                    m = m.max((x[i][j] - y[i][j]).abs());
                }
            }
        }
        m
    }

    /// Largest block entry in absolute value.
    pub fn max_abs_entry(&self) -> T {
        [&self.a, &self.b, &self.c]
            .iter()
            .flat_map(|blk| blk.iter().flatten())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Writes `Q x` into `out`. Both slices must have length `2N`.
    pub fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        let len = self.unknowns();
        if x.len() != len || out.len() != len {
            return Err(BfdError::SizeMismatch {
                expected: len,
                found: if x.len() != len { x.len() } else { out.len() },
            });
        }
        let n = self.n;
        for j in 0..n {
            let left = ((j + n - 1) % n) * 2;
            let mid = j * 2;
            let right = ((j + 1) % n) * 2;
            for r in 0..2 {
                out[mid + r] = x[left].scale(self.a[r][0])
                    + x[left + 1].scale(self.a[r][1])
                    + x[mid].scale(self.b[r][0])
                    + x[mid + 1].scale(self.b[r][1])
                    + x[right].scale(self.c[r][0])
                    + x[right + 1].scale(self.c[r][1]);
            }
        }
        Ok(())
    }

    pub fn apply(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); u.len()];
        self.apply_into(u.values(), &mut out)?;
        u.with_values(out)
    }

    /// Explicit block-circulant matrix with first block-row `(B, C, 0, ..., 0, A)`.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.n;
        let mut m = DenseMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for (block, col_block) in [
                (&self.a, (j + n - 1) % n),
                (&self.b, j),
                (&self.c, (j + 1) % n),
            ] {
                for r in 0..2 {
                    for s in 0..2 {
                        m[(2 * j + r, 2 * col_block + s)] += block[r][s];
                    }
                }
            }
        }
        m
    }
}

/// `Q(c1, c2)` assembled as the sum of the three periodic stencils acting on
/// the node sequence, in derivative form (`D u ~ +u_x`, so `Q = -D`).
///
/// Row `j-1/4` and row `j+1/4` use different correction stencils; the
/// assembly walks node offsets directly and never touches the block form,
/// which makes it an independent check on [`BlockOperator::bfd`].
pub fn bfd_stencil_form<T: Real>(grid: &BlockGrid<T>, params: SchemeParams<T>) -> DenseMatrix<T> {
    // (offset, weight) in units of node index, for the node's own row.
    const CENTRAL: [(i64, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    const C1_LOWER: [(i64, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
    const C1_UPPER: [(i64, f64); 5] = [(-3, -1.0), (-2, 4.0), (-1, -6.0), (0, 4.0), (1, -1.0)];
    const C2_LOWER: [(i64, f64); 5] = [(-1, 1.0), (0, -4.0), (1, 6.0), (2, -4.0), (3, 1.0)];
    const C2_UPPER: [(i64, f64); 5] = [(-2, -1.0), (-1, 4.0), (0, -6.0), (1, 4.0), (2, -1.0)];

    let len = grid.len() as i64;
    let k = T::one() / (T::lit(6.0) * grid.h());
    let mut m = DenseMatrix::zeros(grid.len(), grid.len());
    for row in 0..len {
        let (c1_stencil, c2_stencil) = if row % 2 == 0 {
            (&C1_LOWER, &C2_LOWER)
        } else {
            (&C1_UPPER, &C2_UPPER)
        };
        let mut put = |offset: i64, w: T| {
            let col = (row + offset).rem_euclid(len) as usize;
            m[(row as usize, col)] += w * k;
        };
        for &(o, w) in &CENTRAL {
            put(o, T::lit(w));
        }
        for &(o, w) in c1_stencil {
            put(o, params.c1 * T::lit(w));
        }
        for &(o, w) in c2_stencil {
            put(o, params.c2 * T::lit(w));
        }
    }
    m
}

/// Classical periodic central difference for `u_x` on uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator<T> {
    order: usize,
    /// Weights for offsets `-half..=half`, already divided by the spacing.
    weights: Vec<T>,
    spacing: T,
    points: usize,
}

impl<T: Real> StencilOperator<T> {
    /// Central difference of `order` 2, 4 or 6 on the grid's `h/2` spacing.
    pub fn central(grid: &BlockGrid<T>, order: usize) -> Result<Self> {
        let (numerators, denominator): (&[f64], f64) = match order {
            2 => (&[-1.0, 0.0, 1.0], 2.0),
            4 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
            6 => (&[-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0], 60.0),
            other => return Err(BfdError::UnsupportedOrder(other)),
        };
        let points = grid.len();
        if points <= numerators.len() {
            return Err(BfdError::InvalidGrid(format!(
                "{points} nodes cannot hold a {}-point stencil periodically",
                numerators.len()
            )));
        }
        let spacing = grid.spacing();
        let weights = numerators
            .iter()
            .map(|&w| T::lit(w) / (T::lit(denominator) * spacing))
            .collect();
        Ok(Self {
            order,
            weights,
            spacing,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn points(&self) -> usize {
        self.points
    }

    fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        if x.len() != self.points || out.len() != self.points {
            return Err(BfdError::SizeMismatch {
                expected: self.points,
                found: if x.len() != self.points { x.len() } else { out.len() },
            });
        }
        let n = self.points;
        let half = self.half_width();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, &w) in self.weights.iter().enumerate() {
                if w != T::zero() {
                    acc += x[(i + n + k - half) % n].scale(w);
                }
            }
            *o = acc;
        }
        Ok(())
    }

    /// `D u`, the derivative approximation.
    pub fn apply(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); u.len()];
        self.apply_into(u.values(), &mut out)?;
        u.with_values(out)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.points;
        let half = self.half_width();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for (k, &w) in self.weights.iter().enumerate() {
                m[(i, (i + n + k - half) % n)] += w;
            }
        }
        m
    }

    /// Fourier symbol of the transport right-hand side `-D` at DFT bin `bin`
    /// of a length-`points` transform: `-(sum_k w_k e^{2 pi i bin k / points})`.
    pub fn rhs_symbol(&self, bin: usize) -> Complex<T> {
        let n = T::from_usize_lossy(self.points);
        let half = self.half_width() as i64;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, &w) in self.weights.iter().enumerate() {
            let offset = k as i64 - half;
            let phase = T::TAU() * T::from_usize_lossy(bin) * T::from_i64_lossy(offset) / n;
            acc += Complex::new(phase.cos(), phase.sin()).scale(w);
        }
        -acc
    }
}

/// A linear spatial discretisation usable as the right-hand side of `u_t = R u`.
pub trait TransportOperator<T: Real>: Send + Sync {
    fn unknowns(&self) -> usize;
    fn rhs_into(&self, u: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()>;
    fn describe(&self) -> String;

    /// Dense matrix of the right-hand side.
    fn rhs_dense(&self) -> DenseMatrix<T>;
}

impl<T: Real> TransportOperator<T> for BlockOperator<T> {
    fn unknowns(&self) -> usize {
        BlockOperator::unknowns(self)
    }

    fn rhs_into(&self, u: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        self.apply_into(u, out)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }

    fn rhs_dense(&self) -> DenseMatrix<T> {
        self.to_dense()
    }
}

impl<T: Real> TransportOperator<T> for StencilOperator<T> {
    fn unknowns(&self) -> usize {
        self.points
    }

    fn rhs_into(&self, u: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        self.apply_into(u, out)?;
        for v in out.iter_mut() {
            *v = -*v;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("fd(order={})", self.order)
    }

    fn rhs_dense(&self) -> DenseMatrix<T> {
        self.to_dense().scale(-T::one())
    }
}

/// Truncation error of `Q` per node family.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationOrder {
    /// `(N, h, max error on j-1/4 nodes, max error on j+1/4 nodes)`.
    pub rows: Vec<(usize, f64, f64, f64)>,
    pub lower: LogLogFit,
    pub upper: LogLogFit,
}

impl TruncationOrder {
    /// Order of the scheme as a whole: the worse of the two families.
    pub fn order(&self) -> f64 {
        self.lower.slope.min(self.upper.slope)
    }
}

/// Measures the truncation order of `Q(c1, c2)` on `[0, length)`.
///
/// `f` and its exact derivative `df` are supplied by the caller; the error at
/// each node is `(Q u)_i + u'(x_i)` because `Q` approximates `-d/dx`.
pub fn measure_truncation_order<T, F, G>(
    params: SchemeParams<T>,
    f: F,
    df: G,
    n_list: &[usize],
    length: T,
) -> Result<TruncationOrder>
where
    T: Real,
    F: Fn(T) -> T,
    G: Fn(T) -> T,
{
    if n_list.len() < 4 {
        return Err(BfdError::InvalidArgument(format!(
            "truncation fit needs at least 4 grid sizes, got {}",
            n_list.len()
        )));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut scale = 0.0f64;
    for &n in n_list {
        let grid = Arc::new(BlockGrid::new(n, length)?);
        let q = BlockOperator::bfd(&grid, params);
        let u = sample_real(&grid, &f);
        let qu = q.apply(&u)?;
        let mut err = [0.0f64; 2];
        for (i, (v, &x)) in qu.values().iter().zip(grid.nodes()).enumerate() {
            let d = df(x);
            scale = scale.max(d.abs().to_f64_lossy());
            let e = (v.re + d).abs().to_f64_lossy().max(v.im.abs().to_f64_lossy());
            err[i % 2] = err[i % 2].max(e);
        }
        rows.push((n, grid.h().to_f64_lossy(), err[0], err[1]));
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let lower: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let upper: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let floor = 1e3 * T::epsilon().to_f64_lossy() * scale.max(1.0) * (n_list[n_list.len() - 1] as f64);
    Ok(TruncationOrder {
        lower: fit_loglog_with_floor(&hs, &lower, floor)?,
        upper: fit_loglog_with_floor(&hs, &upper, floor)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use crate::scalar::cis;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Arc<BlockGrid<f64>> {
        Arc::new(BlockGrid::new(n, l).unwrap())
    }

    #[test]
    fn central_blocks_match_published_form() {
        let g = grid(5, 2.0);
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.0, 0.0));
        let k = 1.0 / (6.0 * g.h());
        let expect_a = [[-1.0, 8.0], [0.0, -1.0]];
        let expect_b = [[0.0, -8.0], [8.0, 0.0]];
        let expect_c = [[1.0, 0.0], [-8.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.a()[i][j] - k * expect_a[i][j]).abs() < 1e-14);
                assert!((q.b()[i][j] - k * expect_b[i][j]).abs() < 1e-14);
                assert!((q.c()[i][j] - k * expect_c[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn general_blocks_entrywise() {
        let g = grid(6, 1.0);
        let (c1, c2) = (0.7, -0.3);
        let q = BlockOperator::bfd(&g, SchemeParams::new(c1, c2));
        let k = 1.0 / (6.0 * g.h());
        let a = [[-1.0 - c1, 8.0 + 4.0 * c1 - c2], [c1, -1.0 - 4.0 * c1 + c2]];
        let b = [
            [-6.0 * c1 + 4.0 * c2, -8.0 + 4.0 * c1 - 6.0 * c2],
            [8.0 + 6.0 * c1 - 4.0 * c2, -4.0 * c1 + 6.0 * c2],
        ];
        let c = [[1.0 - c1 + 4.0 * c2, -c2], [-8.0 + c1 - 4.0 * c2, 1.0 + c2]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.a()[i][j] - k * a[i][j]).abs() < 1e-13);
                assert!((q.b()[i][j] - k * b[i][j]).abs() < 1e-13);
                assert!((q.c()[i][j] - k * c[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn central_scheme_is_standard_fourth_order_stencil() {
        let g = grid(7, 1.0);
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.0, 0.0)).to_dense();
        let fd4 = StencilOperator::central(&g, 4).unwrap().to_dense();
        assert!(q.max_abs_diff(&fd4.scale(-1.0)) < 1e-12 * fd4.max_abs());
    }

    #[test]
    fn dense_form_of_three_blocks() {
        let g = grid(3, 1.0);
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.0, 0.0));
        let d = q.to_dense();
        let k = 1.0 / (6.0 * g.h());
        for i in 0..6 {
            let mut entries: Vec<f64> = d.row(i).iter().map(|v| v / k).filter(|v| v.abs() > 1e-12).collect();
            entries.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(entries, vec![-8.0, -1.0, 1.0, 8.0], "row {i}");
            assert!(d.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
        let tr_b = q.b()[0][0] + q.b()[1][1];
        assert!((d.trace() - 3.0 * tr_b).abs() < 1e-12);
    }

    #[test]
    fn dense_and_banded_products_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let g = grid(6, 1.0);
        let q = BlockOperator::bfd(&g, SchemeParams::new(0.4, -0.9));
        let x: Vec<Complex<f64>> = (0..12)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut banded = vec![Complex::new(0.0, 0.0); 12];
        q.apply_into(&x, &mut banded).unwrap();
        let dense = q.to_dense().matvec(&x).unwrap();
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (a, b) in banded.iter().zip(&dense) {
            assert!((a - b).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let q = BlockOperator::bfd(&grid(4, 1.0), SchemeParams::new(0.5, 0.5));
        let u = sample(&grid(5, 1.0), |_| Complex::new(1.0, 0.0));
        assert!(matches!(q.apply(&u), Err(BfdError::SizeMismatch { .. })));
        let fd = StencilOperator::central(&grid(4, 1.0), 2).unwrap();
        assert!(fd.apply(&u).is_err());
    }

    #[test]
    fn fourier_mode_differentiated_to_fourth_order() {
        // Q e^{iwx} ~ -iw e^{iwx} with an O(h^4) defect.
        let mut defects = Vec::new();
        for &n in &[16usize, 32, 64] {
            let g = grid(n, 1.0);
            let w = g.wavenumber(1);
            let u = sample(&g, |x| cis(w * x));
            let qu = BlockOperator::bfd(&g, SchemeParams::new(0.0, 0.0)).apply(&u).unwrap();
            let d = qu
                .values()
                .iter()
                .zip(u.values())
                .map(|(q, v)| (q - v * Complex::new(0.0, -w)).norm())
                .fold(0.0f64, f64::max);
            defects.push(d);
        }
        for pair in defects.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((ratio.log2() - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn standard_stencils() {
        let g = grid(8, 1.0);
        let d = g.spacing();
        let s2 = StencilOperator::central(&g, 2).unwrap();
        assert_eq!(s2.weights().len(), 3);
        assert!((s2.weights()[2] - 1.0 / (2.0 * d)).abs() < 1e-12);
        let s4 = StencilOperator::central(&g, 4).unwrap();
        assert!((s4.weights()[0] - 1.0 / (12.0 * d)).abs() < 1e-12);
        assert!(matches!(StencilOperator::central(&g, 3), Err(BfdError::UnsupportedOrder(3))));
        let tiny = BlockGrid::new(3, 1.0).unwrap();
        assert!(StencilOperator::central(&tiny, 6).is_err());
    }

    /// Solves the Vandermonde system `sum_k w_k k^p = delta_{p,1}` for
    /// offsets `-3..=3`, an independent derivation of the 6th-order weights.
    #[test]
    fn sixth_order_weights_from_vandermonde() {
        let offsets: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let mut m = DenseMatrix::zeros(7, 7);
        let mut rhs = vec![0.0; 7];
        for p in 0..7 {
            for (k, &o) in offsets.iter().enumerate() {
                m[(p, k)] = o.powi(p as i32);
            }
        }
        rhs[1] = 1.0;
        let w = crate::linalg::solve(&m, &rhs).unwrap();
        let expected = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b / 60.0).abs() < 1e-13, "{a} vs {}", b / 60.0);
        }
        let g = grid(8, 1.0);
        let s6 = StencilOperator::central(&g, 6).unwrap();
        for (a, b) in s6.weights().iter().zip(&w) {
            assert!((a * g.spacing() - b).abs() < 1e-13);
        }
    }

    #[test]
    fn stencil_orders_on_smooth_data() {
        for order in [2usize, 4, 6] {
            let mut errs = Vec::new();
            let mut hs = Vec::new();
            for &n in &[16usize, 24, 32, 48] {
                let g = grid(n, 1.0);
                let u = sample_real(&g, |x| (2.0 * PI * x).sin());
                let du = StencilOperator::central(&g, order).unwrap().apply(&u).unwrap();
                let e = du
                    .values()
                    .iter()
                    .zip(g.nodes())
                    .map(|(v, &x)| (v.re - 2.0 * PI * (2.0 * PI * x).cos()).abs())
                    .fold(0.0, f64::max);
                errs.push(e);
                hs.push(g.h());
            }
            let fit = crate::fit::fit_loglog(&hs, &errs).unwrap();
            assert!((fit.slope - order as f64).abs() < 0.1, "order {order}: {}", fit.slope);
        }
    }

    #[test]
    fn rhs_symbol_matches_fourier_application() {
        let g = grid(6, 1.0);
        let s = StencilOperator::central(&g, 6).unwrap();
        for bin in 0..12usize {
            let u: Vec<Complex<f64>> = (0..12)
                .map(|m| cis(2.0 * PI * (bin * m) as f64 / 12.0))
                .collect();
            let mut out = vec![Complex::new(0.0, 0.0); 12];
            s.rhs_into(&u, &mut out).unwrap();
            let sym = s.rhs_symbol(bin);
            for (o, v) in out.iter().zip(&u) {
                assert!((o - sym * v).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn truncation_orders() {
        let f = |x: f64| (2.0 * PI * x).cos().exp();
        let df = |x: f64| -2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * x).cos().exp();
        let ns = [48, 60, 72, 96, 120, 144];
        let third = measure_truncation_order(SchemeParams::new(0.5, 0.5), f, df, &ns, 1.0).unwrap();
        assert!((third.order() - 3.0).abs() < 0.25, "{third:?}");
        let fourth = measure_truncation_order(SchemeParams::new(0.5, -0.5), f, df, &ns, 1.0).unwrap();
        assert!((fourth.order() - 4.0).abs() < 0.25, "{fourth:?}");
        let central = measure_truncation_order(SchemeParams::new(0.0, 0.0), f, df, &ns, 1.0).unwrap();
        assert!((central.order() - 4.0).abs() < 0.25);
        assert!(measure_truncation_order(SchemeParams::new(0.0, 0.0), f, df, &ns[..3], 1.0).is_err());
    }

    /// Leading term for c1 = c2 = 0 is `-(1/480) h^4 u^(5)` in derivative form,
    /// so the right-hand side defect is `+(1/480) h^4 u^(5)`.
    #[test]
    fn central_truncation_leading_coefficient() {
        let n = 64;
        let g = grid(n, 1.0);
        let k = 2.0 * PI;
        let u = sample_real(&g, |x| (k * x).sin());
        let qu = BlockOperator::bfd(&g, SchemeParams::new(0.0, 0.0)).apply(&u).unwrap();
        let h = g.h();
        for (v, &x) in qu.values().iter().zip(g.nodes()) {
            let defect = v.re + k * (k * x).cos();
            let u5 = k.powi(5) * (k * x).cos();
            let predicted = h.powi(4) * u5 / 480.0;
            assert!((defect - predicted).abs() <= 0.02 * k.powi(5) * h.powi(4) / 480.0 + 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constants_are_annihilated(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, n in 3usize..20) {
                let g = grid(n, 1.0);
                let q = BlockOperator::bfd(&g, SchemeParams::new(c1, c2));
                let ones = sample_real(&g, |_| 1.0);
                let out = q.apply(&ones).unwrap();
                prop_assert!(out.norms().linf <= 1e-13 / g.h());
            }

            #[test]
            fn dense_is_block_circulant(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, n in 3usize..12) {
                let g = grid(n, 1.0);
                let d = BlockOperator::bfd(&g, SchemeParams::new(c1, c2)).to_dense();
                let m = 2 * n;
                for j in 1..n {
                    for r in 0..2 {
                        for col in 0..m {
                            let first = d[(r, col)];
                            let shifted = d[(2 * j + r, (col + 2 * j) % m)];
                            prop_assert!((first - shifted).abs() < 1e-12);
                        }
                    }
                }
            }

            #[test]
            fn stencil_form_is_minus_block_form(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
                let g = grid(8, 1.0);
                let p = SchemeParams::new(c1, c2);
                let blocks = BlockOperator::bfd(&g, p).to_dense();
                let stencils = bfd_stencil_form(&g, p);
                prop_assert!(blocks.max_abs_diff(&stencils.scale(-1.0)) <= 1e-14 * blocks.max_abs());
            }
        }
    }
}
