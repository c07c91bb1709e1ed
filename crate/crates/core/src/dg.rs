//! The `p = 1` nodal discontinuous Galerkin scheme and its penalised form.
//!
//! Each cell `I_j = [x_{j-1/2}, x_{j+1/2}]` carries a linear function stored
//! by its values at the two interior nodes `x_{j-1/4}`, `x_{j+1/4}`, which are
//! exactly the block-grid nodes. The semi-discrete DG scheme is therefore a
//! block operator of the same shape as the BFD scheme, and with the right
//! interface penalties the two coincide.

use crate::error::{BfdError, Result};
use crate::grid::BlockGrid;
use crate::linalg::{least_squares, DenseMatrix};
use crate::operators::{Block, BlockOperator, SchemeParams};
use crate::scalar::Real;

/// Interface penalty weights.
///
/// `C` and `D` multiply jumps tested against the trace of `v` at the right and
/// left cell edge, `E` and `F` the same jumps tested against `v_x`. Index 1
/// refers to jumps of `u`, index 2 to jumps of `h u_x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PenaltyCoefficients<T> {
    pub c1: T,
    pub c2: T,
    pub d1: T,
    pub d2: T,
    pub e1: T,
    pub e2: T,
    pub f1: T,
    pub f2: T,
}

impl<T: Real> PenaltyCoefficients<T> {
    pub fn zero() -> Self {
        Self::from_array([T::zero(); 8])
    }

    /// Order: `C1, C2, D1, D2, E1, E2, F1, F2`.
    pub fn to_array(&self) -> [T; 8] {
        [
            self.c1, self.c2, self.d1, self.d2, self.e1, self.e2, self.f1, self.f2,
        ]
    }

    pub fn from_array(v: [T; 8]) -> Self {
        Self {
            c1: v[0],
            c2: v[1],
            d1: v[2],
            d2: v[3],
            e1: v[4],
            e2: v[5],
            f1: v[6],
            f2: v[7],
        }
    }

    /// The penalties that turn the DG scheme into the BFD scheme `Q(c1, c2)`.
    pub fn closed_form(params: SchemeParams<T>) -> Self {
        let SchemeParams { c1, c2 } = params;
        let f = T::lit;
        Self {
            c1: f(-0.5),
            c2: -T::one() / f(12.0),
            d1: f(-0.5),
            d2: -T::one() / f(12.0),
            e1: (f(2.0) * c1 - f(6.0) * c2 + T::one()) / f(36.0),
            e2: (c1 - c2) / f(72.0),
            f1: (-f(6.0) * c1 + f(2.0) * c2 + T::one()) / f(36.0),
            f2: (c1 - c2) / f(72.0),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(T::zero(), |m, (a, b)| m.max((*a - b).abs()))
    }
}

/// Semi-discrete DG operator in block form, `u_j' = A u_{j-1} + B u_j + C u_{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgBlocks<T> {
    pub a: Block<T>,
    pub b: Block<T>,
    pub c: Block<T>,
    pub h: T,
}

impl<T: Real> DgBlocks<T> {
    pub fn to_operator(&self, grid: &BlockGrid<T>, label: impl Into<String>) -> BlockOperator<T> {
        BlockOperator::from_blocks(grid.blocks(), self.h, self.a, self.b, self.c, label)
    }

    pub fn from_operator(op: &BlockOperator<T>) -> Self {
        Self {
            a: *op.a(),
            b: *op.b(),
            c: *op.c(),
            h: op.h(),
        }
    }

    /// The twelve block entries, `A` then `B` then `C`, row-major.
    pub fn entries(&self) -> [T; 12] {
        let mut out = [T::zero(); 12];
        for (k, blk) in [&self.a, &self.b, &self.c].iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    out[4 * k + 2 * i + j] = blk[i][j];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries()
            .iter()
            .zip(other.entries())
            .fold(T::zero(), |m, (a, b)| m.max((*a - b).abs()))
    }

    pub fn max_abs_entry(&self) -> T {
        self.entries().iter().fold(T::zero(), |m, a| m.max(a.abs()))
    }
}

/// The two nodal Lagrange basis functions of a cell of width `h`.
///
/// With `s = (x - x_j) / h`, `phi_minus = 1/2 - 2 s` (unity at `x_{j-1/4}`) and
/// `phi_plus = 1/2 + 2 s` (unity at `x_{j+1/4}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBasis<T> {
    pub h: T,
    /// `[phi_minus, phi_plus]` at `x_{j-1/4}` and `x_{j+1/4}`.
    pub node_values: [[T; 2]; 2],
    /// `[phi_minus', phi_plus']`.
    pub slopes: [T; 2],
    /// `[phi_minus, phi_plus]` at the left edge `x_{j-1/2}`.
    pub left_trace: [T; 2],
    /// `[phi_minus, phi_plus]` at the right edge `x_{j+1/2}`.
    pub right_trace: [T; 2],
    pub mass: [[T; 2]; 2],
}

impl<T: Real> ElementBasis<T> {
    /// `[phi_minus(s), phi_plus(s)]` at local coordinate `s`.
    pub fn eval(&self, s: T) -> [T; 2] {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        [half - two * s, half + two * s]
    }

    pub fn mass_inverse(&self) -> [[T; 2]; 2] {
        let m = &self.mass;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    }
}

/// Two-point Gauss rule on `s in [-1/2, 1/2]`: nodes and weights in `s`.
fn gauss2<T: Real>() -> [(T, T); 2] {
    let s = T::one() / (T::lit(2.0) * T::lit(3.0).sqrt());
    let w = T::lit(0.5);
    [(-s, w), (s, w)]
}

pub fn element_basis<T: Real>(h: T) -> ElementBasis<T> {
    let mut basis = ElementBasis {
        h,
        node_values: [[T::zero(); 2]; 2],
        slopes: [-T::lit(2.0) / h, T::lit(2.0) / h],
        left_trace: [T::zero(); 2],
        right_trace: [T::zero(); 2],
        mass: [[T::zero(); 2]; 2],
    };
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    basis.node_values = [basis.eval(-quarter), basis.eval(quarter)];
    basis.left_trace = basis.eval(-half);
    basis.right_trace = basis.eval(half);
    for (s, w) in gauss2::<T>() {
        let phi = basis.eval(s);
        for i in 0..2 {
            for j in 0..2 {
                basis.mass[i][j] += w * h * phi[i] * phi[j];
            }
        }
    }
    basis
}

/// Linear functional of the nodal values of cells `j-1`, `j`, `j+1`, in the
/// order `(u_{j-1}, u_j, u_{j+1})`, each a `(minus, plus)` node pair.
type Functional<T> = [T; 6];

fn functional<T: Real>(cell: usize, weights: [T; 2]) -> Functional<T> {
    let mut f = [T::zero(); 6];
    f[2 * cell] = weights[0];
    f[2 * cell + 1] = weights[1];
    f
}

fn combine<T: Real>(terms: &[(T, &Functional<T>)]) -> Functional<T> {
    let mut out = [T::zero(); 6];
    for (w, f) in terms {
        for (o, v) in out.iter_mut().zip(f.iter()) {
            *o += *w * *v;
        }
    }
    out
}

/// Standard upwind DG blocks: no penalties.
pub fn standard_dg_blocks<T: Real>(h: T) -> DgBlocks<T> {
    penalized_dg_blocks(&PenaltyCoefficients::zero(), h)
}

/// Assembles the penalised weak form on cell `j` and returns its block form.
///
/// For each test function `v` in the cell basis the right-hand side is
/// `int u v_x - u^-_{j+1/2} v^-_{j+1/2} + u^-_{j-1/2} v^+_{j-1/2}` plus
/// `(C1 [u] + h C2 [u_x])_{j+1/2} v^-_{j+1/2}`,
/// `-(D1 [u] + h D2 [u_x])_{j-1/2} v^+_{j-1/2}`,
/// `(h E1 [u] + h^2 E2 [u_x])_{j+1/2} v_x` and
/// `-(h F1 [u] + h^2 F2 [u_x])_{j-1/2} v_x`, with `[q] = q^+ - q^-`. The
/// result is multiplied by the inverse mass matrix.
pub fn penalized_dg_blocks<T: Real>(pc: &PenaltyCoefficients<T>, h: T) -> DgBlocks<T> {
    let basis = element_basis(h);
    let slope = [basis.slopes[0], basis.slopes[1]];
    // traces of u and u_x at both edges of cell j
    let u_right_minus = functional(1, basis.right_trace);
    let u_right_plus = functional(2, basis.left_trace);
    let u_left_minus = functional(0, basis.right_trace);
    let u_left_plus = functional(1, basis.left_trace);
    let ux_left_cell = functional(0, slope);
    let ux_cell = functional(1, slope);
    let ux_right_cell = functional(2, slope);
    let one = T::one();
    let jump_u_right = combine(&[(one, &u_right_plus), (-one, &u_right_minus)]);
    let jump_u_left = combine(&[(one, &u_left_plus), (-one, &u_left_minus)]);
    let jump_ux_right = combine(&[(one, &ux_right_cell), (-one, &ux_cell)]);
    let jump_ux_left = combine(&[(one, &ux_cell), (-one, &ux_left_cell)]);

    let mut rows = [[T::zero(); 6]; 2];
    for (test, row) in rows.iter_mut().enumerate() {
        let v_right = basis.right_trace[test];
        let v_left = basis.left_trace[test];
        let v_x = basis.slopes[test];
        let mut volume = [T::zero(); 6];
        for (s, w) in gauss2::<T>() {
            let phi = basis.eval(s);
            volume[2] += w * h * phi[0] * v_x;
            volume[3] += w * h * phi[1] * v_x;
        }
        *row = combine(&[
            (one, &volume),
            (-v_right, &u_right_minus),
            (v_left, &u_left_minus),
            (pc.c1 * v_right, &jump_u_right),
            (h * pc.c2 * v_right, &jump_ux_right),
            (-pc.d1 * v_left, &jump_u_left),
            (-h * pc.d2 * v_left, &jump_ux_left),
            (h * pc.e1 * v_x, &jump_u_right),
            (h * h * pc.e2 * v_x, &jump_ux_right),
            (-h * pc.f1 * v_x, &jump_u_left),
            (-h * h * pc.f2 * v_x, &jump_ux_left),
        ]);
    }

    let minv = basis.mass_inverse();
    let mut blocks = [[[T::zero(); 2]; 2]; 3];
    for i in 0..2 {
        for col in 0..6 {
            let v = minv[i][0] * rows[0][col] + minv[i][1] * rows[1][col];
            blocks[col / 2][i][col % 2] = v;
        }
    }
    DgBlocks {
        a: blocks[0],
        b: blocks[1],
        c: blocks[2],
        h,
    }
}

/// Outcome of matching the penalised DG scheme to a BFD operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySolution<T> {
    pub coefficients: PenaltyCoefficients<T>,
    /// Largest block discrepancy between the penalised DG and BFD operators.
    pub block_residual: T,
}

/// Solves for the penalties that reproduce `Q(c1, c2)`.
///
/// Penalties enter the blocks linearly, so the influence of each one is
/// probed with a unit value; the resulting 12x8 system is solved in the
/// least-squares sense and the fit residual is reported.
pub fn solve_penalties<T: Real>(params: SchemeParams<T>) -> Result<PenaltySolution<T>> {
    let h = T::one();
    let grid = BlockGrid::new(3, T::lit(3.0))?;
    let base = standard_dg_blocks(h).entries();
    let target = DgBlocks::from_operator(&BlockOperator::bfd(&grid, params)).entries();
    let mut influence = DenseMatrix::zeros(12, 8);
    for k in 0..8 {
        let mut unit = [T::zero(); 8];
        unit[k] = T::one();
        let probed = penalized_dg_blocks(&PenaltyCoefficients::from_array(unit), h).entries();
        for r in 0..12 {
            influence[(r, k)] = probed[r] - base[r];
        }
    }
    let rhs: Vec<T> = target.iter().zip(&base).map(|(t, b)| *t - *b).collect();
    let (x, _) = least_squares(&influence, &rhs).map_err(|e| {
        BfdError::Singular(format!("penalty influence matrix is rank deficient: {e}"))
    })?;
    let mut coef = [T::zero(); 8];
    coef.copy_from_slice(&x);
    let coefficients = PenaltyCoefficients::from_array(coef);
    let achieved = penalized_dg_blocks(&coefficients, h);
    let block_residual = achieved.max_abs_diff(&DgBlocks {
        a: *BlockOperator::bfd(&grid, params).a(),
        b: *BlockOperator::bfd(&grid, params).b(),
        c: *BlockOperator::bfd(&grid, params).c(),
        h,
    });
    Ok(PenaltySolution {
        coefficients,
        block_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [[f64; 2]; 2], b: [[f64; 2]; 2], tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn basis_traces_and_mass() {
        let h: f64 = 0.3;
        let e = element_basis(h);
        assert_eq!(e.node_values, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(e.left_trace, [1.5, -0.5]);
        assert_eq!(e.right_trace, [-0.5, 1.5]);
        assert!((e.slopes[0] + 2.0 / h).abs() < 1e-14 && (e.slopes[1] - 2.0 / h).abs() < 1e-14);
        let expect = [[7.0 * h / 12.0, -h / 12.0], [-h / 12.0, 7.0 * h / 12.0]];
        assert!(close(e.mass, expect, 1e-15));
        for k in 0..11 {
            let s = -0.5 + 0.1 * k as f64;
            let p = e.eval(s);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn standard_blocks_match_closed_form() {
        let h = 0.125;
        let d = standard_dg_blocks(h);
        let k = 1.0 / (4.0 * h);
        assert!(close(d.a, [[-5.0 * k, 15.0 * k], [k, -3.0 * k]], 1e-12));
        assert!(close(d.b, [[-7.0 * k, -3.0 * k], [11.0 * k, -9.0 * k]], 1e-12));
        assert!(close(d.c, [[0.0; 2]; 2], 1e-12));
    }

    #[test]
    fn closed_form_coefficients_recovered() {
        for (c1, c2) in [(0.5, 0.5), (1.0, -0.5), (0.0, 0.0), (-0.3, 0.8)] {
            let p = SchemeParams::new(c1, c2);
            let sol = solve_penalties(p).unwrap();
            let expect = PenaltyCoefficients::closed_form(p);
            assert!(sol.coefficients.max_abs_diff(&expect) < 1e-12, "{sol:?}");
            assert!(sol.block_residual < 1e-13);
        }
        let half = PenaltyCoefficients::closed_form(SchemeParams::<f64>::new(0.5, 0.5));
        assert_eq!((half.e2, half.f2), (0.0, 0.0));
        assert!((half.e1 + 1.0 / 36.0).abs() < 1e-16 && (half.f1 + 1.0 / 36.0).abs() < 1e-16);
    }

    #[test]
    fn central_scheme_as_dg() {
        let h = 0.1;
        let grid = BlockGrid::new(10, 1.0).unwrap();
        let p = SchemeParams::new(0.0, 0.0);
        let dg = penalized_dg_blocks(&PenaltyCoefficients::closed_form(p), h);
        let bfd = DgBlocks::from_operator(&BlockOperator::bfd(&grid, p));
        assert!(dg.max_abs_diff(&bfd) < 1e-12 / h);
    }

    #[test]
    fn constants_annihilated() {
        let pc = PenaltyCoefficients::from_array([0.3, -1.0, 2.0, 0.5, -0.7, 0.1, 1.3, -0.4]);
        for d in [standard_dg_blocks(0.2), penalized_dg_blocks(&pc, 0.2)] {
            for i in 0..2 {
                let sum: f64 = (0..2).map(|j| d.a[i][j] + d.b[i][j] + d.c[i][j]).sum();
                assert!(sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn penalties_vanish_on_continuous_linear() {
        // u = x sampled per cell: value and slope continuous across edges
        let h = 0.25;
        let pc = PenaltyCoefficients::from_array([0.3, -1.0, 2.0, 0.5, -0.7, 0.1, 1.3, -0.4]);
        let plain = standard_dg_blocks(h);
        let pen = penalized_dg_blocks(&pc, h);
        let xs = [-h - h / 4.0, -h + h / 4.0, -h / 4.0, h / 4.0, h - h / 4.0, h + h / 4.0];
        for i in 0..2 {
            let apply = |d: &DgBlocks<f64>| -> f64 {
                (0..2)
                    .map(|j| d.a[i][j] * xs[j] + d.b[i][j] * xs[2 + j] + d.c[i][j] * xs[4 + j])
                    .sum()
            };
            assert!((apply(&plain) - apply(&pen)).abs() < 1e-12);
            // and the scheme differentiates it exactly
            assert!((apply(&pen) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_round_trip() {
        let grid = BlockGrid::new(6, 2.0).unwrap();
        let op = BlockOperator::bfd(&grid, SchemeParams::new(0.2, -0.1));
        let dg = DgBlocks::from_operator(&op);
        let back = dg.to_operator(&grid, "copy");
        assert_eq!(back.max_block_diff(&op), 0.0);
    }

    proptest! {
        #[test]
        fn penalties_enter_linearly(
            p in prop::array::uniform8(-2.0f64..2.0),
            q in prop::array::uniform8(-2.0f64..2.0),
            h in 0.01f64..1.0,
        ) {
            let base = standard_dg_blocks(h).entries();
            let sum: [f64; 8] = std::array::from_fn(|k| p[k] + q[k]);
            let bp = penalized_dg_blocks(&PenaltyCoefficients::from_array(p), h).entries();
            let bq = penalized_dg_blocks(&PenaltyCoefficients::from_array(q), h).entries();
            let bs = penalized_dg_blocks(&PenaltyCoefficients::from_array(sum), h).entries();
            for r in 0..12 {
                let lhs = bs[r] - base[r];
                let rhs = (bp[r] - base[r]) + (bq[r] - base[r]);
                prop_assert!((lhs - rhs).abs() < 1e-10 / h);
            }
        }

        #[test]
        fn random_parameters_match_bfd(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
            let p = SchemeParams::new(c1, c2);
            let sol = solve_penalties(p).unwrap();
            prop_assert!(sol.coefficients.max_abs_diff(&PenaltyCoefficients::closed_form(p)) < 1e-12);
            let h = 0.05;
            let grid = BlockGrid::new(20, 1.0).unwrap();
            let dg = penalized_dg_blocks(&sol.coefficients, h);
            let bfd = DgBlocks::from_operator(&BlockOperator::bfd(&grid, p));
            prop_assert!(dg.max_abs_diff(&bfd) <= 1e-13 * bfd.max_abs_entry());
        }
    }
}
