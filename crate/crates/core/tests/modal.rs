use std::f64::consts::TAU;
use std::sync::Arc;

use bfd_core::grid::{exact_solution_real, sample, sample_real, BlockGrid, GridFunction};
use bfd_core::operators::{BlockOperator, SchemeParams, StencilOperator};
use bfd_core::propagation::{modal_decompose, rk_integrate};
use bfd_core::symbol::{build_mode_vectors, decompose_all};
use num_complex::Complex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn grid(n: usize) -> Arc<BlockGrid<f64>> {
    Arc::new(BlockGrid::new(n, 1.0).unwrap())
}

fn random_complex(g: &Arc<BlockGrid<f64>>, seed: u64) -> GridFunction<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let vals = (0..g.len())
        .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::new(Arc::clone(g), vals).unwrap()
}

fn rel(a: &GridFunction<f64>, b: &GridFunction<f64>) -> f64 {
    a.distance(b).unwrap().l2 / b.norms().l2
}

#[test]
fn random_data_reconstructs() {
    let g = grid(8);
    for seed in 0..5 {
        let u0 = random_complex(&g, seed);
        for (c1, c2) in [(0.5, 0.5), (1.0, -0.5), (0.0, 0.0), (1.0, 1.0)] {
            let m = modal_decompose(&u0, SchemeParams::new(c1, c2)).unwrap();
            assert!(rel(&m.propagate(0.0).unwrap(), &u0) < 1e-11);
        }
    }
}

#[test]
fn semigroup() {
    let g = grid(12);
    let p = SchemeParams::new(0.5, 0.5);
    let u0 = random_complex(&g, 9);
    let m = modal_decompose(&u0, p).unwrap();
    let (t1, t2) = (3.7, 12.25);
    let split = modal_decompose(&m.propagate(t1).unwrap(), p)
        .unwrap()
        .propagate(t2)
        .unwrap();
    assert!(rel(&split, &m.propagate(t1 + t2).unwrap()) < 1e-10);
}

#[test]
fn bounded_growth_over_long_times() {
    let g = grid(16);
    let u0 = random_complex(&g, 4);
    let n0 = u0.norms().l2;
    for (c1, c2) in [(0.5, 0.5), (1.0, -0.5), (0.5, -0.5), (1.0, 1.0)] {
        let m = modal_decompose(&u0, SchemeParams::new(c1, c2)).unwrap();
        let times: Vec<f64> = (0..=60).map(|k| if k == 0 { 0.0 } else { 10f64.powf(k as f64 / 10.0) }).collect();
        for u in m.propagate_many(&times).unwrap() {
            assert!(u.norms().l2 <= 2.0 * n0, "({c1},{c2}) grew to {}", u.norms().l2 / n0);
        }
    }
}

#[test]
fn single_mode_data_lives_on_first_branch() {
    // |d2/d1| is O(h) for a resolved Fourier mode when c1 > c2; it is set by
    // the alias component of psi_1 and in fact falls like h^4
    let p = SchemeParams::new(1.0, -0.5);
    let omega = 2;
    let ratio = |n: usize| {
        let g = grid(n);
        let k = TAU * omega as f64;
        let u0 = sample(&g, |x| Complex::new(0.0, k * x).exp());
        let m = modal_decompose(&u0, p).unwrap();
        let idx = m.decompositions.iter().position(|d| d.mode.omega == omega).unwrap();
        let [d1, d2] = m.amplitudes[idx];
        (d2 / d1).norm()
    };
    let (r1, r2) = (ratio(32), ratio(64));
    assert!(r1 < 32.0f64.recip());
    let order = (r1 / r2).log2();
    assert!(order >= 1.0 && (order - 4.0).abs() < 0.2, "order {order}");
}

#[test]
fn eigenvector_data_has_single_amplitude() {
    let g = grid(10);
    let p = SchemeParams::new(0.5, 0.5);
    let decs = decompose_all(10, 1.0, p).unwrap();
    let target = &decs[3];
    let (psi1, _) = build_mode_vectors(&g, target);
    let m = modal_decompose(&psi1, p).unwrap();
    for (d, amp) in m.decompositions.iter().zip(&m.amplitudes) {
        let want = if d.mode.omega == target.mode.omega { 1.0 } else { 0.0 };
        assert!((amp[0].norm() - want).abs() < 1e-12 && amp[1].norm() < 1e-12);
    }
}

#[test]
fn rk_matches_modal_with_finer_step() {
    let g = grid(16);
    let p = SchemeParams::new(0.5, 0.5);
    let u0 = sample_real(&g, |x| (TAU * x).cos().exp());
    let modal = modal_decompose(&u0, p).unwrap().propagate(1.0).unwrap();
    let rk = rk_integrate(&BlockOperator::bfd(&g, p), &u0, 1.0, 0.1).unwrap();
    assert!(rel(&rk, &modal) < 1e-9);
}

#[test]
fn fourth_order_stencil_converges_at_rate_four() {
    let f = |x: f64| (TAU * x).cos().exp();
    let ns = [48, 60, 72, 96, 120, 144];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let g = grid(n);
            let op = StencilOperator::central(&g, 4).unwrap();
            let u = rk_integrate(&op, &sample_real(&g, f), 1.0, 0.2).unwrap();
            u.distance(&exact_solution_real(&g, f, 1.0)).unwrap().l2
        })
        .collect();
    let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let fit = bfd_core::fit::fit_loglog(&hs, &errs).unwrap();
    assert!((fit.slope - 4.0).abs() < 0.2, "{fit:?}");
}
