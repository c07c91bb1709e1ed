use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use bfd_core::dg::{penalized_dg_blocks, solve_penalties, standard_dg_blocks};
use bfd_core::grid::{sample_real, BlockGrid, GridFunction};
use bfd_core::operators::{BlockOperator, SchemeParams, StencilOperator, TransportOperator};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Spatial discretisation under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    Bfd { c1: f64, c2: f64 },
    Fd { order: usize },
    DgStandard,
    /// Penalised DG with the penalties that reproduce `bfd(c1, c2)`.
    DgPenalized { c1: f64, c2: f64 },
}

impl Scheme {
    pub fn bfd(c1: f64, c2: f64) -> Self {
        Scheme::Bfd { c1, c2 }
    }

    pub fn label(&self) -> String {
        match self {
            Scheme::Bfd { c1, c2 } => format!("bfd({c1},{c2})"),
            Scheme::Fd { order } => format!("fd{order}"),
            Scheme::DgStandard => "dg".into(),
            Scheme::DgPenalized { c1, c2 } => format!("dg-pen({c1},{c2})"),
        }
    }

    /// Parameters of the closed-form eigendecomposition, if the scheme has one.
    pub fn symbol_params(&self) -> Option<SchemeParams<f64>> {
        match *self {
            Scheme::Bfd { c1, c2 } | Scheme::DgPenalized { c1, c2 } => Some(SchemeParams::new(c1, c2)),
            _ => None,
        }
    }

    pub fn operator(&self, grid: &BlockGrid<f64>) -> Result<Box<dyn TransportOperator<f64>>> {
        Ok(match *self {
            Scheme::Bfd { c1, c2 } => Box::new(BlockOperator::bfd(grid, SchemeParams::new(c1, c2))),
            Scheme::Fd { order } => Box::new(StencilOperator::central(grid, order)?),
            Scheme::DgStandard => {
                Box::new(standard_dg_blocks(grid.h()).to_operator(grid, self.label()))
            }
            Scheme::DgPenalized { c1, c2 } => {
                let sol = solve_penalties(SchemeParams::new(c1, c2))?;
                Box::new(penalized_dg_blocks(&sol.coefficients, grid.h()).to_operator(grid, self.label()))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Propagator {
    Rk,
    Modal,
}

/// Initial condition, periodic on `[0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `exp(cos(2 pi x / L))`.
    ExpCos,
    /// `sin(2 pi k x / L)`.
    Sine { k: u32 },
    /// Random real trigonometric polynomial with decaying coefficients.
    Random { seed: u64, modes: u32 },
}

impl InitialData {
    pub fn evaluator(&self, length: f64) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        let tau = std::f64::consts::TAU / length;
        match *self {
            InitialData::ExpCos => Arc::new(move |x| (tau * x).cos().exp()),
            InitialData::Sine { k } => Arc::new(move |x| (tau * k as f64 * x).sin()),
            InitialData::Random { seed, modes } => {
                let mut rng = StdRng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64)> = (0..=modes)
                    .map(|k| {
                        let decay = (-(k as f64) / 2.0).exp();
                        (rng.gen_range(-1.0..1.0) * decay, rng.gen_range(-1.0..1.0) * decay)
                    })
                    .collect();
                Arc::new(move |x| {
                    coeffs.iter().enumerate().fold(0.0, |acc, (k, (a, b))| {
                        let p = tau * k as f64 * x;
                        acc + a * p.cos() + b * p.sin()
                    })
                })
            }
        }
    }

    pub fn sample(&self, grid: &Arc<BlockGrid<f64>>) -> GridFunction<f64> {
        let f = self.evaluator(grid.length());
        sample_real(grid, |x| f(x))
    }
}

/// Everything a command needs; echoed into the output metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub scheme: Scheme,
    pub n_list: Vec<usize>,
    pub length: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub post_process: bool,
    pub propagator: Propagator,
    pub initial: InitialData,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub seed: u64,
}

/// Paper's refinement ladder.
pub const DEFAULT_N_LIST: [usize; 6] = [48, 60, 72, 96, 120, 144];

impl ExperimentConfig {
    pub fn new(command: &str, scheme: Scheme) -> Self {
        Self {
            command: command.into(),
            scheme,
            n_list: DEFAULT_N_LIST.to_vec(),
            length: 1.0,
            t_final: 1.0,
            cfl: 0.2,
            post_process: false,
            propagator: Propagator::Rk,
            initial: InitialData::ExpCos,
            out: None,
            seed: 0,
        }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t_final = t;
        self
    }

    pub fn with_n(mut self, n: &[usize]) -> Self {
        self.n_list = n.to_vec();
        self
    }

    pub fn filtered(mut self, on: bool) -> Self {
        self.post_process = on;
        self
    }

    pub fn with_propagator(mut self, p: Propagator) -> Self {
        self.propagator = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.n_list.is_empty(), "N list is empty");
        ensure!(
            self.n_list.windows(2).all(|w| w[0] < w[1]),
            "N list must be strictly increasing, got {:?}",
            self.n_list
        );
        ensure!(self.n_list[0] >= 3, "every N must be at least 3");
        ensure!(self.length > 0.0 && self.length.is_finite(), "L must be positive");
        ensure!(self.t_final >= 0.0 && self.t_final.is_finite(), "T must be >= 0");
        ensure!(self.cfl > 0.0, "cfl must be positive");
        if let Scheme::Fd { order } = self.scheme {
            if ![2, 4, 6].contains(&order) {
                bail!("fd order must be 2, 4 or 6, got {order}");
            }
        }
        Ok(())
    }

    pub fn grid(&self, n: usize) -> Result<Arc<BlockGrid<f64>>> {
        Ok(Arc::new(
            BlockGrid::new(n, self.length).with_context(|| format!("building grid with N = {n}"))?,
        ))
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}
