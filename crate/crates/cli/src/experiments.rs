//! The experiment drivers behind each subcommand.

use std::sync::Arc;

use anyhow::{anyhow, bail, ensure, Context, Result};
use bfd_core::dg::{solve_penalties, PenaltyCoefficients};
use bfd_core::fit::{fit_loglog, LogLogFit};
use bfd_core::grid::{exact_solution_real, BlockGrid, GridFunction, Norms};
use bfd_core::operators::{SchemeParams, StencilOperator};
use bfd_core::postproc::spectral_filter;
use bfd_core::propagation::{dense_expm, modal_decompose, rk_integrate, FourierPropagator, ModalExpansion};
use bfd_core::symbol::{decompose_all, eigen_residual, stability_lattice, verified_mode_vectors, StabilityReport};
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{analyse_curve, log_times, CurveAnalysis};
use crate::config::{ExperimentConfig, InitialData, Propagator, Scheme};
use crate::table::{Cell, Table};

/// A log-log fit in serialisable form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: usize,
    pub accepted: bool,
}

impl From<LogLogFit> for FitSummary {
    fn from(f: LogLogFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            residual: f.residual,
            points: f.points,
            accepted: f.accepted(),
        }
    }
}

/// Builds the solution operator `u0 -> u(t)` for one grid.
enum Evolution {
    Modal(ModalExpansion<f64>),
    Fourier(FourierPropagator<f64>),
    Dense(GridFunction<f64>, Box<dyn bfd_core::operators::TransportOperator<f64>>),
}

impl Evolution {
    fn new(scheme: &Scheme, grid: &BlockGrid<f64>, u0: &GridFunction<f64>) -> Result<Self> {
        Ok(match *scheme {
            Scheme::Bfd { .. } | Scheme::DgPenalized { .. } => {
                let params = scheme.symbol_params().expect("bfd-type scheme");
                Evolution::Modal(modal_decompose(u0, params)?)
            }
            Scheme::Fd { order } => {
                Evolution::Fourier(FourierPropagator::new(&StencilOperator::central(grid, order)?, u0)?)
            }
            Scheme::DgStandard => Evolution::Dense(u0.clone(), scheme.operator(grid)?),
        })
    }

    fn at(&self, t: f64) -> Result<GridFunction<f64>> {
        Ok(match self {
            Evolution::Modal(m) => m.propagate(t)?,
            Evolution::Fourier(f) => f.propagate(t)?,
            Evolution::Dense(u0, op) => {
                let e = dense_expm(op.as_ref(), t)?;
                u0.with_values(e.matvec(u0.values())?)?
            }
        })
    }
}

/// Numerical solution at `config.t_final` on an `n`-block grid, filtered if asked.
pub fn solve(config: &ExperimentConfig, n: usize) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
    let grid = config.grid(n)?;
    let f = config.initial.evaluator(config.length);
    let u0 = config.initial.sample(&grid);
    let numeric = match config.propagator {
        Propagator::Rk => {
            let op = config.scheme.operator(&grid)?;
            rk_integrate(op.as_ref(), &u0, config.t_final, config.cfl)?
        }
        Propagator::Modal => Evolution::new(&config.scheme, &grid, &u0)?.at(config.t_final)?,
    };
    let numeric = if config.post_process {
        spectral_filter(&numeric)
    } else {
        numeric
    };
    let exact = exact_solution_real(&grid, |x| f(x), config.t_final);
    Ok((numeric, exact))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub linf_error: f64,
    /// `None` on success, otherwise why the run was dropped.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ConvergenceRow>,
    pub l2_fit: Option<FitSummary>,
    pub linf_fit: Option<FitSummary>,
    /// L2 fit over the coarser half of the successful runs.
    pub coarse_l2_fit: Option<FitSummary>,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub fn l2_slope(&self) -> Option<f64> {
        self.l2_fit.map(|f| f.slope)
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn to_table(&self) -> Table {
        let meta = json!({
            "config": self.config.metadata(),
            "l2_fit": self.l2_fit,
            "linf_fit": self.linf_fit,
            "coarse_l2_fit": self.coarse_l2_fit,
            "warnings": self.warnings,
        });
        let mut t = Table::new(meta, &["n", "h", "l2_error", "linf_error", "status"]);
        for r in &self.rows {
            t.push(vec![
                r.n.into(),
                r.h.into(),
                r.l2_error.into(),
                r.linf_error.into(),
                r.failure.clone().unwrap_or_else(|| "ok".into()).into(),
            ]);
        }
        t
    }
}

fn fit_rows(rows: &[&ConvergenceRow], pick: impl Fn(&ConvergenceRow) -> f64) -> Option<FitSummary> {
    if rows.len() < 3 {
        return None;
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = rows.iter().map(|r| pick(r)).collect();
    fit_loglog(&h, &e).ok().map(Into::into)
}

/// Runs the scheme for every `N` in parallel and fits `log error` against `log h`.
pub fn cmd_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let rows: Vec<ConvergenceRow> = config
        .n_list
        .par_iter()
        .map(|&n| {
            let h = config.length / n as f64;
            match solve(config, n).and_then(|(u, e)| Ok(u.distance(&e)?)) {
                Ok(Norms { l2, linf }) if l2.is_finite() && linf.is_finite() => ConvergenceRow {
                    n,
                    h,
                    l2_error: l2,
                    linf_error: linf,
                    failure: None,
                },
                Ok(_) => failed_row(n, h, "non-finite error".into()),
                Err(e) => failed_row(n, h, format!("{e:#}")),
            }
        })
        .collect();

    let mut warnings: Vec<String> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("N = {} excluded from fit: {f}", r.n)))
        .collect();
    let ok: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let l2_fit = fit_rows(&ok, |r| r.l2_error);
    let linf_fit = fit_rows(&ok, |r| r.linf_error);
    let coarse = &ok[..ok.len().div_ceil(2)];
    let coarse_l2_fit = fit_rows(coarse, |r| r.l2_error);
    if l2_fit.is_none() {
        warnings.push(format!("only {} successful runs; need 3 for a slope", ok.len()));
    }
    for (name, fit) in [("l2", l2_fit), ("linf", linf_fit)] {
        if let Some(f) = fit.filter(|f| !f.accepted) {
            warnings.push(format!(
                "{name} fit residual {:.3} exceeds {}; slope {:.3} not accepted",
                f.residual,
                LogLogFit::ACCEPT_RESIDUAL,
                f.slope
            ));
        }
    }
    Ok(ConvergenceReport {
        config: config.clone(),
        rows,
        l2_fit,
        linf_fit,
        coarse_l2_fit,
        warnings,
    })
}

fn failed_row(n: usize, h: f64, why: String) -> ConvergenceRow {
    ConvergenceRow {
        n,
        h,
        l2_error: f64::NAN,
        linf_error: f64::NAN,
        failure: Some(why),
    }
}

/// Convergence study at large `T`; the slope of interest is `coarse_l2_fit`.
pub fn cmd_long_time(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    if config.propagator == Propagator::Rk && config.t_final > 10.0 {
        let steps = config.t_final / (config.cfl * config.length / *config.n_list.last().unwrap() as f64 / 2.0);
        ensure!(
            steps < 5e7,
            "RK propagation to T = {} needs ~{steps:.1e} steps; use --propagator modal",
            config.t_final
        );
    }
    cmd_convergence(config)
}

/// One error-versus-time curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub label: String,
    pub n: usize,
    pub filtered: bool,
    pub l2_errors: Vec<f64>,
    pub analysis: CurveAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorVsTimeReport {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    pub series: Vec<ErrorSeries>,
}

impl ErrorVsTimeReport {
    pub fn series(&self, label: &str, n: usize, filtered: bool) -> Option<&ErrorSeries> {
        self.series
            .iter()
            .find(|s| s.label == label && s.n == n && s.filtered == filtered)
    }

    pub fn to_table(&self) -> Table {
        let summaries: Vec<_> = self
            .series
            .iter()
            .map(|s| json!({"label": s.label, "n": s.n, "filtered": s.filtered, "analysis": s.analysis}))
            .collect();
        let meta = json!({"config": self.config.metadata(), "series": summaries});
        let mut t = Table::new(meta, &["scheme", "n", "filtered", "t", "l2_error"]);
        for s in &self.series {
            for (time, e) in self.times.iter().zip(&s.l2_errors) {
                t.push(vec![s.label.clone().into(), s.n.into(), s.filtered.into(), (*time).into(), (*e).into()]);
            }
        }
        t
    }
}

/// Earliest sample time in an error-versus-time study.
pub const ERROR_VS_TIME_T_MIN: f64 = 1e-2;
pub const SAMPLES_PER_DECADE: usize = 12;

/// Errors of fd2/4/6 and of the configured BFD scheme (raw and filtered)
/// on log-spaced times up to `config.t_final`, all by exact propagation.
pub fn cmd_error_vs_time(config: &ExperimentConfig) -> Result<ErrorVsTimeReport> {
    config.validate()?;
    let Some(params) = config.scheme.symbol_params() else {
        bail!("error-vs-time compares against a bfd scheme; got {}", config.scheme.label());
    };
    ensure!(
        config.t_final > ERROR_VS_TIME_T_MIN,
        "T must exceed {ERROR_VS_TIME_T_MIN} for a time series"
    );
    let times = log_times(ERROR_VS_TIME_T_MIN, config.t_final, SAMPLES_PER_DECADE);
    let bfd = Scheme::bfd(params.c1, params.c2);
    let mut jobs: Vec<(Scheme, usize, bool)> = Vec::new();
    for &n in &config.n_list {
        for order in [2, 4, 6] {
            jobs.push((Scheme::Fd { order }, n, false));
        }
        jobs.push((bfd, n, false));
        jobs.push((bfd, n, true));
    }
    let series = jobs
        .par_iter()
        .map(|&(scheme, n, filtered)| -> Result<ErrorSeries> {
            let grid = config.grid(n)?;
            let f = config.initial.evaluator(config.length);
            let u0 = config.initial.sample(&grid);
            let evolution = Evolution::new(&scheme, &grid, &u0)?;
            let norm = u0.norms().l2;
            let l2_errors = times
                .iter()
                .map(|&t| -> Result<f64> {
                    let mut u = evolution.at(t)?;
                    if filtered {
                        u = spectral_filter(&u);
                    }
                    Ok(u.distance(&exact_solution_real(&grid, |x| f(x), t))?.l2)
                })
                .collect::<Result<Vec<_>>>()?;
            let analysis = analyse_curve(&times, &l2_errors, norm);
            Ok(ErrorSeries {
                label: scheme.label(),
                n,
                filtered,
                l2_errors,
                analysis,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorVsTimeReport {
        config: config.clone(),
        times,
        series,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub label: String,
    pub filtered: bool,
    pub values: Vec<f64>,
    pub linf_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDemoReport {
    pub config: ExperimentConfig,
    pub x: Vec<f64>,
    pub exact: Vec<f64>,
    pub profiles: Vec<Profile>,
}

impl PhaseDemoReport {
    pub fn profile(&self, label: &str, filtered: bool) -> Option<&Profile> {
        self.profiles.iter().find(|p| p.label == label && p.filtered == filtered)
    }

    pub fn to_table(&self) -> Table {
        let errs: Vec<_> = self
            .profiles
            .iter()
            .map(|p| json!({"label": p.label, "filtered": p.filtered, "linf_error": p.linf_error}))
            .collect();
        let meta = json!({"config": self.config.metadata(), "profiles": errs});
        let mut cols = vec!["x".to_string(), "exact".to_string()];
        cols.extend(
            self.profiles
                .iter()
                .map(|p| format!("{}{}", p.label, if p.filtered { "+filter" } else { "" })),
        );
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut t = Table::new(meta, &col_refs);
        for i in 0..self.x.len() {
            let mut row: Vec<Cell> = vec![self.x[i].into(), self.exact[i].into()];
            row.extend(self.profiles.iter().map(|p| Cell::from(p.values[i])));
            t.push(row);
        }
        t
    }
}

/// Profiles at `T` of `bfd(0,0)` and of the configured scheme, raw and filtered.
/// Uses the first `N` of the list.
pub fn cmd_phase_demo(config: &ExperimentConfig) -> Result<PhaseDemoReport> {
    config.validate()?;
    let Some(params) = config.scheme.symbol_params() else {
        bail!("phase-demo needs a bfd scheme; got {}", config.scheme.label());
    };
    let n = config.n_list[0];
    let grid = config.grid(n)?;
    let f = config.initial.evaluator(config.length);
    let u0 = config.initial.sample(&grid);
    let exact = exact_solution_real(&grid, |x| f(x), config.t_final);
    let mut profiles = Vec::new();
    let mut schemes = vec![Scheme::bfd(0.0, 0.0)];
    if (params.c1, params.c2) != (0.0, 0.0) {
        schemes.push(Scheme::bfd(params.c1, params.c2));
    }
    for scheme in schemes {
        let raw = Evolution::new(&scheme, &grid, &u0)?.at(config.t_final)?;
        for filtered in [false, true] {
            let u = if filtered { spectral_filter(&raw) } else { raw.clone() };
            profiles.push(Profile {
                label: scheme.label(),
                filtered,
                linf_error: u.distance(&exact)?.linf,
                values: u.real_parts(),
            });
        }
    }
    Ok(PhaseDemoReport {
        config: config.clone(),
        x: grid.nodes().to_vec(),
        exact: exact.real_parts(),
        profiles,
    })
}

/// `(c1, c2)` lattice for [`cmd_stability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub theta_samples: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            lo: -1.0,
            hi: 1.0,
            points: 33,
            theta_samples: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub c1: f64,
    pub c2: f64,
    pub max_re: f64,
    pub max_cos_theta: f64,
    pub stable: bool,
    /// `c1 >= c2`, the region where stability is expected.
    pub expected_stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityStudy {
    pub lattice: LatticeSpec,
    pub rows: Vec<StabilityRow>,
}

impl StabilityStudy {
    pub fn mismatches(&self) -> Vec<&StabilityRow> {
        self.rows.iter().filter(|r| r.stable != r.expected_stable).collect()
    }

    pub fn to_table(&self) -> Table {
        let meta = json!({
            "command": "stability",
            "lattice": self.lattice,
            "re_tolerance": StabilityReport::RE_TOL,
            "cos_bound": StabilityReport::COS_BOUND,
            "mismatches": self.mismatches().len(),
        });
        let mut t = Table::new(meta, &["c1", "c2", "max_re_qhat", "max_cos_theta", "verdict", "expected"]);
        for r in &self.rows {
            let verdict = |s: bool| if s { "stable" } else { "unstable" };
            t.push(vec![
                r.c1.into(),
                r.c2.into(),
                r.max_re.into(),
                r.max_cos_theta.into(),
                verdict(r.stable).into(),
                verdict(r.expected_stable).into(),
            ]);
        }
        t
    }
}

pub fn cmd_stability(lattice: LatticeSpec) -> Result<StabilityStudy> {
    let reports = stability_lattice(lattice.lo, lattice.hi, lattice.points, lattice.theta_samples)?;
    let rows = reports
        .into_iter()
        .map(|r| StabilityRow {
            c1: r.c1,
            c2: r.c2,
            max_re: r.max_re(),
            max_cos_theta: r.max_cos_theta,
            stable: r.stable,
            expected_stable: r.c1 >= r.c2 - 1e-12,
        })
        .collect();
    Ok(StabilityStudy { lattice, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgCheckReport {
    pub c1: f64,
    pub c2: f64,
    pub coefficients: [f64; 8],
    pub closed_form: [f64; 8],
    pub coefficient_error: f64,
    pub block_residual: f64,
    pub passed: bool,
}

impl DgCheckReport {
    pub const NAMES: [&'static str; 8] = ["C1", "C2", "D1", "D2", "E1", "E2", "F1", "F2"];

    pub fn to_table(&self) -> Table {
        let meta = json!({
            "command": "dg-check",
            "c1": self.c1,
            "c2": self.c2,
            "block_residual": self.block_residual,
            "coefficient_error": self.coefficient_error,
            "passed": self.passed,
        });
        let mut t = Table::new(meta, &["coefficient", "solved", "closed_form"]);
        for k in 0..8 {
            t.push(vec![Self::NAMES[k].into(), self.coefficients[k].into(), self.closed_form[k].into()]);
        }
        t
    }
}

/// Largest accepted block discrepancy, relative to `1/h` (`h = 1` here).
pub const DG_BLOCK_TOL: f64 = 1e-12;

pub fn cmd_dg_check(c1: f64, c2: f64) -> Result<DgCheckReport> {
    let params = SchemeParams::new(c1, c2);
    let sol = solve_penalties(params)?;
    let closed = PenaltyCoefficients::closed_form(params);
    Ok(DgCheckReport {
        c1,
        c2,
        coefficients: sol.coefficients.to_array(),
        closed_form: closed.to_array(),
        coefficient_error: sol.coefficients.max_abs_diff(&closed),
        block_residual: sol.block_residual,
        passed: sol.block_residual <= DG_BLOCK_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolRow {
    pub omega: i64,
    pub nu: i64,
    #[serde(serialize_with = "complex_pair")]
    pub qhat1: Complex<f64>,
    #[serde(serialize_with = "complex_pair")]
    pub qhat2: Complex<f64>,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub cos_theta: f64,
    /// `Qhat1 / (-i kappa) - 1`; zero for `omega = 0`.
    pub phase_velocity_error: f64,
    pub eigen_residual: f64,
}

fn complex_pair<S: serde::Serializer>(z: &Complex<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Per-`omega` eigendecomposition of `Q(c1, c2)` on an `n`-block grid,
/// with each eigenpair checked against the operator.
pub fn cmd_symbol_dump(c1: f64, c2: f64, n: usize, length: f64) -> Result<Vec<SymbolRow>> {
    let params = SchemeParams::new(c1, c2);
    let grid = Arc::new(BlockGrid::new(n, length)?);
    let op = bfd_core::operators::BlockOperator::bfd(&grid, params);
    decompose_all(n, length, params)?
        .into_iter()
        .map(|d| {
            let (psi1, psi2) = verified_mode_vectors(&grid, &op, &d)
                .with_context(|| format!("eigenpair check at omega = {}", d.mode.omega))?;
            let residual = eigen_residual(&op, &psi1, d.qhat1)?.max(eigen_residual(&op, &psi2, d.qhat2)?);
            let kappa = grid.wavenumber(d.mode.omega);
            let phase = if d.mode.omega == 0 {
                0.0
            } else {
                (d.qhat1 / Complex::new(0.0, -kappa) - 1.0).norm()
            };
            Ok(SymbolRow {
                omega: d.mode.omega,
                nu: d.mode.nu,
                qhat1: d.qhat1,
                qhat2: d.qhat2,
                alpha1: d.first.alpha.norm(),
                beta1: d.first.beta.norm(),
                alpha2: d.second.alpha.norm(),
                beta2: d.second.beta.norm(),
                cos_theta: d.cos_theta,
                phase_velocity_error: phase,
                eigen_residual: residual,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| anyhow!("symbol dump for bfd({c1},{c2}), N = {n}: {e:#}"))
}

pub fn symbol_table(c1: f64, c2: f64, n: usize, length: f64, rows: &[SymbolRow]) -> Table {
    let meta = json!({"command": "symbol-dump", "c1": c1, "c2": c2, "n": n, "length": length});
    let mut t = Table::new(
        meta,
        &[
            "omega",
            "nu",
            "re_qhat1",
            "im_qhat1",
            "re_qhat2",
            "im_qhat2",
            "abs_alpha1",
            "abs_beta1",
            "abs_alpha2",
            "abs_beta2",
            "cos_theta",
            "phase_velocity_error",
            "eigen_residual",
        ],
    );
    for r in rows {
        t.push(vec![
            r.omega.into(),
            r.nu.into(),
            r.qhat1.re.into(),
            r.qhat1.im.into(),
            r.qhat2.re.into(),
            r.qhat2.im.into(),
            r.alpha1.into(),
            r.beta1.into(),
            r.alpha2.into(),
            r.beta2.into(),
            r.cos_theta.into(),
            r.phase_velocity_error.into(),
            r.eigen_residual.into(),
        ]);
    }
    t
}

/// Config preset for the phase demo: `sin(4 pi x)`, `N = 32`, `T = 4800`.
pub fn phase_demo_defaults(scheme: Scheme) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("phase-demo", scheme)
        .with_n(&[32])
        .with_t(4800.0)
        .with_propagator(Propagator::Modal);
    c.initial = InitialData::Sine { k: 2 };
    c
}

/// Config preset for error-vs-time: `N in {16, 128}`, `T = 1e10`.
pub fn error_vs_time_defaults(scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig::new("error-vs-time", scheme)
        .with_n(&[16, 128])
        .with_t(1e10)
        .with_propagator(Propagator::Modal)
}
