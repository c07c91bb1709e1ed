use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bfd_cli::analysis::PLATEAU_CLEARANCE;
use bfd_cli::experiments::{error_vs_time_defaults, phase_demo_defaults, symbol_table};
use bfd_cli::{
    cmd_convergence, cmd_dg_check, cmd_error_vs_time, cmd_long_time, cmd_phase_demo, cmd_stability,
    cmd_symbol_dump, ExperimentConfig, Format, InitialData, LatticeSpec, Propagator, Scheme, Table,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bfd", version, about = "Block finite difference transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error against N at a fixed final time, with fitted slopes.
    Convergence(Common),
    /// Convergence at large T (defaults: T = 100, modal propagation).
    LongTime(Common),
    /// Error against time on log-spaced samples (defaults: N = 16,128, T = 1e10).
    ErrorVsTime(Common),
    /// Solution profiles after long propagation (defaults: N = 32, T = 4800, sin 4 pi x).
    PhaseDemo(Common),
    /// Von Neumann scan over a (c1, c2) lattice.
    Stability(StabilityArgs),
    /// Solves for the DG penalties that reproduce bfd(c1, c2).
    DgCheck(ParamArgs),
    /// Per-omega eigendecomposition of the operator.
    SymbolDump(SymbolArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeKind {
    Bfd,
    Fd,
    Dg,
    DgPen,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropagatorArg {
    Rk,
    Modal,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

impl Output {
    fn emit(&self, table: &Table) -> Result<()> {
        let format = match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        table.emit(format, self.out.as_deref())
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "bfd")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c2: f64,
    /// Order of the central finite difference scheme (2, 4 or 6).
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Block counts; repeat the flag or separate with commas.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    /// Domain length.
    #[arg(long = "L", default_value_t = 1.0)]
    length: f64,
    /// Final time.
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    cfl: f64,
    /// Apply the spectral filter before measuring errors.
    #[arg(long)]
    post_process: bool,
    #[arg(long, value_enum)]
    propagator: Option<PropagatorArg>,
    /// Initial data: exp-cos, sine:K or random:MODES.
    #[arg(long)]
    init: Option<String>,
    /// Seed for random initial data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

impl Common {
    fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeKind::Bfd => Scheme::bfd(self.c1, self.c2),
            SchemeKind::Fd => Scheme::Fd { order: self.order },
            SchemeKind::Dg => Scheme::DgStandard,
            SchemeKind::DgPen => Scheme::DgPenalized { c1: self.c1, c2: self.c2 },
        }
    }

    /// Overlays the flags on a command's defaults.
    fn apply(&self, mut c: ExperimentConfig) -> Result<ExperimentConfig> {
        if !self.n.is_empty() {
            c.n_list = self.n.clone();
        }
        if let Some(t) = self.t {
            c.t_final = t;
        }
        if let Some(p) = self.propagator {
            c.propagator = match p {
                PropagatorArg::Rk => Propagator::Rk,
                PropagatorArg::Modal => Propagator::Modal,
            };
        }
        if let Some(init) = &self.init {
            c.initial = parse_init(init, self.seed)?;
        }
        c.length = self.length;
        c.cfl = self.cfl;
        c.post_process = self.post_process;
        c.seed = self.seed;
        c.out = self.output.out.clone();
        c.validate()?;
        Ok(c)
    }
}

fn parse_init(s: &str, seed: u64) -> Result<InitialData> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match kind {
        "exp-cos" => InitialData::ExpCos,
        "sine" => InitialData::Sine {
            k: arg.parse().with_context(|| format!("bad wavenumber in --init {s}"))?,
        },
        "random" => InitialData::Random {
            seed,
            modes: if arg.is_empty() { 8 } else { arg.parse().with_context(|| format!("bad mode count in --init {s}"))? },
        },
        _ => bail!("unknown initial data {s:?}; expected exp-cos, sine:K or random:MODES"),
    })
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    hi: f64,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 33)]
    points: usize,
    #[arg(long, default_value_t = 257)]
    theta_samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c2: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SymbolArgs {
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long = "N", default_value_t = 8)]
    n: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    length: f64,
    #[command(flatten)]
    output: Output,
}

fn report_fit(name: &str, fit: Option<bfd_cli::experiments::FitSummary>) {
    match fit {
        Some(f) => eprintln!(
            "{name} slope {:.3} (residual {:.3}, {} points{})",
            f.slope,
            f.residual,
            f.points,
            if f.accepted { "" } else { ", not accepted" }
        ),
        None => eprintln!("{name} slope unavailable"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convergence(a) => {
            let config = a.apply(ExperimentConfig::new("convergence", a.scheme()))?;
            let report = cmd_convergence(&config)?;
            a.output.emit(&report.to_table())?;
            report_fit("l2", report.l2_fit);
            report_fit("linf", report.linf_fit);
            report.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
        }
        Command::LongTime(a) => {
            let base = ExperimentConfig::new("long-time", a.scheme())
                .with_t(100.0)
                .with_propagator(Propagator::Modal);
            let config = a.apply(base)?;
            let report = cmd_long_time(&config)?;
            a.output.emit(&report.to_table())?;
            report_fit("l2", report.l2_fit);
            report_fit("coarse l2", report.coarse_l2_fit);
            report.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
        }
        Command::ErrorVsTime(a) => {
            let config = a.apply(error_vs_time_defaults(a.scheme()))?;
            let report = cmd_error_vs_time(&config)?;
            a.output.emit(&report.to_table())?;
            for s in &report.series {
                eprintln!(
                    "{}{} N={}: growth slope {}, plateau {}",
                    s.label,
                    if s.filtered { "+filter" } else { "" },
                    s.n,
                    s.analysis.growth_slope.map_or("-".into(), |v| format!("{v:.3}")),
                    s.analysis.plateau.map_or("-".into(), |p| format!(
                        "{:.2e} until t={:.1e} (growth fitted above {PLATEAU_CLEARANCE}x)",
                        p.level, p.t_end
                    )),
                );
            }
        }
        Command::PhaseDemo(a) => {
            let mut base = phase_demo_defaults(a.scheme());
            base.post_process = a.post_process;
            let config = a.apply(base)?;
            let report = cmd_phase_demo(&config)?;
            a.output.emit(&report.to_table())?;
            for p in &report.profiles {
                eprintln!("{}{}: Linf error {:.3e}", p.label, if p.filtered { "+filter" } else { "" }, p.linf_error);
            }
        }
        Command::Stability(a) => {
            let study = cmd_stability(LatticeSpec {
                lo: a.lo,
                hi: a.hi,
                points: a.points,
                theta_samples: a.theta_samples,
            })?;
            a.output.emit(&study.to_table())?;
            let bad = study.mismatches();
            for r in &bad {
                eprintln!(
                    "verdict mismatch at c1={}, c2={}: max Re {:.3e}, max cos {:.3}",
                    r.c1, r.c2, r.max_re, r.max_cos_theta
                );
            }
            return Ok(bad.is_empty());
        }
        Command::DgCheck(a) => {
            let report = cmd_dg_check(a.c1, a.c2)?;
            a.output.emit(&report.to_table())?;
            eprintln!(
                "block residual {:.3e}, closed-form deviation {:.3e}",
                report.block_residual, report.coefficient_error
            );
            return Ok(report.passed);
        }
        Command::SymbolDump(a) => {
            let rows = cmd_symbol_dump(a.c1, a.c2, a.n, a.length)?;
            a.output.emit(&symbol_table(a.c1, a.c2, a.n, a.length, &rows))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
