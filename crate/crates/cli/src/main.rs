//! `qfcs`: sweeps of heat-current statistics for the V model and for
//! user-supplied models.

mod commands;
mod config;
mod output;
mod selftest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qfcs_core::vmodel::Preset;
use qfcs_core::Method;

use crate::config::{ModelFile, Source};
use crate::output::Format;

/// Rejected input: bad flags, config files or parameter combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "qfcs",
    version,
    about = "Full counting statistics of heat currents in open quantum systems"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Named V-model preset (fig2, fig4a, fig4b, fig5, fig6, fig7a, fig7b).
    /// Defaults to fig2 when no config is given.
    #[arg(long, global = true, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON model file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "all")]
    method: MethodArg,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults to csv for sweeps and json for single objects.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps; 0 or absent uses all cores.
    #[arg(long, global = true, env = "QFCS_JOBS")]
    jobs: Option<usize>,
    /// KEY=VAL with KEY one of chi_step, beta_step_rel, cluster_epsilon.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    tol_override: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Unified,
    Secular,
    Redfield,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Unified => vec![Method::Unified],
            MethodArg::Secular => vec![Method::Secular],
            MethodArg::Redfield => vec![Method::Redfield],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CGF and its mirrored value G(-χ-iβ) over a χ grid.
    Cgf {
        /// Level splittings (preset only); comma separated.
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        chi_points: usize,
        /// Upper end of the χ grid; defaults to 2π over the largest Bohr frequency.
        #[arg(long)]
        chi_max: Option<f64>,
        /// Counted bath id; defaults to the first bath.
        #[arg(long)]
        bath: Option<String>,
    },
    /// Green-Kubo and second-order transport coefficients against α.
    Transport {
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 21)]
        alpha_points: usize,
        /// Mean temperature; defaults to the preset's.
        #[arg(long)]
        t_bar: Option<f64>,
    },
    /// Mean current of all three methods against Δ.
    Crossover {
        /// Explicit Δ values; overrides the log-spaced range.
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 1e-4)]
        delta_min: f64,
        #[arg(long, default_value_t = 0.9)]
        delta_max: f64,
        #[arg(long, default_value_t = 41)]
        delta_points: usize,
    },
    /// Steady-state coherence ρ23 over an (α, Δ) grid.
    Coherence {
        #[arg(long, default_value_t = 21)]
        alpha_points: usize,
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 5e-4)]
        delta_min: f64,
        #[arg(long, default_value_t = 5e-3)]
        delta_max: f64,
        #[arg(long, default_value_t = 10)]
        delta_points: usize,
    },
    /// Uncertainty ratio δβ Var(J)/⟨J⟩ against δT at fixed mean temperature.
    Tur {
        /// Explicit δT values; overrides the log-spaced range.
        #[arg(long = "dt", value_delimiter = ',')]
        dt: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt_min: f64,
        #[arg(long, default_value_t = 3.9)]
        dt_max: f64,
        #[arg(long, default_value_t = 40)]
        dt_points: usize,
        #[arg(long)]
        t_bar: Option<f64>,
    },
    /// Golden-rule rates at every Bohr frequency and cluster center.
    Rates,
    /// Dump L(χ) as row-major complex pairs.
    Generator {
        /// One value per bath as RE or RE:IM; missing baths get 0.
        #[arg(long, value_delimiter = ',')]
        chi: Vec<String>,
    },
    /// Steady state and mean currents.
    SteadyState,
    /// Run the invariant suite; exit 1 on any failure.
    Selftest {
        #[arg(long)]
        quick: bool,
        /// Corrupt one closed-form generator entry (debug builds only).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// Step and clustering overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tolerances {
    pub chi_step: Option<f64>,
    pub beta_step_rel: Option<f64>,
    pub cluster_epsilon: Option<f64>,
}

impl Tolerances {
    fn parse(items: &[String]) -> Result<Self> {
        let mut t = Tolerances::default();
        for item in items {
            let Some((key, val)) = item.split_once('=') else {
                bail!(UsageError(format!(
                    "--tol-override expects KEY=VAL, got `{item}`"
                )));
            };
            let v: f64 = val.trim().parse().map_err(|_| {
                UsageError(format!("--tol-override {key}: `{val}` is not a number"))
            })?;
            if !(v >= 0.0 && v.is_finite()) {
                bail!(UsageError(format!(
                    "--tol-override {key}: need a finite value ≥ 0"
                )));
            }
            let slot = match key.trim() {
                "chi_step" => &mut t.chi_step,
                "beta_step_rel" => &mut t.beta_step_rel,
                "cluster_epsilon" => &mut t.cluster_epsilon,
                other => bail!(UsageError(format!("unknown --tol-override key `{other}`"))),
            };
            *slot = Some(v);
        }
        if t.chi_step == Some(0.0) || t.beta_step_rel == Some(0.0) {
            bail!(UsageError(
                "finite-difference steps must be positive".into()
            ));
        }
        Ok(t)
    }
}

/// Command line without output plumbing flags, for the CSV header.
fn provenance() -> String {
    let mut args = std::env::args().skip(1);
    let mut kept = Vec::new();
    while let Some(a) = args.next() {
        if a == "--out" || a == "--jobs" {
            args.next();
        } else if !(a.starts_with("--out=") || a.starts_with("--jobs=")) {
            kept.push(a);
        }
    }
    kept.join(" ")
}

fn source(global: &Global, tol: &Tolerances) -> Result<Source> {
    let epsilon = tol.cluster_epsilon;
    if let Some(path) = &global.config {
        return Ok(Source::File {
            model: ModelFile::load(path)?,
            epsilon,
        });
    }
    let name = global.preset.as_deref().unwrap_or("fig2");
    let Some(preset) = Preset::parse(name) else {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        bail!(UsageError(format!(
            "unknown preset `{name}` (expected one of {})",
            names.join(", ")
        )));
    };
    Ok(Source::Preset {
        params: preset.params(),
        epsilon,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let tol = Tolerances::parse(&g.tol_override)?;
    if let Command::Selftest {
        quick,
        inject_fault,
    } = cli.command
    {
        if inject_fault && !cfg!(debug_assertions) {
            bail!(UsageError(
                "--inject-fault is only available in debug builds".into()
            ));
        }
        let ok = selftest::run(quick, inject_fault);
        return Ok(if ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }

    let ctx = commands::Ctx {
        source: source(g, &tol)?,
        methods: g.method.methods(),
        tol,
        params: provenance(),
    };
    let sweep_format = g.format.unwrap_or(Format::Csv);
    let object_format = g.format.unwrap_or(Format::Json);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs.unwrap_or(0))
        .build()?;
    let text = pool.install(|| -> Result<String> {
        match &cli.command {
            Command::Cgf {
                delta,
                chi_points,
                chi_max,
                bath,
            } => ctx
                .cgf(delta, *chi_points, *chi_max, bath.as_deref())?
                .render(sweep_format),
            Command::Transport {
                delta,
                alpha_points,
                t_bar,
            } => ctx
                .transport(delta, *alpha_points, *t_bar)?
                .render(sweep_format),
            Command::Crossover {
                delta,
                delta_min,
                delta_max,
                delta_points,
            } => {
                let grid = commands::grid_or(delta, || {
                    commands::logspace(*delta_min, *delta_max, *delta_points)
                })?;
                ctx.crossover(&grid)?.render(sweep_format)
            }
            Command::Coherence {
                alpha_points,
                delta,
                delta_min,
                delta_max,
                delta_points,
            } => {
                let grid = commands::grid_or(delta, || {
                    commands::linspace(*delta_min, *delta_max, *delta_points)
                })?;
                ctx.coherence(*alpha_points, &grid)?.render(sweep_format)
            }
            Command::Tur {
                dt,
                dt_min,
                dt_max,
                dt_points,
                t_bar,
            } => {
                let grid =
                    commands::grid_or(dt, || commands::logspace(*dt_min, *dt_max, *dt_points))?;
                ctx.tur(&grid, *t_bar)?.render(sweep_format)
            }
            Command::Rates => ctx.rates(object_format),
            Command::Generator { chi } => ctx.generator(chi, object_format),
            Command::SteadyState => ctx.steady_state(object_format),
            Command::Selftest { .. } => unreachable!("handled above"),
        }
    })?;
    output::emit(&text, g.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

/// 2 for rejected input, 3 for solver failures, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qfcs_core::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
