//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_power, ConfigError, GridValue, RawConfig, RunConfig};
use crate::experiment::{ExperimentError, ExperimentKind, Runner, SweepResult};
use crate::output::{emit_csv, OutputError};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "wncs",
    version,
    about = "Coding-free wireless control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// State decay and running cost for several closed-loop parameters.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Channel coefficient.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        /// Closed-loop parameters, comma separated.
        #[arg(long = "ac", value_delimiter = ',', allow_hyphen_values = true)]
        a_c: Option<Vec<f64>>,
    },
    /// Coding-free against coded schemes over a power grid.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Joint slow-fading design over a power grid.
    MultiSlow {
        #[command(flatten)]
        common: Common,
        /// Channel coefficients, comma separated.
        #[arg(long, value_delimiter = ',')]
        h: Option<Vec<f64>>,
    },
    /// Joint fast-fading design over a power grid.
    MultiFast {
        #[command(flatten)]
        common: Common,
        /// Channel variances, comma separated.
        #[arg(long = "sigma-h2", value_delimiter = ',')]
        sigma_h2: Option<Vec<f64>>,
    },
    /// Average number of remotely controlled plants under Rayleigh draws.
    SelectSweep {
        #[command(flatten)]
        common: Common,
        /// Mean channel power gain.
        #[arg(long)]
        mean_gain: Option<f64>,
        /// Plant counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        group_sizes: Option<Vec<usize>>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Closed forms against brute-force oracles.
    Verify,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; defaults to `<subcommand>.csv`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Symbols per control process.
    #[arg(long)]
    horizon: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Open-loop plant gain.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long = "sigma-w2")]
    sigma_w2: Option<f64>,
    /// Actuator noise power with unit, e.g. `-40dBm`.
    #[arg(long = "sigma-z2", allow_hyphen_values = true)]
    sigma_z2: Option<String>,
    /// Single transmit-power limit with unit, e.g. `20dBm`.
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    /// Power grid: `START:STOP:STEP_DB` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    powers: Option<String>,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Experiment(ExperimentError::Infeasible(_)) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        }
    }
}

impl Common {
    fn raw(&self) -> Result<RawConfig, ConfigError> {
        // Flags are checked here so a bad flag is reported as such.
        if let Some(s) = &self.sigma_z2 {
            parse_power("sigma_z2", s)?;
        }
        if let Some(s) = &self.p0 {
            parse_power("p0", s)?;
        }
        Ok(RawConfig {
            seed: self.seed,
            replicas: self.replicas,
            horizon: self.horizon,
            threads: self.threads,
            output: self.output.clone(),
            a: self.a,
            sigma_w2: self.sigma_w2,
            sigma_z2: self.sigma_z2.clone().map(toml::Value::String),
            p0: self.p0.clone().map(toml::Value::String),
            powers: self.powers.clone().map(GridValue::Text),
            ..Default::default()
        })
    }
}

fn resolve(
    kind: ExperimentKind,
    common: &Common,
    extra: RawConfig,
) -> Result<RunConfig, ConfigError> {
    let file = match &common.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    let mut flags = common.raw()?;
    flags = flags.overlay(extra);
    RunConfig::resolve(Some(kind), file.overlay(flags))
}

fn default_output(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Trace => "trace.csv",
        ExperimentKind::SingleCompare => "compare.csv",
        ExperimentKind::MultiSlowSweep => "multi-slow.csv",
        ExperimentKind::MultiFastSweep => "multi-fast.csv",
        ExperimentKind::SelectionSweep => "select-sweep.csv",
    }
}

fn summarize(
    out: &mut dyn Write,
    result: &SweepResult,
    csv: &std::path::Path,
    meta: &std::path::Path,
) {
    let _ = writeln!(
        out,
        "{} rows x {} series -> {} (metadata {})",
        result.x.len(),
        result.series.len(),
        csv.display(),
        meta.display()
    );
    let last = result.x.len() - 1;
    for s in &result.series {
        let infs = s.values.iter().filter(|c| c.value().is_none()).count();
        let at_last = s.values[last]
            .value()
            .map_or("INF".to_owned(), |v| format!("{v:.6}"));
        let _ = writeln!(
            out,
            "  {:<24} {} INF cells, at {} = {}: {}",
            s.name, infs, result.x_label, result.x[last], at_last
        );
    }
}

fn run_experiment(
    kind: ExperimentKind,
    common: &Common,
    extra: RawConfig,
    out: &mut dyn Write,
) -> Result<(), RunError> {
    let cfg = resolve(kind, common, extra)?;
    let spec = cfg.spec()?;
    let runner = Runner::new(cfg.threads)?;
    let result = runner.run(&spec)?;
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_output(kind)));
    let meta = emit_csv(&result, &cfg.effective(), &path)?;
    summarize(out, &result, &path, &meta);
    Ok(())
}

fn run_verify(out: &mut dyn Write) -> i32 {
    let checks = verify::run_all();
    for c in &checks {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Reports go to `out`, errors to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, common, extra) = match cli.command {
        Command::Verify => return run_verify(out),
        Command::Trace { common, h, x0, a_c } => (
            ExperimentKind::Trace,
            common,
            RawConfig {
                h: h.map(|v| vec![v]),
                x0,
                a_c,
                ..Default::default()
            },
        ),
        Command::Compare { common, h } => (
            ExperimentKind::SingleCompare,
            common,
            RawConfig {
                h: h.map(|v| vec![v]),
                ..Default::default()
            },
        ),
        Command::MultiSlow { common, h } => (
            ExperimentKind::MultiSlowSweep,
            common,
            RawConfig {
                h,
                ..Default::default()
            },
        ),
        Command::MultiFast { common, sigma_h2 } => (
            ExperimentKind::MultiFastSweep,
            common,
            RawConfig {
                sigma_h2,
                ..Default::default()
            },
        ),
        Command::SelectSweep {
            common,
            mean_gain,
            group_sizes,
            realizations,
        } => (
            ExperimentKind::SelectionSweep,
            common,
            RawConfig {
                mean_gain,
                group_sizes,
                realizations,
                ..Default::default()
            },
        ),
    };
    match run_experiment(kind, &common, extra, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
