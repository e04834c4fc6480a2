//! `catsim`: run scenarios, sweeps and static cable queries.
//!
//! Exit codes: 0 on success, 1 on configuration or input errors, 2 when a
//! run aborts or output cannot be written.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catsim_core::catenary::{static_report, CableParams};
use catsim_core::simkit::output::fmt_num;
use catsim_core::simkit::sweep::{DEFAULT_AMPLITUDES, DEFAULT_KVS, GAIN_SWEEP_AMPLITUDE};
use catsim_core::simkit::{
    analyze_run, sweep_disturbance, sweep_gain, write_sweep_csv, GainVariant, Mode, SimConfig,
    SimError, SweepResult, TraceStatus,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "catsim",
    version,
    about = "Two quadrotors carrying a catenary cable"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv, lyapunov.csv and report.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the mode set in the config file.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail error against disturbance amplitude for low and high damping.
    SweepDisturbance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        amps: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail error against translational damping at a fixed amplitude.
    SweepGain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        kvs: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Static cable shape and endpoint forces for half-span s.
    Catenary {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, allow_negative_numbers = true)]
        l: f64,
        #[arg(long, allow_negative_numbers = true)]
        w: f64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ConfigInvalid(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<SimConfig, Failure> {
    Ok(SimConfig::from_file(path)?)
}

fn output_dir(flag: Option<PathBuf>, cfg: &SimConfig) -> Result<PathBuf, Failure> {
    flag.or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::Config("no output directory: pass --out or set output.dir".into()))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn run(config: &Path, mode: Option<String>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if let Some(m) = mode {
        cfg.mode = m.parse::<Mode>()?;
        cfg.validate()?;
    }
    let report = analyze_run(&cfg)?;
    print!("{}", report.to_text(&cfg));
    if let Some(dir) = out.or_else(|| cfg.output_dir.clone()) {
        report.write(&cfg, &dir)?;
        println!("output={}", dir.display());
    }
    match &report.trace.status {
        TraceStatus::Complete => Ok(()),
        TraceStatus::Aborted { t, reason } => {
            Err(Failure::Runtime(format!("run aborted at t={t}: {reason}")))
        }
    }
}

fn print_sweep(result: &SweepResult) {
    for row in &result.rows {
        println!(
            "{} param={} tail_metric={} lambda_hat={} status={}",
            result.label,
            fmt_num(row.param),
            fmt_num(row.tail_metric),
            fmt_num(row.lambda_hat),
            row.status
        );
    }
    for row in result.rows.iter().filter(|r| r.status != "ok") {
        eprintln!(
            "warning: {} point {} did not complete: {}",
            result.label, row.param, row.status
        );
    }
}

fn sweep_amplitudes(
    config: &Path,
    amps: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = load(config)?;
    let dir = output_dir(out, &cfg)?;
    let amps = amps.unwrap_or_else(|| DEFAULT_AMPLITUDES.to_vec());
    let outcomes = sweep_disturbance(&cfg, &amps, &[GainVariant::low(), GainVariant::high()])?;
    create_dir(&dir)?;
    for o in &outcomes {
        print_sweep(&o.result);
        write_sweep_csv(
            &o.result,
            &dir.join(format!("sweep_disturbance_{}.csv", o.result.label)),
        )?;
    }
    Ok(())
}

fn sweep_damping(
    config: &Path,
    kvs: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = load(config)?;
    let dir = output_dir(out, &cfg)?;
    let kvs = kvs.unwrap_or_else(|| DEFAULT_KVS.to_vec());
    let outcome = sweep_gain(&cfg, &kvs, GAIN_SWEEP_AMPLITUDE)?;
    create_dir(&dir)?;
    print_sweep(&outcome.result);
    write_sweep_csv(&outcome.result, &dir.join("sweep_gain.csv"))?;
    Ok(())
}

fn catenary(s: f64, l: f64, w: f64) -> Result<(), Failure> {
    let cable = CableParams::new(l, w).map_err(|e| Failure::Config(e.to_string()))?;
    let r = static_report(s, &cable).map_err(|e| Failure::Config(e.to_string()))?;
    println!("shape_param={}", fmt_num(r.shape_param));
    for (name, v) in [("t1", r.t1), ("t2", r.t2)] {
        println!("{name}_y={}", fmt_num(v.y));
        println!("{name}_z={}", fmt_num(v.z));
    }
    println!("max_tension={}", fmt_num(r.max_tension));
    println!("residual={}", fmt_num(r.residual));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, mode, out } => run(&config, mode, out),
        Command::SweepDisturbance { config, amps, out } => sweep_amplitudes(&config, amps, out),
        Command::SweepGain { config, kvs, out } => sweep_damping(&config, kvs, out),
        Command::Catenary { s, l, w } => catenary(s, l, w),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
