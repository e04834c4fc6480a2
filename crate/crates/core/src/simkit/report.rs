//! Run analysis: a trace plus its ISS summary as `key=value` lines.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{
    dissipation_check, disturbance_sup, estimate_lambda_gamma, fit_decay_rate, peak_error,
    tail_metric, IssEstimate, LyapunovSample,
};
use crate::simkit::config::SimConfig;
use crate::simkit::output::{fmt_num, write_file, write_lyapunov_csv, write_trace_csv};
use crate::simkit::scenario::{run_scenario, SimTrace, TraceStatus};
use crate::simkit::SimError;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: SimTrace,
    /// Zero-disturbance companion run, present only when the run itself is
    /// perturbed.
    pub nominal: Option<SimTrace>,
    pub tail_metric: f64,
    pub peak_error: f64,
    pub disturbance_sup: f64,
    pub final_error: f64,
    /// Decay fit `(rate, r^2)` of `V`, for unperturbed runs only.
    pub decay: Option<(f64, f64)>,
    pub iss: Option<IssEstimate>,
    /// Fraction of samples violating the certificate at `(lambda_cert, gamma_hat)`.
    pub violation_fraction: Option<f64>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn to_text(&self, cfg: &SimConfig) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("mode", cfg.mode.as_str().into());
        kv("step", fmt_num(cfg.step));
        kv("horizon", fmt_num(cfg.horizon));
        kv("amplitude", fmt_num(cfg.disturbance.amplitude));
        kv("samples", self.trace.rows.len().to_string());
        match &self.trace.status {
            TraceStatus::Complete => kv("status", "complete".into()),
            TraceStatus::Aborted { t, reason } => {
                kv("status", "aborted".into());
                kv("abort_time", fmt_num(*t));
                kv("abort_reason", reason.replace('\n', " "));
            }
        }
        kv("final_error", fmt_num(self.final_error));
        kv("peak_error", fmt_num(self.peak_error));
        kv("tail_metric", fmt_num(self.tail_metric));
        kv("disturbance_sup", fmt_num(self.disturbance_sup));
        if let Some((rate, r2)) = self.decay {
            kv("decay_rate", fmt_num(rate));
            kv("decay_r2", fmt_num(r2));
        }
        if let Some(iss) = &self.iss {
            kv("lambda_hat", fmt_num(iss.lambda_hat));
            kv("lambda_cert", fmt_num(iss.lambda_cert));
            kv("gamma_hat", fmt_num(iss.gamma_hat));
            kv("m1_hat", fmt_num(iss.m1_hat));
            kv("m2_hat", fmt_num(iss.m2_hat));
            kv("c_hat", fmt_num(iss.c_hat));
            kv("fit_r2", fmt_num(iss.r_squared));
            kv("ultimate_bound", fmt_num(iss.c_hat * self.disturbance_sup));
        }
        if let Some(f) = self.violation_fraction {
            kv("violation_fraction", fmt_num(f));
        }
        if cfg.mode == crate::simkit::config::Mode::Full {
            kv(
                "max_orthonormality_error",
                fmt_num(self.trace.max_orthonormality_error),
            );
            kv("max_height_gap", fmt_num(self.trace.max_height_gap));
            kv("height_events", self.trace.events.len().to_string());
        }
        for (i, n) in self.notes.iter().enumerate() {
            kv(&format!("note{}", i + 1), n.replace('\n', " "));
        }
        out
    }

    /// Writes `trace.csv`, `lyapunov.csv` and `report.txt` into `dir`.
    pub fn write(&self, cfg: &SimConfig, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|source| SimError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_trace_csv(&self.trace, &dir.join("trace.csv"))?;
        write_lyapunov_csv(&self.trace.lyapunov_samples(), &dir.join("lyapunov.csv"))?;
        write_file(&dir.join("report.txt"), &self.to_text(cfg))
    }
}

fn iss_for(
    nominal: &[LyapunovSample],
    perturbed: &[LyapunovSample],
) -> Result<(IssEstimate, f64), String> {
    let iss = estimate_lambda_gamma(nominal, &[perturbed]).map_err(|e| e.to_string())?;
    let check =
        dissipation_check(perturbed, iss.lambda_cert, iss.gamma_hat).map_err(|e| e.to_string())?;
    Ok((iss, check.fraction))
}

/// Runs `cfg` and summarizes it. A perturbed run gets a nominal companion so
/// the ISS constants can be estimated. Analysis failures become notes, not
/// errors.
pub fn analyze_run(cfg: &SimConfig) -> Result<RunReport, SimError> {
    let trace = run_scenario(cfg)?;
    let samples = trace.lyapunov_samples();
    let mut notes = Vec::new();

    let decay = if cfg.disturbance.amplitude == 0.0 {
        match fit_decay_rate(&samples) {
            Ok(d) => Some(d),
            Err(e) => {
                notes.push(format!("decay fit: {e}"));
                None
            }
        }
    } else {
        None
    };

    let mut nominal = None;
    let mut iss = None;
    let mut violation_fraction = None;
    if cfg.disturbance.amplitude > 0.0 && trace.is_complete() {
        let nominal_cfg = SimConfig {
            disturbance: cfg.disturbance.with_amplitude(0.0),
            ..cfg.clone()
        };
        let nom = run_scenario(&nominal_cfg)?;
        match iss_for(&nom.lyapunov_samples(), &samples) {
            Ok((est, frac)) => {
                iss = Some(est);
                violation_fraction = Some(frac);
            }
            Err(e) => notes.push(format!("iss estimate: {e}")),
        }
        nominal = Some(nom);
    }

    Ok(RunReport {
        tail_metric: if trace.is_complete() {
            tail_metric(&samples, cfg.tail_fraction)
        } else {
            f64::NAN
        },
        peak_error: peak_error(&samples),
        disturbance_sup: disturbance_sup(&samples),
        final_error: trace.final_row().map_or(f64::NAN, |r| r.norm_e),
        trace,
        nominal,
        decay,
        iss,
        violation_fraction,
        notes,
    })
}
