//! Parameter sweeps over disturbance amplitude and translational damping.
//! Points are independent and run in parallel; output order follows the
//! swept parameter, never completion order.

use rayon::prelude::*;

use crate::analysis::{fit_decay_rate, tail_metric};
use crate::simkit::config::SimConfig;
use crate::simkit::scenario::{run_scenario, SimTrace, TraceStatus};
use crate::simkit::SimError;

pub const DEFAULT_AMPLITUDES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
pub const DEFAULT_KVS: [f64; 5] = [4.0, 6.0, 8.0, 10.0, 12.0];
/// Disturbance amplitude held fixed in the damping sweep.
pub const GAIN_SWEEP_AMPLITUDE: f64 = 0.40;

/// A damping setting: translational `Kv = kv I` and attitude `kOmega`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVariant {
    pub label: String,
    pub kv: f64,
    pub komega: f64,
}

impl GainVariant {
    pub fn low() -> Self {
        GainVariant {
            label: "low".into(),
            kv: 4.0,
            komega: 3.5,
        }
    }

    pub fn high() -> Self {
        GainVariant {
            label: "high".into(),
            kv: 10.0,
            komega: 8.0,
        }
    }

    pub fn apply(&self, cfg: &SimConfig) -> SimConfig {
        let mut out = cfg.clone();
        out.set_damping(self.kv);
        out.gains.komega = self.komega;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub tail_metric: f64,
    pub lambda_hat: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub label: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn params(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    pub fn tails(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tail_metric).collect()
    }
}

/// Sweep output with the underlying traces kept for further analysis.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub result: SweepResult,
    /// Nominal (zero-disturbance) traces used for the decay fits, keyed by
    /// the same parameter as the rows.
    pub nominal: Vec<(f64, SimTrace)>,
    pub traces: Vec<(f64, SimTrace)>,
}

fn status_of(trace: &SimTrace) -> String {
    match &trace.status {
        TraceStatus::Complete => "ok".into(),
        TraceStatus::Aborted { t, reason } => format!("aborted at t={t}: {reason}"),
    }
}

/// Decay rate of a nominal run, or NaN with a note when the fit fails.
fn nominal_rate(trace: &SimTrace) -> (f64, Option<String>) {
    match fit_decay_rate(&trace.lyapunov_samples()) {
        Ok((rate, _)) => (rate, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    }
}

fn sort_rows<T>(rows: &mut [(f64, T)]) {
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
}

fn point(
    cfg: &SimConfig,
    param: f64,
    lambda_hat: f64,
    note: &Option<String>,
) -> (SweepRow, Option<SimTrace>) {
    match run_scenario(cfg) {
        Ok(trace) => {
            let mut status = status_of(&trace);
            if let Some(n) = note {
                status = format!("{status}; lambda fit failed: {n}");
            }
            let tail = if trace.is_complete() {
                tail_metric(&trace.lyapunov_samples(), cfg.tail_fraction)
            } else {
                f64::NAN
            };
            (
                SweepRow {
                    param,
                    tail_metric: tail,
                    lambda_hat,
                    status,
                },
                Some(trace),
            )
        }
        Err(e) => (
            SweepRow {
                param,
                tail_metric: f64::NAN,
                lambda_hat,
                status: format!("failed: {e}"),
            },
            None,
        ),
    }
}

/// One run per amplitude and variant. Returns one outcome per variant, in the
/// order given.
pub fn sweep_disturbance(
    cfg: &SimConfig,
    amplitudes: &[f64],
    variants: &[GainVariant],
) -> Result<Vec<SweepOutcome>, SimError> {
    if amplitudes.is_empty() || amplitudes.iter().any(|a| !(*a >= 0.0)) {
        return Err(SimError::ConfigInvalid(
            "amplitudes must be a non-empty list of non-negative values".into(),
        ));
    }
    cfg.validate()?;
    variants
        .iter()
        .map(|variant| {
            let base = variant.apply(cfg);
            let nominal_cfg = SimConfig {
                disturbance: base.disturbance.with_amplitude(0.0),
                ..base.clone()
            };
            let nominal = run_scenario(&nominal_cfg)?;
            let (lambda_hat, note) = nominal_rate(&nominal);

            let mut points: Vec<(f64, (SweepRow, Option<SimTrace>))> = amplitudes
                .par_iter()
                .map(|&amp| {
                    let c = SimConfig {
                        disturbance: base.disturbance.with_amplitude(amp),
                        ..base.clone()
                    };
                    (amp, point(&c, amp, lambda_hat, &note))
                })
                .collect();
            sort_rows(&mut points);
            Ok(collect_outcome(
                variant.label.clone(),
                points,
                vec![(0.0, nominal)],
            ))
        })
        .collect()
}

/// Damping sweep at a fixed disturbance amplitude.
pub fn sweep_gain(
    cfg: &SimConfig,
    kv_values: &[f64],
    amplitude: f64,
) -> Result<SweepOutcome, SimError> {
    if kv_values.is_empty() || kv_values.iter().any(|k| !(*k > 0.0)) {
        return Err(SimError::ConfigInvalid(
            "kv values must be a non-empty list of positive values".into(),
        ));
    }
    if !(amplitude >= 0.0) {
        return Err(SimError::ConfigInvalid(format!(
            "amplitude {amplitude} must be non-negative"
        )));
    }
    cfg.validate()?;
    type Point = (f64, (SweepRow, Option<SimTrace>), Option<SimTrace>);
    let mut points: Vec<Point> = kv_values
        .par_iter()
        .map(|&kv| {
            let mut c = cfg.clone();
            c.set_damping(kv);
            let nominal_cfg = SimConfig {
                disturbance: c.disturbance.with_amplitude(0.0),
                ..c.clone()
            };
            let (nominal, lambda_hat, note) = match run_scenario(&nominal_cfg) {
                Ok(tr) => {
                    let (rate, note) = nominal_rate(&tr);
                    (Some(tr), rate, note)
                }
                Err(e) => (None, f64::NAN, Some(e.to_string())),
            };
            c.disturbance = c.disturbance.with_amplitude(amplitude);
            (kv, point(&c, kv, lambda_hat, &note), nominal)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nominal = Vec::new();
    let rows = points
        .into_iter()
        .map(|(kv, row, nom)| {
            if let Some(n) = nom {
                nominal.push((kv, n));
            }
            (kv, row)
        })
        .collect();
    Ok(collect_outcome("kv".into(), rows, nominal))
}

fn collect_outcome(
    label: String,
    points: Vec<(f64, (SweepRow, Option<SimTrace>))>,
    nominal: Vec<(f64, SimTrace)>,
) -> SweepOutcome {
    let mut rows = Vec::with_capacity(points.len());
    let mut traces = Vec::new();
    for (param, (row, trace)) in points {
        rows.push(row);
        if let Some(t) = trace {
            traces.push((param, t));
        }
    }
    SweepOutcome {
        result: SweepResult { label, rows },
        nominal,
        traces,
    }
}
