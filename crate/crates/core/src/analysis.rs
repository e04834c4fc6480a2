//! Lyapunov bookkeeping over simulated traces: evaluation of the composite
//! Lyapunov function, finite-difference dissipation checks, empirical decay
//! and gain constants, and the resulting ultimate bound.

use thiserror::Error;

use crate::geom3::{Mat3, Vec3};

/// Fraction of samples allowed to violate a dissipation inequality.
pub const VIOLATION_TOLERANCE: f64 = 1e-3;
/// Samples with `V` below this are excluded from log-linear fits.
pub const V_FLOOR: f64 = 1e-12;
/// Initial transient excluded from the decay-rate fit (s).
pub const FIT_SKIP: f64 = 1.0;
/// Minimum number of samples for the dissipation check.
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    InsufficientSamples(usize),
    #[error("trace is not uniformly sampled (step {0} deviates from {1})")]
    NonUniformStep(f64, f64),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("non-positive input: {0}")]
    NonPositiveInput(String),
}

/// Attitude part of the error for one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttitudeErrorTerms {
    pub er: Vec3,
    pub eomega: Vec3,
    /// `tr(I - Rd^T R)`.
    pub potential: f64,
}

/// Relative translational errors plus, in full mode, both attitude errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub ep: Vec3,
    pub ev: Vec3,
    pub attitude: Option<[AttitudeErrorTerms; 2]>,
}

impl ErrorState {
    pub fn translational(ep: Vec3, ev: Vec3) -> Self {
        ErrorState {
            ep,
            ev,
            attitude: None,
        }
    }

    /// Euclidean norm of the stacked error vector.
    pub fn norm(&self) -> f64 {
        let mut sq = self.ep.norm_squared() + self.ev.norm_squared();
        if let Some(att) = &self.attitude {
            for a in att {
                sq += a.er.norm_squared() + a.eomega.norm_squared();
            }
        }
        sq.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    pub alpha: f64,
    pub beta: [f64; 2],
    pub kr: f64,
    pub reduced_mass: f64,
    /// Relative position gain.
    pub kp: Mat3,
    pub inertia: [Mat3; 2],
}

impl Default for LyapunovParams {
    fn default() -> Self {
        let j = Mat3::from_diagonal(&Vec3::new(0.08, 0.08, 0.12));
        LyapunovParams {
            alpha: 0.08,
            beta: [0.02, 0.02],
            kr: 8.0,
            reduced_mass: 1.0,
            kp: 6.0 * Mat3::identity(),
            inertia: [j, j],
        }
    }
}

pub fn lyapunov_value(err: &ErrorState, params: &LyapunovParams) -> f64 {
    let mut v = 0.5 * params.reduced_mass * err.ev.dot(&err.ev)
        + 0.5 * err.ep.dot(&(params.kp * err.ep))
        + params.alpha * err.ep.dot(&err.ev);
    if let Some(att) = &err.attitude {
        for (i, a) in att.iter().enumerate() {
            let j = &params.inertia[i];
            v += 0.5 * a.eomega.dot(&(j * a.eomega))
                + 0.5 * params.kr * a.potential
                + params.beta[i] * a.er.dot(&(j * a.eomega));
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovSample {
    pub t: f64,
    pub v: f64,
    pub vdot_fd: f64,
    pub norm_e: f64,
    pub norm_delta: f64,
}

/// Derivative of uniformly sampled `y`: central differences inside, one-sided
/// at the two ends.
pub fn finite_difference(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    (y[1] - y[0]) / h
                } else if k == n - 1 {
                    (y[n - 1] - y[n - 2]) / h
                } else {
                    (y[k + 1] - y[k - 1]) / (2.0 * h)
                }
            })
            .collect(),
    }
}

fn uniform_step(samples: &[LyapunovSample]) -> Result<f64, AnalysisError> {
    if samples.len() < 2 {
        return Err(AnalysisError::InsufficientSamples(samples.len()));
    }
    let n = samples.len() - 1;
    let h = (samples[n].t - samples[0].t) / n as f64;
    for w in samples.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - h).abs() > 1e-9 * h.max(1.0) {
            return Err(AnalysisError::NonUniformStep(step, h));
        }
    }
    Ok(h)
}

/// Recomputes `vdot_fd` from the `v` column.
pub fn fill_vdot(samples: &mut [LyapunovSample]) -> Result<(), AnalysisError> {
    let h = uniform_step(samples)?;
    let v: Vec<f64> = samples.iter().map(|s| s.v).collect();
    for (s, d) in samples.iter_mut().zip(finite_difference(&v, h)) {
        s.vdot_fd = d;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    /// `Vdot + lambda V - gamma |Delta|^2` per sample; positive is a violation.
    pub residuals: Vec<f64>,
    pub violations: usize,
    pub fraction: f64,
}

impl DissipationReport {
    pub fn passes(&self) -> bool {
        self.fraction <= VIOLATION_TOLERANCE
    }
}

/// Checks `Vdot <= -lambda V + gamma |Delta|^2` sample by sample, with `Vdot`
/// from central differences of `V`.
pub fn dissipation_check(
    samples: &[LyapunovSample],
    lambda: f64,
    gamma: f64,
) -> Result<DissipationReport, AnalysisError> {
    if samples.len() < MIN_SAMPLES {
        return Err(AnalysisError::InsufficientSamples(samples.len()));
    }
    let h = uniform_step(samples)?;
    let v: Vec<f64> = samples.iter().map(|s| s.v).collect();
    let vdot = finite_difference(&v, h);
    let residuals: Vec<f64> = samples
        .iter()
        .zip(&vdot)
        .map(|(s, d)| d + lambda * s.v - gamma * s.norm_delta * s.norm_delta)
        .collect();
    let violations = residuals.iter().filter(|r| **r > 0.0).count();
    Ok(DissipationReport {
        fraction: violations as f64 / residuals.len() as f64,
        violations,
        residuals,
    })
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Some((slope, my - slope * mx, r2))
}

/// Exponential decay rate of `V`: slope of `-ln V` against `t` after the
/// first [`FIT_SKIP`] seconds, over samples with `V > V_FLOOR`.
/// Returns `(rate, r^2)`.
pub fn fit_decay_rate(samples: &[LyapunovSample]) -> Result<(f64, f64), AnalysisError> {
    let Some(first) = samples.first() else {
        return Err(AnalysisError::FitFailed("empty trace".into()));
    };
    let t_start = first.t + FIT_SKIP;
    let (t, y): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.t >= t_start && s.v > V_FLOOR)
        .map(|s| (s.t, -s.v.ln()))
        .unzip();
    if t.len() < MIN_SAMPLES {
        return Err(AnalysisError::FitFailed(format!(
            "only {} samples in the fit window",
            t.len()
        )));
    }
    let (slope, _, r2) =
        linear_fit(&t, &y).ok_or_else(|| AnalysisError::FitFailed("degenerate window".into()))?;
    if !(slope > 0.0) {
        return Err(AnalysisError::FitFailed(format!(
            "V is not decaying (rate {slope})"
        )));
    }
    Ok((slope, r2))
}

/// Smallest `gamma >= 0` for which the dissipation inequality with rate
/// `lambda` holds on all but [`VIOLATION_TOLERANCE`] of the samples.
pub fn required_gamma(samples: &[LyapunovSample], lambda: f64) -> Result<f64, AnalysisError> {
    let base = dissipation_check(samples, lambda, 0.0)?;
    let mut need: Vec<f64> = base
        .residuals
        .iter()
        .zip(samples)
        .map(|(r, s)| {
            if *r <= 0.0 {
                0.0
            } else {
                let d2 = s.norm_delta * s.norm_delta;
                if d2 > 0.0 {
                    r / d2
                } else {
                    f64::INFINITY
                }
            }
        })
        .collect();
    need.sort_by(f64::total_cmp);
    let allowed = (VIOLATION_TOLERANCE * need.len() as f64).floor() as usize;
    let gamma = need[need.len() - 1 - allowed.min(need.len() - 1)];
    // margin so that r - gamma d2 <= 0 survives rounding at the chosen sample
    Ok(gamma * (1.0 + 1e-12))
}

/// Extremes of `V / |e|^2` over the samples (`|e| > 0` only).
pub fn quadratic_bounds<'a, I>(samples: I) -> Option<(f64, f64)>
where
    I: IntoIterator<Item = &'a LyapunovSample>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in samples {
        let e2 = s.norm_e * s.norm_e;
        if e2 > 0.0 && s.v > V_FLOOR {
            let q = s.v / e2;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IssEstimate {
    /// Fitted decay rate of the nominal trace.
    pub lambda_hat: f64,
    /// Rate used for the dissipation certificate, `lambda_hat / 2`.
    pub lambda_cert: f64,
    pub gamma_hat: f64,
    pub m1_hat: f64,
    pub m2_hat: f64,
    /// Ultimate-bound slope `sqrt(gamma / (m1 lambda))`.
    pub c_hat: f64,
    /// Goodness of the log-linear nominal fit.
    pub r_squared: f64,
}

/// Empirical ISS constants from one nominal and several perturbed traces.
pub fn estimate_lambda_gamma(
    nominal: &[LyapunovSample],
    perturbed: &[&[LyapunovSample]],
) -> Result<IssEstimate, AnalysisError> {
    let (Some(first), Some(last)) = (nominal.first(), nominal.last()) else {
        return Err(AnalysisError::FitFailed("empty nominal trace".into()));
    };
    if !(last.v < first.v) {
        return Err(AnalysisError::FitFailed("nominal V does not decay".into()));
    }
    let (lambda_hat, r_squared) = fit_decay_rate(nominal)?;
    let lambda_cert = 0.5 * lambda_hat;

    let mut gamma_hat = 0.0f64;
    for trace in perturbed {
        gamma_hat = gamma_hat.max(required_gamma(trace, lambda_cert)?);
    }
    if !gamma_hat.is_finite() {
        return Err(AnalysisError::FitFailed(
            "dissipation cannot be certified where the disturbance vanishes".into(),
        ));
    }

    let all = nominal
        .iter()
        .chain(perturbed.iter().flat_map(|t| t.iter()));
    let (m1_hat, m2_hat) = quadratic_bounds(all)
        .ok_or_else(|| AnalysisError::FitFailed("no nonzero error samples".into()))?;
    let c_hat = ultimate_bound(gamma_hat, m1_hat, lambda_cert)?;
    Ok(IssEstimate {
        lambda_hat,
        lambda_cert,
        gamma_hat,
        m1_hat,
        m2_hat,
        c_hat,
        r_squared,
    })
}

/// `sqrt(gamma / (m1 lambda))`. `gamma = 0` gives a zero bound.
pub fn ultimate_bound(gamma: f64, m1: f64, lambda: f64) -> Result<f64, AnalysisError> {
    if !(gamma >= 0.0) || !(m1 > 0.0) || !(lambda > 0.0) {
        return Err(AnalysisError::NonPositiveInput(format!(
            "gamma = {gamma}, m1 = {m1}, lambda = {lambda}"
        )));
    }
    Ok((gamma / (m1 * lambda)).sqrt())
}

/// Supremum of `norm_e` over the last `fraction` of the horizon.
pub fn tail_metric(samples: &[LyapunovSample], fraction: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() - 1;
    let skip = n - ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    samples[skip..].iter().map(|s| s.norm_e).fold(0.0, f64::max)
}

/// Largest `|Delta|` seen over the trace.
pub fn disturbance_sup(samples: &[LyapunovSample]) -> f64 {
    samples.iter().map(|s| s.norm_delta).fold(0.0, f64::max)
}

/// Largest `norm_e` over the whole trace.
pub fn peak_error(samples: &[LyapunovSample]) -> f64 {
    samples.iter().map(|s| s.norm_e).fold(0.0, f64::max)
}
