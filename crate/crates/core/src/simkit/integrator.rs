//! Classical fixed-step Runge-Kutta integration on flat state vectors.

use nalgebra::SVector;

/// One RK4 step of `x' = f(t, x)` from `t` to `t + h`.
///
/// Errors from any stage evaluation are returned unchanged; the step is then
/// discarded.
pub fn rk4_step<const N: usize, E, F>(
    mut f: F,
    t: f64,
    x: &SVector<f64, N>,
    h: f64,
) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    assert!(h > 0.0, "step must be positive, got {h}");
    let half = 0.5 * h;
    let k1 = f(t, x)?;
    let k2 = f(t + half, &(x + half * k1))?;
    let k3 = f(t + half, &(x + half * k2))?;
    let k4 = f(t + h, &(x + h * k3))?;
    Ok(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}
