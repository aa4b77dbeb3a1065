//! Classical fixed-step fourth-order Runge–Kutta for autonomous systems.

use crate::Error;

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One RK4 step of `ẏ = f(y)`.
pub(super) fn step<const N: usize, F>(f: &mut F, y: &[f64; N], h: f64) -> Result<[f64; N], Error>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], Error>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, h / 2.0, &k1))?;
    let k3 = f(&axpy(y, h / 2.0, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Step-doubling estimate of the local error of a step of size `h`:
/// `|y_h − y_{h/2,h/2}| / 15` in the max norm.
pub(super) fn local_error<const N: usize, F>(f: &mut F, y: &[f64; N], full: &[f64; N], h: f64) -> Result<f64, Error>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], Error>,
{
    let half = step(f, y, h / 2.0)?;
    let two = step(f, &half, h / 2.0)?;
    Ok(full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0)
}
