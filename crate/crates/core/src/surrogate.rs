//! Step function, its truncated-sine approximation and surrogate gradients,
//! plus the logistic function used for width parameterization and the
//! sigmoid surrogate of the baseline method.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Heaviside step with a strict inequality: `z == 0` classifies as 0.
#[inline]
pub fn hsf(z: f64) -> bool {
    z > 0.0
}

fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w < 1.0 {
        Ok(())
    } else {
        Err(Error::WidthOutOfRange(w))
    }
}

/// Truncated-sine step approximation: 0 below `-w`, 1 above `w`,
/// `sin(pi z / 2w) / 2 + 1/2` in between.
pub fn smoothed_hsf(z: f64, w: f64) -> Result<f64> {
    check_width(w)?;
    Ok(sine_step(z, w))
}

/// `(d/dz, d/dw)` of [`smoothed_hsf`], both zero once `|z| >= w`.
pub fn surrogate_grads(z: f64, w: f64) -> Result<(f64, f64)> {
    check_width(w)?;
    Ok(sine_grads(z, w))
}

#[inline]
pub(crate) fn sine_step(z: f64, w: f64) -> f64 {
    if z < -w {
        0.0
    } else if z > w {
        1.0
    } else {
        0.5 * libm::sin(PI * z / (2.0 * w)) + 0.5
    }
}

#[inline]
pub(crate) fn sine_grads(z: f64, w: f64) -> (f64, f64) {
    if z.abs() >= w {
        return (0.0, 0.0);
    }
    let c = libm::cos(PI * z / (2.0 * w));
    let grad_z = PI / (4.0 * w) * c;
    let grad_w = -(PI * z) / (4.0 * w * w) * c;
    (grad_z, grad_w)
}

/// Numerically stable logistic function.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn logistic_derivative(x: f64) -> f64 {
    let s = logistic(x);
    s * (1.0 - s)
}

/// Sigmoid surrogate value `logistic(sigma z)`.
#[inline]
pub fn sigmoid_step(z: f64, sigma: f64) -> f64 {
    logistic(sigma * z)
}

/// `d/dz logistic(sigma z) = sigma s (1 - s)`.
#[inline]
pub fn sigmoid_grad_z(z: f64, sigma: f64) -> f64 {
    sigma * logistic_derivative(sigma * z)
}

/// `d/dsigma logistic(sigma z) = z logistic(sigma z) logistic(-sigma z)`.
#[inline]
pub fn sigmoid_grad_sigma(z: f64, sigma: f64) -> f64 {
    z * logistic(sigma * z) * logistic(-sigma * z)
}
