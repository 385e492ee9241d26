// libm shims; `f64` has no inherent transcendental methods without std.

pub use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_tau(x: f64) -> f64 {
    let r = x - TAU * floor(x / TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_tau(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
