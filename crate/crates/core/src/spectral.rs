//! Fourier symbol of the one-step scheme.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::scheme::Params;

/// Dual variables to `(j, k)`, clamped to `[-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    xi: f64,
    eta: f64,
}

impl Frequency {
    /// NaN inputs map to 0.
    pub fn new(xi: f64, eta: f64) -> Self {
        let clamp = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(-PI, PI) };
        Frequency {
            xi: clamp(xi),
            eta: clamp(eta),
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// `g(xi, eta)`: one step maps the mode `exp(i(j xi + k eta))` to `g` times itself.
pub fn amplification_factor(params: &Params, freq: Frequency) -> Complex64 {
    let (alpha, beta) = (params.alpha(), params.beta());
    let (a2, b2) = (alpha * alpha, beta * beta);
    let s = a2 + b2;
    let (sx, cx) = freq.xi.sin_cos();
    let (sy, cy) = freq.eta.sin_cos();
    // sin(pi) is not exactly zero; snap the corners so g(pi, pi) is exact.
    let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (sx, sy) = (snap(sx), snap(sy));
    let (ex, ey) = (cx - 1.0, cy - 1.0);
    let re = 1.0 + a2 * ex + b2 * ey - alpha * beta * sx * sy - s / 2.0 * ex * ey;
    let im = -(alpha * sx + beta * sy);
    Complex64::new(re, im)
}

/// Grid of `n` points on `[-pi, pi]`, forced odd so it contains `0` and both
/// endpoints exactly.
pub fn frequency_axis(n: usize) -> Vec<f64> {
    let n = n.max(3) | 1;
    let half = (n - 1) / 2;
    (0..n)
        .map(|i| {
            let m = i as isize - half as isize;
            if m == 0 {
                0.0
            } else if m.unsigned_abs() == half {
                PI * m.signum() as f64
            } else {
                PI * m as f64 / half as f64
            }
        })
        .collect()
}

/// `max |g|` over a tensor grid of at least 64 samples per axis.
pub fn max_amplification(params: &Params, n_samples: usize) -> f64 {
    let axis = frequency_axis(n_samples.max(64));
    axis.par_iter()
        .map(|&xi| {
            axis.iter()
                .map(|&eta| amplification_factor(params, Frequency::new(xi, eta)).norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `(xi, eta, |g|)` rows over the same grid as [`max_amplification`].
pub fn amplification_grid(params: &Params, n_samples: usize) -> Vec<(f64, f64, f64)> {
    let axis = frequency_axis(n_samples.max(64));
    axis.iter()
        .flat_map(|&xi| {
            axis.iter().map(move |&eta| {
                (xi, eta, amplification_factor(params, Frequency::new(xi, eta)).norm())
            })
        })
        .collect()
}
