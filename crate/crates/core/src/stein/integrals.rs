//! L1 norms of directional derivatives of the standard Gaussian density.
//!
//! With `phi` the density of `N(0, I_k)`, `d_j phi(z) = -z_j phi(z)`, so
//! `int |sum_j x_j d_j phi| = E|x . Z|`. The third-order mixed derivative
//! `sum u_j v_j' v_j'' d_jj'j'' phi(z)` equals
//! `(|v|^2 (u.z) + 2 (u.v)(v.z) - (u.z)(v.z)^2) phi(z)`, which depends on `z`
//! only through its projection on `span(u, v)`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm};
use crate::quadrature::integrate_pieces;
use crate::rng::{tags, StreamKey};
use crate::stats::{normal_cdf, normal_pdf};

/// `2 (1 + 4 e^{-3/2}) / sqrt(2 pi)`, the value of `E|3Z - Z^3|`.
pub const CUBIC_CONSTANT: f64 = 1.510_013_000_130_477_2;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const TAIL: f64 = 12.0;

/// `int |sum_j x_j d_j phi(z)| dz = sqrt(2/pi) |x|`.
pub fn lemma33_linear(x: &[f64]) -> f64 {
    SQRT_2_OVER_PI * norm(x)
}

/// Monte Carlo estimate of `E|x . Z|` as `(mean, standard error)`.
pub fn lemma33_linear_mc(x: &[f64], samples: u64, seed: u64) -> (f64, f64) {
    let key = StreamKey::new(seed, tags::REFERENCE);
    mc_mean(samples, |m| {
        let mut rng = key.rng(m);
        x.iter()
            .map(|xi| {
                let z: f64 = StandardNormal.sample(&mut rng);
                xi * z
            })
            .sum::<f64>()
            .abs()
    })
}

/// `E|3Z - Z^3|` for one-dimensional standard normal `Z`, by adaptive
/// quadrature split at the sign changes `0, +-sqrt(3)`.
pub fn lemma33_cubic_constant() -> f64 {
    let r3 = 3f64.sqrt();
    let (v, _) = integrate_pieces(
        |z| (3.0 * z - z * z * z).abs() * normal_pdf(z),
        &[-TAIL, -r3, 0.0, r3, TAIL],
        1e-14,
    );
    v
}

/// Monte Carlo estimate of `E|3Z - Z^3|` as `(mean, standard error)`.
pub fn lemma33_cubic_mc(samples: u64, seed: u64) -> (f64, f64) {
    let key = StreamKey::new(seed, tags::REFERENCE);
    mc_mean(samples, |m| {
        let z: f64 = StandardNormal.sample(&mut key.rng(m));
        (3.0 * z - z * z * z).abs()
    })
}

/// `int |sum u_j v_j' v_j'' d_jj'j'' phi(z)| dz`.
///
/// Writing `u = alpha v/|v| + beta e` with `e` a unit vector orthogonal to
/// `v`, the integral is `|v|^2 E|alpha (3 Z1 - Z1^3) + beta Z2 (1 - Z1^2)|`.
/// The `Z2` expectation is closed form (`E|c + s Z| = s (2 phi(c/s) +
/// (c/s)(2 Phi(c/s) - 1))`), and the `Z1` integral is adaptive quadrature
/// split at the zeros of both polynomials.
pub fn lemma34_mixed(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let nv = norm(v);
    let nu = norm(u);
    if nv == 0.0 || nu == 0.0 {
        return Ok(0.0);
    }
    let alpha = dot(u, v) / nv;
    let beta = (nu * nu - alpha * alpha).max(0.0).sqrt();
    let r3 = 3f64.sqrt();
    let (inner, _) = integrate_pieces(
        |z1| {
            let c = alpha * (3.0 * z1 - z1 * z1 * z1);
            let s = (beta * (1.0 - z1 * z1)).abs();
            normal_pdf(z1) * abs_shifted_normal_mean(c, s)
        },
        &[-TAIL, -r3, -1.0, 0.0, 1.0, r3, TAIL],
        1e-13,
    );
    Ok(nv * nv * inner)
}

/// `2 (1 + sqrt(2/pi)) |u| |v|^2`.
pub fn lemma34_bound(u: &[f64], v: &[f64]) -> f64 {
    let nv = norm(v);
    2.0 * (1.0 + SQRT_2_OVER_PI) * norm(u) * nv * nv
}

/// `E|c + s Z|` for `s >= 0`.
fn abs_shifted_normal_mean(c: f64, s: f64) -> f64 {
    if s == 0.0 {
        return c.abs();
    }
    let r = c / s;
    s * (2.0 * normal_pdf(r) + r * (2.0 * normal_cdf(r) - 1.0))
}

fn mc_mean<F>(samples: u64, draw: F) -> (f64, f64)
where
    F: Fn(u64) -> f64 + Sync,
{
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2) = (0.0, 0.0);
            for m in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let x = draw(m);
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partials.into_iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}
