use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_samples, count_parallel, ConcentrationEstimate};
use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Tolerances};
use crate::rng::{tags, StreamKey};
use crate::vectors::{DistributionFamily, Moment};

/// `P(Z in A^{eps1} \ A^{-eps2})` for standard Gaussian `Z`, compared with
/// `sqrt(k) (eps1 + eps2)`.
pub fn gaussian_concentration(
    set: &ConvexSet,
    eps1: f64,
    eps2: f64,
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConcentrationEstimate> {
    Ok(gaussian_concentration_grid(set, &[(eps1, eps2)], samples, seed, tol)?.remove(0))
}

/// [`gaussian_concentration`] for several radius pairs on one shared sample,
/// so the estimates are exactly monotone in both radii.
pub fn gaussian_concentration_grid(
    set: &ConvexSet,
    radii: &[(f64, f64)],
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<ConcentrationEstimate>> {
    check_samples(samples)?;
    for &(e1, e2) in radii {
        if !(e1 >= 0.0 && e2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("radii must be >= 0, got ({e1}, {e2})")));
        }
    }
    let k = set.dim();
    let needs_erosion = radii.iter().any(|r| r.1 > 0.0);
    if needs_erosion {
        set.erosion_depth(&vec![0.0; k])?;
    }
    let key = StreamKey::new(seed, tags::GAUSSIAN_SHELL);
    let counts = count_parallel(samples, radii.len(), |m, counts| {
        let mut rng = key.rng(m);
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = set.distance(&z, tol)?;
        let depth = if needs_erosion {
            set.erosion_depth(&z)?
        } else if d == 0.0 {
            0.0
        } else {
            -d
        };
        for (c, &(e1, e2)) in counts.iter_mut().zip(radii) {
            if d <= e1 + tol.membership && depth < e2 {
                *c += 1;
            }
        }
        Ok(())
    })?;
    let root_k = (k as f64).sqrt();
    Ok(counts
        .into_iter()
        .zip(radii)
        .map(|(c, &(e1, e2))| ConcentrationEstimate::from_counts(c, samples, root_k * (e1 + e2), e1, e2))
        .collect())
}

fn sum_bound(k: usize, radius: f64, gamma: f64) -> f64 {
    let root_k = (k as f64).sqrt();
    4.1 * root_k * radius + 39.0 * root_k * gamma
}

/// `P(W^(i) in A^{4 gamma + eps} \ A^{4 gamma})`, compared with
/// `4.1 sqrt(k) eps + 39 sqrt(k) gamma`.
pub fn sum_concentration_fixed_eps(
    family: &DistributionFamily,
    index: usize,
    set: &ConvexSet,
    eps: f64,
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConcentrationEstimate> {
    let gamma = family.gamma().gamma;
    Ok(sum_concentration_fixed_eps_grid(family, gamma, index, set, &[eps], samples, seed, tol)?.remove(0))
}

/// [`sum_concentration_fixed_eps`] over several `eps` on one shared sample,
/// with `gamma` supplied by the caller.
#[allow(clippy::too_many_arguments)]
pub fn sum_concentration_fixed_eps_grid(
    family: &DistributionFamily,
    gamma: f64,
    index: usize,
    set: &ConvexSet,
    eps: &[f64],
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<ConcentrationEstimate>> {
    check_samples(samples)?;
    check_dims(family, set)?;
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {e}")));
    }
    let inner = 4.0 * gamma;
    let key = StreamKey::new(seed, tags::SUM_SAMPLES);
    let counts = count_parallel(samples, eps.len(), |m, counts| {
        let mut rng = key.rng(m);
        let (rest, _) = family.sample_w_leave_one_out(index, &mut rng)?;
        let d = set.distance(&rest, tol)?;
        if d > inner + tol.membership {
            for (c, e) in counts.iter_mut().zip(eps) {
                if d <= inner + e + tol.membership {
                    *c += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok(counts
        .into_iter()
        .zip(eps)
        .map(|(c, &e)| ConcentrationEstimate::from_counts(c, samples, sum_bound(family.k, e, gamma), inner + e, inner))
        .collect())
}

/// Shell probability with the random radius `|X_i|`, plus the Monte Carlo
/// mean of `|X_i|` from the same draws. The estimate's `eps1` records the
/// nominal outer radius `4 gamma + E|X_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomRadiusEstimate {
    pub estimate: ConcentrationEstimate,
    /// `E|X_i|` used in the bound.
    pub mean_radius: Moment,
    /// Sample mean of `|X_i|` over the same draws.
    pub mean_radius_mc: Moment,
}

/// `P(W in A^{4 gamma + |X_i|} \ A^{4 gamma})` with `W = W^(i) + X_i` drawn
/// jointly, compared with `4.1 sqrt(k) E|X_i| + 39 sqrt(k) gamma`.
pub fn sum_concentration_random_eps(
    family: &DistributionFamily,
    index: usize,
    set: &ConvexSet,
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<RandomRadiusEstimate> {
    let gamma = family.gamma().gamma;
    sum_concentration_random_eps_with(family, gamma, index, set, samples, seed, tol)
}

pub(crate) fn sum_concentration_random_eps_with(
    family: &DistributionFamily,
    gamma: f64,
    index: usize,
    set: &ConvexSet,
    samples: u64,
    seed: u64,
    tol: &Tolerances,
) -> Result<RandomRadiusEstimate> {
    check_samples(samples)?;
    check_dims(family, set)?;
    let mean_radius = family.norm_moment(index, 1)?;
    let inner = 4.0 * gamma;
    let key = StreamKey::new(seed, tags::SUM_SAMPLES);
    // Radius sums are accumulated in fixed-point units of 2^-32 so the
    // aggregation stays an exact integer sum.
    const UNIT: f64 = (1u64 << 32) as f64;
    let counts = count_parallel(samples, 3, |m, counts| {
        let mut rng = key.rng(m);
        let (rest, x_i) = family.sample_w_leave_one_out(index, &mut rng)?;
        let w: Vec<f64> = rest.iter().zip(x_i.iter()).map(|(a, b)| a + b).collect();
        let r = x_i.norm();
        let d = set.distance(&w, tol)?;
        if d > inner + tol.membership && d <= inner + r + tol.membership {
            counts[0] += 1;
        }
        counts[1] += (r * UNIT).round() as u64;
        counts[2] += (r * r * UNIT).round() as u64;
        Ok(())
    })?;
    let n = samples as f64;
    let mean = counts[1] as f64 / UNIT / n;
    let second = counts[2] as f64 / UNIT / n;
    let se = ((second - mean * mean).max(0.0) / (n - 1.0)).sqrt();
    let estimate = ConcentrationEstimate::from_counts(
        counts[0],
        samples,
        sum_bound(family.k, mean_radius.value, gamma),
        inner + mean_radius.value,
        inner,
    );
    Ok(RandomRadiusEstimate {
        estimate,
        mean_radius,
        mean_radius_mc: Moment { value: mean, se },
    })
}

fn check_dims(family: &DistributionFamily, set: &ConvexSet) -> Result<()> {
    if family.k != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: family.k,
        });
    }
    Ok(())
}
