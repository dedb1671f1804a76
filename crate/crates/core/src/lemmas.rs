//! Randomized property checks of the field `f(A, eps)`:
//!
//! 1. `|f(x)| <= eps`
//! 2. `(f_i(x + h e_i) - f_i(x)) / h >= 0` (coordinatewise monotone)
//! 3. `xi . (f(eta + xi) - f(eta)) >= 0` (monotone operator)
//! 4. on `(A^eps)° \ A`, `(f_i(x + h e_i) - f_i(x)) / h >= cos^2 theta_i`
//!    with `theta_i` the angle between `x - x0` and axis `i`
//!
//! plus the coordinate Lipschitz bound `|f_i(x + h e_i) - f_i(x)| <= h`.
//! The derivative statements hold almost everywhere, so probe points keep a
//! margin of `10 h` from the boundaries of `A` and `A^eps`, and Lemma 4 probes
//! are discarded when the active face set of a polytope changes along the
//! step.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{dot, norm, ConvexSet};
use crate::rng::{tags, StreamKey};
use crate::stein::SteinField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    /// Random points for the norm bound.
    pub points: usize,
    /// Random pairs for the monotonicity inequality.
    pub pairs: usize,
    /// Probe points for the difference-quotient checks.
    pub probes: usize,
    /// Finite-difference step.
    pub step: f64,
    pub norm_slack: f64,
    pub monotone_slack: f64,
    pub derivative_slack: f64,
    pub angle_slack: f64,
    pub lipschitz_slack: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            points: 100_000,
            pairs: 100_000,
            probes: 10_000,
            step: 1e-5,
            norm_slack: 1e-8,
            monotone_slack: 1e-8,
            derivative_slack: 1e-6,
            angle_slack: 1e-3,
            lipschitz_slack: 1e-8,
        }
    }
}

/// Outcome of one property over all its checks. `worst_margin` is the
/// smallest `lhs - threshold` seen (negative means a violation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub violations: u64,
    pub worst_margin: f64,
}

impl Tally {
    fn empty() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst_margin: f64::MAX,
        }
    }

    fn record(&mut self, margin: f64) {
        self.checked += 1;
        if margin < 0.0 {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    fn merge(self, other: Self) -> Self {
        Self {
            checked: self.checked + other.checked,
            violations: self.violations + other.violations,
            worst_margin: self.worst_margin.min(other.worst_margin),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub norm_bound: Tally,
    pub coordinate_monotone: Tally,
    pub operator_monotone: Tally,
    pub angle_bound: Tally,
    pub coordinate_lipschitz: Tally,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        [
            self.norm_bound,
            self.coordinate_monotone,
            self.operator_monotone,
            self.angle_bound,
            self.coordinate_lipschitz,
        ]
        .iter()
        .all(Tally::passed)
    }

    pub fn tallies(&self) -> [(&'static str, Tally); 5] {
        [
            ("norm-bound", self.norm_bound),
            ("coordinate-monotone", self.coordinate_monotone),
            ("operator-monotone", self.operator_monotone),
            ("angle-bound", self.angle_bound),
            ("coordinate-lipschitz", self.coordinate_lipschitz),
        ]
    }
}

fn anchor(set: &ConvexSet) -> Vec<f64> {
    match set {
        ConvexSet::Ball(b) => b.center().to_vec(),
        _ => vec![0.0; set.dim()],
    }
}

fn gaussian<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    (0..k).map(|_| StandardNormal.sample(rng)).collect()
}

fn par_tally<F>(count: usize, key: StreamKey, check: F) -> Result<Tally>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Tally) -> Result<()> + Sync,
{
    const CHUNK: usize = 256;
    let partials = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::empty();
            for m in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let mut rng = key.rng(m as u64);
                check(&mut rng, &mut t)?;
            }
            Ok(t)
        })
        .collect::<Result<Vec<Tally>>>()?;
    Ok(partials.into_iter().fold(Tally::empty(), Tally::merge))
}

/// Runs every property on random points around the set.
pub fn check_lemmas(field: &SteinField, cfg: &LemmaConfig, seed: u64) -> Result<LemmaReport> {
    let set = field.set();
    let eps = field.eps();
    let k = set.dim();
    let center = anchor(set);
    let spread = 1.5 + 2.0 * eps;
    let key = StreamKey::new(seed, tags::LEMMAS);
    let around = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let z = gaussian(k, rng);
        center.iter().zip(&z).map(|(c, z)| c + spread * z).collect()
    };

    let norm_bound = par_tally(cfg.points, key.child(1), |rng, t| {
        let x = around(rng);
        let f = field.eval(&x)?;
        t.record(eps + cfg.norm_slack - f.norm());
        Ok(())
    })?;

    let operator_monotone = par_tally(cfg.pairs, key.child(2), |rng, t| {
        let eta = around(rng);
        let scale = [0.01 * eps, eps, spread][rng.random_range(0..3)];
        let xi: Vec<f64> = gaussian(k, rng).iter().map(|z| scale * z).collect();
        let moved: Vec<f64> = eta.iter().zip(&xi).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = field
            .eval(&moved)?
            .iter()
            .zip(field.eval(&eta)?.iter())
            .map(|(a, b)| a - b)
            .collect();
        t.record(dot(&xi, &diff) + cfg.monotone_slack);
        Ok(())
    })?;

    let h = cfg.step;
    let margin = 10.0 * h;
    let polytope = match set {
        ConvexSet::Polytope(p) => Some(p),
        _ => None,
    };

    // Coordinate checks on probes spread over all three regions.
    let (coordinate_monotone, coordinate_lipschitz) = {
        par_pairs(cfg.probes, key.child(3), |rng, mono, lip| {
            let Some(x) = probe_point(field, rng, &around, 0.0, 2.0 * eps, margin)? else {
                return Ok(());
            };
            let fx = field.eval(&x)?;
            let mut moved = x.clone();
            for i in 0..k {
                moved[i] = x[i] + h;
                let fi = field.eval(&moved)?[i];
                moved[i] = x[i];
                let delta = fi - fx[i];
                mono.record(delta / h + cfg.derivative_slack);
                lip.record(h + cfg.lipschitz_slack - delta.abs());
            }
            Ok(())
        })?
    };

    let angle_bound = par_tally(cfg.probes, key.child(4), |rng, t| {
        let Some(x) = probe_point(field, rng, &around, 0.05 * eps, 0.95 * eps, margin)? else {
            return Ok(());
        };
        let base = field.eval_detailed(&x)?;
        let d = base.distance;
        if d == 0.0 {
            return Ok(());
        }
        let active = polytope.map(|p| p.active_faces(&base.nearest, 1e-9));
        let mut moved = x.clone();
        for i in 0..k {
            moved[i] = x[i] + h;
            let step = field.eval_detailed(&moved)?;
            moved[i] = x[i];
            if !(step.distance > margin && step.distance < eps - margin) {
                continue;
            }
            if let (Some(p), Some(a)) = (polytope, &active) {
                if &p.active_faces(&step.nearest, 1e-9) != a {
                    continue;
                }
            }
            let cos = (x[i] - base.nearest[i]) / d;
            let quotient = (step.value[i] - base.value[i]) / h;
            t.record(quotient - (cos * cos - cfg.angle_slack));
        }
        Ok(())
    })?;

    Ok(LemmaReport {
        norm_bound,
        coordinate_monotone,
        operator_monotone,
        angle_bound,
        coordinate_lipschitz,
    })
}

fn par_pairs<F>(count: usize, key: StreamKey, check: F) -> Result<(Tally, Tally)>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Tally, &mut Tally) -> Result<()> + Sync,
{
    const CHUNK: usize = 256;
    let partials = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (mut a, mut b) = (Tally::empty(), Tally::empty());
            for m in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let mut rng = key.rng(m as u64);
                check(&mut rng, &mut a, &mut b)?;
            }
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(partials
        .into_iter()
        .fold((Tally::empty(), Tally::empty()), |acc, p| (acc.0.merge(p.0), acc.1.merge(p.1))))
}

/// A point at distance `delta ~ U[lo, hi]` from the set along an outward
/// normal, or an interior point when `lo == 0` and the proposal lands inside.
/// Points within `margin` of `∂A` or `∂A^eps` are rejected (returns `None`).
fn probe_point<G>(
    field: &SteinField,
    rng: &mut rand_chacha::ChaCha8Rng,
    around: &G,
    lo: f64,
    hi: f64,
    margin: f64,
) -> Result<Option<Vec<f64>>>
where
    G: Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<f64>,
{
    let set = field.set();
    let eps = field.eps();
    let tol = field.tolerances();
    for _ in 0..64 {
        let y = around(rng);
        let proj = set.project(&y, tol)?;
        if proj.distance == 0.0 {
            if lo > 0.0 {
                continue;
            }
            let inside_margin = match set.erosion_depth(&y) {
                Ok(depth) => depth > margin,
                Err(_) => false,
            };
            return Ok(inside_margin.then_some(y));
        }
        let delta = rng.random_range(lo..hi);
        if delta < margin || (delta - eps).abs() < margin {
            return Ok(None);
        }
        let n: Vec<f64> = y.iter().zip(proj.nearest.iter()).map(|(a, b)| (a - b) / proj.distance).collect();
        debug_assert!((norm(&n) - 1.0).abs() < 1e-9);
        return Ok(Some(proj.nearest.iter().zip(&n).map(|(b, u)| b + delta * u).collect()));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> LemmaConfig {
        LemmaConfig {
            points: 2000,
            pairs: 2000,
            probes: 500,
            ..LemmaConfig::default()
        }
    }

    #[test]
    fn all_properties_hold_on_basic_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = [
            ConvexSet::half_space(vec![0.6, 0.8], 0.2).unwrap(),
            ConvexSet::ball(vec![0.5, -0.5], 1.0).unwrap(),
            Polytope::random(2, 6, &mut rng).unwrap().into(),
        ];
        for set in sets {
            for eps in [0.1, 1.0] {
                let field = SteinField::new(set.clone(), eps).unwrap();
                let rep = check_lemmas(&field, &small(), 9).unwrap();
                assert!(rep.passed(), "{set:?} eps={eps}: {rep:?}");
                assert_eq!(rep.norm_bound.checked, 2000);
                assert!(rep.angle_bound.checked > 100);
                assert!(rep.coordinate_monotone.checked > 100);
            }
        }
    }

    #[test]
    fn report_is_deterministic() {
        let field = SteinField::new(ConvexSet::ball(vec![0.0; 3], 1.0).unwrap(), 0.5).unwrap();
        let a = check_lemmas(&field, &small(), 1).unwrap();
        let b = check_lemmas(&field, &small(), 1).unwrap();
        assert_eq!(a, b);
    }
}
