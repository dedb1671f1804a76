use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_samples, count_parallel, Verdict, BATCH};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, ConvexSet, Polytope, Tolerances};
use crate::rng::{tags, StreamKey};
use crate::stats::{clopper_pearson, gaussian_ball_probability, normal_cdf, CONFIDENCE};
use crate::vectors::DistributionFamily;

/// Structured families of convex sets probed for `|P(W in A) - P(Z in A)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetFamily {
    /// `{u . x <= t}` for `u` in `+-e_1..+-e_k` plus `random_directions`
    /// random unit vectors and their negatives, and `t` on `offsets`.
    HalfSpaces {
        #[serde(default = "default_offsets")]
        offsets: Vec<f64>,
        #[serde(default)]
        random_directions: usize,
        #[serde(default)]
        direction_seed: u64,
    },
    /// Origin-centered balls.
    Balls {
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
    },
    /// Random polytopes; the Gaussian reference probability is itself
    /// estimated with ten times as many samples.
    Polytopes { count: usize, faces: usize, seed: u64 },
}

fn default_offsets() -> Vec<f64> {
    (-60..=60).map(|i| i as f64 * 0.05).collect()
}

fn default_radii() -> Vec<f64> {
    (1..=40).map(|i| i as f64 * 0.1).collect()
}

impl SetFamily {
    pub fn half_spaces() -> Self {
        Self::HalfSpaces {
            offsets: default_offsets(),
            random_directions: 0,
            direction_seed: 0,
        }
    }

    pub fn balls() -> Self {
        Self::Balls { radii: default_radii() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HalfSpaces { .. } => "halfspaces",
            Self::Balls { .. } => "balls",
            Self::Polytopes { .. } => "polytopes",
        }
    }
}

/// One probed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRecord {
    pub set_id: String,
    pub p_hat: f64,
    /// `P(Z in A)`, exact for half-spaces and balls.
    pub p_ref: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub discrepancy: f64,
    /// Binomial standard error at `p_ref`.
    pub se: f64,
}

/// Largest observed discrepancy over a probed family. This lower-bounds the
/// supremum over all convex sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    pub set_family: String,
    pub gamma: f64,
    /// `115 sqrt(k) gamma`.
    pub bound: f64,
    pub sup_hat: f64,
    pub argmax: String,
    /// Largest per-set standard error.
    pub se: f64,
    /// Width of the exact interval at the maximizing set.
    pub ci_width: f64,
    pub samples: u64,
    pub verdict: Verdict,
    pub records: Vec<SetRecord>,
}

pub(crate) fn berry_esseen_bound(k: usize, gamma: f64) -> f64 {
    115.0 * (k as f64).sqrt() * gamma
}

impl DiscrepancyEstimate {
    pub(crate) fn from_records(
        set_family: String,
        k: usize,
        gamma: f64,
        samples: u64,
        records: Vec<SetRecord>,
    ) -> Result<Self> {
        let best = records
            .iter()
            .max_by(|a, b| a.discrepancy.total_cmp(&b.discrepancy))
            .ok_or_else(|| Error::InvalidParameter("set family is empty".into()))?;
        let bound = berry_esseen_bound(k, gamma);
        let ci_width = best.ci_high - best.ci_low;
        Ok(Self {
            set_family,
            gamma,
            bound,
            sup_hat: best.discrepancy,
            argmax: best.set_id.clone(),
            se: records.iter().map(|r| r.se).fold(0.0, f64::max),
            ci_width,
            samples,
            verdict: Verdict::judge(best.discrepancy + ci_width, bound),
            records,
        })
    }
}

pub(crate) fn record(set_id: String, count: u64, samples: u64, p_ref: f64) -> SetRecord {
    let p_hat = count as f64 / samples as f64;
    let (ci_low, ci_high) = clopper_pearson(count, samples, CONFIDENCE);
    SetRecord {
        set_id,
        p_hat,
        p_ref,
        ci_low,
        ci_high,
        discrepancy: (p_hat - p_ref).abs(),
        se: (p_ref * (1.0 - p_ref) / samples as f64).sqrt(),
    }
}

/// Row-major `samples x k` draws of `W`, sample `m` from stream `m`.
pub(crate) fn draw_w(family: &DistributionFamily, key: StreamKey, samples: u64) -> Vec<f64> {
    let batches = samples.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut out = Vec::with_capacity(BATCH as usize * family.k);
            for m in b * BATCH..((b + 1) * BATCH).min(samples) {
                out.extend_from_slice(&family.sample_w(&mut key.rng(m)));
            }
            out
        })
        .collect::<Vec<_>>()
        .concat()
}

pub(crate) fn directions(k: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..k {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; k];
            u[i] = s;
            dirs.push(u);
        }
    }
    let mut rng = StreamKey::new(seed, tags::RANDOM_SET).rng(0);
    let mut added = 0;
    while added < random {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&v);
        if len < 1e-8 {
            continue;
        }
        let u: Vec<f64> = v.iter().map(|c| c / len).collect();
        dirs.push(u.iter().map(|c| -c).collect());
        dirs.push(u);
        added += 1;
    }
    dirs
}

pub(crate) fn format_dir(u: &[f64]) -> String {
    u.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join("|")
}

/// Sorted projections `u . W`.
pub(crate) fn sorted_projection(ws: &[f64], k: usize, u: &[f64]) -> Vec<f64> {
    let mut proj: Vec<f64> = ws.par_chunks(k).map(|w| dot(w, u)).collect();
    proj.par_sort_unstable_by(f64::total_cmp);
    proj
}

/// Estimates the discrepancy between `W` and `Z` over `set_family`.
pub fn discrepancy(
    family: &DistributionFamily,
    set_family: &SetFamily,
    samples: u64,
    seed: u64,
) -> Result<DiscrepancyEstimate> {
    check_samples(samples)?;
    let k = family.k;
    let gamma = family.gamma().gamma;
    let key = StreamKey::new(seed, tags::DISCREPANCY);
    let ws = draw_w(family, key, samples);
    let mut records = Vec::new();
    match set_family {
        SetFamily::HalfSpaces {
            offsets,
            random_directions,
            direction_seed,
        } => {
            for u in directions(k, *random_directions, *direction_seed) {
                let proj = sorted_projection(&ws, k, &u);
                for &t in offsets {
                    let count = proj.partition_point(|v| *v <= t) as u64;
                    let id = format!("halfspace:u={}:t={t:.4}", format_dir(&u));
                    records.push(record(id, count, samples, normal_cdf(t)));
                }
            }
        }
        SetFamily::Balls { radii } => {
            let mut norms: Vec<f64> = ws.par_chunks(k).map(norm).collect();
            norms.par_sort_unstable_by(f64::total_cmp);
            for &r in radii {
                let count = norms.partition_point(|v| *v <= r) as u64;
                let id = format!("ball:r={r:.4}");
                records.push(record(id, count, samples, gaussian_ball_probability(k, r)));
            }
        }
        SetFamily::Polytopes { count, faces, seed: set_seed } => {
            let mut rng = StreamKey::new(*set_seed, tags::RANDOM_SET).rng(1);
            let polys: Vec<ConvexSet> = (0..*count)
                .map(|_| Polytope::random(k, *faces, &mut rng).map(ConvexSet::from))
                .collect::<Result<_>>()?;
            let tol = Tolerances::default();
            let hits: Vec<u64> = {
                let per_set: Vec<Vec<u64>> = ws
                    .par_chunks(k * BATCH as usize)
                    .map(|chunk| {
                        let mut c = vec![0u64; polys.len()];
                        for w in chunk.chunks_exact(k) {
                            for (cj, p) in c.iter_mut().zip(&polys) {
                                if p.contains(w, &tol).unwrap_or(false) {
                                    *cj += 1;
                                }
                            }
                        }
                        c
                    })
                    .collect();
                (0..polys.len()).map(|j| per_set.iter().map(|c| c[j]).sum()).collect()
            };
            let ref_samples = 10 * samples;
            let ref_key = StreamKey::new(seed, tags::REFERENCE);
            let ref_hits = count_parallel(ref_samples, polys.len(), |m, c| {
                let mut rng = ref_key.rng(m);
                let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
                for (cj, p) in c.iter_mut().zip(&polys) {
                    if p.contains(&z, &tol)? {
                        *cj += 1;
                    }
                }
                Ok(())
            })?;
            for (j, (h, r)) in hits.into_iter().zip(ref_hits).enumerate() {
                let p_ref = r as f64 / ref_samples as f64;
                records.push(record(format!("polytope:{j}"), h, samples, p_ref));
            }
        }
    }
    DiscrepancyEstimate::from_records(set_family.name().to_string(), k, gamma, samples, records)
}
