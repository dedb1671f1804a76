use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::discrepancy::{draw_w, format_dir, record, sorted_projection, DiscrepancyEstimate};
use super::{check_samples, count_parallel};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm};
use crate::rng::{tags, StreamKey};
use crate::stats::normal_cdf;
use crate::vectors::DistributionFamily;

/// Settings of the half-space search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Size of the sample used to steer the search.
    pub explore_samples: u64,
    /// Number of starting directions; the coordinate axes come first.
    pub restarts: usize,
    /// Initial and final step of the coordinate ascent on the direction.
    pub initial_step: f64,
    pub min_step: f64,
    /// Cap on direction evaluations per restart.
    pub max_evals: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            explore_samples: 50_000,
            restarts: 4,
            initial_step: 0.5,
            min_step: 1e-2,
            max_evals: 200,
        }
    }
}

/// Outcome of the search: the half-space `{direction . x <= offset}` found on
/// the exploration sample, and its discrepancy re-estimated on an
/// independent confirmation sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialResult {
    pub estimate: DiscrepancyEstimate,
    pub direction: Vec<f64>,
    pub offset: f64,
    /// Discrepancy on the exploration sample (biased upwards).
    pub explore_value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cut {
    value: f64,
    offset: f64,
    /// The supremum is a left limit, realized by the reflected half-space.
    flip: bool,
}

/// Largest `|F_hat(t) - Phi(t)|` over `t`, including left limits, for sorted
/// projections.
fn ks_cut(sorted: &[f64]) -> Cut {
    let n = sorted.len() as f64;
    let mut best = Cut {
        value: -1.0,
        offset: 0.0,
        flip: false,
    };
    let mut j = 0;
    while j < sorted.len() {
        let v = sorted[j];
        let mut end = j + 1;
        while end < sorted.len() && sorted[end] == v {
            end += 1;
        }
        let phi = normal_cdf(v);
        let closed = (end as f64 / n - phi).abs();
        let open = (phi - j as f64 / n).abs();
        if closed > best.value {
            best = Cut { value: closed, offset: v, flip: false };
        }
        if open > best.value {
            best = Cut { value: open, offset: v, flip: true };
        }
        j = end;
    }
    best
}

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let len = norm(&v);
    (len > 1e-12).then(|| v.into_iter().map(|c| c / len).collect())
}

/// Searches half-spaces for a large `|P(W in H) - P(Z in H)|` and confirms
/// the best one on `samples` fresh draws.
pub fn adversarial_halfspace_search(
    family: &DistributionFamily,
    cfg: &SearchConfig,
    samples: u64,
    seed: u64,
) -> Result<AdversarialResult> {
    check_samples(samples)?;
    check_samples(cfg.explore_samples)?;
    if cfg.restarts == 0 || !(cfg.min_step > 0.0 && cfg.initial_step >= cfg.min_step) {
        return Err(Error::InvalidParameter(
            "search needs restarts >= 1 and 0 < min_step <= initial_step".into(),
        ));
    }
    let k = family.k;
    let ws = draw_w(family, StreamKey::new(seed, tags::EXPLORE), cfg.explore_samples);
    let mut evaluations = 0;
    let mut eval = |u: &[f64]| {
        evaluations += 1;
        ks_cut(&sorted_projection(&ws, k, u))
    };

    let mut rng = StreamKey::new(seed, tags::SEARCH).rng(0);
    let mut best: Option<(Cut, Vec<f64>)> = None;
    for r in 0..cfg.restarts {
        let start = if r < k {
            let mut u = vec![0.0; k];
            u[r] = 1.0;
            u
        } else {
            loop {
                let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
                if let Some(u) = unit(v) {
                    break u;
                }
            }
        };
        let mut u = start;
        let mut cut = eval(&u);
        let mut used = 1;
        let mut step = cfg.initial_step;
        while k > 1 && step >= cfg.min_step && used < cfg.max_evals {
            let mut improved = false;
            for i in 0..k {
                for s in [1.0, -1.0] {
                    if used >= cfg.max_evals {
                        break;
                    }
                    let mut v = u.clone();
                    v[i] += s * step;
                    let Some(v) = unit(v) else { continue };
                    let c = eval(&v);
                    used += 1;
                    if c.value > cut.value {
                        u = v;
                        cut = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        if best.as_ref().is_none_or(|b| cut.value > b.0.value) {
            best = Some((cut, u));
        }
    }
    let (cut, u) = best.expect("at least one restart");
    let sign = if cut.flip { -1.0 } else { 1.0 };
    let direction: Vec<f64> = u.iter().map(|c| sign * c).collect();
    let offset = sign * cut.offset;

    let key = StreamKey::new(seed, tags::CONFIRM);
    let hits = count_parallel(samples, 1, |m, c| {
        let w = family.sample_w(&mut key.rng(m));
        if dot(&w, &direction) <= offset {
            c[0] += 1;
        }
        Ok(())
    })?[0];
    let id = format!("halfspace:u={}:t={offset:.6}", format_dir(&direction));
    let rec = record(id, hits, samples, normal_cdf(offset));
    let estimate = DiscrepancyEstimate::from_records(
        "adversarial-halfspace".into(),
        k,
        family.gamma().gamma,
        samples,
        vec![rec],
    )?;
    Ok(AdversarialResult {
        estimate,
        direction,
        offset,
        explore_value: cut.value,
        evaluations,
    })
}
