//! Monte Carlo certification of the concentration and normal-approximation
//! bounds.
//!
//! Sample `m` of every experiment draws from stream `m` of a key derived from
//! the experiment seed, and results are aggregated as exact integer counts,
//! so estimates are bit-identical for any number of workers.

mod adversarial;
mod concentration;
mod discrepancy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{clopper_pearson, CONFIDENCE};

pub use adversarial::{adversarial_halfspace_search, AdversarialResult, SearchConfig};
pub use concentration::{
    gaussian_concentration, gaussian_concentration_grid, sum_concentration_fixed_eps,
    sum_concentration_fixed_eps_grid, sum_concentration_random_eps, RandomRadiusEstimate,
};
pub(crate) use concentration::sum_concentration_random_eps_with;
pub use discrepancy::{discrepancy, DiscrepancyEstimate, SetFamily, SetRecord};

/// Minimum Monte Carlo sample size accepted by the experiments.
pub const MIN_SAMPLES: u64 = 10_000;

/// Samples per work item.
pub(crate) const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    /// `Vacuous` when the bound is at least 1, else `Pass` iff `value <= bound`.
    pub fn judge(value: f64, bound: f64) -> Self {
        if bound >= 1.0 {
            Self::Vacuous
        } else if value <= bound {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Vacuous => "vacuous",
        }
    }
}

/// A Monte Carlo probability with its exact 99.9% interval and the bound it
/// is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub successes: u64,
    pub samples: u64,
    pub verdict: Verdict,
    /// Outer and inner radii of the shell that was measured.
    pub eps1: f64,
    pub eps2: f64,
}

impl ConcentrationEstimate {
    pub(crate) fn from_counts(successes: u64, samples: u64, bound: f64, eps1: f64, eps2: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(successes, samples, CONFIDENCE);
        Self {
            p_hat: successes as f64 / samples as f64,
            ci_low,
            ci_high,
            bound,
            successes,
            samples,
            // A zero bound asserts probability zero, which only an observed
            // success can refute.
            verdict: if bound == 0.0 {
                if successes == 0 { Verdict::Pass } else { Verdict::Fail }
            } else {
                Verdict::judge(ci_high, bound)
            },
            eps1,
            eps2,
        }
    }

    /// Binomial standard error at `p_hat`.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.samples as f64).sqrt()
    }
}

pub(crate) fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    Ok(())
}

/// Sums per-sample count vectors of length `width` over `0..samples`.
pub(crate) fn count_parallel<F>(samples: u64, width: usize, per_sample: F) -> Result<Vec<u64>>
where
    F: Fn(u64, &mut [u64]) -> Result<()> + Sync,
{
    let batches = samples.div_ceil(BATCH);
    let partials = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![0u64; width];
            for m in b * BATCH..((b + 1) * BATCH).min(samples) {
                per_sample(m, &mut counts)?;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<Vec<u64>>>>()?;
    let mut total = vec![0u64; width];
    for p in partials {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    Ok(total)
}

/// Runs `f` on a dedicated pool of `workers` threads (0: one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(Verdict::judge(0.1, 0.2), Verdict::Pass);
        assert_eq!(Verdict::judge(0.3, 0.2), Verdict::Fail);
        assert_eq!(Verdict::judge(0.3, 1.0), Verdict::Vacuous);
        assert_eq!(Verdict::judge(0.0, 0.0), Verdict::Pass);
    }

    #[test]
    fn estimate_interval_brackets_point() {
        let e = ConcentrationEstimate::from_counts(123, 10_000, 0.05, 0.1, 0.1);
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        assert_eq!(e.verdict, Verdict::Pass);
    }
}
