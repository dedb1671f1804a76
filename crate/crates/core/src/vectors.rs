//! Standardized sums `W = X_1 + ... + X_n` of independent mean-zero random
//! vectors with `sum Cov(X_i) = I`.
//!
//! Every family has independent coordinates within a summand: coordinate `j`
//! of `X_i` is `sigma_i Y_ij` with `Y_ij` a standardized scalar draw. The
//! identically distributed families have `sigma_i = 1/sqrt(n)`; the
//! heterogeneous family uses `sigma_i^2 = i / (1 + ... + n)`.
//!
//! [`DistributionFamily::sample_w`] uses exact shortcuts for the law of the
//! sum where one exists (binomial counts, gamma totals, Gaussian closure);
//! [`DistributionFamily::sample_w_by_summation`] adds the summands one by one
//! from per-summand streams and serves as the reference route.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{tags, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Coordinates `+-1/sqrt(n)`.
    Rademacher,
    /// Summands `N(0, I/n)`.
    Gaussian,
    /// Coordinates `(E - 1)/sqrt(n)` with `E ~ Exp(1)`.
    CenteredExponential,
    /// Coordinates `sigma_i (B - p)/sqrt(p(1-p))` with `B ~ Bernoulli(p)`.
    HeterogeneousBernoulli { p: f64 },
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Rademacher => "rademacher",
            Self::Gaussian => "gaussian",
            Self::CenteredExponential => "centered-exponential",
            Self::HeterogeneousBernoulli { .. } => "heterogeneous-bernoulli",
        }
    }
}

/// Laws of `X_1, ..., X_n` in R^k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    pub kind: FamilyKind,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum GammaMethod {
    ClosedForm,
    MonteCarlo { se: f64 },
}

/// `gamma = sum_i E|X_i|^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    pub per_summand: Vec<f64>,
    pub method: GammaMethod,
}

/// A moment with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub se: f64,
}

const GAMMA_MC_SEED: u64 = 0x005e_ed0f_6a3a;

impl DistributionFamily {
    pub fn new(kind: FamilyKind, k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!("need k >= 1 and n >= 1, got k={k}, n={n}")));
        }
        if let FamilyKind::HeterogeneousBernoulli { p } = kind {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("skew p must lie in (0, 1), got {p}")));
            }
        }
        Ok(Self { kind, k, n })
    }

    pub fn rademacher(k: usize, n: usize) -> Result<Self> {
        Self::new(FamilyKind::Rademacher, k, n)
    }

    pub fn gaussian(k: usize, n: usize) -> Result<Self> {
        Self::new(FamilyKind::Gaussian, k, n)
    }

    pub fn centered_exponential(k: usize, n: usize) -> Result<Self> {
        Self::new(FamilyKind::CenteredExponential, k, n)
    }

    pub fn heterogeneous_bernoulli(k: usize, n: usize, p: f64) -> Result<Self> {
        Self::new(FamilyKind::HeterogeneousBernoulli { p }, k, n)
    }

    /// Coordinate standard deviation of summand `i` (1-based).
    pub fn summand_scale(&self, i: usize) -> f64 {
        match self.kind {
            FamilyKind::HeterogeneousBernoulli { .. } => {
                let n = self.n as f64;
                (2.0 * i as f64 / (n * (n + 1.0))).sqrt()
            }
            _ => 1.0 / (self.n as f64).sqrt(),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    fn standardized<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            FamilyKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            FamilyKind::Gaussian => rng.sample(StandardNormal),
            FamilyKind::CenteredExponential => rng.sample::<f64, _>(Exp1) - 1.0,
            FamilyKind::HeterogeneousBernoulli { p } => {
                let q = 1.0 - p;
                let b = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                (b - p) / (p * q).sqrt()
            }
        }
    }

    /// One draw of `X_i` (1-based index).
    pub fn sample_summand<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<Point> {
        self.check_index(i)?;
        let s = self.summand_scale(i);
        Ok(Point::from_vec_unchecked(
            (0..self.k).map(|_| s * self.standardized(rng)).collect(),
        ))
    }

    /// `W` for sample `sample`, adding summands drawn from independent
    /// per-summand streams `key.child(i).rng(sample)`.
    pub fn sample_w_by_summation(&self, key: StreamKey, sample: u64) -> Point {
        let mut w = vec![0.0; self.k];
        for i in 1..=self.n {
            let mut rng = key.child(i as u64).rng(sample);
            let s = self.summand_scale(i);
            for wj in w.iter_mut() {
                *wj += s * self.standardized(&mut rng);
            }
        }
        Point::from_vec_unchecked(w)
    }

    /// Sum of `count` i.i.d. standardized coordinates, scaled by `1/sqrt(n)`.
    fn iid_partial_sum<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let c = count as f64;
        let scale = 1.0 / (self.n as f64).sqrt();
        match self.kind {
            FamilyKind::Rademacher => {
                let heads = Binomial::new(count as u64, 0.5).expect("valid binomial").sample(rng) as f64;
                scale * (2.0 * heads - c)
            }
            FamilyKind::Gaussian => scale * c.sqrt() * rng.sample::<f64, _>(StandardNormal),
            FamilyKind::CenteredExponential => {
                let total: f64 = Gamma::new(c, 1.0).expect("valid gamma").sample(rng);
                scale * (total - c)
            }
            FamilyKind::HeterogeneousBernoulli { .. } => unreachable!("not identically distributed"),
        }
    }

    /// One draw of `W`.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let w = match self.kind {
            FamilyKind::HeterogeneousBernoulli { .. } => {
                let mut w = vec![0.0; self.k];
                for i in 1..=self.n {
                    let s = self.summand_scale(i);
                    for wj in w.iter_mut() {
                        *wj += s * self.standardized(rng);
                    }
                }
                w
            }
            _ => (0..self.k).map(|_| self.iid_partial_sum(self.n, rng)).collect(),
        };
        Point::from_vec_unchecked(w)
    }

    /// One joint draw of `(W - X_i, X_i)`.
    pub fn sample_w_leave_one_out<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<(Point, Point)> {
        self.check_index(i)?;
        let rest = match self.kind {
            FamilyKind::HeterogeneousBernoulli { .. } => {
                let mut w = vec![0.0; self.k];
                for j in (1..=self.n).filter(|&j| j != i) {
                    let s = self.summand_scale(j);
                    for wj in w.iter_mut() {
                        *wj += s * self.standardized(rng);
                    }
                }
                w
            }
            _ => (0..self.k).map(|_| self.iid_partial_sum(self.n - 1, rng)).collect(),
        };
        let x_i = self.sample_summand(i, rng)?;
        Ok((Point::from_vec_unchecked(rest), x_i))
    }

    /// `E|X_i|^q` for `q` in {1, 2, 3}.
    pub fn norm_moment(&self, i: usize, q: u32) -> Result<Moment> {
        self.check_index(i)?;
        let s = self.summand_scale(i);
        let k = self.k as f64;
        let qf = q as f64;
        let standardized = match self.kind {
            // |Y| = sqrt(k)
            FamilyKind::Rademacher => Moment {
                value: k.powf(qf / 2.0),
                se: 0.0,
            },
            // chi_k moments
            FamilyKind::Gaussian => Moment {
                value: (qf / 2.0 * 2f64.ln() + ln_gamma((k + qf) / 2.0) - ln_gamma(k / 2.0)).exp(),
                se: 0.0,
            },
            FamilyKind::HeterogeneousBernoulli { p } => {
                let pq = p * (1.0 - p);
                let a2 = (1.0 - p) * (1.0 - p) / pq;
                let b2 = p * p / pq;
                let value = (0..=self.k)
                    .map(|m| {
                        let mf = m as f64;
                        let log_w = ln_gamma(k + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(k - mf + 1.0)
                            + mf * p.ln()
                            + (k - mf) * (1.0 - p).ln();
                        log_w.exp() * (mf * a2 + (k - mf) * b2).powf(qf / 2.0)
                    })
                    .sum();
                Moment { value, se: 0.0 }
            }
            FamilyKind::CenteredExponential if self.k == 1 => {
                let e = std::f64::consts::E;
                let value = match q {
                    1 => 2.0 / e,
                    2 => 1.0,
                    3 => 12.0 / e - 2.0,
                    _ => return Err(Error::InvalidParameter(format!("moment order {q} unsupported"))),
                };
                Moment { value, se: 0.0 }
            }
            FamilyKind::CenteredExponential => self.standardized_norm_moment_mc(q),
        };
        Ok(Moment {
            value: s.powf(qf) * standardized.value,
            se: s.powf(qf) * standardized.se,
        })
    }

    /// `E|Y|^q` by Monte Carlo, doubling the sample until the standard error
    /// is at most `1e-3` of the estimate.
    fn standardized_norm_moment_mc(&self, q: u32) -> Moment {
        let key = StreamKey::new(GAMMA_MC_SEED, tags::GAMMA_MC);
        let mut samples: u64 = 1 << 20;
        loop {
            const CHUNK: u64 = 1 << 14;
            let (s, s2) = (0..samples / CHUNK)
                .into_par_iter()
                .map(|c| {
                    let mut acc = (0.0, 0.0);
                    for m in c * CHUNK..(c + 1) * CHUNK {
                        let mut rng = key.rng(m);
                        let r2: f64 = (0..self.k)
                            .map(|_| {
                                let y = self.standardized(&mut rng);
                                y * y
                            })
                            .sum();
                        let v = r2.powf(q as f64 / 2.0);
                        acc.0 += v;
                        acc.1 += v * v;
                    }
                    acc
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let n = samples as f64;
            let mean = s / n;
            let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
            if se <= 1e-3 * mean || samples >= 1 << 26 {
                return Moment { value: mean, se };
            }
            samples *= 2;
        }
    }

    pub fn gamma(&self) -> GammaReport {
        let base = self.norm_moment(1, 3).expect("index 1 always valid");
        let unit = base.value / self.summand_scale(1).powi(3);
        let unit_se = base.se / self.summand_scale(1).powi(3);
        let per_summand: Vec<f64> = (1..=self.n).map(|i| self.summand_scale(i).powi(3) * unit).collect();
        let gamma = per_summand.iter().sum();
        let method = if unit_se > 0.0 {
            let scale_sum: f64 = (1..=self.n).map(|i| self.summand_scale(i).powi(3)).sum();
            GammaMethod::MonteCarlo { se: scale_sum * unit_se }
        } else {
            GammaMethod::ClosedForm
        };
        GammaReport {
            gamma,
            per_summand,
            method,
        }
    }
}
