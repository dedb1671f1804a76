use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smoothing::SmoothedIndicator;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rng::{tags, StreamKey};

const PANEL_ORDER: usize = 8;
const FIRST_BREAK: f64 = 1e-6;
const CHUNK: usize = 512;

/// Discretization of the solution integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Nodes of the composite Gauss-Legendre rule in `t`; rounded up to a
    /// multiple of 8.
    pub nodes: usize,
    /// Size of the Gaussian panel shared by every node and every point.
    pub z_samples: usize,
    pub seed: u64,
    /// Truncation of the `t` range.
    pub t_max: f64,
    /// If set, evaluations whose standard error exceeds it are errors.
    pub target_se: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 64,
            z_samples: 100_000,
            seed: 0,
            t_max: 36.0,
            target_se: None,
        }
    }
}

/// Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionValue {
    pub value: f64,
    pub std_error: f64,
}

/// Numerical solution of the Gaussian Stein equation
/// `lap f(w) - w . grad f(w) = h(w) - E h(Z)` for a smoothed indicator `h`.
///
/// Uses the representation
/// `f(w) = -1/2 int_0^1 (1-s)^{-1} E[h(sqrt(1-s) w + sqrt(s) Z) - E h(Z)] ds`
/// after the substitution `s = 1 - e^{-t}`, which turns the weight
/// `(1-s)^{-1} ds` into `dt`. The `t` range `[0, t_max]` is covered by a
/// Gauss-Legendre panel on `[0, 1e-6]` followed by geometrically growing
/// panels. The inner expectation uses one fixed Gaussian panel for every node
/// and every evaluation point, so differences of the solution across nearby
/// points carry no fresh sampling noise.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    indicator: SmoothedIndicator,
    spec: QuadratureSpec,
    /// `(a, b, weight)` with `a = e^{-t/2}`, `b = sqrt(1 - e^{-t})`.
    nodes: Vec<(f64, f64, f64)>,
    /// Row-major `z_samples x k`.
    panel: Vec<f64>,
    mean_h: f64,
}

impl SteinSolution {
    pub fn new(indicator: SmoothedIndicator, spec: QuadratureSpec) -> Result<Self> {
        if spec.nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "at least 16 quadrature nodes required, got {}",
                spec.nodes
            )));
        }
        if spec.z_samples < 1000 {
            return Err(Error::InvalidParameter(format!(
                "at least 1000 Gaussian samples required, got {}",
                spec.z_samples
            )));
        }
        if !(spec.t_max > FIRST_BREAK) {
            return Err(Error::InvalidParameter("t_max must exceed 1e-6".into()));
        }
        let nodes = t_nodes(spec.nodes, spec.t_max);
        let k = indicator.dim();
        let key = StreamKey::new(spec.seed, tags::QUADRATURE);
        let panel: Vec<f64> = (0..spec.z_samples as u64)
            .into_par_iter()
            .flat_map_iter(|m| {
                let mut rng = key.rng(m);
                (0..k).map(move |_| StandardNormal.sample(&mut rng))
            })
            .collect();
        let mut sol = Self {
            indicator,
            spec,
            nodes,
            panel,
            mean_h: 0.0,
        };
        let total: f64 = sol
            .panel
            .par_chunks(k * CHUNK)
            .map(|chunk| chunk.chunks_exact(k).map(|z| sol.indicator.eval(z)).sum::<Result<f64>>())
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum();
        sol.mean_h = total / spec.z_samples as f64;
        Ok(sol)
    }

    pub fn indicator(&self) -> &SmoothedIndicator {
        &self.indicator
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `E h(Z)` estimated on the shared panel.
    pub fn mean_h(&self) -> f64 {
        self.mean_h
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, w: &[f64]) -> Result<SolutionValue> {
        let k = self.indicator.dim();
        if w.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: w.len(),
            });
        }
        let partials = self
            .panel
            .par_chunks(k * CHUNK)
            .map(|chunk| {
                let mut y = vec![0.0; k];
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for z in chunk.chunks_exact(k) {
                    let mut g = 0.0;
                    for &(a, b, weight) in &self.nodes {
                        for i in 0..k {
                            y[i] = a * w[i] + b * z[i];
                        }
                        g += weight * (self.indicator.eval(&y)? - self.mean_h);
                    }
                    g *= -0.5;
                    sum += g;
                    sumsq += g * g;
                }
                Ok((sum, sumsq))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let n = self.spec.z_samples as f64;
        let (sum, sumsq) = partials
            .into_iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        let mean = sum / n;
        let var = ((sumsq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        let se = (var / n).sqrt();
        if let Some(target) = self.spec.target_se {
            if se > target {
                return Err(Error::QuadratureBudgetExceeded {
                    requested: target,
                    achievable: se,
                });
            }
        }
        Ok(SolutionValue {
            value: mean,
            std_error: se,
        })
    }

    /// `|lap f(w) - w . grad f(w) - (h(w) - E h(Z))|` with central differences
    /// of step `1e-3` on the shared panel.
    pub fn residual(&self, w: &[f64]) -> Result<f64> {
        const STEP: f64 = 1e-3;
        let center = self.eval(w)?.value;
        let mut probe = w.to_vec();
        let mut laplacian = 0.0;
        let mut drift = 0.0;
        for i in 0..w.len() {
            probe[i] = w[i] + STEP;
            let up = self.eval(&probe)?.value;
            probe[i] = w[i] - STEP;
            let down = self.eval(&probe)?.value;
            probe[i] = w[i];
            laplacian += (up - 2.0 * center + down) / (STEP * STEP);
            drift += w[i] * (up - down) / (2.0 * STEP);
        }
        let rhs = self.indicator.eval(w)? - self.mean_h;
        Ok((laplacian - drift - rhs).abs())
    }
}

fn t_nodes(requested: usize, t_max: f64) -> Vec<(f64, f64, f64)> {
    let panels = requested.div_ceil(PANEL_ORDER).max(2);
    let mut breaks = vec![0.0];
    let ratio = (t_max / FIRST_BREAK).powf(1.0 / (panels - 1) as f64);
    for j in 0..panels {
        breaks.push(FIRST_BREAK * ratio.powi(j as i32));
    }
    *breaks.last_mut().expect("non-empty") = t_max;
    let (x, wts) = gauss_legendre(PANEL_ORDER);
    let mut out = Vec::with_capacity(panels * PANEL_ORDER);
    for win in breaks.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let half = 0.5 * (hi - lo);
        for (xi, wi) in x.iter().zip(&wts) {
            let t = lo + half * (xi + 1.0);
            out.push(((-0.5 * t).exp(), (-(-t).exp_m1()).sqrt(), wi * half));
        }
    }
    out
}
