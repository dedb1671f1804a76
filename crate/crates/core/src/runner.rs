//! Dispatch from a validated config to the experiments.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{EpsScale, Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::harness::{
    adversarial_halfspace_search, discrepancy, gaussian_concentration_grid, sum_concentration_fixed_eps_grid,
    with_workers, AdversarialResult, ConcentrationEstimate, DiscrepancyEstimate, RandomRadiusEstimate, Verdict,
};
use crate::harness::sum_concentration_random_eps_with;
use crate::lemmas::{check_lemmas, LemmaReport};
use crate::report::Row;
use crate::stats::{clopper_pearson, CONFIDENCE};
use crate::stein::{QuadratureSpec, SmoothedIndicator, SolutionValue, SteinField, SteinSolution};
use crate::vectors::GammaReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEstimates {
    pub set_id: String,
    pub estimates: Vec<ConcentrationEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumOutcome {
    pub set_id: String,
    /// Fixed-radius shells, one per `eps`.
    pub fixed: Vec<ConcentrationEstimate>,
    pub random: RandomRadiusEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub set_id: String,
    pub eps: f64,
    pub report: LemmaReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualOutcome {
    pub set_id: String,
    pub eps: f64,
    pub point: Vec<f64>,
    pub solution: SolutionValue,
    pub residual: f64,
}

/// Experiment-specific estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Lemmas(Vec<LemmaOutcome>),
    GaussianConcentration(Vec<SetEstimates>),
    SumConcentration(Vec<SumOutcome>),
    BerryEsseen(Vec<DiscrepancyEstimate>),
    Adversarial(AdversarialResult),
    SteinResidual(Vec<ResidualOutcome>),
}

/// Self-describing result of one experiment: rerunning `config` reproduces
/// every number except `wall_time_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    pub config: ExperimentConfig,
    /// Present for experiments on sums of random vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaReport>,
    /// False when `gamma > 1/115`, where the normal-approximation bound is
    /// vacuous.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_informative: Option<bool>,
    pub rows: Vec<Row>,
    pub outcome: Outcome,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn any_fail(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }
}

/// Runs the configured experiment on `config.workers` threads.
pub fn run(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let start = Instant::now();
    let name = config.experiment.as_str();
    let (gamma, rows, outcome) = with_workers(config.workers, || dispatch(config))?.map_err(|e| Error::Experiment {
        experiment: name.to_string(),
        source: Box::new(e),
    })?;
    Ok(ResultRecord {
        version: crate::VERSION.to_string(),
        config: config.clone(),
        gamma_informative: gamma.as_ref().map(|g| g.gamma <= 1.0 / 115.0),
        gamma,
        rows,
        outcome,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

type Dispatched = (Option<GammaReport>, Vec<Row>, Outcome);

fn dispatch(cfg: &ExperimentConfig) -> Result<Dispatched> {
    match cfg.experiment {
        Experiment::Lemmas => lemmas(cfg),
        Experiment::GaussianConcentration => gaussian(cfg),
        Experiment::SumConcentration => sums(cfg),
        Experiment::BerryEsseen => berry_esseen(cfg),
        Experiment::Adversarial => adversarial(cfg),
        Experiment::SteinResidual => residuals(cfg),
    }
}

fn row(cfg: &ExperimentConfig, set_id: String) -> Row {
    Row {
        experiment: cfg.experiment.as_str().to_string(),
        k: cfg.k,
        n: cfg.n,
        family: cfg.distribution().map(|d| d.kind.name().to_string()).unwrap_or_default(),
        set_id,
        eps1: None,
        eps2: None,
        gamma: None,
        p_hat: 0.0,
        ci_low: None,
        ci_high: None,
        bound: 0.0,
        verdict: Verdict::Pass,
        samples: cfg.samples,
        seed: cfg.seed,
    }
}

fn estimate_row(cfg: &ExperimentConfig, set_id: String, e: &ConcentrationEstimate, gamma: Option<f64>) -> Row {
    Row {
        eps1: Some(e.eps1),
        eps2: Some(e.eps2),
        gamma,
        p_hat: e.p_hat,
        ci_low: Some(e.ci_low),
        ci_high: Some(e.ci_high),
        bound: e.bound,
        verdict: e.verdict,
        samples: e.samples,
        ..row(cfg, set_id)
    }
}

fn lemmas(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (id, set) in cfg.build_sets()? {
        for eps in cfg.eps_grid() {
            let field = SteinField::with_tolerances(set.clone(), eps, cfg.tolerances)?;
            let report = check_lemmas(&field, &cfg.lemmas, cfg.seed)?;
            for (property, t) in report.tallies() {
                let (p_hat, ci) = if t.checked > 0 {
                    let (lo, hi) = clopper_pearson(t.violations, t.checked, CONFIDENCE);
                    (t.violations as f64 / t.checked as f64, Some((lo, hi)))
                } else {
                    (0.0, None)
                };
                rows.push(Row {
                    eps1: Some(eps),
                    p_hat,
                    ci_low: ci.map(|c| c.0),
                    ci_high: ci.map(|c| c.1),
                    verdict: if t.passed() { Verdict::Pass } else { Verdict::Fail },
                    samples: t.checked,
                    ..row(cfg, format!("{id}:{property}"))
                });
            }
            out.push(LemmaOutcome {
                set_id: id.clone(),
                eps,
                report,
            });
        }
    }
    Ok((None, rows, Outcome::Lemmas(out)))
}

fn gaussian(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let pairs: Vec<(f64, f64)> = cfg
        .eps_grid()
        .iter()
        .flat_map(|&e1| cfg.eps2_grid().into_iter().map(move |e2| (e1, e2)))
        .collect();
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (id, set) in cfg.build_sets()? {
        let estimates = gaussian_concentration_grid(&set, &pairs, cfg.samples, cfg.seed, &cfg.tolerances)?;
        rows.extend(estimates.iter().map(|e| estimate_row(cfg, id.clone(), e, None)));
        out.push(SetEstimates { set_id: id, estimates });
    }
    Ok((None, rows, Outcome::GaussianConcentration(out)))
}

fn sums(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let family = cfg.distribution()?;
    let report = family.gamma();
    let gamma = report.gamma;
    let eps: Vec<f64> = match cfg.eps_scale {
        EpsScale::Absolute => cfg.eps_grid(),
        EpsScale::Gamma => cfg.eps_grid().iter().map(|e| e * gamma).collect(),
    };
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (id, set) in cfg.build_sets()? {
        let fixed = sum_concentration_fixed_eps_grid(
            &family,
            gamma,
            cfg.index,
            &set,
            &eps,
            cfg.samples,
            cfg.seed,
            &cfg.tolerances,
        )?;
        let random = sum_concentration_random_eps_with(
            &family,
            gamma,
            cfg.index,
            &set,
            cfg.samples,
            cfg.seed,
            &cfg.tolerances,
        )?;
        rows.extend(fixed.iter().map(|e| estimate_row(cfg, id.clone(), e, Some(gamma))));
        rows.push(estimate_row(cfg, format!("{id}:random-radius"), &random.estimate, Some(gamma)));
        out.push(SumOutcome {
            set_id: id,
            fixed,
            random,
        });
    }
    Ok((Some(report), rows, Outcome::SumConcentration(out)))
}

fn discrepancy_rows(cfg: &ExperimentConfig, est: &DiscrepancyEstimate, per_set: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    if per_set {
        for r in &est.records {
            rows.push(Row {
                gamma: Some(est.gamma),
                p_hat: r.p_hat,
                ci_low: Some(r.ci_low),
                ci_high: Some(r.ci_high),
                bound: est.bound,
                verdict: Verdict::judge(r.discrepancy + (r.ci_high - r.ci_low), est.bound),
                samples: est.samples,
                ..row(cfg, r.set_id.clone())
            });
        }
    }
    // Summary row: the statistic is the largest discrepancy.
    rows.push(Row {
        gamma: Some(est.gamma),
        p_hat: est.sup_hat,
        ci_low: Some(est.sup_hat),
        ci_high: Some(est.sup_hat + est.ci_width),
        bound: est.bound,
        verdict: est.verdict,
        samples: est.samples,
        ..row(cfg, format!("sup:{}:{}", est.set_family, est.argmax))
    });
    rows
}

fn berry_esseen(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let family = cfg.distribution()?;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for sf in cfg.set_family_list() {
        let est = discrepancy(&family, &sf, cfg.samples, cfg.seed)?;
        rows.extend(discrepancy_rows(cfg, &est, true));
        out.push(est);
    }
    Ok((Some(family.gamma()), rows, Outcome::BerryEsseen(out)))
}

fn adversarial(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let family = cfg.distribution()?;
    let res = adversarial_halfspace_search(&family, &cfg.search, cfg.samples, cfg.seed)?;
    let rows = discrepancy_rows(cfg, &res.estimate, false);
    Ok((Some(family.gamma()), rows, Outcome::Adversarial(res)))
}

fn residuals(cfg: &ExperimentConfig) -> Result<Dispatched> {
    let spec = QuadratureSpec {
        seed: cfg.seed,
        ..cfg.quadrature
    };
    let points = cfg.probe_points();
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (id, set) in cfg.build_sets()? {
        for eps in cfg.eps_grid() {
            let h = SmoothedIndicator::with_tolerances(set.clone(), eps, cfg.tolerances)?;
            let solution = SteinSolution::new(h, spec)?;
            for w in &points {
                let value = solution.eval(w)?;
                let residual = solution.residual(w)?;
                let coords: Vec<String> = w.iter().map(|c| format!("{c:.4}")).collect();
                rows.push(Row {
                    eps1: Some(eps),
                    p_hat: residual,
                    bound: cfg.residual_tol,
                    verdict: if residual <= cfg.residual_tol { Verdict::Pass } else { Verdict::Fail },
                    samples: spec.z_samples as u64,
                    ..row(cfg, format!("{id}:w={}", coords.join("|")))
                });
                out.push(ResidualOutcome {
                    set_id: id.clone(),
                    eps,
                    point: w.to_vec(),
                    solution: value,
                    residual,
                });
            }
        }
    }
    Ok((None, rows, Outcome::SteinResidual(out)))
}
