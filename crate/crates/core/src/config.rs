//! Experiment configuration files (TOML).
//!
//! ```toml
//! experiment = "gaussian-concentration"
//! k = 2
//! n = 1
//! family = "gaussian"
//! samples = 1000000
//! seed = 7
//! eps = [0.0, 0.05, 0.1]
//!
//! [[set]]
//! kind = "ball"
//! radius = 1.0
//! ```
//!
//! Unknown keys are rejected and the seed is mandatory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, HalfSpace, Point, Polytope, Tolerances};
use crate::harness::{SearchConfig, SetFamily, MIN_SAMPLES};
use crate::lemmas::LemmaConfig;
use crate::rng::{tags, StreamKey};
use crate::stein::QuadratureSpec;
use crate::vectors::{DistributionFamily, FamilyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Lemmas,
    GaussianConcentration,
    SumConcentration,
    BerryEsseen,
    Adversarial,
    SteinResidual,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Lemmas,
        Self::GaussianConcentration,
        Self::SumConcentration,
        Self::BerryEsseen,
        Self::Adversarial,
        Self::SteinResidual,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Lemmas => "lemmas",
            Self::GaussianConcentration => "gaussian-concentration",
            Self::SumConcentration => "sum-concentration",
            Self::BerryEsseen => "berry-esseen",
            Self::Adversarial => "adversarial",
            Self::SteinResidual => "stein-residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Rademacher,
    Gaussian,
    CenteredExponential,
    HeterogeneousBernoulli,
}

/// Whether sum-concentration radii are absolute or multiples of `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsScale {
    #[default]
    Absolute,
    Gamma,
}

/// A convex set in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    /// `{x : normal . x <= offset}`; `normal` is rescaled to unit length.
    Halfspace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        normal: Vec<f64>,
        offset: f64,
    },
    /// Defaults to the origin-centered unit ball.
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `{x : normals[j] . x <= offsets[j]}`.
    Polytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    /// Uniform random unit normals with offsets in `[0.5, 1.5]`.
    RandomPolytope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        #[serde(default = "six")]
        faces: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn six() -> usize {
    6
}

impl SetSpec {
    fn explicit_id(&self) -> Option<&str> {
        match self {
            Self::Halfspace { id, .. }
            | Self::Ball { id, .. }
            | Self::Polytope { id, .. }
            | Self::RandomPolytope { id, .. } => id.as_deref(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Halfspace { .. } => "halfspace",
            Self::Ball { .. } => "ball",
            Self::Polytope { .. } => "polytope",
            Self::RandomPolytope { .. } => "random-polytope",
        }
    }

    /// `id`, or `<kind><position>`.
    pub fn id(&self, position: usize) -> String {
        self.explicit_id()
            .map(str::to_string)
            .unwrap_or_else(|| format!("{}{position}", self.kind()))
    }

    pub fn build(&self, k: usize) -> Result<ConvexSet> {
        let check = |v: &[f64]| {
            if v.len() == k {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.len(),
                })
            }
        };
        match self {
            Self::Halfspace { normal, offset, .. } => {
                check(normal)?;
                Ok(HalfSpace::from_direction(normal, *offset)?.into())
            }
            Self::Ball { center, radius, .. } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; k]);
                check(&c)?;
                ConvexSet::ball(c, *radius)
            }
            Self::Polytope { normals, offsets, .. } => {
                if normals.len() != offsets.len() {
                    return Err(Error::InvalidSet(format!(
                        "{} normals but {} offsets",
                        normals.len(),
                        offsets.len()
                    )));
                }
                let faces = normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| {
                        check(a)?;
                        HalfSpace::from_direction(a, *b)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ConvexSet::polytope(faces)
            }
            Self::RandomPolytope { faces, seed, .. } => {
                let mut rng = StreamKey::new(*seed, tags::RANDOM_SET).rng(0);
                Ok(Polytope::random(k, *faces, &mut rng)?.into())
            }
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub k: usize,
    pub n: usize,
    pub family: FamilyName,
    /// Success probability of the heterogeneous Bernoulli family.
    #[serde(default = "half")]
    pub bernoulli_p: f64,
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[serde(default)]
    pub workers: usize,
    /// Radius grid. Gaussian concentration uses every pair from
    /// `eps x eps2`; lemmas and Stein residuals use it as the smoothing scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Inner radii for Gaussian concentration; defaults to `eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<Vec<f64>>,
    #[serde(default)]
    pub eps_scale: EpsScale,
    /// 1-based summand index for sum concentration.
    #[serde(default = "first")]
    pub index: usize,
    #[serde(default, rename = "set", skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<SetSpec>,
    #[serde(default, rename = "set_family", skip_serializing_if = "Vec::is_empty")]
    pub set_families: Vec<SetFamily>,
    /// Stein-residual evaluation points; when absent, `random_points` points
    /// uniform in the ball of radius `point_radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "twenty")]
    pub random_points: usize,
    #[serde(default = "three")]
    pub point_radius: f64,
    /// Acceptance threshold for Stein residuals.
    #[serde(default = "residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lemmas: LemmaConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub search: SearchConfig,
}

fn half() -> f64 {
    0.5
}

fn first() -> usize {
    1
}

fn twenty() -> usize {
    20
}

fn three() -> f64 {
    3.0
}

fn residual_tol() -> f64 {
    5e-2
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML text that parses back to this config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            line: None,
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(invalid("k", "must be >= 1"));
        }
        if self.n < 1 {
            return Err(invalid("n", "must be >= 1"));
        }
        if self.samples < MIN_SAMPLES {
            return Err(invalid("samples", format!("must be >= {MIN_SAMPLES}, got {}", self.samples)));
        }
        if !(self.bernoulli_p > 0.0 && self.bernoulli_p < 1.0) {
            return Err(invalid("bernoulli_p", "must lie in (0, 1)"));
        }
        for (name, grid) in [("eps", &self.eps), ("eps2", &self.eps2)] {
            if let Some(g) = grid {
                if g.is_empty() || g.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                    return Err(invalid(name, "must be a non-empty list of finite values >= 0"));
                }
            }
        }
        let positive_eps = matches!(
            self.experiment,
            Experiment::Lemmas | Experiment::SumConcentration | Experiment::SteinResidual
        );
        if positive_eps && self.eps.as_ref().is_some_and(|g| g.contains(&0.0)) {
            return Err(invalid("eps", "must be > 0 for this experiment"));
        }
        if self.index < 1 || self.index > self.n {
            return Err(invalid("index", format!("must lie in 1..={}", self.n)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(invalid("residual_tol", "must be > 0"));
        }
        if !(self.point_radius > 0.0) {
            return Err(invalid("point_radius", "must be > 0"));
        }
        if let Some(points) = &self.points {
            if points.iter().any(|p| p.len() != self.k) {
                return Err(invalid("points", format!("every point needs {} coordinates", self.k)));
            }
        }
        if self.search.restarts < 1 {
            return Err(invalid("search.restarts", "must be >= 1"));
        }
        if self.quadrature.nodes < 16 {
            return Err(invalid("quadrature.nodes", "must be >= 16"));
        }
        if self.quadrature.z_samples < 1000 {
            return Err(invalid("quadrature.z_samples", "must be >= 1000"));
        }
        self.distribution()?;
        for (i, s) in self.sets.iter().enumerate() {
            s.build(self.k).map_err(|e| invalid(&format!("set[{i}]"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn distribution(&self) -> Result<DistributionFamily> {
        let kind = match self.family {
            FamilyName::Rademacher => FamilyKind::Rademacher,
            FamilyName::Gaussian => FamilyKind::Gaussian,
            FamilyName::CenteredExponential => FamilyKind::CenteredExponential,
            FamilyName::HeterogeneousBernoulli => FamilyKind::HeterogeneousBernoulli { p: self.bernoulli_p },
        };
        DistributionFamily::new(kind, self.k, self.n).map_err(|e| invalid("family", e.to_string()))
    }

    /// Configured sets, or the experiment's default trio of a half-space, the
    /// unit ball and a random six-face polytope.
    pub fn set_specs(&self) -> Vec<SetSpec> {
        if !self.sets.is_empty() {
            return self.sets.clone();
        }
        let mut normal = vec![0.0; self.k];
        normal[0] = 1.0;
        vec![
            SetSpec::Halfspace {
                id: None,
                normal,
                offset: 0.0,
            },
            SetSpec::Ball {
                id: None,
                center: None,
                radius: 1.0,
            },
            SetSpec::RandomPolytope {
                id: None,
                faces: 6,
                seed: self.seed,
            },
        ]
    }

    /// `(id, set)` for every configured set.
    pub fn build_sets(&self) -> Result<Vec<(String, ConvexSet)>> {
        self.set_specs()
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((s.id(i), s.build(self.k)?)))
            .collect()
    }

    pub fn eps_grid(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| match self.experiment {
            Experiment::GaussianConcentration => vec![0.0, 0.05, 0.1, 0.3],
            Experiment::SumConcentration => vec![1.0, 5.0],
            Experiment::Lemmas => vec![0.1, 0.5, 1.0],
            _ => vec![0.5],
        })
    }

    pub fn eps2_grid(&self) -> Vec<f64> {
        self.eps2.clone().unwrap_or_else(|| self.eps_grid())
    }

    pub fn set_family_list(&self) -> Vec<SetFamily> {
        if self.set_families.is_empty() {
            vec![SetFamily::half_spaces(), SetFamily::balls()]
        } else {
            self.set_families.clone()
        }
    }

    /// Configured points, or seeded uniform draws from the ball of radius
    /// `point_radius`.
    pub fn probe_points(&self) -> Vec<Point> {
        if let Some(points) = &self.points {
            return points.iter().map(|p| Point::from_vec_unchecked(p.clone())).collect();
        }
        use rand::Rng;
        use rand_distr::{Distribution, StandardNormal};
        let key = StreamKey::new(self.seed, tags::RANDOM_SET);
        (0..self.random_points as u64)
            .map(|m| {
                let mut rng = key.rng(1 << 32 | m);
                let g: Vec<f64> = (0..self.k).map(|_| StandardNormal.sample(&mut rng)).collect();
                let len = crate::geometry::norm(&g).max(f64::MIN_POSITIVE);
                let r = self.point_radius * rng.random::<f64>().powf(1.0 / self.k as f64);
                Point::from_vec_unchecked(g.iter().map(|c| r * c / len).collect())
            })
            .collect()
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("cannot read {}", path.display()),
        source,
    })?;
    ExperimentConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "berry-esseen"
k = 1
n = 100
family = "rademacher"
samples = 10000
seed = 1
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.workers, 0);
        assert_eq!(cfg.index, 1);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.set_family_list().len(), 2);
        assert_eq!(cfg.build_sets().unwrap().len(), 3);
    }

    #[test]
    fn small_sample_is_a_validation_error() {
        let text = MINIMAL.replace("samples = 10000", "samples = 10");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "samples"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_line() {
        let text = format!("{MINIMAL}foo = 3\n");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Parse { line, message }) => {
                assert!(message.contains("foo"), "{message}");
                assert_eq!(line, Some(8));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 1", "");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn toml_echo_round_trips() {
        let text = r#"
experiment = "gaussian-concentration"
k = 2
n = 1
family = "gaussian"
samples = 20000
seed = 9
eps = [0.0, 0.1]

[[set]]
kind = "polytope"
normals = [[1.0, 0.0], [0.0, 2.0]]
offsets = [1.0, 0.5]

[[set]]
kind = "ball"
id = "unit"

[[set_family]]
kind = "balls"
radii = [0.5, 1.0]

[tolerances]
projection = 1e-11
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.tolerances.projection, 1e-11);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let sets = cfg.build_sets().unwrap();
        assert_eq!(sets[0].0, "polytope0");
        assert_eq!(sets[1].0, "unit");
    }

    #[test]
    fn bad_set_names_its_position() {
        let text = format!("{MINIMAL}[[set]]\nkind = \"ball\"\nradius = -1.0\n");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "set[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probe_points_are_seeded_and_bounded() {
        let text = MINIMAL.replace("k = 1", "k = 2");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let a = cfg.probe_points();
        assert_eq!(a, cfg.probe_points());
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|p| p.norm() <= 3.0));
    }
}
