//! Closed convex sets in R^k and the Euclidean nearest-point projection.
//!
//! Half-spaces and balls project in closed form. Polytopes and general
//! intersections use Dykstra's alternating projections; for polytopes the
//! Dykstra iterate is periodically polished by solving the equality-constrained
//! problem on the faces that carry a nonzero Dykstra increment, and the
//! polished point is accepted only when it satisfies the KKT conditions
//! (feasible, nonnegative multipliers). An accepted polish is the exact
//! projection up to rounding.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-normal tolerance for half-space normals.
pub const UNIT_NORMAL_TOL: f64 = 1e-12;

/// A point of R^k with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("dimension must be at least 1".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {c}")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    /// The i-th standard basis vector of R^k.
    pub fn basis(k: usize, i: usize) -> Self {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Numerical tolerances shared by the geometric operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Stopping tolerance of the iterative projection.
    pub projection: f64,
    /// Slack allowed in closed-set membership tests.
    pub membership: f64,
    /// Maximum number of Dykstra cycles.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            projection: 1e-10,
            membership: 1e-9,
            max_iter: 100_000,
        }
    }
}

/// The closed half-space `{x : normal . x <= offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidSet("half-space normal is empty".into()));
        }
        if !offset.is_finite() || normal.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSet("half-space has non-finite data".into()));
        }
        let len = norm(&normal);
        if (len - 1.0).abs() > UNIT_NORMAL_TOL {
            return Err(Error::InvalidSet(format!(
                "half-space normal must be a unit vector, |u| = {len}"
            )));
        }
        Ok(Self { normal, offset })
    }

    /// Builds `{x : a . x <= b}` for any nonzero `a`, rescaling to a unit normal.
    pub fn from_direction(a: &[f64], b: f64) -> Result<Self> {
        let len = norm(a);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidSet("half-space direction must be nonzero".into()));
        }
        Self::new(a.iter().map(|c| c / len).collect(), b / len)
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `u . x - d`; positive outside.
    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    #[inline]
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let s = self.slack(x);
        if s <= 0.0 {
            out.copy_from_slice(x);
        } else {
            for ((o, xi), ui) in out.iter_mut().zip(x).zip(&self.normal) {
                *o = xi - s * ui;
            }
        }
    }
}

/// The closed Euclidean ball `{x : |x - center| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let r = dist(x, &self.center);
        if r <= self.radius {
            out.copy_from_slice(x);
        } else {
            let scale = self.radius / r;
            for ((o, xi), ci) in out.iter_mut().zip(x).zip(self.center.iter()) {
                *o = ci + (xi - ci) * scale;
            }
        }
    }
}

/// A finite intersection of half-spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    faces: Vec<HalfSpace>,
}

impl Polytope {
    pub fn new(faces: Vec<HalfSpace>) -> Result<Self> {
        let Some(first) = faces.first() else {
            return Err(Error::InvalidSet("polytope needs at least one face".into()));
        };
        let k = first.dim();
        if let Some(f) = faces.iter().find(|f| f.dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: f.dim(),
            });
        }
        Ok(Self { faces })
    }

    /// The axis-aligned box `[lo_i, hi_i]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let k = lo.len();
        let mut faces = Vec::with_capacity(2 * k);
        for i in 0..k {
            let e = Point::basis(k, i).into_vec();
            let neg: Vec<f64> = e.iter().map(|c| -c).collect();
            faces.push(HalfSpace::new(e, hi[i])?);
            faces.push(HalfSpace::new(neg, -lo[i])?);
        }
        Self::new(faces)
    }

    /// `faces` half-spaces with normals uniform on the sphere and offsets in
    /// `[0.5, 1.5]`, so the origin is interior. The result may be unbounded.
    pub fn random<R: Rng + ?Sized>(k: usize, faces: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || faces == 0 {
            return Err(Error::InvalidSet("random polytope needs k >= 1 and faces >= 1".into()));
        }
        let mut out = Vec::with_capacity(faces);
        while out.len() < faces {
            let dir: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            if norm(&dir) < 1e-8 {
                continue;
            }
            let offset = rng.random_range(0.5..1.5);
            let len = norm(&dir);
            let unit: Vec<f64> = dir.iter().map(|c| c / len).collect();
            out.push(HalfSpace::new(unit, offset)?);
        }
        Self::new(out)
    }

    pub fn faces(&self) -> &[HalfSpace] {
        &self.faces
    }

    pub fn dim(&self) -> usize {
        self.faces[0].dim()
    }

    pub fn max_slack(&self, x: &[f64]) -> f64 {
        self.faces
            .iter()
            .map(|f| f.slack(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of faces with `|u . y - d| <= tol`.
    pub fn active_faces(&self, y: &[f64], tol: f64) -> Vec<usize> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.slack(y).abs() <= tol)
            .map(|(j, _)| j)
            .collect()
    }

    fn project(&self, x: &[f64], tol: &Tolerances) -> Result<ProjectionResult> {
        project_polytope(&self.faces, x, tol)
    }
}

/// A closed convex region of R^k.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    HalfSpace(HalfSpace),
    Polytope(Polytope),
    Ball(Ball),
    Intersection(Vec<ConvexSet>),
}

/// Nearest point of the closed set and its distance from the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub nearest: Point,
    pub distance: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl From<HalfSpace> for ConvexSet {
    fn from(h: HalfSpace) -> Self {
        Self::HalfSpace(h)
    }
}

impl From<Polytope> for ConvexSet {
    fn from(p: Polytope) -> Self {
        Self::Polytope(p)
    }
}

impl From<Ball> for ConvexSet {
    fn from(b: Ball) -> Self {
        Self::Ball(b)
    }
}

impl ConvexSet {
    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        HalfSpace::new(normal, offset).map(Self::HalfSpace)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Ball::new(Point::new(center)?, radius).map(Self::Ball)
    }

    pub fn polytope(faces: Vec<HalfSpace>) -> Result<Self> {
        Polytope::new(faces).map(Self::Polytope)
    }

    pub fn intersection(parts: Vec<ConvexSet>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidSet("intersection list must be non-empty".into()));
        };
        let k = first.dim();
        if let Some(p) = parts.iter().find(|p| p.dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: p.dim(),
            });
        }
        Ok(Self::Intersection(parts))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HalfSpace(h) => h.dim(),
            Self::Polytope(p) => p.dim(),
            Self::Ball(b) => b.center.dim(),
            Self::Intersection(parts) => parts[0].dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::HalfSpace(_) => "halfspace",
            Self::Polytope(_) => "polytope",
            Self::Ball(_) => "ball",
            Self::Intersection(_) => "intersection",
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let k = self.dim();
        if x.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Closure membership with slack `tol.membership`.
    pub fn contains(&self, x: &[f64], tol: &Tolerances) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.contains_unchecked(x, tol.membership))
    }

    fn contains_unchecked(&self, x: &[f64], slack: f64) -> bool {
        match self {
            Self::HalfSpace(h) => h.slack(x) <= slack,
            Self::Polytope(p) => p.faces.iter().all(|f| f.slack(x) <= slack),
            Self::Ball(b) => dist(x, &b.center) <= b.radius + slack,
            Self::Intersection(parts) => parts.iter().all(|s| s.contains_unchecked(x, slack)),
        }
    }

    /// Euclidean projection onto the closed set.
    ///
    /// Returns `Error::NonConvergence` carrying the best iterate when the
    /// iteration budget runs out. Emptiness is not detected; an empty
    /// intersection surfaces as non-convergence.
    pub fn project(&self, x: &[f64], tol: &Tolerances) -> Result<ProjectionResult> {
        self.check_dim(x)?;
        let res = self.project_unchecked(x, tol)?;
        if !res.converged {
            return Err(Error::NonConvergence {
                iterations: res.iterations,
                best: Box::new(res),
            });
        }
        Ok(res)
    }

    fn project_unchecked(&self, x: &[f64], tol: &Tolerances) -> Result<ProjectionResult> {
        let closed = |nearest: Vec<f64>| {
            let distance = dist(x, &nearest);
            ProjectionResult {
                nearest: Point(nearest),
                distance,
                converged: true,
                iterations: 0,
            }
        };
        match self {
            Self::HalfSpace(h) => {
                let mut out = vec![0.0; x.len()];
                h.project_into(x, &mut out);
                Ok(closed(out))
            }
            Self::Ball(b) => {
                let mut out = vec![0.0; x.len()];
                b.project_into(x, &mut out);
                Ok(closed(out))
            }
            Self::Polytope(p) => p.project(x, tol),
            Self::Intersection(parts) => {
                if let Some(faces) = self.flatten_faces() {
                    return project_polytope(&faces, x, tol);
                }
                if self.contains_unchecked(x, 0.0) {
                    return Ok(closed(x.to_vec()));
                }
                let (nearest, iterations, converged) = dykstra(x, parts.len(), tol, |j, y, out| {
                    let r = parts[j].project_unchecked(y, tol)?;
                    out.copy_from_slice(&r.nearest);
                    Ok(())
                })?;
                let distance = dist(x, &nearest);
                Ok(ProjectionResult {
                    nearest: Point(nearest),
                    distance,
                    converged,
                    iterations,
                })
            }
        }
    }

    /// All faces when every part is polyhedral.
    fn flatten_faces(&self) -> Option<Vec<HalfSpace>> {
        match self {
            Self::HalfSpace(h) => Some(vec![h.clone()]),
            Self::Polytope(p) => Some(p.faces.clone()),
            Self::Ball(_) => None,
            Self::Intersection(parts) => {
                let mut faces = Vec::new();
                for p in parts {
                    faces.extend(p.flatten_faces()?);
                }
                Some(faces)
            }
        }
    }

    /// `d(x, A)`, zero on the closure.
    pub fn distance(&self, x: &[f64], tol: &Tolerances) -> Result<f64> {
        self.check_dim(x)?;
        match self {
            Self::HalfSpace(h) => Ok(h.slack(x).max(0.0)),
            Self::Ball(b) => Ok((dist(x, &b.center) - b.radius).max(0.0)),
            Self::Polytope(p) if p.max_slack(x) <= 0.0 => Ok(0.0),
            _ => Ok(self.project(x, tol)?.distance),
        }
    }

    /// Membership in the dilation `A^eps = {x : d(x, A) <= eps}`.
    pub fn in_dilation(&self, x: &[f64], eps: f64, tol: &Tolerances) -> Result<bool> {
        check_radius(eps)?;
        if self.contains(x, tol)? {
            return Ok(true);
        }
        Ok(self.distance(x, tol)? <= eps + tol.membership)
    }

    /// Largest `eps` with `B(x, eps)` inside the set; negative outside.
    ///
    /// Only defined for half-spaces, polytopes and balls.
    pub fn erosion_depth(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match self {
            Self::HalfSpace(h) => Ok(-h.slack(x)),
            Self::Polytope(p) => Ok(-p.max_slack(x)),
            Self::Ball(b) => Ok(b.radius - dist(x, &b.center)),
            Self::Intersection(_) => Err(Error::UnsupportedSet(
                "erosion of a general intersection".into(),
            )),
        }
    }

    /// Membership in the erosion `A^{-eps} = {x : B(x, eps) in A}`.
    pub fn in_erosion(&self, x: &[f64], eps: f64) -> Result<bool> {
        check_radius(eps)?;
        if let Self::Ball(b) = self {
            if b.radius - eps < 0.0 {
                self.check_dim(x)?;
                return Ok(false);
            }
        }
        Ok(self.erosion_depth(x)? >= eps)
    }
}

fn check_radius(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be finite and >= 0, got {eps}"
        )));
    }
    Ok(())
}

/// Dykstra's cyclic projections onto `m` closed convex sets.
///
/// Stops once the increments change by less than `tol.projection` over a full
/// cycle, which also bounds the displacement of every iterate in that cycle.
fn dykstra<F>(x: &[f64], m: usize, tol: &Tolerances, mut project: F) -> Result<(Vec<f64>, usize, bool)>
where
    F: FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
{
    let k = x.len();
    let mut cur = x.to_vec();
    let mut incr = vec![0.0; m * k];
    let mut shifted = vec![0.0; k];
    let mut out = vec![0.0; k];
    for cycle in 1..=tol.max_iter {
        let mut change = 0.0;
        for j in 0..m {
            let p = &mut incr[j * k..(j + 1) * k];
            for i in 0..k {
                shifted[i] = cur[i] + p[i];
            }
            project(j, &shifted, &mut out)?;
            for i in 0..k {
                let np = shifted[i] - out[i];
                change += (np - p[i]) * (np - p[i]);
                p[i] = np;
            }
            cur.copy_from_slice(&out);
        }
        if change.sqrt() < tol.projection {
            return Ok((cur, cycle, true));
        }
    }
    Ok((cur, tol.max_iter, false))
}

fn project_polytope(faces: &[HalfSpace], x: &[f64], tol: &Tolerances) -> Result<ProjectionResult> {
    let k = x.len();
    let finish = |nearest: Vec<f64>, iterations: usize, converged: bool| {
        let distance = dist(x, &nearest);
        ProjectionResult {
            nearest: Point(nearest),
            distance,
            converged,
            iterations,
        }
    };
    let violated: Vec<usize> = (0..faces.len()).filter(|&j| faces[j].slack(x) > 0.0).collect();
    if violated.is_empty() {
        return Ok(finish(x.to_vec(), 0, true));
    }
    // Single-face candidates: the projection onto a containing half-space that
    // lands in the polytope is the projection onto the polytope.
    let feas_tol = feasibility_tol(x);
    for &j in &violated {
        let mut y = vec![0.0; k];
        faces[j].project_into(x, &mut y);
        if faces.iter().all(|f| f.slack(&y) <= feas_tol) {
            return Ok(finish(y, 0, true));
        }
    }

    let m = faces.len();
    let mut cur = x.to_vec();
    let mut incr = vec![0.0; m * k];
    let mut shifted = vec![0.0; k];
    let mut out = vec![0.0; k];
    let mut next_polish = 2;
    for cycle in 1..=tol.max_iter {
        let mut change = 0.0;
        for (j, face) in faces.iter().enumerate() {
            let p = &mut incr[j * k..(j + 1) * k];
            for i in 0..k {
                shifted[i] = cur[i] + p[i];
            }
            face.project_into(&shifted, &mut out);
            for i in 0..k {
                let np = shifted[i] - out[i];
                change += (np - p[i]) * (np - p[i]);
                p[i] = np;
            }
            cur.copy_from_slice(&out);
        }
        if cycle == next_polish || change.sqrt() < tol.projection {
            next_polish *= 2;
            if let Some(y) = polish(faces, x, &incr) {
                return Ok(finish(y, cycle, true));
            }
            if change.sqrt() < tol.projection {
                return Ok(finish(cur, cycle, true));
            }
        }
    }
    Ok(finish(cur, tol.max_iter, false))
}

fn feasibility_tol(x: &[f64]) -> f64 {
    1e-13 * (1.0 + norm(x))
}

/// Solves `min |y - x|` subject to equality on the faces whose Dykstra
/// increment is nonzero, and returns `y` if it certifies KKT optimality.
fn polish(faces: &[HalfSpace], x: &[f64], incr: &[f64]) -> Option<Vec<f64>> {
    let k = x.len();
    let active: Vec<usize> = (0..faces.len())
        .filter(|&j| norm(&incr[j * k..(j + 1) * k]) > 1e-300)
        .collect();
    if active.is_empty() || active.len() > k {
        return None;
    }
    let a = active.len();
    let gram = DMatrix::from_fn(a, a, |r, c| dot(faces[active[r]].normal(), faces[active[c]].normal()));
    let rhs = DVector::from_fn(a, |r, _| faces[active[r]].slack(x));
    let chol = gram.cholesky()?;
    let lambda = chol.solve(&rhs);
    if lambda.iter().any(|l| !l.is_finite() || *l < -1e-12) {
        return None;
    }
    let mut y = x.to_vec();
    for (r, &j) in active.iter().enumerate() {
        for (yi, ui) in y.iter_mut().zip(faces[j].normal()) {
            *yi -= lambda[r] * ui;
        }
    }
    let feas_tol = feasibility_tol(x);
    faces.iter().all(|f| f.slack(&y) <= feas_tol).then_some(y)
}
