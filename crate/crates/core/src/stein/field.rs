use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point, Tolerances};

/// The vector field `f(A, eps)`.
///
/// Zero on the closure of `A`, the displacement `x - x0` to the nearest point
/// inside the dilation `A^eps`, and that displacement rescaled to length `eps`
/// beyond it. The outer branch uses the identity `x1 - x0 = eps (x - x0) / |x - x0|`
/// for the point `x1` where the ray from `x0` through `x` meets the boundary
/// of `A^eps`. On that boundary both formulas agree; the middle one is used.
#[derive(Debug, Clone)]
pub struct SteinField {
    set: ConvexSet,
    eps: f64,
    tol: Tolerances,
}

/// Field value together with the projection it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValue {
    pub value: Point,
    pub nearest: Point,
    pub distance: f64,
}

impl SteinField {
    pub fn new(set: ConvexSet, eps: f64) -> Result<Self> {
        Self::with_tolerances(set, eps, Tolerances::default())
    }

    pub fn with_tolerances(set: ConvexSet, eps: f64, tol: Tolerances) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("field radius must be > 0, got {eps}")));
        }
        Ok(Self { set, eps, tol })
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn eval(&self, x: &[f64]) -> Result<Point> {
        Ok(self.eval_detailed(x)?.value)
    }

    pub fn eval_detailed(&self, x: &[f64]) -> Result<FieldValue> {
        let proj = self.set.project(x, &self.tol)?;
        let d = proj.distance;
        let value = if d == 0.0 {
            vec![0.0; x.len()]
        } else {
            let scale = if d <= self.eps { 1.0 } else { self.eps / d };
            x.iter().zip(proj.nearest.iter()).map(|(xi, x0)| scale * (xi - x0)).collect()
        };
        Ok(FieldValue {
            value: Point::from_vec_unchecked(value),
            nearest: proj.nearest,
            distance: d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hs() -> ConvexSet {
        ConvexSet::half_space(vec![1.0, 0.0], 0.0).unwrap()
    }

    #[test]
    fn zero_on_closure() {
        let f = SteinField::new(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(), 0.5).unwrap();
        for x in [[0.0, 0.0], [0.3, -0.4], [1.0, 0.0]] {
            assert_eq!(f.eval(&x).unwrap().as_slice(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn half_space_branches() {
        let f = SteinField::new(hs(), 1.0).unwrap();
        let v = f.eval(&[0.5, 7.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.5);
        assert_abs_diff_eq!(v[1], 0.0);
        let v = f.eval(&[3.0, 7.0]).unwrap();
        assert_abs_diff_eq!(v[0], 1.0);
        assert_abs_diff_eq!(v[1], 0.0);
    }

    #[test]
    fn branches_meet_on_dilation_boundary() {
        let f = SteinField::new(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(), 0.5).unwrap();
        let inner = f.eval(&[1.5 - 1e-12, 0.0]).unwrap();
        let outer = f.eval(&[1.5 + 1e-12, 0.0]).unwrap();
        assert_abs_diff_eq!(inner[0], outer[0], epsilon = 1e-11);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(SteinField::new(hs(), 0.0).is_err());
        assert!(SteinField::new(hs(), -1.0).is_err());
    }
}
