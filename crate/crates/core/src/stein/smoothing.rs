use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Point, Tolerances};

/// The C^1 ramp from 1 to 0 on `[0, 1]` built from two quadratic pieces.
pub fn psi(t: f64) -> f64 {
    if t < 0.0 {
        1.0
    } else if t < 0.5 {
        1.0 - 2.0 * t * t
    } else if t < 1.0 {
        2.0 * (1.0 - t) * (1.0 - t)
    } else {
        0.0
    }
}

pub fn psi_derivative(t: f64) -> f64 {
    if !(0.0..1.0).contains(&t) {
        0.0
    } else if t < 0.5 {
        -4.0 * t
    } else {
        -4.0 * (1.0 - t)
    }
}

/// `h_eps(w) = psi(d(w, A) / eps)`: 1 on `A`, 0 outside `A^eps`.
#[derive(Debug, Clone)]
pub struct SmoothedIndicator {
    set: ConvexSet,
    eps: f64,
    tol: Tolerances,
}

impl SmoothedIndicator {
    pub fn new(set: ConvexSet, eps: f64) -> Result<Self> {
        Self::with_tolerances(set, eps, Tolerances::default())
    }

    pub fn with_tolerances(set: ConvexSet, eps: f64, tol: Tolerances) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius must be > 0, got {eps}"
            )));
        }
        Ok(Self { set, eps, tol })
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        Ok(psi(self.set.distance(w, &self.tol)? / self.eps))
    }

    /// Central-difference gradient with step `1e-6 * max(1, |w|)`.
    pub fn grad_fd(&self, w: &[f64]) -> Result<Point> {
        let h = 1e-6 * crate::geometry::norm(w).max(1.0);
        let mut probe = w.to_vec();
        let mut grad = Vec::with_capacity(w.len());
        for i in 0..w.len() {
            probe[i] = w[i] + h;
            let up = self.eval(&probe)?;
            probe[i] = w[i] - h;
            let down = self.eval(&probe)?;
            probe[i] = w[i];
            grad.push((up - down) / (2.0 * h));
        }
        Point::new(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_pieces() {
        assert_eq!(psi(-0.2), 1.0);
        assert_eq!(psi(1.2), 0.0);
        assert_abs_diff_eq!(psi(0.25), 0.875);
        assert_abs_diff_eq!(psi(0.75), 0.125);
        // continuity and matching slopes at the joints
        assert_abs_diff_eq!(psi(0.5 - 1e-12), psi(0.5), epsilon = 1e-11);
        assert_abs_diff_eq!(psi_derivative(0.5 - 1e-12), psi_derivative(0.5), epsilon = 1e-10);
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(1.0), 0.0);
    }

    #[test]
    fn smoothed_indicator_examples() {
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let h = SmoothedIndicator::new(ball, 0.4).unwrap();
        assert_eq!(h.eval(&[0.2, 0.1]).unwrap(), 1.0);
        assert_abs_diff_eq!(h.eval(&[1.1, 0.0]).unwrap(), 0.875, epsilon = 1e-12);
        assert_eq!(h.eval(&[1.5, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let h = SmoothedIndicator::new(ball, 0.4).unwrap();
        assert_eq!(h.grad_fd(&[0.1, 0.2]).unwrap().as_slice(), &[0.0, 0.0]);

        let hs = ConvexSet::half_space(vec![1.0, 0.0], 0.0).unwrap();
        let h = SmoothedIndicator::new(hs, 1.0).unwrap();
        let g = h.grad_fd(&[0.25, 0.0]).unwrap();
        // chain rule: d/dx psi(x / eps) = psi'(0.25) / eps
        assert_abs_diff_eq!(g[0], psi_derivative(0.25), epsilon = 1e-6);
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-9);
    }
}
