//! The ray problem `-e^{-2i phi} v'' + q(x) v = lambda v` on `[a, inf)`.

use crate::expr::{parse, EvalError, ExprNode, ParseError};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("endpoint a must be finite and >= 0, got {0}")]
    Endpoint(f64),
    #[error("ray angle phi must lie strictly inside (-pi/2, pi/2), got {0}")]
    Angle(f64),
    #[error("lambda must be finite, got {0}")]
    Lambda(Complex64),
    #[error("bad potential: {0}")]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayProblem {
    a: f64,
    phi: f64,
    lambda: Complex64,
    q: ExprNode,
    q_text: String,
}

impl RayProblem {
    pub fn new(a: f64, phi: f64, lambda: Complex64, q: ExprNode) -> Result<Self, ProblemError> {
        let q_text = q.to_string();
        Self::build(a, phi, lambda, q, q_text)
    }

    /// Parse `q` from text; the text is kept verbatim for reports.
    pub fn parse(a: f64, phi: f64, lambda: Complex64, q: &str) -> Result<Self, ProblemError> {
        let node = parse(q)?;
        Self::build(a, phi, lambda, node, q.to_string())
    }

    fn build(a: f64, phi: f64, lambda: Complex64, q: ExprNode, q_text: String) -> Result<Self, ProblemError> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(ProblemError::Endpoint(a));
        }
        if !(phi.is_finite() && phi.abs() < FRAC_PI_2) {
            return Err(ProblemError::Angle(phi));
        }
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(ProblemError::Lambda(lambda));
        }
        Ok(RayProblem { a, phi, lambda, q, q_text })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn q(&self) -> &ExprNode {
        &self.q
    }

    pub fn q_text(&self) -> &str {
        &self.q_text
    }

    /// Leading coefficient `p = e^{-2i phi}`.
    pub fn p(&self) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * self.phi)
    }

    /// `e^{2i phi}`, the factor that turns `q - lambda` into `s`.
    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * self.phi)
    }

    pub fn q_at(&self, x: f64) -> Result<Complex64, EvalError> {
        self.q.eval_real(x)
    }

    pub fn with_lambda(&self, lambda: Complex64) -> Result<Self, ProblemError> {
        Self::build(self.a, self.phi, lambda, self.q.clone(), self.q_text.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        let l = Complex64::new(0.0, 0.0);
        assert!(matches!(RayProblem::parse(-1.0, 0.0, l, "x"), Err(ProblemError::Endpoint(_))));
        assert!(matches!(RayProblem::parse(0.0, FRAC_PI_2, l, "x"), Err(ProblemError::Angle(_))));
        assert!(matches!(RayProblem::parse(0.0, 0.0, l, "x+"), Err(ProblemError::Parse(_))));
        let nan = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(RayProblem::parse(0.0, 0.0, nan, "x"), Err(ProblemError::Lambda(_))));
    }

    #[test]
    fn p_and_rotation_are_inverse() {
        let pb = RayProblem::parse(1.0, 0.3, Complex64::new(0.0, 0.0), "x").unwrap();
        assert!((pb.p() * pb.rotation() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(pb.q_text(), "x");
    }
}
