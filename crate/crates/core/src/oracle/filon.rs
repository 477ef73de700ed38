//! Sums of `e^{k t} p(t)` on `t in [0, 1]`, closed under products and
//! antiderivatives. Used to integrate the interaction-frame Magnus terms
//! exactly when the coefficient is a quadratic in `t`.

use num_complex::Complex64;

pub const DEG: usize = 8;
type Poly = [Complex64; DEG];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<(Complex64, Poly)>,
}

fn zero_poly() -> Poly {
    [Complex64::default(); DEG]
}

fn poly_eval(p: &Poly, t: f64) -> Complex64 {
    p.iter().rev().fold(Complex64::default(), |acc, c| acc * t + c)
}

impl ExpPoly {
    pub fn poly(coeffs: &[Complex64]) -> ExpPoly {
        let mut p = zero_poly();
        p[..coeffs.len()].copy_from_slice(coeffs);
        ExpPoly { terms: vec![(Complex64::default(), p)] }
    }

    fn push(&mut self, k: Complex64, p: Poly) {
        if let Some(slot) = self.terms.iter_mut().find(|(kk, _)| *kk == k) {
            for (a, b) in slot.1.iter_mut().zip(p) {
                *a += b;
            }
        } else {
            self.terms.push((k, p));
        }
    }

    pub fn mul_exp(&self, k: Complex64) -> ExpPoly {
        let mut out = ExpPoly::default();
        for (kk, p) in &self.terms {
            out.push(kk + k, *p);
        }
        out
    }

    /// Product with a polynomial; the result must stay below degree `DEG`.
    pub fn mul_poly(&self, q: &[Complex64]) -> ExpPoly {
        let mut out = ExpPoly::default();
        for (k, p) in &self.terms {
            let mut r = zero_poly();
            for (i, a) in p.iter().enumerate() {
                if *a == Complex64::default() {
                    continue;
                }
                for (j, b) in q.iter().enumerate() {
                    assert!(i + j < DEG, "polynomial degree overflow");
                    r[i + j] += a * b;
                }
            }
            out.push(*k, r);
        }
        out
    }

    pub fn sub(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (k, p) in &other.terms {
            out.push(*k, p.map(|c| -c));
        }
        out
    }

    /// `F(t) = int_0^t f`.
    pub fn antiderivative(&self) -> ExpPoly {
        let mut out = ExpPoly::default();
        let mut constant = Complex64::default();
        for (k, p) in &self.terms {
            let mut q = zero_poly();
            if *k == Complex64::default() {
                for i in (0..DEG - 1).rev() {
                    q[i + 1] = p[i] / (i + 1) as f64;
                }
                assert!(p[DEG - 1] == Complex64::default(), "polynomial degree overflow");
            } else {
                // q' + k q = p, solved from the top coefficient down
                let mut next = Complex64::default();
                for i in (0..DEG).rev() {
                    q[i] = (p[i] - (i + 1) as f64 * next) / k;
                    next = q[i];
                }
                constant -= q[0];
            }
            out.push(*k, q);
        }
        let mut c = zero_poly();
        c[0] = constant;
        out.push(Complex64::default(), c);
        out
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, p)| (k * t).exp() * poly_eval(p, t))
            .sum()
    }

    /// `int_0^1 f`.
    pub fn integral(&self) -> Complex64 {
        self.antiderivative().at(1.0)
    }
}
