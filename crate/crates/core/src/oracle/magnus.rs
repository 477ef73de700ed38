//! Magnus steps for `Y' = A Y`, `A = [[0, 1], [s, 0]]`.
//!
//! Two schemes: a classic sixth-order Magnus step with an embedded
//! fourth-order estimate, for steps that do not resolve many oscillations or
//! e-foldings; and a modified Magnus step that freezes `A` at the midpoint and
//! integrates the remainder in the frozen eigenbasis, where the first two
//! Magnus terms are computed exactly by Filon-type quadrature. The second one
//! takes steps much longer than a wavelength.

use super::filon::ExpPoly;
use crate::numerics::principal_root;
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl M2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> M2 {
        M2 { a, b, c, d }
    }

    pub fn identity() -> M2 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        M2::new(one, zero, zero, one)
    }

    /// `[[0, 1], [s, 0]]`
    pub fn companion(s: Complex64) -> M2 {
        let zero = Complex64::default();
        M2::new(zero, Complex64::new(1.0, 0.0), s, zero)
    }

    pub fn scale(self, k: f64) -> M2 {
        M2::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    pub fn det(self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(self, y: [Complex64; 2]) -> [Complex64; 2] {
        [self.a * y[0] + self.b * y[1], self.c * y[0] + self.d * y[1]]
    }

    pub fn comm(self, o: M2) -> M2 {
        self * o - o * self
    }

    pub fn is_finite(self) -> bool {
        [self.a, self.b, self.c, self.d]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Frobenius norm after the similarity `diag(1, 1/w) M diag(1, w)`.
    pub fn weighted_norm(self, w: f64) -> f64 {
        (self.a.norm_sqr() + (self.b * w).norm_sqr() + (self.c / w).norm_sqr() + self.d.norm_sqr()).sqrt()
    }
}

impl Add for M2 {
    type Output = M2;
    fn add(self, o: M2) -> M2 {
        M2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for M2 {
    type Output = M2;
    fn sub(self, o: M2) -> M2 {
        M2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Mul for M2 {
    type Output = M2;
    fn mul(self, o: M2) -> M2 {
        M2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// `mu` with `mu^2 = -det` for a traceless matrix; any root works since
/// only even functions of `mu` are used.
pub fn traceless_mu(m: M2) -> Complex64 {
    principal_root(m.a * m.a + m.b * m.c, 2)
}

/// `sinh(mu)/mu`, by series near zero.
pub fn sinhc(mu: Complex64) -> Complex64 {
    if mu.norm() < 1e-3 {
        let m2 = mu * mu;
        Complex64::new(1.0, 0.0) + m2 / 6.0 + m2 * m2 / 120.0
    } else {
        mu.sinh() / mu
    }
}

/// `exp(M) = cosh(mu) I + sinh(mu)/mu M` for traceless `M`.
pub fn expm_traceless(m: M2) -> M2 {
    let mu = traceless_mu(m);
    let ch = mu.cosh();
    let sh = sinhc(mu);
    M2::new(ch + sh * m.a, sh * m.b, sh * m.c, ch + sh * m.d)
}

const SQRT15: f64 = 3.872_983_346_207_417;

/// Gauss-Legendre nodes on `[0, 1]` used by the step.
pub const NODES: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];

/// Sixth- and fourth-order Magnus exponents for one step of length `h`
/// from samples `s(x + c_k h)`.
pub fn magnus_exponents(s: [Complex64; 3], h: f64) -> (M2, M2) {
    let [a1, a2, a3] = s.map(M2::companion);
    let alpha1 = a2.scale(h);
    let alpha2 = (a3 - a1).scale(SQRT15 * h / 3.0);
    let alpha3 = (a3 - a2.scale(2.0) + a1).scale(10.0 * h / 3.0);
    let c1 = alpha1.comm(alpha2);
    let c2 = alpha1.comm(alpha3.scale(2.0) + c1).scale(-1.0 / 60.0);
    let base = alpha1 + alpha3.scale(1.0 / 12.0);
    let omega6 = base + (alpha1.scale(-20.0) - alpha3 + c1).comm(alpha2 + c2).scale(1.0 / 240.0);
    let omega4 = base - c1.scale(1.0 / 12.0);
    (omega6, omega4)
}

/// Propagator of the modified Magnus step from samples at [`NODES`];
/// `s[1]` is the midpoint value that gets frozen.
pub fn modified_propagator(s: [Complex64; 3], h: f64) -> M2 {
    let mu = principal_root(s[1], 2);
    let two_mu = 2.0 * mu;
    let d1 = (s[0] - s[1]) / two_mu;
    let d3 = (s[2] - s[1]) / two_mu;
    let delta = SQRT15 / 10.0;
    let p1 = (d3 - d1) / (2.0 * delta);
    let p2 = (d3 + d1) / (2.0 * delta * delta);
    // coupling (s - s_mid)/(2 mu) as a quadratic in sigma = t/h
    let d = ExpPoly::poly(&[p2 * 0.25 - p1 * 0.5, p1 - p2, p2]);
    let dc = [p2 * 0.25 - p1 * 0.5, p1 - p2, p2];
    let k = two_mu * h;
    let g0 = d.antiderivative();
    let gp = d.mul_exp(k).antiderivative();
    let gm = d.mul_exp(-k).antiderivative();
    let (j0, jp, jm) = (g0.at(1.0), gp.at(1.0), gm.at(1.0));
    let h2 = h * h;
    let l = gm.sub(&g0.mul_exp(-k)).mul_poly(&dc).integral() * h2;
    let r = gp.sub(&g0.mul_exp(k)).mul_poly(&dc).integral() * h2;
    let kk = gm.mul_exp(k).sub(&gp.mul_exp(-k)).mul_poly(&dc).integral() * (0.5 * h2);
    let omega = M2::new(j0 * h + kk, jm * h + l, -jp * h + r, -j0 * h - kk);
    let e = expm_traceless(omega);
    let up = (mu * h).exp();
    let down = (-mu * h).exp();
    let one = Complex64::new(1.0, 0.0);
    let v = M2::new(one, one, mu, -mu);
    let v_inv = M2::new(one * 0.5, one / two_mu, one * 0.5, -one / two_mu);
    let lam = M2::new(up, Complex64::default(), Complex64::default(), down);
    v * lam * e * v_inv
}
