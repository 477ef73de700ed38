//! Principal-branch conventions for complex roots and powers.
//!
//! Every multi-valued operation in the crate goes through this module, so the
//! branch is fixed in one place: `arg z` lies in `(-pi, pi]`, and
//! `z^(1/n) = r^(1/n) e^(i arg(z)/n)`.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Argument of `z` in `(-pi, pi]`.
///
/// A negative zero imaginary part is treated as `+0`, so the negative real
/// axis maps to `+pi`, never `-pi`.
pub fn principal_arg(z: Complex64) -> f64 {
    // -0.0 + 0.0 == +0.0
    let im = z.im + 0.0;
    let arg = im.atan2(z.re);
    if arg <= -PI {
        PI
    } else {
        arg
    }
}

/// `pi - |arg z|`, computed without cancellation near the negative real axis.
///
/// For `z = -1e16 + i` this returns `1e-16` instead of rounding to zero.
pub fn distance_to_branch_cut(z: Complex64) -> f64 {
    if z.re < 0.0 {
        z.im.abs().atan2(-z.re)
    } else {
        PI - principal_arg(z).abs()
    }
}

/// Principal square root using the cancellation-free half-angle formulas.
fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let im = z.im + 0.0;
    let modulus = z.re.hypot(im);
    let t = ((z.re.abs() + modulus) * 0.5).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, im / (2.0 * t))
    } else {
        Complex64::new(im.abs() / (2.0 * t), t.copysign(im))
    }
}

/// Principal `n`th root. `principal_root(0, n) == 0`.
pub fn principal_root(z: Complex64, n: u32) -> Complex64 {
    assert!(n > 0, "root order must be positive");
    match n {
        1 => z,
        2 => principal_sqrt(z),
        // sqrt of the principal sqrt halves an argument in (-pi/2, pi/2],
        // which is again the principal branch.
        4 => principal_sqrt(principal_sqrt(z)),
        _ => {
            if z.re == 0.0 && z.im == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let r = z.norm().powf(1.0 / n as f64);
            Complex64::from_polar(r, principal_arg(z) / n as f64)
        }
    }
}

/// Principal logarithm `ln|z| + i arg z`. Returns `None` for `z == 0`.
pub fn principal_log(z: Complex64) -> Option<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        return None;
    }
    Some(Complex64::new(z.norm().ln(), principal_arg(z)))
}

/// Principal power `z^p = exp(p Log z)`.
///
/// Integer real exponents use repeated multiplication and exponents of the
/// form `±1/n` dispatch to [`principal_root`], so the two spellings of a root
/// agree bit for bit. Returns `None` for `0^p` with `Re p <= 0, p != 0`.
pub fn principal_pow(z: Complex64, p: Complex64) -> Option<Complex64> {
    if p.im == 0.0 {
        let e = p.re;
        if e == 0.0 {
            return Some(Complex64::new(1.0, 0.0));
        }
        if e.fract() == 0.0 && e.abs() <= 1024.0 {
            let k = e.abs() as u32;
            if z.re == 0.0 && z.im == 0.0 {
                return if e > 0.0 { Some(z) } else { None };
            }
            let v = int_pow(z, k);
            return Some(if e > 0.0 { v } else { v.inv() });
        }
        let recip = 1.0 / e.abs();
        if recip.fract() == 0.0 && recip <= 1024.0 {
            let n = recip as u32;
            let root = principal_root(z, n);
            if e > 0.0 {
                return Some(root);
            }
            if root.re == 0.0 && root.im == 0.0 {
                return None;
            }
            return Some(root.inv());
        }
    }
    if z.re == 0.0 && z.im == 0.0 {
        return if p.re > 0.0 { Some(z) } else { None };
    }
    let log = principal_log(z)?;
    Some((p * log).exp())
}

fn int_pow(mut base: Complex64, mut k: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut first = true;
    while k > 0 {
        if k & 1 == 1 {
            if first {
                acc = base;
                first = false;
            } else {
                acc *= base;
            }
        }
        k >>= 1;
        if k > 0 {
            base *= base;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_root_of_four() {
        assert_eq!(principal_root(c(4.0, 0.0), 2), c(2.0, 0.0));
    }

    #[test]
    fn square_root_of_minus_one_is_i() {
        assert_eq!(principal_root(c(-1.0, 0.0), 2), c(0.0, 1.0));
        // the -0.0 imaginary part sits on the same side of the cut
        assert_eq!(principal_root(c(-1.0, -0.0), 2), c(0.0, 1.0));
    }

    #[test]
    fn cube_root_of_minus_8i() {
        let r = principal_root(c(0.0, -8.0), 3);
        assert!((r - c(3f64.sqrt(), -1.0)).norm() < 1e-14);
        let cube = r * r * r;
        assert!((cube - c(0.0, -8.0)).norm() < 1e-12 * 8.0);
    }

    #[test]
    fn sqrt_near_negative_axis_keeps_real_part() {
        let r = principal_root(c(-1e16, 1.0), 2);
        assert!((r.re - 5e-9).abs() < 1e-22);
        assert!((r.im - 1e8).abs() < 1e-6);
        assert!((distance_to_branch_cut(c(-1e16, 1.0)) - 1e-16).abs() < 1e-30);
    }

    #[test]
    fn zero_root_is_zero() {
        assert_eq!(principal_root(c(0.0, 0.0), 5), c(0.0, 0.0));
    }

    #[test]
    fn integer_powers_are_exact() {
        let i = c(0.0, 1.0);
        assert_eq!(principal_pow(i, c(3.0, 0.0)).unwrap(), c(0.0, -1.0));
        assert_eq!(principal_pow(c(2.0, 0.0), c(-2.0, 0.0)).unwrap(), c(0.25, 0.0));
        assert!(principal_pow(c(0.0, 0.0), c(-1.0, 0.0)).is_none());
    }

    #[test]
    fn half_power_matches_root() {
        let z = c(-3.0, 0.25);
        assert_eq!(principal_pow(z, c(0.5, 0.0)).unwrap(), principal_root(z, 2));
        assert_eq!(
            principal_pow(z, c(-0.25, 0.0)).unwrap(),
            principal_root(z, 4).inv()
        );
    }

    #[test]
    fn five_halves_power_uses_log_branch() {
        let z = c(0.0, 1.0);
        let v = principal_pow(z, c(2.5, 0.0)).unwrap();
        let want = Complex64::from_polar(1.0, 2.5 * PI / 2.0);
        assert!((v - want).norm() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn root_power_recovers_input(re in -1e3f64..1e3, im in -1e3f64..1e3, n in 1u32..7) {
                let z = c(re, im);
                prop_assume!(z.norm() > 1e-6);
                let r = principal_root(z, n);
                let back = (0..n).fold(c(1.0, 0.0), |acc, _| acc * r);
                prop_assert!((back - z).norm() <= 1e-12 * z.norm());
                let a = principal_arg(r);
                let bound = PI / n as f64;
                prop_assert!(a > -bound - 1e-15 && a <= bound + 1e-15);
            }

            #[test]
            fn pow_half_equals_root(re in -1e3f64..1e3, im in -1e3f64..1e3) {
                let z = c(re, im);
                prop_assert_eq!(principal_pow(z, c(0.5, 0.0)).unwrap(), principal_root(z, 2));
            }
        }
    }
}
