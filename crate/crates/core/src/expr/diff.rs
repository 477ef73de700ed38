//! Symbolic d/dx. Only trivial folding (0 and 1 identities) is done, so the
//! output stays small enough for second derivatives.

use super::{ExprNode, Func};
use num_complex::Complex64;

fn is_const(e: &ExprNode, v: f64) -> bool {
    matches!(e, ExprNode::Const(c) if *c == Complex64::new(v, 0.0))
}

fn b(e: ExprNode) -> Box<ExprNode> {
    Box::new(e)
}

fn zero() -> ExprNode {
    ExprNode::constant(0.0, 0.0)
}

fn add(l: ExprNode, r: ExprNode) -> ExprNode {
    if is_const(&l, 0.0) {
        r
    } else if is_const(&r, 0.0) {
        l
    } else {
        ExprNode::Add(b(l), b(r))
    }
}

fn sub(l: ExprNode, r: ExprNode) -> ExprNode {
    if is_const(&r, 0.0) {
        l
    } else if is_const(&l, 0.0) {
        neg(r)
    } else {
        ExprNode::Sub(b(l), b(r))
    }
}

fn neg(e: ExprNode) -> ExprNode {
    match e {
        ExprNode::Const(c) => ExprNode::Const(-c),
        ExprNode::Neg(inner) => *inner,
        other => ExprNode::Neg(b(other)),
    }
}

fn mul(l: ExprNode, r: ExprNode) -> ExprNode {
    if is_const(&l, 0.0) || is_const(&r, 0.0) {
        zero()
    } else if is_const(&l, 1.0) {
        r
    } else if is_const(&r, 1.0) {
        l
    } else if let (ExprNode::Const(a), ExprNode::Const(c)) = (&l, &r) {
        ExprNode::Const(a * c)
    } else {
        ExprNode::Mul(b(l), b(r))
    }
}

fn div(l: ExprNode, r: ExprNode) -> ExprNode {
    if is_const(&l, 0.0) {
        zero()
    } else if is_const(&r, 1.0) {
        l
    } else {
        ExprNode::Div(b(l), b(r))
    }
}

fn pow(base: ExprNode, p: Complex64) -> ExprNode {
    if p == Complex64::new(1.0, 0.0) {
        base
    } else if p == Complex64::new(0.0, 0.0) {
        ExprNode::constant(1.0, 0.0)
    } else {
        ExprNode::Pow(b(base), p)
    }
}

/// Derivative with respect to `x`.
pub fn differentiate(node: &ExprNode) -> ExprNode {
    use ExprNode::*;
    match node {
        Const(_) => zero(),
        Var => ExprNode::constant(1.0, 0.0),
        Neg(a) => neg(differentiate(a)),
        Add(l, r) => add(differentiate(l), differentiate(r)),
        Sub(l, r) => sub(differentiate(l), differentiate(r)),
        Mul(l, r) => add(
            mul(differentiate(l), (**r).clone()),
            mul((**l).clone(), differentiate(r)),
        ),
        Div(l, r) => {
            // f'/g - f g'/g^2
            let first = div(differentiate(l), (**r).clone());
            let dr = differentiate(r);
            if is_const(&dr, 0.0) {
                first
            } else {
                sub(first, div(mul((**l).clone(), dr), pow((**r).clone(), Complex64::new(2.0, 0.0))))
            }
        }
        Pow(a, p) => {
            let da = differentiate(a);
            if is_const(&da, 0.0) || *p == Complex64::new(0.0, 0.0) {
                return zero();
            }
            mul(mul(Const(*p), pow((**a).clone(), p - 1.0)), da)
        }
        Func(f, a) => {
            let da = differentiate(a);
            if is_const(&da, 0.0) {
                return zero();
            }
            let inner = (**a).clone();
            match f {
                self::Func::Exp => mul(node.clone(), da),
                self::Func::Log => div(da, inner),
                self::Func::Sqrt => div(da, mul(ExprNode::constant(2.0, 0.0), node.clone())),
                self::Func::Sin => mul(Func(self::Func::Cos, b(inner)), da),
                self::Func::Cos => neg(mul(Func(self::Func::Sin, b(inner)), da)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn at(e: &ExprNode, x: f64) -> Complex64 {
        e.eval_real(x).unwrap()
    }

    #[test]
    fn square_gives_two_x() {
        let d = differentiate(&parse("x^2").unwrap());
        let two_x = parse("2*x").unwrap();
        for x in [0.5, 1.0, 3.7] {
            assert_eq!(at(&d, x), at(&two_x, x));
        }
    }

    #[test]
    fn pt_cubic_derivative() {
        let d = differentiate(&parse("-(i*x)^3").unwrap());
        let want = parse("-3i*(i*x)^2").unwrap();
        assert_eq!(at(&d, 2.0), Complex64::new(0.0, 12.0));
        assert_eq!(at(&want, 2.0), Complex64::new(0.0, 12.0));
    }

    #[test]
    fn second_derivative_of_quartic() {
        let q = parse("-x^4 + i").unwrap();
        let d2 = differentiate(&differentiate(&q));
        assert_eq!(at(&d2, 2.0), Complex64::new(-48.0, 0.0));
    }

    #[test]
    fn functions_match_closed_forms() {
        let cases: [(&str, fn(f64) -> f64); 5] = [
            ("exp(2*x)", |x| 2.0 * (2.0 * x).exp()),
            ("log(x^2)", |x| 2.0 / x),
            ("sqrt(x)", |x| 0.5 / x.sqrt()),
            ("sin(x^2)", |x| 2.0 * x * (x * x).cos()),
            ("cos(3*x)", |x| -3.0 * (3.0 * x).sin()),
        ];
        for (t, f) in cases {
            let d = differentiate(&parse(t).unwrap());
            let x = 1.7;
            assert!((at(&d, x).re - f(x)).abs() < 1e-12 * f(x).abs().max(1.0), "{t}");
        }
    }

    #[test]
    fn quotient_rule() {
        let d = differentiate(&parse("x/(1+x^2)").unwrap());
        let x: f64 = 0.8;
        let want = (1.0 - x * x) / (1.0 + x * x).powi(2);
        assert!((at(&d, x).re - want).abs() < 1e-14);
    }
}
