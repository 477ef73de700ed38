//! Potential expressions: AST, evaluation, printing and symbolic derivatives.

mod diff;
mod parse;

pub use diff::differentiate;
pub use parse::{parse, ParseError};

use crate::numerics::principal_pow;
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Expression tree in the single variable `x`.
///
/// `Pow` only takes constant exponents; `e^(g(x))` is spelled `exp(g(x))`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(Complex64),
    Var,
    Neg(Box<ExprNode>),
    Add(Box<ExprNode>, Box<ExprNode>),
    Sub(Box<ExprNode>, Box<ExprNode>),
    Mul(Box<ExprNode>, Box<ExprNode>),
    Div(Box<ExprNode>, Box<ExprNode>),
    Pow(Box<ExprNode>, Complex64),
    Func(Func, Box<ExprNode>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: Complex64 },
    #[error("{what} is undefined at x = {x}")]
    Domain { what: &'static str, x: Complex64 },
}

impl ExprNode {
    pub fn constant(re: f64, im: f64) -> ExprNode {
        ExprNode::Const(Complex64::new(re, im))
    }

    pub fn depends_on_x(&self) -> bool {
        use ExprNode::*;
        match self {
            Const(_) => false,
            Var => true,
            Neg(a) | Pow(a, _) | Func(_, a) => a.depends_on_x(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    pub fn node_count(&self) -> usize {
        use ExprNode::*;
        match self {
            Const(_) | Var => 1,
            Neg(a) | Pow(a, _) | Func(_, a) => 1 + a.node_count(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Value at `x` on the principal branch.
    pub fn evaluate(&self, x: Complex64) -> Result<Complex64, EvalError> {
        use ExprNode::*;
        Ok(match self {
            Const(c) => *c,
            Var => x,
            Neg(a) => -a.evaluate(x)?,
            Add(a, b) => a.evaluate(x)? + b.evaluate(x)?,
            Sub(a, b) => a.evaluate(x)? - b.evaluate(x)?,
            Mul(a, b) => a.evaluate(x)? * b.evaluate(x)?,
            Div(a, b) => {
                let num = a.evaluate(x)?;
                let den = b.evaluate(x)?;
                if den.re == 0.0 && den.im == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                num / den
            }
            Pow(a, p) => {
                let base = a.evaluate(x)?;
                principal_pow(base, *p).ok_or(EvalError::Domain { what: "power of zero", x })?
            }
            Func(f, a) => {
                let v = a.evaluate(x)?;
                match f {
                    self::Func::Exp => v.exp(),
                    self::Func::Log => crate::numerics::principal_log(v)
                        .ok_or(EvalError::Domain { what: "log", x })?,
                    self::Func::Sqrt => crate::numerics::principal_root(v, 2),
                    self::Func::Sin => v.sin(),
                    self::Func::Cos => v.cos(),
                }
            }
        })
    }

    /// Real-argument convenience wrapper.
    pub fn eval_real(&self, x: f64) -> Result<Complex64, EvalError> {
        self.evaluate(Complex64::new(x, 0.0))
    }
}

fn write_complex(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    // `{:?}` on f64 is the shortest string that parses back to the same bits
    match (c.re, c.im) {
        (re, im) if im == 0.0 => write!(f, "({re:?})"),
        (re, im) if re == 0.0 => write!(f, "({im:?}i)"),
        (re, im) if im < 0.0 => write!(f, "({re:?} - {:?}i)", -im),
        (re, im) => write!(f, "({re:?} + {im:?}i)"),
    }
}

impl fmt::Display for ExprNode {
    /// Fully parenthesized; parses back to an identical tree up to constant grouping.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ExprNode::*;
        match self {
            Const(c) => write_complex(f, *c),
            Var => write!(f, "x"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, p) => {
                write!(f, "({a}^")?;
                write_complex(f, *p)?;
                write!(f, ")")
            }
            Func(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::principal_root;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pt_cubic_at_two() {
        let e = parse("-(i*x)^3").unwrap();
        assert_eq!(e.eval_real(2.0).unwrap(), c(0.0, 8.0));
    }

    #[test]
    fn shifted_square_at_one() {
        assert_eq!(parse("x^2 + i").unwrap().eval_real(1.0).unwrap(), c(1.0, 1.0));
    }

    #[test]
    fn square_root_matches_polar_form() {
        let e = parse("(x^4+1)^(1/2)").unwrap();
        let z: f64 = 1.3f64.powi(4) + 1.0;
        let want = z.sqrt();
        assert!((e.eval_real(1.3).unwrap() - c(want, 0.0)).norm() < 1e-12 * want);
        let e = parse("(i*x^4-7)^(1/2)").unwrap();
        let w = c(-7.0, 1.3f64.powi(4));
        let polar = Complex64::from_polar(w.norm().sqrt(), w.arg() / 2.0);
        assert!((e.eval_real(1.3).unwrap() - polar).norm() < 1e-12 * polar.norm());
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = parse("1/(x-2)").unwrap();
        assert!(matches!(e.eval_real(2.0), Err(EvalError::DivisionByZero { .. })));
        assert!(matches!(parse("log(x)").unwrap().eval_real(0.0), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn display_round_trips_exactly() {
        for t in ["-(i*x)^3", "x^2 + i", "exp(-x)*sin(2.5e-3*x) / (1 - 3i*x)", "sqrt(x)^(-0.25)"] {
            let e = parse(t).unwrap();
            let back = parse(&e.to_string()).unwrap();
            for k in 1..20 {
                let x = c(0.37 * k as f64, 0.1);
                assert_eq!(e.evaluate(x).unwrap(), back.evaluate(x).unwrap(), "{t}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn half_power_is_principal_sqrt(re in -1e4f64..1e4, im in -1e4f64..1e4) {
                let e = ExprNode::Pow(Box::new(ExprNode::Var), c(0.5, 0.0));
                prop_assert_eq!(e.evaluate(c(re, im)).unwrap(), principal_root(c(re, im), 2));
            }
        }
    }
}
