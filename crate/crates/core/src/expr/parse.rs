//! Recursive-descent parser for the potential grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' exponent)?
//! exponent := ('-' | '+') exponent | primary ('^' exponent)?
//! primary  := number | number 'i' | 'i' | 'pi' | 'e' | 'x'
//!           | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! So `-x^2` is `-(x^2)`, `2^3^2` is `2^9`, and `x^-1` is allowed.

use super::{ExprNode, Func};
use num_complex::Complex64;
use std::f64::consts::{E, PI};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Imag(v) => format!("number {v}i"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let ch = b[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = text[start..i].parse().map_err(|_| ParseError {
                offset: start,
                expected: "a number".into(),
                found: format!("`{}`", &text[start..i]),
            })?;
            let imag = i < b.len() && b[i] == b'i' && !b.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
            if imag {
                i += 1;
                out.push((start, Tok::Imag(v)));
            } else {
                out.push((start, Tok::Num(v)));
            }
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        if b"+-*/^()".contains(&ch) {
            out.push((start, Tok::Op(ch as char)));
            i += 1;
            continue;
        }
        let c = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            offset: start,
            expected: "an operand or operator".into(),
            found: format!("`{c}`"),
        });
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            expected: expected.into(),
            found: self.peek().describe(),
        })
    }

    fn expect_op(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("`{c}`"))
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = ExprNode::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = ExprNode::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = ExprNode::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = ExprNode::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(ExprNode::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let p = self.exponent()?;
            Ok(ExprNode::Pow(Box::new(base), p))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<Complex64, ParseError> {
        let at = self.offset();
        let node = match self.peek() {
            Tok::Op('-') => {
                self.bump();
                return Ok(-self.exponent()?);
            }
            Tok::Op('+') => {
                self.bump();
                return self.exponent();
            }
            _ => {
                let base = self.primary()?;
                if *self.peek() == Tok::Op('^') {
                    self.bump();
                    let p = self.exponent()?;
                    ExprNode::Pow(Box::new(base), p)
                } else {
                    base
                }
            }
        };
        let bad = |found: String| ParseError {
            offset: at,
            expected: "a constant exponent".into(),
            found,
        };
        if node.depends_on_x() {
            return Err(bad("an expression in `x`".into()));
        }
        node.evaluate(Complex64::new(0.0, 0.0))
            .map_err(|e| bad(e.to_string()))
    }

    fn primary(&mut self) -> Result<ExprNode, ParseError> {
        const WANT: &str = "a number, `x`, `i`, `pi`, `e`, a function call or `(`";
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ExprNode::constant(v, 0.0))
            }
            Tok::Imag(v) => {
                self.bump();
                Ok(ExprNode::constant(0.0, v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    Ok(ExprNode::Var)
                }
                "i" => {
                    self.bump();
                    Ok(ExprNode::constant(0.0, 1.0))
                }
                "pi" => {
                    self.bump();
                    Ok(ExprNode::constant(PI, 0.0))
                }
                "e" => {
                    self.bump();
                    Ok(ExprNode::constant(E, 0.0))
                }
                other => match Func::from_name(other) {
                    Some(f) => {
                        self.bump();
                        self.expect_op('(')?;
                        let arg = self.expr()?;
                        self.expect_op(')')?;
                        Ok(ExprNode::Func(f, Box::new(arg)))
                    }
                    None => self.fail(WANT),
                },
            },
            _ => self.fail(WANT),
        }
    }
}

/// Parse a potential expression in `x`.
pub fn parse(text: &str) -> Result<ExprNode, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExprNode::*;

    fn k(re: f64, im: f64) -> ExprNode {
        ExprNode::constant(re, im)
    }

    #[test]
    fn square_is_pow_of_var() {
        assert_eq!(parse("x^2").unwrap(), Pow(Box::new(Var), Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn pt_cubic_shape() {
        let want = Neg(Box::new(Pow(
            Box::new(Mul(Box::new(k(0.0, 1.0)), Box::new(Var))),
            Complex64::new(3.0, 0.0),
        )));
        assert_eq!(parse("-(i*x)^3").unwrap(), want);
    }

    #[test]
    fn doubled_caret_fails_at_offset_two() {
        let err = parse("x^^2").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.contains("number"));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-2^2").unwrap();
        assert_eq!(e.eval_real(0.0).unwrap(), Complex64::new(-4.0, 0.0));
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.eval_real(0.0).unwrap(), Complex64::new(512.0, 0.0));
        let e = parse("8/2/2 - 1 - 1").unwrap();
        assert_eq!(e.eval_real(0.0).unwrap(), Complex64::new(0.0, 0.0));
        let e = parse("x^-1").unwrap();
        assert_eq!(e.eval_real(4.0).unwrap(), Complex64::new(0.25, 0.0));
    }

    #[test]
    fn literals() {
        assert_eq!(parse("3i").unwrap(), k(0.0, 3.0));
        assert_eq!(parse("2.5e-3").unwrap(), k(2.5e-3, 0.0));
        assert_eq!(parse(".5").unwrap(), k(0.5, 0.0));
        assert_eq!(parse("pi").unwrap(), k(PI, 0.0));
        let e = parse("2*e").unwrap();
        assert_eq!(e.eval_real(0.0).unwrap().re, 2.0 * E);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse("x + ").unwrap_err().offset, 4);
        assert_eq!(parse("(x").unwrap_err().offset, 2);
        assert_eq!(parse("x $ 2").unwrap_err().offset, 2);
        assert_eq!(parse("tan(x)").unwrap_err().offset, 0);
        assert_eq!(parse("x x").unwrap_err().offset, 2);
        let e = parse("2^x").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.expected.contains("constant"));
        assert_eq!(parse("3ix").unwrap_err().offset, 1);
    }
}
