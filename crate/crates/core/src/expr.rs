//! Rational arithmetic expressions over named variables.
//!
//! Used for parameter positions such as `plus(p*q; x, y)` and for symbolic
//! distance bounds such as `p*e1 + (1-p)*e2`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::unit::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
}

impl Expr {
    pub fn num(r: Rational) -> Self {
        Expr::Num(r)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// The variable name if this expression is a bare variable.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Rational>) -> Result<Rational, ExprError> {
        Ok(match self {
            Expr::Num(r) => r.clone(),
            Expr::Var(v) => env(v).ok_or_else(|| ExprError::Unbound(v.clone()))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(env)?, r.eval(env)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.is_zero() {
                            return Err(ExprError::DivisionByZero);
                        }
                        l / r
                    }
                }
            }
        })
    }

    /// Evaluates an expression that mentions no variables.
    pub fn eval_closed(&self) -> Result<Rational, ExprError> {
        self.eval(&|_| None)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, outer: u8, right: bool) -> fmt::Result {
        match self {
            Expr::Num(r) => {
                // a bare p/q literal reads as a single number
                let s = format_rational(r);
                if s.contains('/') && outer >= 2 {
                    write!(f, "({s})")
                } else {
                    f.write_str(&s)
                }
            }
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3, false)
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                let paren = p < outer || (p == outer && right);
                if paren {
                    f.write_str("(")?;
                }
                l.fmt_prec(f, p, false)?;
                write!(f, "{}", op.symbol())?;
                r.fmt_prec(f, p, true)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;
    use crate::unit::ratio;

    fn env(name: &str) -> Option<Rational> {
        match name {
            "p" => Some(ratio(1, 2)),
            "q" => Some(ratio(1, 2)),
            "e1" => Some(ratio(1, 3)),
            "e2" => Some(ratio(1, 6)),
            _ => None,
        }
    }

    #[test]
    fn skew_associativity_parameters() {
        let pq = parse_expr("p*q").unwrap();
        let r = parse_expr("p*(1-q)/(1-p*q)").unwrap();
        assert_eq!(pq.eval(&env).unwrap(), ratio(1, 4));
        assert_eq!(r.eval(&env).unwrap(), ratio(1, 3));
    }

    #[test]
    fn kantorovich_bound() {
        let e = parse_expr("p*e1 + (1-p)*e2").unwrap();
        assert_eq!(e.eval(&env).unwrap(), ratio(1, 4));
        assert_eq!(e.vars().into_iter().collect::<Vec<_>>(), ["e1", "e2", "p"]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_expr("x + 1").unwrap().eval(&env),
            Err(ExprError::Unbound("x".into()))
        );
        assert_eq!(
            parse_expr("1/(1-p*2)").unwrap().eval(&env),
            Err(ExprError::DivisionByZero)
        );
    }

    #[test]
    fn display_round_trips() {
        for text in ["p*(1-q)/(1-p*q)", "p*e1+(1-p)*e2", "1/2", "-p", "a-(b-c)"] {
            let e = parse_expr(text).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} printed as {e}");
        }
    }
}
