use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::rational::{self, Rational};

macro_rules! ok_or_return {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Some(Err(err)),
        }
    };
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("argument {x} is negative")]
    NegativeArgument { x: f64 },
    #[error("f({x}) = {value} leaves [0, inf)")]
    OutOfCodomain { x: f64, value: f64 },
    #[error("{op} is undefined at an intermediate value while evaluating f({x})")]
    DomainError { x: f64, op: &'static str },
    #[error("non-finite intermediate value while evaluating f({x})")]
    NonFinite { x: f64 },
}

impl EvalError {
    pub fn x(&self) -> f64 {
        match *self {
            EvalError::NegativeArgument { x }
            | EvalError::OutOfCodomain { x, .. }
            | EvalError::DomainError { x, .. }
            | EvalError::NonFinite { x } => x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Func {
    Min,
    Max,
    Sqrt,
    Exp,
    Log1p,
    Abs,
    Floor,
    Ceil,
}

impl Func {
    pub fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log1p" => Func::Log1p,
            "abs" => Func::Abs,
            "floor" => Func::Floor,
            "ceil" => Func::Ceil,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log1p => "log1p",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
        }
    }
}

/// `x < bound` or `x <= bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cond {
    pub inclusive: bool,
    #[serde(serialize_with = "as_text")]
    pub bound: Rational,
}

fn as_text<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format(q))
}

impl Cond {
    fn test_f64(&self, x: f64) -> bool {
        let b = rational::to_f64(&self.bound);
        if self.inclusive {
            x <= b
        } else {
            x < b
        }
    }

    fn test_exact(&self, x: &Rational) -> bool {
        if self.inclusive {
            *x <= self.bound
        } else {
            *x < self.bound
        }
    }
}

/// Expression tree over the single variable `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Num(#[serde(serialize_with = "as_text")] Rational),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Piece {
        cond: Cond,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

/// Largest integer exponent taken on the exact path.
const MAX_EXACT_POW: i64 = 64;

impl Expr {
    pub fn eval_f64(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(q) => rational::to_f64(q),
            Expr::Var => x,
            Expr::Neg(e) => -e.eval_f64(x)?,
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval_f64(x)?, r.eval_f64(x)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => {
                        if l < 0.0 && r.fract() != 0.0 {
                            return Err(EvalError::DomainError { x, op: "fractional power of a negative base" });
                        }
                        l.powf(r)
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_f64(x)?;
                match f {
                    Func::Min => a.min(args[1].eval_f64(x)?),
                    Func::Max => a.max(args[1].eval_f64(x)?),
                    Func::Sqrt if a < 0.0 => return Err(EvalError::DomainError { x, op: "sqrt" }),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log1p if a <= -1.0 => return Err(EvalError::DomainError { x, op: "log1p" }),
                    Func::Log1p => a.ln_1p(),
                    Func::Abs => a.abs(),
                    Func::Floor => a.floor(),
                    Func::Ceil => a.ceil(),
                }
            }
            Expr::Piece { cond, then, otherwise } => {
                if cond.test_f64(x) {
                    then.eval_f64(x)?
                } else {
                    otherwise.eval_f64(x)?
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    /// Exact value, or `None` when a node has no exact rational semantics
    /// (roots, exponentials, non-integer powers).
    pub fn eval_exact(&self, x: &Rational) -> Option<Result<Rational, EvalError>> {
        let xf = || rational::to_f64(x);
        Some(Ok(match self {
            Expr::Num(q) => q.clone(),
            Expr::Var => x.clone(),
            Expr::Neg(e) => -ok_or_return!(e.eval_exact(x)?),
            Expr::Bin(op, l, r) => {
                let l = ok_or_return!(l.eval_exact(x)?);
                let r = ok_or_return!(r.eval_exact(x)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div if r.is_zero() => return Some(Err(EvalError::NonFinite { x: xf() })),
                    BinOp::Div => l / r,
                    BinOp::Pow => {
                        if !r.is_integer() {
                            return None;
                        }
                        let e = r.to_integer().to_i64()?;
                        if e.abs() > MAX_EXACT_POW {
                            return None;
                        }
                        if e < 0 && l.is_zero() {
                            return Some(Err(EvalError::NonFinite { x: xf() }));
                        }
                        num_traits::pow::Pow::pow(l, e as i32)
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = ok_or_return!(args[0].eval_exact(x)?);
                match f {
                    Func::Min => a.min(ok_or_return!(args[1].eval_exact(x)?)),
                    Func::Max => a.max(ok_or_return!(args[1].eval_exact(x)?)),
                    Func::Abs => a.abs(),
                    Func::Floor => a.floor(),
                    Func::Ceil => a.ceil(),
                    Func::Sqrt | Func::Exp | Func::Log1p => return None,
                }
            }
            Expr::Piece { cond, then, otherwise } => {
                let branch = if cond.test_exact(x) { then } else { otherwise };
                ok_or_return!(branch.eval_exact(x)?)
            }
        }))
    }

    /// Whether `eval_exact` can succeed for every argument.
    pub fn is_exact(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var => true,
            Expr::Neg(e) => e.is_exact(),
            Expr::Bin(BinOp::Pow, l, r) => {
                l.is_exact()
                    && matches!(&**r, Expr::Num(q) if q.is_integer() && q.abs() <= rational::int(MAX_EXACT_POW))
            }
            Expr::Bin(_, l, r) => l.is_exact() && r.is_exact(),
            Expr::Call(f, args) => {
                !matches!(f, Func::Sqrt | Func::Exp | Func::Log1p) && args.iter().all(Expr::is_exact)
            }
            Expr::Piece { then, otherwise, .. } => then.is_exact() && otherwise.is_exact(),
        }
    }

    pub fn piece_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var => 0,
            Expr::Neg(e) => e.piece_count(),
            Expr::Bin(_, l, r) => l.piece_count() + r.piece_count(),
            Expr::Call(_, args) => args.iter().map(Expr::piece_count).sum(),
            Expr::Piece { then, otherwise, .. } => 1 + then.piece_count() + otherwise.piece_count(),
        }
    }
}

/// Prefix rendering, e.g. `div(x, add(1, x))`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(q) => write!(f, "{}", rational::format(q)),
            Expr::Var => f.write_str("x"),
            Expr::Neg(e) => write!(f, "neg({e})"),
            Expr::Bin(op, l, r) => {
                let name = match op {
                    BinOp::Add => "add",
                    BinOp::Sub => "sub",
                    BinOp::Mul => "mul",
                    BinOp::Div => "div",
                    BinOp::Pow => "pow",
                };
                write!(f, "{name}({l}, {r})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Piece { cond, then, otherwise } => write!(
                f,
                "piece(x {} {}, {then}, {otherwise})",
                if cond.inclusive { "<=" } else { "<" },
                rational::format(&cond.bound)
            ),
        }
    }
}
