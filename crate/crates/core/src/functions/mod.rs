//! Functions `[0, inf) -> [0, inf)` written in a small expression language,
//! and their sampled classification.

mod classify;
mod expr;
mod parse;

use serde::Serialize;

pub use classify::{
    classify_fn, classify_fn_with, detect_plateau, reverify_sample, ClassifyError, ClassifyOptions,
    Divergence, FnCheck, FnProfile, Plateau, SampleGrid, GEOMETRIC_DEPTH, REL_TOL,
};
pub use expr::{BinOp, Cond, EvalError, Expr, Func};
pub use parse::{ParseError, Position, MAX_PIECES};

use crate::model::rational::{self, Rational};

/// A parsed function together with its source text.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealFn {
    source: String,
    ast: Expr,
    #[serde(skip)]
    exact: bool,
}

pub fn parse_fn(text: &str) -> Result<RealFn, ParseError> {
    let ast = parse::parse_expr(text)?;
    Ok(RealFn {
        source: text.to_string(),
        exact: ast.is_exact(),
        ast,
    })
}

impl RealFn {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Whether every value can be computed in exact rational arithmetic.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Value at `x >= 0`; the result must be finite and nonnegative.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        if !(x >= 0.0) {
            return Err(EvalError::NegativeArgument { x });
        }
        let v = self.ast.eval_f64(x)?;
        if v < 0.0 {
            return Err(EvalError::OutOfCodomain { x, value: v });
        }
        // normalizes -0.0
        Ok(v + 0.0)
    }

    /// Exact value at a rational argument. Falls back to the float path
    /// (converted exactly) when the expression has no exact form.
    pub fn eval_rational(&self, x: &Rational) -> Result<Rational, EvalError> {
        let xf = rational::to_f64(x);
        if num_traits::Signed::is_negative(x) {
            return Err(EvalError::NegativeArgument { x: xf });
        }
        if self.exact {
            if let Some(v) = self.ast.eval_exact(x) {
                let v = v?;
                if num_traits::Signed::is_negative(&v) {
                    return Err(EvalError::OutOfCodomain { x: xf, value: rational::to_f64(&v) });
                }
                return Ok(v);
            }
        }
        let v = self.eval(xf)?;
        Ok(rational::from_f64(v).expect("eval returns finite values"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::{int, ratio};

    fn ast(src: &str) -> String {
        parse_fn(src).unwrap().ast().to_string()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(ast("x/(1+x)"), "div(x, add(1, x))");
        assert_eq!(ast("min(x,1)"), "min(x, 1)");
        match parse_fn("2x") {
            Err(ParseError::SyntaxError { position, found, expected }) => {
                assert_eq!((position.line, position.column), (1, 2));
                assert_eq!(found, "`x`");
                assert!(expected.contains(&"end of input".to_string()));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ast("1+2*x"), "add(1, mul(2, x))");
        assert_eq!(ast("x-1-2"), "sub(sub(x, 1), 2)");
        assert_eq!(ast("x/2/3"), "div(div(x, 2), 3)");
        assert_eq!(ast("2^3^x"), "pow(2, pow(3, x))");
        assert_eq!(ast("-x^2"), "neg(pow(x, 2))");
        assert_eq!(ast("x^-1"), "pow(x, neg(1))");
        assert_eq!(ast("-x*2"), "mul(neg(x), 2)");
        assert_eq!(ast("(1+x)*2"), "mul(add(1, x), 2)");
        assert_eq!(ast("piece(x<=1 ? 1 : 4)"), "piece(x <= 1, 1, 4)");
        assert_eq!(ast("piece(x<1/2 ? x : 0.5)"), "piece(x < 1/2, x, 1/2)");
    }

    #[test]
    fn unknown_identifiers() {
        match parse_fn("sin(x)") {
            Err(ParseError::UnknownIdentifier { name, position }) => {
                assert_eq!(name, "sin");
                assert_eq!(position.column, 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_fn("x+y"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn piece_cap() {
        let mut src = "x".to_string();
        for _ in 0..MAX_PIECES {
            src = format!("piece(x<1 ? {src} : 1)");
        }
        assert!(parse_fn(&src).is_ok());
        let src = format!("piece(x<1 ? {src} : 1)");
        assert_eq!(parse_fn(&src), Err(ParseError::TooManyPieces));
    }

    #[test]
    fn eval_examples() {
        assert_eq!(parse_fn("x/(1+x)").unwrap().eval(1.0), Ok(0.5));
        assert_eq!(parse_fn("x^2").unwrap().eval(3.0), Ok(9.0));
        assert_eq!(
            parse_fn("x-1").unwrap().eval(0.0),
            Err(EvalError::OutOfCodomain { x: 0.0, value: -1.0 })
        );
        assert!(matches!(parse_fn("sqrt(x-1)").unwrap().eval(0.0), Err(EvalError::DomainError { .. })));
        assert!(matches!(parse_fn("1/x").unwrap().eval(0.0), Err(EvalError::NonFinite { .. })));
        assert!(matches!(parse_fn("(x-1)^0.5").unwrap().eval(0.0), Err(EvalError::DomainError { .. })));
        assert!(matches!(parse_fn("x").unwrap().eval(-1.0), Err(EvalError::NegativeArgument { .. })));
        assert_eq!(parse_fn("(x-2)^2").unwrap().eval(0.0), Ok(4.0));
        assert_eq!(parse_fn("x-x").unwrap().eval(0.0).unwrap().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn exact_path() {
        let f = parse_fn("x/(1+x)").unwrap();
        assert!(f.is_exact());
        assert_eq!(f.eval_rational(&int(3)).unwrap(), ratio(3, 4));
        let g = parse_fn("min(x,1)").unwrap();
        assert_eq!(g.eval_rational(&ratio(1, 3)).unwrap(), ratio(1, 3));
        let h = parse_fn("piece(x<=1/2 ? 0.1 : x^2)").unwrap();
        assert_eq!(h.eval_rational(&ratio(1, 2)).unwrap(), ratio(1, 10));
        assert_eq!(h.eval_rational(&int(3)).unwrap(), int(9));
        let s = parse_fn("sqrt(x)").unwrap();
        assert!(!s.is_exact());
        assert_eq!(s.eval_rational(&int(4)).unwrap(), int(2));
        assert!(matches!(
            parse_fn("x-1").unwrap().eval_rational(&int(0)),
            Err(EvalError::OutOfCodomain { .. })
        ));
    }
}
