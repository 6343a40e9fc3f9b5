//! Recursive-descent parser for the function DSL.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          right-associative
//! primary := number | "x" | "(" expr ")" | func "(" args ")"
//!          | "piece" "(" "x" ("<" | "<=") literal "?" expr ":" expr ")"
//! literal := number ("/" number)?
//! ```
//!
//! There is no implicit multiplication: `2x` is a syntax error at `x`.

use std::fmt;

use thiserror::Error;

use super::expr::{BinOp, Cond, Expr, Func};
use crate::model::rational;

/// Maximum number of `piece(...)` nodes in one expression.
pub const MAX_PIECES: usize = 8;

/// 1-based line and column (in characters), plus the byte offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {position}: expected {}, found {found}", expected.join(" or "))]
    SyntaxError {
        position: Position,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at {position}")]
    UnknownIdentifier { name: String, position: Position },
    #[error("expression has more than {MAX_PIECES} piece(...) branches")]
    TooManyPieces,
}

impl ParseError {
    pub fn position(&self) -> Option<Position> {
        match self {
            ParseError::SyntaxError { position, .. } | ParseError::UnknownIdentifier { position, .. } => {
                Some(*position)
            }
            ParseError::TooManyPieces => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 12] = ["<=", "+", "-", "*", "/", "^", "(", ")", ",", "?", ":", "<"];

fn tokenize(src: &str) -> Result<Vec<(Tok, Position)>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut iter = src.char_indices().peekable();
    while let Some(&(offset, ch)) = iter.peek() {
        let position = Position { line, column, offset };
        if ch == '\n' {
            iter.next();
            line += 1;
            column = 1;
            continue;
        }
        if ch.is_whitespace() {
            iter.next();
            column += 1;
            continue;
        }
        let rest = &src[offset..];
        let (tok, len) = if ch.is_ascii_digit() {
            let int = rest.bytes().take_while(u8::is_ascii_digit).count();
            let frac = if rest[int..].starts_with('.') {
                let digits = rest[int + 1..].bytes().take_while(u8::is_ascii_digit).count();
                if digits == 0 {
                    return Err(ParseError::SyntaxError {
                        position: Position { line, column: column + int + 1, offset: offset + int + 1 },
                        expected: vec!["digit".into()],
                        found: describe_char(rest[int + 1..].chars().next()),
                    });
                }
                digits + 1
            } else {
                0
            };
            (Tok::Num(rest[..int + frac].to_string()), int + frac)
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            (Tok::Ident(rest[..len].to_string()), len)
        } else if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            (Tok::Sym(sym), sym.len())
        } else {
            return Err(ParseError::SyntaxError {
                position,
                expected: vec!["token".into()],
                found: describe_char(Some(ch)),
            });
        };
        out.push((tok, position));
        for _ in 0..rest[..len].chars().count() {
            iter.next();
        }
        column += rest[..len].chars().count();
    }
    let end = Position { line, column, offset: src.len() };
    out.push((Tok::End, end));
    Ok(out)
}

fn describe_char(c: Option<char>) -> String {
    match c {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}

struct Parser {
    toks: Vec<(Tok, Position)>,
    at: usize,
}

const OPERATORS: [&str; 5] = ["`+`", "`-`", "`*`", "`/`", "`^`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::SyntaxError {
            position: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    /// After a complete operand only an operator or one of `closers` may follow.
    fn after_operand(&self, closers: &[&str]) -> ParseError {
        let mut expected: Vec<&str> = OPERATORS.to_vec();
        expected.extend_from_slice(closers);
        self.error(&expected)
    }

    fn expect(&mut self, sym: &'static str, closers: &[&str]) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.after_operand(closers))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat("^") {
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn number(&mut self, text: &str) -> Expr {
        Expr::Num(rational::parse(text).expect("lexer only emits decimal literals"))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let position = self.pos();
        let tok = self.peek().clone();
        match tok {
            Tok::Num(text) => {
                self.bump();
                Ok(self.number(&text))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")", &["`)`"])?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "piece" => self.piece(),
                    _ => {
                        let func =
                            Func::lookup(&name).ok_or(ParseError::UnknownIdentifier { name, position })?;
                        self.call(func)
                    }
                }
            }
            _ => Err(self.error(&["number", "`x`", "function", "`(`", "`-`"])),
        }
    }

    fn call(&mut self, func: Func) -> Result<Expr, ParseError> {
        if !self.eat("(") {
            return Err(self.error(&["`(`"]));
        }
        let mut args = vec![self.expr()?];
        while args.len() < func.arity() {
            self.expect(",", &["`,`"])?;
            args.push(self.expr()?);
        }
        self.expect(")", &["`)`"])?;
        Ok(Expr::Call(func, args))
    }

    fn piece(&mut self) -> Result<Expr, ParseError> {
        if !self.eat("(") {
            return Err(self.error(&["`(`"]));
        }
        if !matches!(self.peek(), Tok::Ident(n) if n == "x") {
            return Err(self.error(&["`x`"]));
        }
        self.bump();
        let inclusive = if self.eat("<=") {
            true
        } else if self.eat("<") {
            false
        } else {
            return Err(self.error(&["`<`", "`<=`"]));
        };
        let bound = self.literal()?;
        if !self.eat("?") {
            return Err(self.error(&["`/`", "`?`"]));
        }
        let then = self.expr()?;
        self.expect(":", &["`:`"])?;
        let otherwise = self.expr()?;
        self.expect(")", &["`)`"])?;
        Ok(Expr::Piece {
            cond: Cond { inclusive, bound },
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn literal(&mut self) -> Result<rational::Rational, ParseError> {
        let Tok::Num(p) = self.peek().clone() else {
            return Err(self.error(&["number"]));
        };
        self.bump();
        let mut q = rational::parse(&p).expect("lexer only emits decimal literals");
        if self.eat("/") {
            let Tok::Num(d) = self.peek().clone() else {
                return Err(self.error(&["number"]));
            };
            let d = rational::parse(&d).expect("lexer only emits decimal literals");
            if num_traits::Zero::is_zero(&d) {
                return Err(self.error(&["nonzero number"]));
            }
            self.bump();
            q /= d;
        }
        Ok(q)
    }
}

/// Parses a whole expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.after_operand(&["end of input"]));
    }
    if e.piece_count() > MAX_PIECES {
        return Err(ParseError::TooManyPieces);
    }
    Ok(e)
}
