//! Small infix expression language shared by the operator/transformation file
//! formats, the `eval` command and the reference formula tables.
//!
//! Grammar (whitespace-insensitive, `#` starts a comment):
//!
//! ```text
//! file      := stmt ((';' | newline) stmt)*
//! stmt      := ident '=' expr
//! expr      := term (('+' | '-') term)*
//! term      := unary (('*' | '/') unary)*
//! unary     := ('-' | '+') unary | power
//! power     := primary ('^' exponent)?
//! exponent  := '-'? int ('/' int)? | primary
//! primary   := int | ident | '(' expr ')'
//! ```
//!
//! A literal exponent absorbs a following `/int`, so `u^1/3` is `u^(1/3)`;
//! this matches how [`Expr`] renders fractional exponents.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::algebra::{AlgebraError, Atom, Coord, Exponent, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    fn new(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { pos, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Int(BigInt, Pos),
    Ident(String, Pos),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>, Pos),
    Pow(Box<Ast>, Box<Ast>, Pos),
}

impl Ast {
    pub fn pos(&self) -> Pos {
        match self {
            Ast::Int(_, p) | Ast::Ident(_, p) => *p,
            Ast::Neg(a) | Ast::Add(a, _) | Ast::Sub(a, _) | Ast::Mul(a, _) => a.pos(),
            Ast::Div(_, _, p) | Ast::Pow(_, _, p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    Newline,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            out.push((Tok::Newline, pos));
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if "+-*/^()=;".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
            continue;
        }
        return Err(ParseError::new(pos, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.i += 1;
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            if self.eat('*') {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?), pos);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.primary()?;
        let pos = self.pos();
        if !self.eat('^') {
            return Ok(base);
        }
        let exp = self.exponent()?;
        Ok(Ast::Pow(Box::new(base), Box::new(exp), pos))
    }

    fn exponent(&mut self) -> Result<Ast, ParseError> {
        let pos = self.pos();
        let neg = self.eat('-');
        if let Some(Tok::Int(n)) = self.peek().cloned() {
            self.i += 1;
            let mut lit = Ast::Int(n, pos);
            if self.peek() == Some(&Tok::Sym('/')) {
                if let Some((Tok::Int(d), dpos)) = self.toks.get(self.i + 1).cloned() {
                    self.i += 2;
                    lit = Ast::Div(Box::new(lit), Box::new(Ast::Int(d, dpos)), dpos);
                }
            }
            return Ok(if neg { Ast::Neg(Box::new(lit)) } else { lit });
        }
        let p = self.primary()?;
        Ok(if neg { Ast::Neg(Box::new(p)) } else { p })
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.i += 1;
                Ok(Ast::Int(n, pos))
            }
            Some(Tok::Ident(s)) => {
                self.i += 1;
                Ok(Ast::Ident(s, pos))
            }
            Some(Tok::Sym('(')) => {
                self.i += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(ParseError::new(self.pos(), "expected `)`"));
                }
                Ok(e)
            }
            Some(t) => Err(ParseError::new(pos, format!("unexpected {}", describe(&t)))),
            None => Err(ParseError::new(pos, "unexpected end of input")),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("number `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Newline => "end of line".into(),
    }
}

fn end_pos(src: &str) -> Pos {
    let line = src.matches('\n').count() + 1;
    let col = src.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    Pos { line, col }
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Ast, ParseError> {
    let toks: Vec<_> = lex(src)?.into_iter().filter(|(t, _)| *t != Tok::Newline).collect();
    let mut p = Parser { toks, i: 0, end: end_pos(src) };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::new(p.pos(), format!("unexpected {}", describe(t))));
    }
    Ok(e)
}

/// Parses `name = expr` statements separated by `;` or newlines.
pub fn parse_assignments(src: &str) -> Result<Vec<(String, Pos, Ast)>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, end: end_pos(src) };
    let mut out = Vec::new();
    loop {
        while p.eat(';') || p.peek() == Some(&Tok::Newline) {
            p.skip_newlines();
        }
        let pos = p.pos();
        let name = match p.peek().cloned() {
            None => return Ok(out),
            Some(Tok::Ident(s)) => {
                p.i += 1;
                s
            }
            Some(t) => return Err(ParseError::new(pos, format!("expected a name, found {}", describe(&t)))),
        };
        if !p.eat('=') {
            return Err(ParseError::new(p.pos(), format!("expected `=` after `{name}`")));
        }
        // An expression may continue across newlines only inside parentheses;
        // keep it simple and stop at the first newline or `;`.
        let start = p.i;
        let mut depth = 0i32;
        let mut stop = p.toks.len();
        for (k, (t, _)) in p.toks.iter().enumerate().skip(start) {
            match t {
                Tok::Sym('(') => depth += 1,
                Tok::Sym(')') => depth -= 1,
                Tok::Sym(';') if depth <= 0 => {
                    stop = k;
                    break;
                }
                Tok::Newline if depth <= 0 => {
                    stop = k;
                    break;
                }
                _ => {}
            }
        }
        let slice: Vec<_> = p.toks[start..stop].iter().filter(|(t, _)| *t != Tok::Newline).cloned().collect();
        let end = p.toks.get(stop).map(|(_, q)| *q).unwrap_or(p.end);
        let mut sub = Parser { toks: slice, i: 0, end };
        let e = sub.expr()?;
        if let Some(t) = sub.peek() {
            return Err(ParseError::new(sub.pos(), format!("unexpected {}", describe(t))));
        }
        out.push((name, pos, e));
        p.i = stop;
    }
}

/// Resolves an identifier to an atom of the symbolic vocabulary.
///
/// Accepted: `x u p q r`, `f0`..`f3` with trailing primes or `_k` for
/// derivatives, `a1`..`a6`, `F`, and `F_x`..`F_r`.
pub fn atom_from_name(s: &str) -> Option<Atom> {
    match s {
        "x" => return Some(Atom::X),
        "u" => return Some(Atom::U),
        "p" => return Some(Atom::P),
        "q" => return Some(Atom::Q),
        "r" => return Some(Atom::R),
        "F" => return Some(Atom::Func),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("F_") {
        return Coord::ALL.iter().find(|c| c.name() == rest).map(|c| Atom::FuncPartial(*c));
    }
    if let Some(rest) = s.strip_prefix('a') {
        let j: u8 = rest.parse().ok()?;
        return (1..=6).contains(&j).then_some(Atom::Group(j));
    }
    if let Some(rest) = s.strip_prefix('f') {
        let mut chars = rest.chars();
        let idx = chars.next()?.to_digit(10)? as u8;
        if idx > 3 {
            return None;
        }
        let tail: String = chars.collect();
        let order = if tail.is_empty() {
            0
        } else if tail.chars().all(|c| c == '\'') {
            tail.len() as u8
        } else {
            tail.strip_prefix('_')?.parse().ok()?
        };
        return Some(Atom::coef(idx, order));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("{0}: unknown symbol `{1}`")]
    UnknownSymbol(Pos, String),
    #[error("{0}: exponent must be a rational constant")]
    NonConstantExponent(Pos),
    #[error("{0}: {1}")]
    Algebra(Pos, AlgebraError),
    #[error("{0}: {1}")]
    Parse(Pos, String),
}

impl From<ParseError> for ConvertError {
    fn from(e: ParseError) -> Self {
        ConvertError::Parse(e.pos, e.message)
    }
}

/// Converts an AST to an exact expression. Division must be by a single term.
pub fn to_expr(ast: &Ast, names: &BTreeMap<String, Expr>) -> Result<Expr, ConvertError> {
    Ok(match ast {
        Ast::Int(n, _) => Expr::constant(BigRational::from_integer(n.clone())),
        Ast::Ident(s, pos) => match names.get(s) {
            Some(e) => e.clone(),
            None => Expr::atom(atom_from_name(s).ok_or_else(|| ConvertError::UnknownSymbol(*pos, s.clone()))?),
        },
        Ast::Neg(a) => -to_expr(a, names)?,
        Ast::Add(a, b) => to_expr(a, names)? + to_expr(b, names)?,
        Ast::Sub(a, b) => to_expr(a, names)? - to_expr(b, names)?,
        Ast::Mul(a, b) => to_expr(a, names)? * to_expr(b, names)?,
        Ast::Div(a, b, pos) => to_expr(a, names)?
            .div_by_term(&to_expr(b, names)?)
            .map_err(|e| ConvertError::Algebra(*pos, e))?,
        Ast::Pow(a, e, pos) => {
            let ev = to_expr(e, names)?;
            let c = ev.constant_value().ok_or(ConvertError::NonConstantExponent(*pos))?;
            let ex = exponent_from(&c).ok_or(ConvertError::NonConstantExponent(*pos))?;
            to_expr(a, names)?.pow_rational(ex).map_err(|err| ConvertError::Algebra(*pos, err))?
        }
    })
}

pub(crate) fn exponent_from(c: &BigRational) -> Option<Exponent> {
    use num_traits::ToPrimitive;
    Some(Exponent::new(c.numer().to_i64()?, c.denom().to_i64()?))
}

/// Parses and converts in one step.
pub fn parse_to_expr(src: &str) -> Result<Expr, ConvertError> {
    to_expr(&parse_expr(src)?, &BTreeMap::new())
}

/// Evaluates an AST whose only leaves are integers to a rational constant.
pub fn constant_value(ast: &Ast) -> Option<BigRational> {
    to_expr(ast, &BTreeMap::new()).ok()?.constant_value()
}
