//! The closed catalog of invariant-style functions used by shears and
//! overshears: polynomial expressions in a fixed set of named generators.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := '-' unary | power
//! power := atom ('^' integer)?
//! atom  := number | 'i' | generator | alias | '(' expr ')'
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

// Float supplies f64 math in no_std builds; std shadows it under test.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, C64};
use crate::pair::MatrixPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    TrX,
    DetX,
    TrY,
    DetY,
    /// `(tr X)² − 4 det X`, the squared eigenvalue gap of `X` (`n = 2`).
    Delta2,
    /// `(tr Y)² − 4 det Y` (`n = 2`).
    Eps2,
    /// `x₂₁ + 1/x₂₁` of the `𝒞₂` coordinates, equal to `2 tr(XY) − tr X · tr Y` (`n = 2`).
    W,
}

impl Generator {
    pub const ALL: [Generator; 7] = [
        Generator::TrX,
        Generator::DetX,
        Generator::TrY,
        Generator::DetY,
        Generator::Delta2,
        Generator::Eps2,
        Generator::W,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::TrX => "trX",
            Generator::DetX => "detX",
            Generator::TrY => "trY",
            Generator::DetY => "detY",
            Generator::Delta2 => "delta2",
            Generator::Eps2 => "eps2",
            Generator::W => "w",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn eval(self, p: &MatrixPair) -> Result<C64> {
        let needs_n2 = matches!(self, Generator::Delta2 | Generator::Eps2 | Generator::W);
        if needs_n2 && p.n() != 2 {
            return Err(Error::GeneratorNeedsN2(self.name()));
        }
        let (x, y) = (p.x(), p.y());
        Ok(match self {
            Generator::TrX => x.trace(),
            Generator::DetX => linalg::determinant(x),
            Generator::TrY => y.trace(),
            Generator::DetY => linalg::determinant(y),
            Generator::Delta2 => x.trace() * x.trace() - linalg::determinant(x) * 4.0,
            Generator::Eps2 => y.trace() * y.trace() - linalg::determinant(y) * 4.0,
            Generator::W => (x * y).trace() * 2.0 - x.trace() * y.trace(),
        })
    }
}

/// Named entries of the catalog, expanded at parse time.
pub const ALIASES: [(&str, &str); 3] = [
    ("shear_example", "trX + detX"),
    ("discriminant_X", "trX^2 - 4*detX"),
    ("discriminant_Y", "trY^2 - 4*detY"),
];

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Const(C64),
    Gen(Generator),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    fn eval(&self, gen: &mut dyn FnMut(Generator) -> Result<C64>) -> Result<C64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Gen(g) => gen(*g)?,
            Expr::Add(a, b) => a.eval(gen)? + b.eval(gen)?,
            Expr::Sub(a, b) => a.eval(gen)? - b.eval(gen)?,
            Expr::Mul(a, b) => a.eval(gen)? * b.eval(gen)?,
            Expr::Neg(a) => -a.eval(gen)?,
            Expr::Pow(a, k) => a.eval(gen)?.powu(*k),
        })
    }

    fn collect(&self, out: &mut Vec<Generator>) {
        match self {
            Expr::Const(_) => {}
            Expr::Gen(g) => {
                if !out.contains(g) {
                    out.push(*g);
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect(out),
        }
    }
}

/// A parsed function spec. Equality and display use the source text.
#[derive(Debug, Clone)]
pub struct FSpec {
    source: String,
    expr: Expr,
}

impl PartialEq for FSpec {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl core::str::FromStr for FSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FSpec::parse(s)
    }
}

impl FSpec {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::FSpec(format!("unexpected trailing input in `{source}`")));
        }
        Ok(Self {
            source: source.trim().to_string(),
            expr,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn generators(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        self.expr.collect(&mut out);
        out
    }

    pub fn eval(&self, p: &MatrixPair) -> Result<C64> {
        let mut cache: [Option<C64>; 7] = [None; 7];
        self.expr.eval(&mut |g| {
            if let Some(v) = cache[g.index()] {
                return Ok(v);
            }
            let v = g.eval(p)?;
            cache[g.index()] = Some(v);
            Ok(v)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &s[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::FSpec(format!("bad number `{text}`")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token::Ident(s[start..i].to_string()));
            }
            other => return Err(Error::FSpec(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Token::Num(k)) if k >= 0.0 && k.fract() == 0.0 && k <= 64.0 => {
                    Ok(Expr::Pow(Box::new(base), k as u32))
                }
                other => Err(Error::FSpec(format!(
                    "exponent must be a non-negative integer ≤ 64, found {other:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Const(c64(v, 0.0))),
            Some(Token::Ident(name)) => {
                if name == "i" {
                    return Ok(Expr::Const(c64(0.0, 1.0)));
                }
                if let Some(g) = Generator::from_name(&name) {
                    return Ok(Expr::Gen(g));
                }
                if let Some((_, body)) = ALIASES.iter().find(|(alias, _)| *alias == name) {
                    let mut inner = Parser {
                        tokens: tokenize(body)?,
                        pos: 0,
                    };
                    return inner.expr();
                }
                Err(Error::FSpec(format!("unknown generator `{name}`")))
            }
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::FSpec("missing `)`".into())),
                }
            }
            other => Err(Error::FSpec(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::WilsonChartPoint;
    use crate::tol::Tolerances;
    use alloc::vec;

    fn wilson_01() -> MatrixPair {
        WilsonChartPoint::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![c64(0.0, 0.0); 2])
            .unwrap()
            .to_pair(&Tolerances::default())
            .unwrap()
            .into_pair()
    }

    #[test]
    fn evaluates_generators_on_wilson_point() {
        let p = wilson_01();
        let f = |s: &str| FSpec::parse(s).unwrap().eval(&p).unwrap();
        assert_eq!(f("trX"), c64(1.0, 0.0));
        assert_eq!(f("detX"), c64(0.0, 0.0));
        // Y = [[0,-1],[1,0]]: trace 0, determinant 1.
        assert_eq!(f("detY"), c64(1.0, 0.0));
        assert_eq!(f("shear_example"), c64(1.0, 0.0));
        assert_eq!(f("discriminant_Y"), c64(-4.0, 0.0));
        assert_eq!(f("eps2"), c64(-4.0, 0.0));
        assert_eq!(f("delta2"), c64(1.0, 0.0));
        assert_eq!(f("2*(trX - 1)^3 + i"), c64(0.0, 1.0));
        assert_eq!(f("-trX^2"), c64(-1.0, 0.0));
        assert_eq!(f("1.5e1"), c64(15.0, 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["", "trX +", "foo", "trX^-1", "trX^1.5", "(trX", "trX trY", "trX $"] {
            assert!(FSpec::parse(bad).is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn n2_generators_need_n2() {
        let p = MatrixPair::new(linalg::identity(3), linalg::identity(3)).unwrap();
        assert_eq!(
            FSpec::parse("w").unwrap().eval(&p),
            Err(Error::GeneratorNeedsN2("w"))
        );
        assert!(FSpec::parse("trX + detY").unwrap().eval(&p).is_ok());
    }

    #[test]
    fn lists_generators() {
        let f = FSpec::parse("shear_example * trY + trX").unwrap();
        assert_eq!(f.generators(), vec![Generator::TrX, Generator::DetX, Generator::TrY]);
        assert_eq!(f.to_string(), "shear_example * trY + trX");
    }
}
