//! Exact Laurent polynomial arithmetic over the rationals.
//!
//! Everything symbolic in this crate is built on [`LaurentPolynomial`]: a
//! finite sum of monomials with integer (possibly negative) exponents and
//! nonzero `BigRational` coefficients. Coefficients stay exact through every
//! transformation; floats only appear when a polynomial is evaluated at a
//! numeric state.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar used for all symbolic coefficients.
pub type Rational = num_rational::BigRational;

/// Rational from an integer, for tests and builders.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_pow(c: &Rational, k: i32) -> Rational {
    let base = if k < 0 { c.recip() } else { c.clone() };
    let mut acc = Rational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ExprError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("division by a non-monomial expression: {0}")]
    NonMonomialDivisor(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {0} out of range")]
    ExponentRange(i64),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("evaluation divides by zero: `{0}` is 0 with a negative exponent")]
    EvalDivisionByZero(String),
    #[error("expected a constant, found `{0}`")]
    NotAConstant(String),
}

/// Product of symbols raised to integer powers; the empty product is 1.
///
/// Zero exponents are never stored, so structural equality is semantic
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: BTreeMap<String, i32>,
}

impl Monomial {
    /// The empty product.
    pub fn one() -> Self {
        Monomial::default()
    }

    /// A single symbol with exponent 1.
    pub fn var(name: &str) -> Self {
        Monomial::single(name, 1)
    }

    /// A single symbol with the given exponent.
    pub fn single(name: &str, exp: i32) -> Self {
        let mut exps = BTreeMap::new();
        if exp != 0 {
            exps.insert(name.to_string(), exp);
        }
        Monomial { exps }
    }

    /// Build from (symbol, exponent) pairs; repeated symbols accumulate.
    pub fn from_pairs(pairs: &[(&str, i32)]) -> Self {
        let mut m = Monomial::one();
        for (name, e) in pairs {
            m = m.mul(&Monomial::single(name, *e));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// Exponent of `name`, 0 when absent.
    pub fn exponent(&self, name: &str) -> i32 {
        self.exps.get(name).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i32)> {
        self.exps.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.exps.keys().map(|k| k.as_str())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps.clone();
        for (name, e) in &other.exps {
            let slot = exps.entry(name.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                exps.remove(name);
            }
        }
        Monomial { exps }
    }

    pub fn pow(&self, k: i32) -> Monomial {
        let exps = self
            .exps
            .iter()
            .filter(|_| k != 0)
            .map(|(name, e)| (name.clone(), e * k))
            .collect();
        Monomial { exps }
    }

    pub fn inverse(&self) -> Monomial {
        self.pow(-1)
    }

    /// Multiply by `name^-1`; the monomial-wise division used everywhere.
    pub fn divide_by_var(&self, name: &str) -> Monomial {
        self.mul(&Monomial::single(name, -1))
    }
}

/// Canonical term order: symbols ascending, then exponents descending within
/// a symbol, and a monomial that runs out of symbols first sorts last. This
/// puts `x^2` before `x` and the constant term at the end, so printed systems
/// read like hand-written equations (`x^2 + x + 1`, `y - 2`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.exps.iter();
        let mut b = other.exps.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Greater,
                (Some(_), None) => return Ordering::Less,
                (Some((na, ea)), Some((nb, eb))) => {
                    match na.cmp(nb) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                    match eb.cmp(ea) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Monomial {
    /// Numerator and denominator factor strings for printing: positive
    /// powers joined with `*`, negative powers flipped positive. Either
    /// side is None when it has no factors.
    fn display_parts(&self) -> (Option<String>, Option<String>) {
        let side = |flip: bool| -> Option<String> {
            let parts: Vec<String> = self
                .exps
                .iter()
                .filter(|(_, e)| if flip { **e < 0 } else { **e > 0 })
                .map(|(name, e)| {
                    let k = e.abs();
                    if k == 1 {
                        name.clone()
                    } else {
                        format!("{name}^{k}")
                    }
                })
                .collect();
            if parts.is_empty() {
                None
            } else {
                Some(parts.join("*"))
            }
        };
        (side(false), side(true))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        // Positive powers before negative ones, so ratio terms come out as
        // `x_T*x_B^-1` rather than the map order `x_B^-1*x_T`.
        let ordered = self
            .exps
            .iter()
            .filter(|(_, e)| **e > 0)
            .chain(self.exps.iter().filter(|(_, e)| **e < 0));
        let mut first = true;
        for (name, e) in ordered {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse Laurent polynomial: monomial -> nonzero rational coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentPolynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl LaurentPolynomial {
    pub fn zero() -> Self {
        LaurentPolynomial::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn variable(name: &str) -> Self {
        Self::term(Monomial::var(name), rat(1))
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut p = LaurentPolynomial::zero();
        p.add_term(m, c);
        p
    }

    /// Add `c * m`, merging with an existing term and dropping exact zeros.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// All coefficients strictly positive. The zero polynomial counts as
    /// positive (vacuously); callers that care distinguish it via `is_zero`.
    pub fn is_positive(&self) -> bool {
        self.terms.values().all(|c| c.is_positive())
    }

    /// The single (monomial, coefficient) pair, if there is exactly one term.
    pub fn as_single_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// The constant value, if the polynomial is a constant (or zero).
    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        match self.as_single_term() {
            Some((m, c)) if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    /// Every symbol occurring with nonzero exponent.
    pub fn symbols(&self) -> BTreeSet<&str> {
        self.terms.keys().flat_map(|m| m.symbols()).collect()
    }

    pub fn scale(&self, c: &Rational) -> LaurentPolynomial {
        if c.is_zero() {
            return LaurentPolynomial::zero();
        }
        LaurentPolynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    /// Multiply every term by `c * m`; exact Laurent scaling.
    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> LaurentPolynomial {
        if c.is_zero() {
            return LaurentPolynomial::zero();
        }
        LaurentPolynomial {
            terms: self
                .terms
                .iter()
                .map(|(tm, tc)| (tm.mul(m), tc * c))
                .collect(),
        }
    }

    /// Integer power. Negative powers require a single-term polynomial.
    pub fn pow(&self, k: i32) -> Result<LaurentPolynomial, ExprError> {
        if k == 0 {
            return Ok(LaurentPolynomial::constant(rat(1)));
        }
        if k < 0 {
            if self.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            let (m, c) = self
                .as_single_term()
                .ok_or_else(|| ExprError::NonMonomialDivisor(self.to_string()))?;
            return Ok(LaurentPolynomial::term(m.pow(k), rat_pow(c, k)));
        }
        let mut acc = LaurentPolynomial::constant(rat(1));
        for _ in 0..k {
            acc = &acc * self;
        }
        Ok(acc)
    }

    /// Divide by `other`, which must be a single term (Laurent restriction).
    pub fn divide(&self, other: &LaurentPolynomial) -> Result<LaurentPolynomial, ExprError> {
        Ok(self * &other.pow(-1)?)
    }

    /// Split into (positive part, negated negative part): `p = plus - minus`
    /// with both parts positive Laurent polynomials sharing no monomial.
    pub fn split_signs(&self) -> (LaurentPolynomial, LaurentPolynomial) {
        let mut plus = LaurentPolynomial::zero();
        let mut minus = LaurentPolynomial::zero();
        for (m, c) in &self.terms {
            if c.is_positive() {
                plus.add_term(m.clone(), c.clone());
            } else {
                minus.add_term(m.clone(), -c);
            }
        }
        (plus, minus)
    }

    /// Replace each bound symbol by its polynomial. Negative exponents demand
    /// a single-term replacement, mirroring the division restriction.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<String, LaurentPolynomial>,
    ) -> Result<LaurentPolynomial, ExprError> {
        let mut out = LaurentPolynomial::zero();
        for (m, c) in &self.terms {
            let mut acc = LaurentPolynomial::constant(c.clone());
            for (name, e) in m.iter() {
                let factor = match bindings.get(name) {
                    Some(b) => b.pow(e)?,
                    None => LaurentPolynomial::term(Monomial::single(name, e), rat(1)),
                };
                acc = &acc * &factor;
            }
            out = &out + &acc;
        }
        Ok(out)
    }

    /// Evaluate at a float state. Negative exponents at 0 and unbound symbols
    /// are errors; the caller owns positivity.
    pub fn evaluate(&self, env: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (name, e) in m.iter() {
                let x = *env
                    .get(name)
                    .ok_or_else(|| ExprError::UnboundSymbol(name.to_string()))?;
                if x == 0.0 && e < 0 {
                    return Err(ExprError::EvalDivisionByZero(name.to_string()));
                }
                v *= x.powi(e);
            }
            sum += v;
        }
        Ok(sum)
    }
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            // Negative powers print as a division chain, so a ratio term
            // reads `x_T/x_B` and stays parseable.
            let (num, den) = m.display_parts();
            let mut lead = match num {
                Some(n) if mag.is_one() => n,
                Some(n) => format!("{mag}*{n}"),
                None => format!("{mag}"),
            };
            if let Some(d) = den {
                if d.contains('*') {
                    lead.push_str(&format!("/({d})"));
                } else {
                    lead.push_str(&format!("/{d}"));
                }
            }
            write!(f, "{lead}")?;
        }
        Ok(())
    }
}

impl Add for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn add(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn sub(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn mul(self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = LaurentPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &LaurentPolynomial {
    type Output = LaurentPolynomial;
    fn neg(self) -> LaurentPolynomial {
        LaurentPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

/// Parse a standalone rational literal, accepting `7`, `-3`, `5/2`, `2.5`.
/// Implemented as a constant expression parse, so `1/100` also works.
pub fn parse_rational(src: &str) -> Result<Rational, ExprError> {
    let p = parse_expr(src)?;
    p.constant_value()
        .ok_or_else(|| ExprError::NotAConstant(src.trim().to_string()))
}

// Expression grammar:
//   expr   := ('+' | '-')? term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := base ('^' '-'? integer)?
//   base   := ident | number | '(' expr ')'
// `/` only by a single-term divisor, `^` only by an integer literal.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational, bool), // value, lexed with a decimal point
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut fractional = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    fractional = true;
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(ExprError::Parse {
                            offset: i,
                            message: "expected digits after decimal point".into(),
                        });
                    }
                }
                let text = &src[start..i];
                let value = if fractional {
                    let dot = text.find('.').unwrap();
                    let digits: String = text.chars().filter(|c| *c != '.').collect();
                    let numer: BigInt = digits.parse().unwrap();
                    let denom = BigInt::from(10u32).pow((text.len() - dot - 1) as u32);
                    Rational::new(numer, denom)
                } else {
                    Rational::from_integer(text.parse().unwrap())
                };
                toks.push((Tok::Num(value, fractional), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ExprError::Parse {
                    offset: i,
                    message: format!("unexpected character `{}`", &src[i..i + 1]),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<LaurentPolynomial, ExprError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Plus) => {
                self.bump();
            }
            Some(Tok::Minus) => {
                negate = true;
                self.bump();
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<LaurentPolynomial, ExprError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let f = self.factor()?;
                    acc = &acc * &f;
                }
                Some(Tok::Slash) => {
                    let at = self.offset();
                    self.bump();
                    let f = self.factor()?;
                    acc = acc.divide(&f).map_err(|e| match e {
                        ExprError::NonMonomialDivisor(d) => ExprError::Parse {
                            offset: at,
                            message: format!(
                                "division by `{d}` is not a Laurent operation; divisors must be a single monomial or literal"
                            ),
                        },
                        ExprError::DivisionByZero => ExprError::Parse {
                            offset: at,
                            message: "division by zero".into(),
                        },
                        other => other,
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<LaurentPolynomial, ExprError> {
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        let at = self.offset();
        self.bump();
        let mut sign = 1i64;
        if self.peek() == Some(&Tok::Minus) {
            sign = -1;
            self.bump();
        }
        let k = match self.bump() {
            Some(Tok::Num(v, had_dot)) => {
                if *had_dot || !v.is_integer() {
                    return Err(ExprError::Parse {
                        offset: at,
                        message: "exponent must be an integer literal".into(),
                    });
                }
                let k = v
                    .to_integer()
                    .to_i64()
                    .ok_or(ExprError::ExponentRange(i64::MAX))?;
                sign * k
            }
            _ => {
                return Err(ExprError::Parse {
                    offset: at,
                    message: "expected an integer literal exponent after `^`".into(),
                });
            }
        };
        if k.abs() > 9999 {
            return Err(ExprError::ExponentRange(k));
        }
        base.pow(k as i32).map_err(|e| match e {
            ExprError::NonMonomialDivisor(d) => ExprError::Parse {
                offset: at,
                message: format!("negative power of `{d}` is not a Laurent operation"),
            },
            ExprError::DivisionByZero => ExprError::Parse {
                offset: at,
                message: "negative power of zero".into(),
            },
            other => other,
        })
    }

    fn base(&mut self) -> Result<LaurentPolynomial, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.bump();
                Ok(LaurentPolynomial::variable(&name))
            }
            Some(Tok::Num(v, _)) => {
                self.bump();
                Ok(LaurentPolynomial::constant(v))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                if self.peek() == Some(&Tok::RParen) {
                    self.bump();
                    Ok(inner)
                } else {
                    Err(self.err("expected `)`"))
                }
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Parse an expression into canonical Laurent form.
pub fn parse_expr(src: &str) -> Result<LaurentPolynomial, ExprError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(ExprError::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: src.len(),
    };
    let poly = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parses_laurent_terms_with_negative_exponents() {
        let p = parse_expr("x^2/y^3 + 4*z^5 + 5/x - 6/w^2").unwrap();
        assert_eq!(p.num_terms(), 4);
        assert_eq!(
            p.coefficient(&Monomial::from_pairs(&[("x", 2), ("y", -3)])),
            rat(1)
        );
        assert_eq!(p.coefficient(&Monomial::single("z", 5)), rat(4));
        assert_eq!(p.coefficient(&Monomial::single("x", -1)), rat(5));
        assert_eq!(p.coefficient(&Monomial::single("w", -2)), rat(-6));
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_rational("2.5").unwrap(), ratio(5, 2));
        assert_eq!(parse_rational("16.5").unwrap(), ratio(33, 2));
        assert_eq!(parse_rational("0.9").unwrap(), ratio(9, 10));
        assert_eq!(parse_rational("1/100").unwrap(), ratio(1, 100));
        assert_eq!(parse_rational("-3").unwrap(), rat(-3));
    }

    #[test]
    fn products_expand_and_cancel() {
        let p = parse_expr("(x + 1)*(x - 1)").unwrap();
        let expected = parse_expr("x^2 - 1").unwrap();
        assert_eq!(p, expected);
        let q = parse_expr("x - x").unwrap();
        assert!(q.is_zero());
        assert_eq!(q.to_string(), "0");
    }

    #[test]
    fn division_by_polynomial_is_rejected() {
        let err = parse_expr("x/(y + 1)").unwrap_err();
        assert!(matches!(err, ExprError::Parse { .. }));
        assert!(err.to_string().contains("Laurent"));
        let err = parse_expr("(x + y)^-1").unwrap_err();
        assert!(err.to_string().contains("Laurent"));
    }

    #[test]
    fn exponent_must_be_integer_literal() {
        assert!(parse_expr("x^y").is_err());
        assert!(parse_expr("x^2.5").is_err());
        assert!(parse_expr("x^-2").is_ok());
        let p = parse_expr("(x*y)^-1").unwrap();
        assert_eq!(
            p.coefficient(&Monomial::from_pairs(&[("x", -1), ("y", -1)])),
            rat(1)
        );
    }

    #[test]
    fn division_by_zero_literal_is_rejected() {
        assert!(parse_expr("x/0").is_err());
        assert!(parse_expr("x/(y - y)").is_err());
    }

    #[test]
    fn split_signs_partitions_terms() {
        let p = parse_expr("y - 2").unwrap();
        let (plus, minus) = p.split_signs();
        assert_eq!(plus, parse_expr("y").unwrap());
        assert_eq!(minus, parse_expr("2").unwrap());
        assert_eq!(&plus - &minus, p);
        assert!(plus.is_positive() && minus.is_positive());
    }

    #[test]
    fn substitute_ratio_binding() {
        // x -> a*b^-1 in 2x^2y - 3/x gives 2a^2b^-2y - 3a^-1b.
        let p = parse_expr("2*x^2*y - 3/x").unwrap();
        let mut bindings = BTreeMap::new();
        bindings.insert("x".to_string(), parse_expr("a/b").unwrap());
        let s = p.substitute(&bindings).unwrap();
        assert_eq!(s, parse_expr("2*a^2*y/b^2 - 3*b/a").unwrap());
    }

    #[test]
    fn substitute_negative_power_of_sum_fails() {
        let p = parse_expr("1/x").unwrap();
        let mut bindings = BTreeMap::new();
        bindings.insert("x".to_string(), parse_expr("a + b").unwrap());
        assert!(matches!(
            p.substitute(&bindings),
            Err(ExprError::NonMonomialDivisor(_))
        ));
    }

    #[test]
    fn evaluate_with_negative_exponents() {
        let p = parse_expr("x^2/y + 1/2").unwrap();
        let v = p.evaluate(&env(&[("x", 3.0), ("y", 4.0)])).unwrap();
        assert!((v - (9.0 / 4.0 + 0.5)).abs() < 1e-15);
        assert!(matches!(
            p.evaluate(&env(&[("x", 3.0), ("y", 0.0)])),
            Err(ExprError::EvalDivisionByZero(_))
        ));
        assert!(matches!(
            p.evaluate(&env(&[("x", 3.0)])),
            Err(ExprError::UnboundSymbol(_))
        ));
    }

    #[test]
    fn canonical_printing_orders_terms() {
        assert_eq!(parse_expr("-2 + y").unwrap().to_string(), "y - 2");
        assert_eq!(
            parse_expr("1 + x + x^2").unwrap().to_string(),
            "x^2 + x + 1"
        );
        assert_eq!(
            parse_expr("x_T/x_B + x_B*y_T/y_B - 2.5*x_T")
                .unwrap()
                .to_string(),
            "x_B*y_T/y_B + x_T/x_B - 5/2*x_T"
        );
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "x^2 + x + 1",
            "y - 2",
            "-x + 2",
            "x_B*y_T/y_B + x_T/x_B - 5/2*x_T",
            "2*x_B^2/x_T - 5/2*x_B + 1",
            "x_T*y_B^2/(x_B*y_T) - 5/2*y_B + 1",
            "-2/(x*y^2) + 3/x",
            "11*y^3 - 33/2*y^2 + 13/2*y",
            "0",
        ] {
            let p = parse_expr(src).unwrap();
            assert_eq!(p.to_string(), src);
            assert_eq!(parse_expr(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn pow_of_zero() {
        let z = LaurentPolynomial::zero();
        assert!(z.pow(3).unwrap().is_zero());
        assert_eq!(z.pow(0).unwrap(), LaurentPolynomial::constant(rat(1)));
        assert!(z.pow(-1).is_err());
    }

    #[test]
    fn monomial_order_is_total_and_stable() {
        let x2 = Monomial::single("x", 2);
        let x = Monomial::var("x");
        let one = Monomial::one();
        let xy = Monomial::from_pairs(&[("x", 1), ("y", 1)]);
        assert!(x2 < x);
        assert!(x < one);
        assert!(xy < x); // longer sequence with equal prefix sorts first
        assert!(x2 < xy);
    }
}
