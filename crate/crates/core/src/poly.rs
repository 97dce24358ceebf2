//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Variables are dense indices `0, 1, 2, ...`; [`VarNames`] decides how they are
//! printed (`y1, y2, ...`, `x1, x2, ...` or `xi, eta, zeta`). Coefficients stay
//! rational until [`Polynomial::eval`], so algebraic identities can be asserted
//! by comparing normal forms.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponent vector with trailing zeros stripped, so equal monomials compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(index: usize) -> Self {
        Self::var_pow(index, 1)
    }

    pub fn var_pow(index: usize, power: u32) -> Self {
        let mut e = vec![0; index + 1];
        e[index] = power;
        Monomial::from_exponents(e)
    }

    pub fn from_exponents(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, index: usize) -> u32 {
        self.0.get(index).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let e = (0..n).map(|i| self.exponent(i) + other.exponent(i)).collect();
        Monomial(e)
    }

    /// Derivative of the monomial in `index`: (multiplier, lowered monomial).
    fn lower(&self, index: usize) -> Option<(u32, Monomial)> {
        let k = self.exponent(index);
        if k == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[index] -= 1;
        Some((k, Monomial::from_exponents(e)))
    }
}

/// How variable indices are rendered in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarNames {
    /// `y1, y2, ...`
    #[default]
    Y,
    /// `x1, x2, ...`
    X,
    /// `xi, eta, zeta` for the three Heisenberg coordinates.
    Heisenberg,
}

impl VarNames {
    pub fn name(self, index: usize) -> String {
        match self {
            VarNames::Y => format!("y{}", index + 1),
            VarNames::X => format!("x{}", index + 1),
            VarNames::Heisenberg => match index {
                0 => "xi".into(),
                1 => "eta".into(),
                2 => "zeta".into(),
                // beyond the group dimension fall back to the generic name
                _ => format!("y{}", index + 1),
            },
        }
    }

    /// Resolve a variable token to its index. Every naming scheme is accepted.
    pub fn index_of(token: &str) -> Option<usize> {
        match token {
            "xi" => return Some(0),
            "eta" => return Some(1),
            "zeta" => return Some(2),
            _ => {}
        }
        let rest = token.strip_prefix('y').or_else(|| token.strip_prefix('x'))?;
        let k: usize = rest.parse().ok()?;
        (k >= 1).then(|| k - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator outside f64 range individually
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, Monomial::one())
    }

    pub fn constant_int(c: i64) -> Self {
        Self::constant(rational(c, 1))
    }

    pub fn var(index: usize) -> Self {
        Self::monomial(BigRational::one(), Monomial::var(index))
    }

    pub fn monomial(c: BigRational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigRational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// One past the largest variable index that occurs.
    pub fn num_vars(&self) -> usize {
        self.terms.keys().map(|m| m.0.len()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Formal partial derivative in variable `index`.
    pub fn partial(&self, index: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            if let Some((k, lowered)) = m.lower(index) {
                out.add_term(lowered, c * BigRational::from_integer(BigInt::from(k)));
            }
        }
        out
    }

    /// Gradient over the first `dim` variables.
    pub fn gradient(&self, dim: usize) -> Vec<Polynomial> {
        (0..dim).map(|i| self.partial(i)).collect()
    }

    /// Matrix of second partials over the listed variables.
    pub fn hessian(&self, vars: &[usize]) -> Vec<Vec<Polynomial>> {
        let firsts: Vec<Polynomial> = vars.iter().map(|&i| self.partial(i)).collect();
        firsts
            .iter()
            .map(|d| vars.iter().map(|&j| d.partial(j)).collect())
            .collect()
    }

    /// Evaluate at `point`; `point[i]` is the value of variable `i`.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if let Some(i) = self.first_unbound(point.len()) {
            return Err(Error::UnboundVariable(i));
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| rat_to_f64(c) * eval_monomial(m, point))
            .sum())
    }

    fn first_unbound(&self, available: usize) -> Option<usize> {
        self.terms
            .keys()
            .filter_map(|m| {
                m.0.iter()
                    .enumerate()
                    .skip(available)
                    .find(|(_, &e)| e > 0)
                    .map(|(i, _)| i)
            })
            .min()
    }

    /// Floating point copy for repeated evaluation in hot loops.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let factors =
                        m.0.iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (i, e as i32))
                            .collect();
                    (rat_to_f64(c), factors)
                })
                .collect(),
            num_vars: self.num_vars(),
        }
    }

    pub fn display_with(&self, names: VarNames) -> DisplayPoly<'_> {
        DisplayPoly { poly: self, names }
    }

    /// Parse the text form `3/2*y1^2*y2 - y3 + 1`.
    pub fn parse(text: &str) -> Result<Polynomial> {
        Parser::new(text).parse()
    }
}

fn eval_monomial(m: &Monomial, point: &[f64]) -> f64 {
    m.0.iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| point[i].powi(e as i32))
        .product()
}

/// Float-coefficient snapshot of a [`Polynomial`].
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
    num_vars: usize,
}

impl CompiledPoly {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Evaluate without the unbound-variable check; panics if `point` is too short.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| c * f.iter().map(|&(i, e)| point[i].powi(e)).product::<f64>())
            .sum()
    }

    pub fn try_eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() < self.num_vars {
            return Err(Error::UnboundVariable(point.len()));
        }
        Ok(self.eval(point))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                (&self).$method(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                self.$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

pub struct DisplayPoly<'a> {
    poly: &'a Polynomial,
    names: VarNames,
}

impl fmt::Display for DisplayPoly<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest total degree first, then reverse lexicographic within a degree
        let mut terms: Vec<_> = self.poly.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then_with(|| b.cmp(a)));
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> =
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        let n = self.names.name(i);
                        if e == 1 {
                            n
                        } else {
                            format!("{n}^{e}")
                        }
                    })
                    .collect();
            if factors.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{abs}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(VarNames::Y).fmt(f)
    }
}

impl FromStr for Polynomial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Polynomial::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: format!("column {}", self.pos + 1),
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<Polynomial> {
        let mut out = Polynomial::zero();
        self.skip_ws();
        if self.peek().is_none() {
            return self.err("empty polynomial");
        }
        let mut first = true;
        loop {
            self.skip_ws();
            let negative = if self.eat('-') {
                true
            } else if self.eat('+') || first {
                false
            } else if self.peek().is_none() {
                break;
            } else {
                return self.err("expected '+' or '-' between terms");
            };
            first = false;
            let (c, m) = self.term()?;
            out.add_term(m, if negative { -c } else { c });
            self.skip_ws();
            if self.peek().is_none() {
                break;
            }
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<(BigRational, Monomial)> {
        let mut coeff = BigRational::one();
        let mut mono = Monomial::one();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == '.' => coeff *= self.number()?,
                Some(c) if c.is_ascii_alphabetic() => {
                    let index = self.variable()?;
                    let power = if self.eat('^') { self.exponent()? } else { 1 };
                    mono = mono.mul(&Monomial::var_pow(index, power));
                }
                Some('-') => {
                    // allows `-1*y3` inside a term after a leading sign, e.g. `+ -1*y3`
                    self.pos += 1;
                    coeff = -coeff;
                    continue;
                }
                _ => return self.err("expected a number or a variable"),
            }
            if !self.eat('*') {
                break;
            }
        }
        Ok((coeff, mono))
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<BigRational> {
        let whole = self.take_while(|c| c.is_ascii_digit() || c == '.');
        let Some(mut value) = parse_decimal(whole) else {
            return self.err(format!("bad number '{whole}'"));
        };
        if self.peek() == Some('/') {
            self.pos += 1;
            let den = self.take_while(|c| c.is_ascii_digit());
            let den: BigInt = match den.parse() {
                Ok(d) => d,
                Err(_) => return self.err(format!("bad denominator '{den}'")),
            };
            if den.is_zero() {
                return self.err("zero denominator");
            }
            value /= BigRational::from_integer(den);
        }
        Ok(value)
    }

    fn variable(&mut self) -> Result<usize> {
        let tok = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        match VarNames::index_of(tok) {
            Some(i) => Ok(i),
            None => self.err(format!("unknown variable '{tok}'")),
        }
    }

    fn exponent(&mut self) -> Result<u32> {
        self.skip_ws();
        let tok = self.take_while(|c| c.is_ascii_digit());
        match tok.parse() {
            Ok(e) => Ok(e),
            Err(_) => self.err(format!("bad exponent '{tok}'")),
        }
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn add_examples() {
        assert!((p("y1") + p("-y1")).is_zero());
        assert_eq!(p("y1^2") + p("y1*y2"), p("y1^2 + y1*y2"));
        assert_eq!(p("2*y1 + 1") + p("3*y1 - 1"), p("5*y1"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(p("y1") * Polynomial::one(), p("y1"));
        assert_eq!(p("y1 + y2") * p("y1 - y2"), p("y1^2 - y2^2"));
        assert_eq!(p("y1 + 1") * p("y1 + 1"), p("y1^2 + 2*y1 + 1"));
    }

    #[test]
    fn partial_examples() {
        assert_eq!(p("y1^2").partial(0), p("2*y1"));
        assert_eq!(p("y1*y2").partial(1), p("y1"));
        assert!(p("y2^3").partial(0).is_zero());
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("y1^2 + y2").eval(&[2.0, 3.0]).unwrap(), 7.0);
        assert_eq!(p("y1*y2 - 3*y2^4").eval(&[0.0, 0.0]).unwrap(), 0.0);
        let prod = p("y1 + y2") * p("y1 - y2");
        assert_eq!(prod.eval(&[3.0, 1.0]).unwrap(), 8.0);
        assert_eq!(p("y1^2 - y2^2").eval(&[3.0, 1.0]).unwrap(), 8.0);
    }

    #[test]
    fn eval_reports_unbound_variable() {
        assert_eq!(p("y1 + y3").eval(&[1.0, 2.0]), Err(Error::UnboundVariable(2)));
        // a variable that does not occur needs no value
        assert_eq!(p("y1").eval(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn hessian_examples() {
        let h = p("y1^2").hessian(&[0, 1]);
        assert_eq!(h[0][0], p("2"));
        assert!(h[0][1].is_zero() && h[1][0].is_zero() && h[1][1].is_zero());
        let h = p("y1*y2").hessian(&[0, 1]);
        assert_eq!(h[0][1], Polynomial::one());
        assert_eq!(h[1][0], Polynomial::one());
        assert!(h[0][0].is_zero() && h[1][1].is_zero());
        let h = p("3*y1 - 2*y2 + 7").hessian(&[0, 1]);
        assert!(h.iter().flatten().all(Polynomial::is_zero));
    }

    #[test]
    fn parse_and_display() {
        let q = p("3/2*y1^2*y2 - 1*y3");
        assert_eq!(q.to_string(), "3/2*y1^2*y2 - y3");
        assert_eq!(p(&q.to_string()), q);
        let h = p("xi^2 + eta*zeta");
        assert_eq!(h.display_with(VarNames::Heisenberg).to_string(), "xi^2 + eta*zeta");
        assert_eq!(p("x1*x2"), p("y1*y2"));
        assert_eq!(p("0.5*y1"), p("1/2*y1"));
        assert_eq!(p("y1 + -1*y3"), p("y1 - y3"));
        assert!(p("0").is_zero());
        assert_eq!(Polynomial::zero().to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!(Polynomial::parse("").is_err());
        assert!(Polynomial::parse("y0").is_err());
        assert!(Polynomial::parse("y1 y2").is_err());
        assert!(Polynomial::parse("1/0").is_err());
        assert!(Polynomial::parse("q1").is_err());
        assert!(Polynomial::parse("y1^").is_err());
    }

    #[test]
    fn zero_terms_are_dropped() {
        let q = p("y1 + y2 - y1");
        assert_eq!(q.len(), 1);
        assert_eq!(q, p("y2"));
        assert_eq!(p("y1^0*y2"), p("y2"));
    }
}
