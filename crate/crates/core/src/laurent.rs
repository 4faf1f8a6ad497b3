//! Sparse Laurent polynomials with exact coefficients.
//!
//! Coefficients are [`AffineForm`]s: a rational constant plus rational
//! multiples of named parameters. Multiplying two forms that both depend on
//! parameters is rejected, so every coefficient stays affine-linear.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent; printing lists them in
//! descending lexicographic order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{IntMatrix, IntVector};
use crate::par::ExecMode;
use crate::polytope::{EmbeddedPolytope, LatticePolytope};

/// `constant + Σ coefficient · parameter`.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AffineForm {
    constant: BigRational,
    linear: BTreeMap<String, BigRational>,
}

impl AffineForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        AffineForm {
            constant: c,
            linear: BTreeMap::new(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(n.into()))
    }

    pub fn parameter(name: &str) -> Self {
        let mut linear = BTreeMap::new();
        linear.insert(name.to_string(), BigRational::one());
        AffineForm {
            constant: BigRational::zero(),
            linear,
        }
    }

    pub fn from_parts(constant: BigRational, linear: BTreeMap<String, BigRational>) -> Self {
        let linear = linear.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        AffineForm { constant, linear }
    }

    pub fn constant_part(&self) -> &BigRational {
        &self.constant
    }

    pub fn linear_part(&self) -> &BTreeMap<String, BigRational> {
        &self.linear
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && self.constant.is_one()
    }

    pub fn as_constant(&self) -> Option<&BigRational> {
        self.is_constant().then_some(&self.constant)
    }

    pub fn parameters(&self) -> impl Iterator<Item = &String> {
        self.linear.keys()
    }

    pub fn scale(&self, k: &BigRational) -> AffineForm {
        if k.is_zero() {
            return AffineForm::zero();
        }
        AffineForm {
            constant: &self.constant * k,
            linear: self.linear.iter().map(|(n, c)| (n.clone(), c * k)).collect(),
        }
    }

    /// Product, defined when at least one factor is constant.
    pub fn mul(&self, other: &AffineForm) -> Result<AffineForm> {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), _) => Ok(other.scale(a)),
            (_, Some(b)) => Ok(self.scale(b)),
            _ => Err(Error::NonAffine),
        }
    }

    /// Substitutes rational values for every parameter.
    pub fn evaluate(&self, values: &BTreeMap<String, BigRational>) -> Result<BigRational> {
        let mut out = self.constant.clone();
        for (n, c) in &self.linear {
            let v = values.get(n).ok_or_else(|| Error::MissingParameter(n.clone()))?;
            out += c * v;
        }
        Ok(out)
    }

    /// Substitutes affine forms for some parameters.
    pub fn substitute(&self, values: &BTreeMap<String, AffineForm>) -> AffineForm {
        let mut out = AffineForm::constant(self.constant.clone());
        for (n, c) in &self.linear {
            match values.get(n) {
                Some(v) => out = &out + &v.scale(c),
                None => out = &out + &AffineForm::parameter(n).scale(c),
            }
        }
        out
    }

    fn add_assign(&mut self, other: &AffineForm) {
        self.constant += &other.constant;
        for (n, c) in &other.linear {
            let e = self.linear.entry(n.clone()).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                self.linear.remove(n);
            }
        }
    }
}

impl Add for &AffineForm {
    type Output = AffineForm;
    fn add(self, rhs: &AffineForm) -> AffineForm {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &AffineForm {
    type Output = AffineForm;
    fn sub(self, rhs: &AffineForm) -> AffineForm {
        let mut out = self.clone();
        out.add_assign(&-rhs);
        out
    }
}

impl Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        self.scale(&-BigRational::one())
    }
}

impl From<BigRational> for AffineForm {
    fn from(c: BigRational) -> Self {
        AffineForm::constant(c)
    }
}

impl From<i64> for AffineForm {
    fn from(c: i64) -> Self {
        AffineForm::from_int(c)
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        if !self.constant.is_zero() || self.linear.is_empty() {
            s.push_str(&fmt_rational(&self.constant));
        }
        for (n, c) in &self.linear {
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if !s.is_empty() || c.is_negative() {
                s.push_str(sign);
            }
            if !mag.is_one() {
                s.push_str(&fmt_rational(&mag));
                s.push('*');
            }
            s.push_str(n);
        }
        write!(f, "{s}")
    }
}

impl fmt::Debug for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Finitely supported map from exponent vectors to nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaurentPolynomial {
    dim: usize,
    terms: BTreeMap<IntVector, AffineForm>,
}

impl LaurentPolynomial {
    pub fn zero(dim: usize) -> Self {
        LaurentPolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(exponent: IntVector, coefficient: AffineForm) -> Self {
        let mut p = Self::zero(exponent.dim());
        p.add_term(exponent, &coefficient);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::monomial(IntVector::zero(dim), AffineForm::one())
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing
    /// repeated exponents.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (IntVector, AffineForm)>,
    {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            p.add_term(e, &c);
        }
        Ok(p)
    }

    /// Sum of `x^v` over the given exponents.
    pub fn from_exponents(dim: usize, exps: &[IntVector]) -> Result<Self> {
        Self::from_terms(dim, exps.iter().map(|e| (e.clone(), AffineForm::one())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<IntVector, AffineForm> {
        &self.terms
    }

    pub fn support(&self) -> Vec<IntVector> {
        self.terms.keys().cloned().collect()
    }

    pub fn coefficient(&self, e: &IntVector) -> AffineForm {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> AffineForm {
        self.coefficient(&IntVector::zero(self.dim))
    }

    pub fn add_term(&mut self, e: IntVector, c: &AffineForm) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                x.add_assign(c);
                if x.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c.clone());
            }
        }
    }

    pub fn set_coefficient(&mut self, e: IntVector, c: AffineForm) {
        if c.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, c);
        }
    }

    /// Names of all parameters appearing in coefficients.
    pub fn parameters(&self) -> BTreeSet<String> {
        self.terms.values().flat_map(|c| c.parameters().cloned()).collect()
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_constant())
    }

    pub fn add(&self, other: &LaurentPolynomial) -> LaurentPolynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &LaurentPolynomial) -> LaurentPolynomial {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> LaurentPolynomial {
        if k.is_zero() {
            return Self::zero(self.dim);
        }
        LaurentPolynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.scale(k))).collect(),
        }
    }

    /// Multiplies by the monomial `x^t`.
    pub fn shift(&self, t: &IntVector) -> LaurentPolynomial {
        LaurentPolynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e + t, c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &LaurentPolynomial) -> Result<LaurentPolynomial> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = Self::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1 + e2, &c1.mul(c2)?);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<LaurentPolynomial> {
        let mut out = Self::one(self.dim);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Newton polytope; the support must span the ambient lattice.
    pub fn newton_polytope(&self) -> Result<LatticePolytope> {
        if self.terms.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        LatticePolytope::convex_hull(&self.support())
    }

    /// Newton polytope in the affine span of the support.
    pub fn newton_embedded(&self) -> Result<EmbeddedPolytope> {
        if self.terms.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        EmbeddedPolytope::new(&self.support())
    }

    /// Coefficient 1 at every vertex of the Newton polytope.
    pub fn is_normalised(&self) -> bool {
        match self.newton_embedded() {
            Ok(p) => p.vertices().iter().all(|v| self.coefficient(v).is_one()),
            Err(_) => false,
        }
    }

    pub fn has_zero_constant_term(&self) -> bool {
        !self.terms.contains_key(&IntVector::zero(self.dim))
    }

    /// All coefficients are nonnegative integers.
    pub fn has_nonnegative_integer_coefficients(&self) -> bool {
        self.terms
            .values()
            .all(|c| c.as_constant().is_some_and(|q| q.is_integer() && !q.is_negative()))
    }

    pub fn specialize(&self, values: &BTreeMap<String, BigRational>) -> Result<LaurentPolynomial> {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &AffineForm::constant(c.evaluate(values)?));
        }
        Ok(out)
    }

    pub fn substitute(&self, values: &BTreeMap<String, AffineForm>) -> LaurentPolynomial {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &c.substitute(values));
        }
        out
    }

    /// Applies `x^e ↦ x^{u·e}`.
    pub fn monomial_change_of_basis(&self, u: &IntMatrix) -> Result<LaurentPolynomial> {
        if !u.is_unimodular() || u.rows() != self.dim {
            return Err(Error::NotUnimodular);
        }
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(u.mul_vec(e)?, c);
        }
        Ok(out)
    }

    /// Terms with `w · e == h`.
    pub fn slice(&self, w: &IntVector, h: i64) -> LaurentPolynomial {
        LaurentPolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| w.dot(e) == h)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Groups terms by `w`-height.
    pub fn grade(&self, w: &IntVector) -> BTreeMap<i64, LaurentPolynomial> {
        let mut out: BTreeMap<i64, LaurentPolynomial> = BTreeMap::new();
        for (e, c) in &self.terms {
            out.entry(w.dot(e))
                .or_insert_with(|| Self::zero(self.dim))
                .terms
                .insert(e.clone(), c.clone());
        }
        out
    }

    /// Smallest exponent in lex order.
    pub fn min_exponent(&self) -> Option<&IntVector> {
        self.terms.keys().next()
    }

    /// Parses the polynomial grammar; the dimension is the largest variable
    /// index used (at least one).
    pub fn parse(text: &str) -> Result<LaurentPolynomial> {
        Parser::new(text, None)?.run()
    }

    /// Parses with a fixed number of variables.
    pub fn parse_in_dim(text: &str, dim: usize) -> Result<LaurentPolynomial> {
        Parser::new(text, Some(dim))?.run()
    }

    /// Constant-coefficient integer copy scaled by the common denominator.
    fn integer_terms(&self) -> Result<(Vec<(IntVector, BigInt)>, BigInt)> {
        let mut den = BigInt::one();
        for c in self.terms.values() {
            let q = c.as_constant().ok_or_else(|| Error::Parametric(c.to_string()))?;
            den = den.lcm(q.denom());
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let q = c.as_constant().unwrap() * BigRational::from_integer(den.clone());
                (e.clone(), q.to_integer())
            })
            .collect();
        Ok((terms, den))
    }
}

fn var_name(dim: usize, i: usize) -> String {
    if dim <= 3 {
        ["x", "y", "z"][i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

fn fmt_monomial(dim: usize, e: &IntVector) -> String {
    let mut parts = Vec::new();
    for (i, &k) in e.iter().enumerate() {
        match k {
            0 => {}
            1 => parts.push(var_name(dim, i)),
            _ => parts.push(format!("{}^{}", var_name(dim, i), k)),
        }
    }
    parts.join("*")
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for (e, c) in self.terms.iter().rev() {
            let mono = fmt_monomial(self.dim, e);
            let term = match c.as_constant() {
                Some(q) if mono.is_empty() => fmt_rational(q),
                Some(q) if q.is_one() => mono,
                Some(q) if (-q).is_one() => format!("-{mono}"),
                Some(q) => format!("{}*{}", fmt_rational(q), mono),
                None if mono.is_empty() => format!("({c})"),
                None => format!("({c})*{mono}"),
            };
            if !out.is_empty() && !term.starts_with('-') {
                out.push('+');
            }
            out.push_str(&term);
        }
        write!(f, "{out}")
    }
}

impl fmt::Debug for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi",
    "omicron", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega",
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Var(usize),
    Param(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open(char),
    Close(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '0'..='9' => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push((start, Tok::Num(s.parse().expect("digits"))));
            }
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' | '{' | '[' => {
                out.push((i, Tok::Open(c)));
                i += 1;
            }
            ')' | '}' | ']' => {
                out.push((i, Tok::Close(c)));
                i += 1;
            }
            '\\' | 'a'..='z' | 'A'..='Z' => {
                if c == '\\' {
                    i += 1;
                }
                let ws = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let word: String = chars[ws..i].iter().collect();
                let ds = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[ds..i].iter().collect();
                if !digits.is_empty() {
                    match word.as_str() {
                        "x" => {
                            let n: usize = digits.parse().map_err(|_| Error::parse(start, "bad variable index"))?;
                            if n == 0 {
                                return Err(Error::parse(start, "variables are numbered from 1"));
                            }
                            out.push((start, Tok::Var(n - 1)));
                        }
                        "a" => out.push((start, Tok::Param(format!("a{digits}")))),
                        _ => {
                            // Digits after a word are a coefficient of what follows.
                            push_word(&word, start, &mut out)?;
                            out.push((ds, Tok::Num(digits.parse().expect("digits"))));
                        }
                    }
                } else {
                    push_word(&word, start, &mut out)?;
                }
            }
            _ => return Err(Error::parse(i, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

fn push_word(word: &str, pos: usize, out: &mut Vec<(usize, Tok)>) -> Result<()> {
    if GREEK.contains(&word) {
        out.push((pos, Tok::Param(word.to_string())));
    } else if !word.is_empty() && word.chars().all(|c| matches!(c, 'x' | 'y' | 'z')) {
        for (k, c) in word.chars().enumerate() {
            let v = match c {
                'x' => 0,
                'y' => 1,
                _ => 2,
            };
            out.push((pos + k, Tok::Var(v)));
        }
    } else {
        return Err(Error::parse(pos, format!("unknown identifier `{word}`")));
    }
    Ok(())
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str, dim: Option<usize>) -> Result<Self> {
        let toks = lex(text)?;
        let used = toks
            .iter()
            .filter_map(|(_, t)| match t {
                Tok::Var(i) => Some(i + 1),
                _ => None,
            })
            .max()
            .unwrap_or(1);
        let dim = match dim {
            Some(d) if d < used => return Err(Error::parse(0, format!("variable index exceeds dimension {d}"))),
            Some(d) => d,
            None => used,
        };
        Ok(Parser {
            toks,
            pos: 0,
            dim,
            end: text.chars().count(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn run(mut self) -> Result<LaurentPolynomial> {
        if self.toks.is_empty() {
            return Err(Error::parse(0, "empty polynomial"));
        }
        let p = self.expr()?;
        if self.pos < self.toks.len() {
            return Err(Error::parse(self.here(), "unexpected trailing input"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<LaurentPolynomial> {
        let mut acc = LaurentPolynomial::zero(self.dim);
        let mut sign = BigRational::one();
        match self.peek() {
            Some(Tok::Plus) => self.pos += 1,
            Some(Tok::Minus) => {
                self.pos += 1;
                sign = -sign;
            }
            _ => {}
        }
        loop {
            let t = self.product()?;
            acc = acc.add(&t.scale(&sign));
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    sign = BigRational::one();
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = -BigRational::one();
                }
                _ => return Ok(acc),
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Num(_) | Tok::Var(_) | Tok::Param(_) | Tok::Open(_))
        )
    }

    fn product(&mut self) -> Result<LaurentPolynomial> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.power()?;
                    acc = acc.mul(&rhs).map_err(|e| self.wrap(e))?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.here();
                    let rhs = self.power()?;
                    let inv = invert_monomial(&rhs)
                        .map_err(|_| Error::parse(at, "division is only allowed by a monomial"))?;
                    acc = acc.mul(&inv).map_err(|e| self.wrap(e))?;
                }
                _ if self.starts_atom() => {
                    let rhs = self.power()?;
                    acc = acc.mul(&rhs).map_err(|e| self.wrap(e))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn wrap(&self, e: Error) -> Error {
        match e {
            Error::NonAffine => Error::parse(self.here(), "product of two parameters"),
            e => e,
        }
    }

    fn power(&mut self) -> Result<LaurentPolynomial> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.here();
        let k = self.exponent()?;
        if k >= 0 {
            let k = u32::try_from(k).map_err(|_| Error::parse(at, "exponent too large"))?;
            base.pow(k).map_err(|e| self.wrap(e))
        } else {
            let inv = invert_monomial(&base).map_err(|_| Error::parse(at, "negative power of a non-monomial"))?;
            let k = u32::try_from(-k).map_err(|_| Error::parse(at, "exponent too large"))?;
            inv.pow(k).map_err(|e| self.wrap(e))
        }
    }

    fn exponent(&mut self) -> Result<i64> {
        let close = match self.peek() {
            Some(Tok::Open(c)) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        };
        let mut neg = false;
        match self.peek() {
            Some(Tok::Minus) => {
                neg = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let at = self.here();
        let n = match self.peek() {
            Some(Tok::Num(n)) => n.to_i64().ok_or_else(|| Error::parse(at, "exponent too large"))?,
            _ => return Err(Error::parse(at, "expected integer exponent")),
        };
        self.pos += 1;
        if let Some(c) = close {
            self.expect_close(c)?;
        }
        Ok(if neg { -n } else { n })
    }

    fn expect_close(&mut self, open: char) -> Result<()> {
        let want = match open {
            '(' => ')',
            '{' => '}',
            _ => ']',
        };
        match self.peek() {
            Some(Tok::Close(c)) if *c == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::parse(self.here(), format!("expected `{want}`"))),
        }
    }

    fn atom(&mut self) -> Result<LaurentPolynomial> {
        let at = self.here();
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::parse(at, "unexpected end of input"))?;
        self.pos += 1;
        let zero = IntVector::zero(self.dim);
        match tok {
            Tok::Num(n) => Ok(LaurentPolynomial::monomial(
                zero,
                AffineForm::constant(BigRational::from_integer(n)),
            )),
            Tok::Var(i) => Ok(LaurentPolynomial::monomial(
                IntVector::unit(self.dim, i),
                AffineForm::one(),
            )),
            Tok::Param(name) => Ok(LaurentPolynomial::monomial(zero, AffineForm::parameter(&name))),
            Tok::Open(c) => {
                let inner = self.expr()?;
                self.expect_close(c)?;
                Ok(inner)
            }
            _ => Err(Error::parse(at, "expected a term")),
        }
    }
}

/// Inverse of `c · x^e` for a nonzero constant `c`.
fn invert_monomial(p: &LaurentPolynomial) -> Result<LaurentPolynomial> {
    if p.terms.len() != 1 {
        return Err(Error::Unsupported("division by a non-monomial".into()));
    }
    let (e, c) = p.terms.iter().next().unwrap();
    let q = c
        .as_constant()
        .ok_or_else(|| Error::Unsupported("division by a parameter".into()))?;
    Ok(LaurentPolynomial::monomial(-e, AffineForm::constant(q.recip())))
}

/// Mechanical conversion of table-style LaTeX into the polynomial grammar:
/// `\frac{A}{B}` becomes `(A)/(B)`, math delimiters and wrapper macros are
/// dropped.
pub fn delatex(text: &str) -> String {
    let mut s = text.replace('$', "");
    for w in ["\\NotMinkowski", "\\left", "\\right", "\\,", "\\!"] {
        s = s.replace(w, "");
    }
    s = s.replace("\\cdot", "*");
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i..].starts_with(&['\\', 'f', 'r', 'a', 'c']) {
            i += 5;
            let (num, j) = braced(&chars, i);
            let (den, k) = braced(&chars, j);
            out.push('(');
            out.push_str(&delatex(&num));
            out.push_str(")/(");
            out.push_str(&delatex(&den));
            out.push(')');
            i = k;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

fn braced(chars: &[char], mut i: usize) -> (String, usize) {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    if i >= chars.len() || chars[i] != '{' {
        // Single-token argument such as \frac12.
        return (chars.get(i).map(|c| c.to_string()).unwrap_or_default(), i + 1);
    }
    let mut depth = 0;
    let start = i + 1;
    while i < chars.len() {
        match chars[i] {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return (chars[start..i].iter().collect(), i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    (chars[start..].iter().collect(), chars.len())
}

/// Which series a [`PeriodSequence`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PeriodKind {
    /// Constant terms `ct(f^k)`.
    Classical,
    /// `k! · ct(f^k)`.
    Regularized,
}

/// Truncated power series with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodSequence {
    pub coefficients: Vec<BigRational>,
    pub kind: PeriodKind,
}

impl PeriodSequence {
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Reads a classical period as the regularised quantum period of a
    /// mirror partner, which it equals term by term.
    pub fn as_mirror_quantum_period(&self) -> Result<PeriodSequence> {
        if self.kind != PeriodKind::Classical {
            return Err(Error::PeriodKindMismatch);
        }
        Ok(PeriodSequence {
            coefficients: self.coefficients.clone(),
            kind: PeriodKind::Regularized,
        })
    }

    /// Coefficients as integers, if all are integral.
    pub fn integers(&self) -> Option<Vec<BigInt>> {
        self.coefficients
            .iter()
            .map(|q| q.is_integer().then(|| q.to_integer()))
            .collect()
    }
}

impl fmt::Display for PeriodSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.coefficients.iter().map(fmt_rational).collect();
        write!(f, "{}", s.join(" "))
    }
}

type Sparse = Vec<(IntVector, BigInt)>;

/// Merges the sorted lists `g + t` for the terms `t` of `f`, restricted to
/// result exponents in `[lo, hi)`.
fn merge_shifted(
    g: &[(IntVector, BigInt)],
    f: &[(IntVector, BigInt)],
    lo: Option<&IntVector>,
    hi: Option<&IntVector>,
) -> Sparse {
    let mut cursors: Vec<(usize, usize)> = Vec::with_capacity(f.len());
    let mut heap = BinaryHeap::new();
    for (ti, (t, _)) in f.iter().enumerate() {
        let start = match lo {
            Some(l) => {
                let l = l - t;
                g.partition_point(|(e, _)| e < &l)
            }
            None => 0,
        };
        let end = match hi {
            Some(h) => {
                let h = h - t;
                g.partition_point(|(e, _)| e < &h)
            }
            None => g.len(),
        };
        cursors.push((start, end));
        if start < end {
            heap.push(Reverse((&g[start].0 + t, ti)));
        }
    }
    let mut out: Sparse = Vec::new();
    while let Some(Reverse((key, ti))) = heap.pop() {
        let (pos, end) = cursors[ti];
        let c = &g[pos].1 * &f[ti].1;
        match out.last_mut() {
            Some((k, acc)) if *k == key => *acc += c,
            _ => {
                if out.last().is_some_and(|(_, a)| a.is_zero()) {
                    out.pop();
                }
                out.push((key, c));
            }
        }
        if pos + 1 < end {
            cursors[ti].0 = pos + 1;
            heap.push(Reverse((&g[pos + 1].0 + &f[ti].0, ti)));
        }
    }
    if out.last().is_some_and(|(_, a)| a.is_zero()) {
        out.pop();
    }
    out
}

/// Exact sparse product of sorted integer polynomials; the exponent range
/// is split into independent chunks in parallel mode.
fn mul_sparse(g: &Sparse, f: &Sparse, mode: ExecMode) -> Sparse {
    let chunks = mode.chunks(g.len() * f.len(), 4096);
    if chunks <= 1 {
        return merge_shifted(g, f, None, None);
    }
    let t0 = &f[0].0;
    let mut pivots: Vec<IntVector> = (1..chunks).map(|i| &g[i * g.len() / chunks].0 + t0).collect();
    pivots.dedup();
    let mut bounds: Vec<(Option<IntVector>, Option<IntVector>)> = Vec::new();
    let mut prev: Option<IntVector> = None;
    for p in pivots {
        bounds.push((prev.clone(), Some(p.clone())));
        prev = Some(p);
    }
    bounds.push((prev, None));
    let parts = crate::par::map(mode, &bounds, |(lo, hi)| merge_shifted(g, f, lo.as_ref(), hi.as_ref()));
    parts.into_iter().flatten().collect()
}

/// Classical period `ct(f^k)` for `k = 0..=order`.
pub fn classical_period(f: &LaurentPolynomial, order: usize) -> Result<PeriodSequence> {
    classical_period_with(f, order, ExecMode::default())
}

/// [`classical_period`] with an explicit execution mode.
pub fn classical_period_with(f: &LaurentPolynomial, order: usize, mode: ExecMode) -> Result<PeriodSequence> {
    let (fi, den) = f.integer_terms()?;
    let zero = IntVector::zero(f.dim());
    let mut coefficients = vec![BigRational::one()];
    let mut g: Sparse = vec![(zero.clone(), BigInt::one())];
    let mut den_k = BigInt::one();
    for k in 1..=order {
        den_k *= &den;
        if k == order {
            // Only the constant term of the last power is needed.
            let mut ct = BigInt::zero();
            for (t, c) in &fi {
                let want = -t;
                if let Ok(i) = g.binary_search_by(|(e, _)| e.cmp(&want)) {
                    ct += &g[i].1 * c;
                }
            }
            coefficients.push(BigRational::new(ct, den_k.clone()));
            break;
        }
        g = mul_sparse(&g, &fi, mode);
        let ct = g
            .binary_search_by(|(e, _)| e.cmp(&zero))
            .map(|i| g[i].1.clone())
            .unwrap_or_default();
        coefficients.push(BigRational::new(ct, den_k.clone()));
    }
    Ok(PeriodSequence {
        coefficients,
        kind: PeriodKind::Classical,
    })
}

/// Multiplies the `k`-th classical coefficient by `k!`.
pub fn regularize(p: &PeriodSequence) -> Result<PeriodSequence> {
    if p.kind != PeriodKind::Classical {
        return Err(Error::PeriodKindMismatch);
    }
    let mut fact = BigInt::one();
    let coefficients = p
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 0 {
                fact *= k;
            }
            c * BigRational::from_integer(fact.clone())
        })
        .collect();
    Ok(PeriodSequence {
        coefficients,
        kind: PeriodKind::Regularized,
    })
}

/// Term-wise equality up to `min(order, both lengths)`.
pub fn periods_equal(p: &PeriodSequence, q: &PeriodSequence, order: usize) -> Result<bool> {
    if p.kind != q.kind {
        return Err(Error::PeriodKindMismatch);
    }
    let n = (order + 1).min(p.coefficients.len()).min(q.coefficients.len());
    Ok(p.coefficients[..n] == q.coefficients[..n])
}
