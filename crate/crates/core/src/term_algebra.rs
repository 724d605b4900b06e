//! Exact-rational algebra of derivative monomials.
//!
//! A [`DerivMonomial`] stands for `f1^k1 f2^k2 ... / f^(K-1)` where `fm` is the
//! m-th spatial derivative of the density and `K` is the total degree. A
//! [`Combination`] is a finite linear combination of such monomials with
//! arbitrary-precision rational coefficients; it represents an integrand in `y`.
//!
//! Two derivations act on combinations: [`Combination::d_dy`] (product and
//! quotient rule) and [`Combination::d_dt`], which differentiates along the heat
//! flow using `df/dt = f2 / 2`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact coefficient type.
pub type Rational = BigRational;

/// Shorthand for building a small rational constant.
pub fn rat(numer: i64, denom: i64) -> Rational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("derivative order must be positive, got {0}")]
    NonPositiveOrder(i64),
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

fn parse_err(input: &str, reason: impl Into<String>) -> TermError {
    TermError::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Product of spatial density derivatives over the implied power of the density.
///
/// The exponent map is keyed by derivative order; the empty map is `f` itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DerivMonomial {
    exps: BTreeMap<u32, u32>,
}

impl DerivMonomial {
    /// The density `f` itself.
    pub fn density() -> Self {
        Self::default()
    }

    /// Builds a monomial from a multiset of derivative orders, e.g. `[1, 1, 2]`
    /// gives `f1^2 f2/f^2`.
    pub fn from_orders(orders: &[i64]) -> Result<Self, TermError> {
        let mut exps = BTreeMap::new();
        for &m in orders {
            if m < 1 || m > u32::MAX as i64 {
                return Err(TermError::NonPositiveOrder(m));
            }
            *exps.entry(m as u32).or_insert(0) += 1;
        }
        Ok(Self { exps })
    }

    /// Builds a monomial from `(order, exponent)` pairs. Zero exponents are
    /// dropped; zero orders are rejected.
    pub fn from_exponents<I>(pairs: I) -> Result<Self, TermError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut exps = BTreeMap::new();
        for (m, k) in pairs {
            if m == 0 {
                return Err(TermError::NonPositiveOrder(0));
            }
            if k > 0 {
                *exps.entry(m).or_insert(0) += k;
            }
        }
        Ok(Self { exps })
    }

    /// `sum m * k_m`.
    pub fn weight(&self) -> u32 {
        self.exps.iter().map(|(m, k)| m * k).sum()
    }

    /// Total degree `K = sum k_m`.
    pub fn degree(&self) -> u32 {
        self.exps.values().sum()
    }

    /// Power of `f` in the denominator, `K - 1` (which is `-1` for `f` itself).
    pub fn denominator_power(&self) -> i64 {
        self.degree() as i64 - 1
    }

    pub fn is_density(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.exps.keys().next_back().copied()
    }

    pub fn exponent(&self, order: u32) -> u32 {
        self.exps.get(&order).copied().unwrap_or(0)
    }

    /// `(order, exponent)` pairs in increasing order.
    pub fn factors(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.exps.iter().map(|(&m, &k)| (m, k))
    }

    /// Multiset of orders, ascending, e.g. `f1^2 f3` gives `[1, 1, 3]`.
    pub fn orders(&self) -> Vec<u32> {
        self.exps
            .iter()
            .flat_map(|(&m, &k)| std::iter::repeat_n(m, k as usize))
            .collect()
    }

    /// True when every exponent is even, so the monomial is pointwise
    /// nonnegative wherever `f > 0`.
    pub fn all_exponents_even(&self) -> bool {
        self.exps.values().all(|k| k % 2 == 0)
    }

    /// Union of the factor multisets. For square-basis elements `B_i`, `B_j`
    /// (each over `f^(#parts)`) this is exactly `f * B_i * B_j`.
    pub fn product(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (&m, &k) in &other.exps {
            *exps.entry(m).or_insert(0) += k;
        }
        Self { exps }
    }

    /// Adds one factor `f_order`.
    pub fn with_factor(&self, order: u32) -> Self {
        let mut exps = self.exps.clone();
        *exps.entry(order).or_insert(0) += 1;
        Self { exps }
    }

    /// Replaces one factor `f_from` by `f_to`. Panics if `f_from` is absent.
    pub fn replace_factor(&self, from: u32, to: u32) -> Self {
        let mut exps = self.exps.clone();
        let k = exps.get_mut(&from).expect("factor present");
        *k -= 1;
        if *k == 0 {
            exps.remove(&from);
        }
        *exps.entry(to).or_insert(0) += 1;
        Self { exps }
    }

    // (order, exponent) pairs from the highest order down.
    fn descending_key(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.exps.iter().rev().map(|(&m, &k)| (m, k))
    }

    /// Formats the factor product without the denominator, e.g. `f1^2 f3`.
    pub fn numerator_string(&self) -> String {
        if self.exps.is_empty() {
            return "1".to_string();
        }
        self.exps
            .iter()
            .map(|(m, k)| {
                if *k == 1 {
                    format!("f{m}")
                } else {
                    format!("f{m}^{k}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Monomials order highest-derivative first: `f4^2/f` comes before
/// `f2 f3^2/f^2`, which comes before `f1^8/f^7`. This is also the print order.
impl Ord for DerivMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other.descending_key().cmp(self.descending_key())
    }
}

impl PartialOrd for DerivMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DerivMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "f");
        }
        write!(f, "{}", self.numerator_string())?;
        match self.denominator_power() {
            0 => Ok(()),
            p => write!(f, "/f^{p}"),
        }
    }
}

pub(crate) fn parse_factor(token: &str, whole: &str) -> Result<(u32, u32), TermError> {
    let body = token
        .strip_prefix('f')
        .ok_or_else(|| parse_err(whole, format!("factor {token:?} must start with 'f'")))?;
    let (order, exp) = match body.split_once('^') {
        Some((o, e)) => (o, e),
        None => (body, "1"),
    };
    let order: u32 = order
        .parse()
        .map_err(|_| parse_err(whole, format!("bad derivative order in {token:?}")))?;
    let exp: u32 = exp
        .parse()
        .map_err(|_| parse_err(whole, format!("bad exponent in {token:?}")))?;
    if order == 0 {
        return Err(parse_err(whole, "derivative order must be positive"));
    }
    if exp == 0 {
        return Err(parse_err(whole, "exponent must be positive"));
    }
    Ok((order, exp))
}

impl FromStr for DerivMonomial {
    type Err = TermError;

    /// Accepts the display form: `f`, `f1`, `f1^2/f`, `f1^2 f2^2/f^3`. The
    /// denominator, when written, must equal `K - 1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if text == "f" {
            return Ok(Self::density());
        }
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (text, None),
        };
        let mut pairs = Vec::new();
        for tok in num.split(|c: char| c.is_whitespace() || c == '*') {
            if tok.is_empty() {
                continue;
            }
            pairs.push(parse_factor(tok, s)?);
        }
        if pairs.is_empty() {
            return Err(parse_err(s, "empty monomial"));
        }
        let mono = Self::from_exponents(pairs)?;
        let den_power = match den {
            None => 0,
            Some("f") => 1,
            Some(d) => d
                .strip_prefix("f^")
                .and_then(|p| p.trim_matches(|c| c == '(' || c == ')').parse::<i64>().ok())
                .ok_or_else(|| parse_err(s, format!("bad denominator {d:?}")))?,
        };
        if den_power != mono.denominator_power() {
            return Err(parse_err(
                s,
                format!(
                    "denominator f^{den_power} does not match degree {} (expected f^{})",
                    mono.degree(),
                    mono.denominator_power()
                ),
            ));
        }
        Ok(mono)
    }
}

/// Linear combination of monomials with nonzero rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Combination {
    terms: BTreeMap<DerivMonomial, Rational>,
}

impl Combination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(m: DerivMonomial) -> Self {
        Self::term(m, Rational::one())
    }

    pub fn term(m: DerivMonomial, coeff: Rational) -> Self {
        let mut c = Self::zero();
        c.add_term(m, coeff);
        c
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (DerivMonomial, Rational)>,
    {
        let mut c = Self::zero();
        for (m, q) in terms {
            c.add_term(m, q);
        }
        c
    }

    /// Adds `coeff * m`, dropping the entry if it cancels.
    pub fn add_term(&mut self, m: DerivMonomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Adds `scale * other` in place.
    pub fn add_scaled(&mut self, other: &Combination, scale: &Rational) {
        if scale.is_zero() {
            return;
        }
        for (m, q) in &other.terms {
            self.add_term(m.clone(), q * scale);
        }
    }

    pub fn scaled(&self, scale: &Rational) -> Self {
        if scale.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), q * scale))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &DerivMonomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Terms in print order (highest derivative first).
    pub fn iter(&self) -> impl Iterator<Item = (&DerivMonomial, &Rational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &DerivMonomial> {
        self.terms.keys()
    }

    /// The common weight of all terms, if there is one.
    pub fn homogeneous_weight(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(DerivMonomial::weight);
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    /// y-derivative: each factor `fm` becomes `f(m+1)`, and the denominator
    /// `f^(K-1)` contributes `-(K-1) * f1 * M`.
    pub fn d_dy(&self) -> Self {
        let mut out = Self::zero();
        for (m, q) in &self.terms {
            for (order, k) in m.factors() {
                out.add_term(
                    m.replace_factor(order, order + 1),
                    q * Rational::from_integer(k.into()),
                );
            }
            let den = m.denominator_power();
            if den != 0 {
                out.add_term(m.with_factor(1), q * Rational::from_integer((-den).into()));
            }
        }
        out
    }

    /// t-derivative along the heat flow: `d fm/dt = f(m+2)/2` for every factor
    /// and `df/dt = f2/2` in the denominator.
    pub fn d_dt(&self) -> Self {
        let half = rat(1, 2);
        let mut out = Self::zero();
        for (m, q) in &self.terms {
            let qh = q * &half;
            for (order, k) in m.factors() {
                out.add_term(
                    m.replace_factor(order, order + 2),
                    &qh * Rational::from_integer(k.into()),
                );
            }
            let den = m.denominator_power();
            if den != 0 {
                out.add_term(
                    m.with_factor(2),
                    &qh * Rational::from_integer((-den).into()),
                );
            }
        }
        out
    }

    /// One term per line, `<coeff> <monomial>`, in print order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (m, q) in &self.terms {
            s.push_str(&format!("{} {}\n", format_rational(q), m));
        }
        s
    }

    /// Inverse of [`Combination::to_text`]; each line may also hold a signed
    /// sum in the single-line display form. Blank lines and `#` comments are
    /// ignored.
    pub fn from_text(text: &str) -> Result<Self, TermError> {
        let mut c = Self::zero();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            c += &Self::parse_line(line)?;
        }
        Ok(c)
    }

    /// `[-]c1 M1 (+|-) c2 M2 ...` where coefficients are optional.
    fn parse_line(line: &str) -> Result<Self, TermError> {
        if line == "0" {
            return Ok(Self::zero());
        }
        let mut c = Self::zero();
        let mut sign = Rational::one();
        let mut coeff: Option<Rational> = None;
        let mut mono: Vec<&str> = Vec::new();
        let mut flush = |sign: &Rational, coeff: &mut Option<Rational>, mono: &mut Vec<&str>| {
            if mono.is_empty() {
                return if coeff.is_some() {
                    Err(parse_err(line, "coefficient without a monomial"))
                } else {
                    Ok(())
                };
            }
            let m: DerivMonomial = mono.join(" ").parse()?;
            let q = coeff.take().unwrap_or_else(Rational::one) * sign;
            c.add_term(m, q);
            mono.clear();
            Ok(())
        };
        for tok in line.split_whitespace() {
            match tok {
                "+" | "-" => {
                    flush(&sign, &mut coeff, &mut mono)?;
                    sign = if tok == "-" {
                        -Rational::one()
                    } else {
                        Rational::one()
                    };
                }
                _ if mono.is_empty()
                    && coeff.is_none()
                    && !tok.trim_start_matches(['-', '+']).starts_with('f') =>
                {
                    coeff = Some(parse_rational(tok)?);
                }
                _ if mono.is_empty() && tok.starts_with('-') => {
                    sign = -sign;
                    mono.push(&tok[1..]);
                }
                _ => mono.push(tok),
            }
        }
        flush(&sign, &mut coeff, &mut mono)?;
        Ok(c)
    }
}

/// `p/q`, or `p` when `q = 1`.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p`, `p/q` or `-p/q`.
pub fn parse_rational(s: &str) -> Result<Rational, TermError> {
    let s = s.trim();
    let bad = || parse_err(s, "expected a rational p/q");
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.trim_start_matches('+').parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(parse_err(s, "zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

impl fmt::Display for Combination {
    /// Single-line form, e.g. `f3^2/f^1 + f2^3/f^2 - 3 f1^2 f2^2/f^3 + 6/5 f1^6/f^5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let abs = q.abs();
            let mono = if m.denominator_power() == 1 {
                format!("{}/f^1", m.numerator_string())
            } else {
                m.to_string()
            };
            if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{} {mono}", format_rational(&abs))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Combination {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_text(s)
    }
}

impl Add<&Combination> for &Combination {
    type Output = Combination;
    fn add(self, rhs: &Combination) -> Combination {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Combination> for &Combination {
    type Output = Combination;
    fn sub(self, rhs: &Combination) -> Combination {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Combination> for Combination {
    fn add_assign(&mut self, rhs: &Combination) {
        for (m, q) in &rhs.terms {
            self.add_term(m.clone(), q.clone());
        }
    }
}

impl SubAssign<&Combination> for Combination {
    fn sub_assign(&mut self, rhs: &Combination) {
        for (m, q) in &rhs.terms {
            self.add_term(m.clone(), -q.clone());
        }
    }
}

impl Neg for &Combination {
    type Output = Combination;
    fn neg(self) -> Combination {
        self.scaled(&-Rational::one())
    }
}

impl Mul<&Rational> for &Combination {
    type Output = Combination;
    fn mul(self, rhs: &Rational) -> Combination {
        self.scaled(rhs)
    }
}
