//! Small exact-arithmetic helpers: continued-fraction rounding, square rational
//! linear solves, and numbers in `Q(sqrt d)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::term_algebra::{format_rational, Rational};

/// Last continued-fraction convergent of `x` whose denominator does not exceed
/// `max_denominator`. Non-finite input gives zero.
pub fn rationalize(x: f64, max_denominator: u64) -> Rational {
    if !x.is_finite() {
        return Rational::zero();
    }
    let max_den = BigInt::from(max_denominator.max(1));
    let negative = x < 0.0;
    let mut rest = x.abs();
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let ai = BigInt::from(a as u64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > max_den {
            break;
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = rest - a;
        if frac < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    if q1.is_zero() {
        // |x| beyond 1e15: no convergent was formed
        return BigRational::from_integer(BigInt::from(x.round() as i64));
    }
    let r = BigRational::new(p1, q1);
    if negative {
        -r
    } else {
        r
    }
}

/// Solves the square system `a x = b` exactly; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for k in col..n {
            a[col][k] = &a[col][k] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for k in col..n {
                let delta = &factor * &a[col][k];
                a[r][k] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some(b)
}

/// `rational + irrational * sqrt(radicand)` with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub rational: Rational,
    pub irrational: Rational,
    pub radicand: i64,
}

impl QuadraticSurd {
    pub fn new(rational: Rational, irrational: Rational, radicand: i64) -> Self {
        Self {
            rational,
            irrational,
            radicand,
        }
    }

    pub fn from_rational(q: Rational, radicand: i64) -> Self {
        Self::new(q, Rational::zero(), radicand)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.radicand, other.radicand);
        Self::new(
            &self.rational + &other.rational,
            &self.irrational + &other.irrational,
            self.radicand,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.radicand, other.radicand);
        let d = Rational::from_integer(self.radicand.into());
        Self::new(
            &self.rational * &other.rational + &self.irrational * &other.irrational * d,
            &self.rational * &other.irrational + &self.irrational * &other.rational,
            self.radicand,
        )
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self::new(&self.rational * q, &self.irrational * q, self.radicand)
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.rational.to_f64().unwrap_or(f64::NAN)
            + self.irrational.to_f64().unwrap_or(f64::NAN) * (self.radicand as f64).sqrt()
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.irrational.is_negative() {
            "-"
        } else {
            "+"
        };
        write!(
            f,
            "{} {sign} {}*sqrt({})",
            format_rational(&self.rational),
            format_rational(&self.irrational.abs()),
            self.radicand
        )
    }
}
