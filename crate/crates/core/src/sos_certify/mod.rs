//! Sum-of-squares sign certificates for the canonical entropy derivatives.
//!
//! A certificate for order `n` writes `sign * C_n` (with `sign = (-1)^(n+1)`)
//! as `f * (sum_i c_i B_i)^2` summed over squares plus a remainder whose
//! monomials have only even exponents. The `B_i` run over the partition basis
//! of weight `n`: partition `(l_1, ..., l_r)` gives `f_l1 ... f_lr / f^r`.

mod exact;
mod search;

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ibp_reduce::{entropy_derivative, reduce, ReduceError};
use crate::partitions::partitions;
use crate::term_algebra::{
    format_rational, parse_rational, rat, Combination, DerivMonomial, Rational, TermError,
};

pub use exact::{rationalize, solve_square, QuadraticSurd};
pub use search::{search_certificate, CandidatePoint, SearchConfig, SearchOutcome};

#[derive(Debug, Error)]
pub enum SosError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("invalid certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("order must be at least {min}, got {got}")]
    InvalidOrder { min: u32, got: u32 },
}

/// One monomial per partition of `n`, ordered by decreasing largest part and
/// then decreasing lexicographically. Partition `(l_1, ..., l_r)` is stored as
/// the weight-`n` monomial with factors `f_l1 ... f_lr`; inside a square it
/// denotes that product over `f^r`.
pub fn square_basis(n: u32) -> Vec<DerivMonomial> {
    partitions(n)
        .into_iter()
        .map(|p| {
            DerivMonomial::from_exponents(p.into_iter().map(|m| (m, 1)))
                .expect("partition parts are positive")
        })
        .collect()
}

/// `f1 f3/f^2` style label of a basis element in its square context.
pub fn basis_label(b: &DerivMonomial) -> String {
    match b.degree() {
        1 => format!("{}/f", b.numerator_string()),
        r => format!("{}/f^{r}", b.numerator_string()),
    }
}

/// Inverse of [`basis_label`]; the bare product `f1 f3` is accepted as well.
pub fn parse_basis_label(s: &str) -> Result<DerivMonomial, TermError> {
    let numerator = s.split_once('/').map_or(s, |(n, _)| n);
    let factors = numerator
        .split_whitespace()
        .map(|tok| crate::term_algebra::parse_factor(tok, s))
        .collect::<Result<Vec<_>, _>>()?;
    if factors.is_empty() {
        return Err(TermError::Parse {
            input: s.to_string(),
            reason: "empty basis element".into(),
        });
    }
    let b = DerivMonomial::from_exponents(factors)?;
    if let Some((_, den)) = s.split_once('/') {
        let den = den.trim();
        let power = match den {
            "f" => Some(1),
            d => d.strip_prefix("f^").and_then(|p| p.parse::<u32>().ok()),
        };
        if power != Some(b.degree()) {
            return Err(TermError::Parse {
                input: s.to_string(),
                reason: format!(
                    "a square basis element with {} factors is over f^{}",
                    b.degree(),
                    b.degree()
                ),
            });
        }
    }
    Ok(b)
}

/// `f * (sum c_i B_i)^2` over partition-basis monomials of a common weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareForm {
    order: u32,
    terms: Vec<(DerivMonomial, Rational)>,
}

impl SquareForm {
    pub fn new(order: u32, terms: Vec<(DerivMonomial, Rational)>) -> Result<Self, SosError> {
        for (b, _) in &terms {
            if b.weight() != order || b.is_density() {
                return Err(SosError::Malformed(format!(
                    "basis element {} does not have weight {order}",
                    basis_label(b)
                )));
            }
        }
        Ok(Self { order, terms })
    }

    /// Coefficients listed against [`square_basis`]`(order)`; trailing entries
    /// may be omitted, zeros are dropped.
    pub fn from_basis_coeffs(order: u32, coeffs: &[Rational]) -> Result<Self, SosError> {
        let basis = square_basis(order);
        if coeffs.len() > basis.len() {
            return Err(SosError::Malformed(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                basis.len()
            )));
        }
        let terms = basis
            .into_iter()
            .zip(coeffs.iter().cloned())
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Self::new(order, terms)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[(DerivMonomial, Rational)] {
        &self.terms
    }

    pub fn negated(&self) -> Self {
        Self {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(b, c)| (b.clone(), -c.clone()))
                .collect(),
        }
    }

    /// The square multiplied out, before any integration by parts.
    pub fn expand_unreduced(&self) -> Combination {
        let mut out = Combination::zero();
        for (bi, ci) in &self.terms {
            for (bj, cj) in &self.terms {
                out.add_term(bi.product(bj), ci * cj);
            }
        }
        out
    }
}

impl fmt::Display for SquareForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f (")?;
        for (i, (b, c)) in self.terms.iter().enumerate() {
            let sep = match (i, c.is_negative()) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            write!(f, "{sep}{} {}", format_rational(&c.abs()), basis_label(b))?;
        }
        write!(f, ")^2")
    }
}

/// The square expanded into canonical coordinates.
pub fn expand_square(s: &SquareForm) -> Result<Combination, SosError> {
    Ok(reduce(&s.expand_unreduced())?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub order: u32,
    pub sign: i32,
    pub squares: Vec<SquareForm>,
    pub remainder: Combination,
}

impl Certificate {
    /// Sign of `d^n h / dt^n` claimed for every input: `(-1)^(n+1)`.
    pub fn expected_sign(order: u32) -> i32 {
        if order % 2 == 1 {
            1
        } else {
            -1
        }
    }

    /// Checks the structural invariants: correct sign, squares of weight `n`,
    /// remainder of weight `2n` with even exponents and nonnegative coefficients.
    pub fn validate(&self) -> Result<(), SosError> {
        if self.order == 0 {
            return Err(SosError::InvalidOrder { min: 1, got: 0 });
        }
        if self.sign != Self::expected_sign(self.order) {
            return Err(SosError::Malformed(format!(
                "sign {} for order {} (expected {})",
                self.sign,
                self.order,
                Self::expected_sign(self.order)
            )));
        }
        if let Some(s) = self.squares.iter().find(|s| s.order != self.order) {
            return Err(SosError::Malformed(format!(
                "square of weight {} in an order-{} certificate",
                s.order, self.order
            )));
        }
        for (m, c) in self.remainder.iter() {
            if !m.all_exponents_even() {
                return Err(SosError::Malformed(format!(
                    "remainder monomial {m} is not manifestly nonnegative"
                )));
            }
            if c.is_negative() {
                return Err(SosError::Malformed(format!(
                    "remainder coefficient {} on {m} is negative",
                    format_rational(c)
                )));
            }
            if m.weight() != 2 * self.order {
                return Err(SosError::Malformed(format!(
                    "remainder monomial {m} has weight {} (expected {})",
                    m.weight(),
                    2 * self.order
                )));
            }
        }
        Ok(())
    }

    /// `sign * (sum of squares + remainder)` in canonical coordinates.
    pub fn represented(&self) -> Result<Combination, SosError> {
        let mut total = reduce(&self.remainder)?;
        for s in &self.squares {
            total += &expand_square(s)?;
        }
        Ok(total.scaled(&Rational::from_integer(self.sign.into())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CertificateJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, SosError> {
        let raw: CertificateJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lead = if self.sign > 0 { "" } else { "-" };
        writeln!(
            f,
            "2 d^{} h/dt^{} = {lead}integral of",
            self.order, self.order
        )?;
        for s in &self.squares {
            writeln!(f, "    {s}")?;
        }
        for (m, c) in self.remainder.iter() {
            writeln!(f, "    {} {m}", format_rational(c))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    order: u32,
    sign: i32,
    squares: Vec<Vec<(String, String)>>,
    remainder: Vec<(String, String)>,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        Self {
            order: c.order,
            sign: c.sign,
            squares: c
                .squares
                .iter()
                .map(|s| {
                    s.terms
                        .iter()
                        .map(|(b, q)| (basis_label(b), format_rational(q)))
                        .collect()
                })
                .collect(),
            remainder: c
                .remainder
                .iter()
                .map(|(m, q)| (m.to_string(), format_rational(q)))
                .collect(),
        }
    }
}

impl TryFrom<CertificateJson> for Certificate {
    type Error = SosError;

    fn try_from(raw: CertificateJson) -> Result<Self, SosError> {
        let mut squares = Vec::with_capacity(raw.squares.len());
        for sq in raw.squares {
            let mut terms = Vec::with_capacity(sq.len());
            for (b, q) in sq {
                terms.push((parse_basis_label(&b)?, parse_rational(&q)?));
            }
            squares.push(SquareForm::new(raw.order, terms)?);
        }
        let mut remainder = Combination::zero();
        for (m, q) in raw.remainder {
            remainder.add_term(m.parse()?, parse_rational(&q)?);
        }
        Ok(Certificate {
            order: raw.order,
            sign: raw.sign,
            squares,
            remainder,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub verified: bool,
    /// `C_n - sign * (squares + remainder)`; zero exactly when verified.
    pub residual: Combination,
}

/// Difference between the canonical derivative and what the certificate
/// represents, without checking the certificate's sign conditions.
pub fn certificate_residual(cert: &Certificate) -> Result<Combination, SosError> {
    let target = entropy_derivative(cert.order)?;
    Ok(&target - &cert.represented()?)
}

/// Exact check of a well-formed certificate.
pub fn verify_certificate(cert: &Certificate) -> Result<Verification, SosError> {
    cert.validate()?;
    let residual = certificate_residual(cert)?;
    Ok(Verification {
        verified: residual.is_zero(),
        residual,
    })
}

fn rem(pairs: &[(&str, Rational)]) -> Combination {
    Combination::from_terms(
        pairs
            .iter()
            .map(|(m, q)| (m.parse().expect("static monomial"), q.clone())),
    )
}

fn square(order: u32, coeffs: &[Rational]) -> SquareForm {
    SquareForm::from_basis_coeffs(order, coeffs).expect("static square")
}

/// `2 h' = integral f (f1/f)^2`.
pub fn de_bruijn_certificate() -> Certificate {
    Certificate {
        order: 1,
        sign: 1,
        squares: vec![square(1, &[rat(1, 1)])],
        remainder: Combination::zero(),
    }
}

/// `2 h'' = -integral f (f2/f - f1^2/f^2)^2`.
pub fn second_derivative_certificate() -> Certificate {
    Certificate {
        order: 2,
        sign: -1,
        squares: vec![square(2, &[rat(1, 1), rat(-1, 1)])],
        remainder: Combination::zero(),
    }
}

/// Third derivative: one square plus `f1^6/(45 f^5)`.
pub fn third_derivative_certificate() -> Certificate {
    Certificate {
        order: 3,
        sign: 1,
        squares: vec![square(3, &[rat(1, 1), rat(-1, 1), rat(1, 3)])],
        remainder: rem(&[("f1^6/f^5", rat(1, 45))]),
    }
}

/// Fourth derivative: three squares and three nonnegative remainder terms.
pub fn fourth_derivative_certificate() -> Certificate {
    Certificate {
        order: 4,
        sign: -1,
        squares: vec![
            square(
                4,
                &[rat(1, 1), rat(-6, 5), rat(-7, 10), rat(8, 5), rat(-1, 2)],
            ),
            square(
                4,
                &[rat(0, 1), rat(2, 5), rat(0, 1), rat(-1, 3), rat(9, 100)],
            ),
            square(
                4,
                &[rat(0, 1), rat(0, 1), rat(0, 1), rat(-4, 100), rat(4, 100)],
            ),
        ],
        remainder: rem(&[
            ("f2^4/f^3", rat(1, 300)),
            ("f1^4 f2^2/f^5", rat(56, 90000)),
            ("f1^8/f^7", rat(13, 70000)),
        ]),
    }
}

/// The certificate shipped for orders 1 through 4.
pub fn known_certificate(order: u32) -> Option<Certificate> {
    match order {
        1 => Some(de_bruijn_certificate()),
        2 => Some(second_derivative_certificate()),
        3 => Some(third_derivative_certificate()),
        4 => Some(fourth_derivative_certificate()),
        _ => None,
    }
}

/// Second-derivative family: squares `(alpha, beta)` and `(0, gamma)` with
/// remainder `(1 - alpha^2) f2^2/f + (-beta^2 - gamma^2 - 4/3 alpha beta - 1/3) f1^4/f^3`.
/// The identity holds for every parameter choice; the sign conditions do not.
pub fn corollary1_certificate(alpha: &Rational, beta: &Rational, gamma: &Rational) -> Certificate {
    let (a, b) = corollary1_coefficients(alpha, beta, gamma);
    Certificate {
        order: 2,
        sign: -1,
        squares: vec![
            square(2, &[alpha.clone(), beta.clone()]),
            square(2, &[Rational::zero(), gamma.clone()]),
        ],
        remainder: rem(&[("f2^2/f", a), ("f1^4/f^3", b)]),
    }
}

fn corollary1_coefficients(
    alpha: &Rational,
    beta: &Rational,
    gamma: &Rational,
) -> (Rational, Rational) {
    let first = Rational::one() - alpha * alpha;
    let second = -(beta * beta) - gamma * gamma - rat(4, 3) * alpha * beta - rat(1, 3);
    (first, second)
}

/// Both remainder coefficients of the second-derivative family are nonnegative.
pub fn check_corollary1(alpha: &Rational, beta: &Rational, gamma: &Rational) -> bool {
    let (a, b) = corollary1_coefficients(alpha, beta, gamma);
    !a.is_negative() && !b.is_negative()
}

/// Third-derivative family: square `(1, -1, beta)` plus
/// `(6 beta - 2) f1^2 f2^2/f^3 + (6/5 - 16/5 beta - beta^2) f1^6/f^5`.
pub fn corollary2_certificate(beta: &Rational) -> Certificate {
    let (a, b) = corollary2_coefficients(beta);
    Certificate {
        order: 3,
        sign: 1,
        squares: vec![square(3, &[rat(1, 1), rat(-1, 1), beta.clone()])],
        remainder: rem(&[("f1^2 f2^2/f^3", a), ("f1^6/f^5", b)]),
    }
}

/// Remainder coefficients `(6 beta - 2, 6/5 - 16/5 beta - beta^2)`.
pub fn corollary2_coefficients(beta: &Rational) -> (Rational, Rational) {
    (
        rat(6, 1) * beta - rat(2, 1),
        rat(6, 5) - rat(16, 5) * beta - beta * beta,
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corollary2Report {
    pub accepted: bool,
    pub coefficients: (Rational, Rational),
    /// `beta = 1/3` collapses the family onto the single-remainder form.
    pub single_remainder: bool,
}

pub fn check_corollary2(beta: &Rational) -> Corollary2Report {
    let coefficients = corollary2_coefficients(beta);
    Corollary2Report {
        accepted: !coefficients.0.is_negative() && !coefficients.1.is_negative(),
        single_remainder: coefficients == (Rational::zero(), rat(1, 45)),
        coefficients,
    }
}

/// Upper end of the admissible interval, `(-8 + sqrt 94)/5`.
pub fn corollary2_upper_endpoint() -> QuadraticSurd {
    QuadraticSurd::new(rat(-8, 5), rat(1, 5), 94)
}

/// Evaluates `6/5 - 16/5 beta - beta^2` at `beta` in `Q(sqrt d)`.
pub fn corollary2_sixth_power_coefficient(beta: &QuadraticSurd) -> QuadraticSurd {
    let d = beta.radicand;
    QuadraticSurd::from_rational(rat(6, 5), d)
        .add(&beta.scale(&rat(-16, 5)))
        .add(&beta.mul(beta).scale(&rat(-1, 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff(c: &Combination, m: &str) -> Rational {
        c.coeff(&m.parse().unwrap())
    }

    #[test]
    fn basis_examples() {
        let labels = |n| square_basis(n).iter().map(basis_label).collect::<Vec<_>>();
        assert_eq!(labels(2), ["f2/f", "f1^2/f^2"]);
        assert_eq!(labels(3), ["f3/f", "f1 f2/f^2", "f1^3/f^3"]);
        assert_eq!(
            labels(4),
            ["f4/f", "f1 f3/f^2", "f2^2/f^2", "f1^2 f2/f^3", "f1^4/f^4"]
        );
        for n in 1..=6 {
            for b in square_basis(n) {
                assert_eq!(parse_basis_label(&basis_label(&b)).unwrap(), b);
            }
        }
        assert!(parse_basis_label("f1 f3/f^3").is_err());
    }

    #[test]
    fn first_square_expansion() {
        let s = SquareForm::from_basis_coeffs(
            4,
            &[rat(1, 1), rat(-6, 5), rat(-7, 10), rat(8, 5), rat(-1, 2)],
        )
        .unwrap();
        let e = expand_square(&s).unwrap();
        assert_eq!(e.len(), 7);
        assert_eq!(coeff(&e, "f4^2/f"), rat(1, 1));
        assert_eq!(coeff(&e, "f1^2 f3^2/f^3"), rat(-104, 25));
        assert_eq!(coeff(&e, "f2^4/f^3"), rat(899, 300));
        assert_eq!(coeff(&e, "f1^4 f2^2/f^5"), rat(1839, 50));
        assert_eq!(coeff(&e, "f1^8/f^7"), rat(-1837, 140));
        assert_eq!(coeff(&e, "f2 f3^2/f^2"), rat(4, 1));
        assert_eq!(coeff(&e, "f1^2 f2^3/f^4"), rat(-122, 5));
    }

    #[test]
    fn second_and_third_square_expansions() {
        let s = SquareForm::from_basis_coeffs(
            4,
            &[rat(0, 1), rat(2, 5), rat(0, 1), rat(-1, 3), rat(9, 100)],
        )
        .unwrap();
        let e = expand_square(&s).unwrap();
        assert_eq!(
            e,
            Combination::from_text(
                "4/25 f1^2 f3^2/f^3\n-704/900 f1^4 f2^2/f^5\n18567/70000 f1^8/f^7\n2/5 f1^2 f2^3/f^4"
            )
            .unwrap()
        );
        let s = SquareForm::from_basis_coeffs(
            4,
            &[rat(0, 1), rat(0, 1), rat(0, 1), rat(-4, 100), rat(4, 100)],
        )
        .unwrap();
        assert_eq!(
            expand_square(&s).unwrap(),
            Combination::from_text("16/10000 f1^4 f2^2/f^5\n-80/70000 f1^8/f^7").unwrap()
        );
    }

    #[test]
    fn built_in_certificates_verify() {
        for n in 1..=4 {
            let cert = known_certificate(n).unwrap();
            let v = verify_certificate(&cert).unwrap();
            assert!(v.verified, "order {n}: residual {}", v.residual);
        }
        assert!(known_certificate(5).is_none());
    }

    #[test]
    fn perturbed_remainder_is_rejected_with_exact_residual() {
        let mut cert = third_derivative_certificate();
        cert.remainder = rem(&[("f1^6/f^5", rat(1, 44))]);
        let v = verify_certificate(&cert).unwrap();
        assert!(!v.verified);
        assert_eq!(v.residual, rem(&[("f1^6/f^5", rat(1, 45) - rat(1, 44))]));
    }

    #[test]
    fn malformed_certificates_are_errors() {
        let mut cert = third_derivative_certificate();
        cert.sign = -1;
        assert!(matches!(
            verify_certificate(&cert),
            Err(SosError::Malformed(_))
        ));
        let mut cert = third_derivative_certificate();
        cert.remainder = rem(&[("f2^3/f^2", rat(1, 1))]);
        assert!(matches!(
            verify_certificate(&cert),
            Err(SosError::Malformed(_))
        ));
        let mut cert = third_derivative_certificate();
        cert.remainder = rem(&[("f1^6/f^5", rat(-1, 45))]);
        assert!(matches!(
            verify_certificate(&cert),
            Err(SosError::Malformed(_))
        ));
    }

    #[test]
    fn corollary1_examples() {
        assert!(check_corollary1(&rat(1, 1), &rat(-1, 1), &rat(0, 1)));
        assert!(check_corollary1(&rat(1, 1), &rat(-1, 3), &rat(0, 1)));
        assert!(!check_corollary1(&rat(1, 1), &rat(-1, 4), &rat(0, 1)));
        // -(1/16) + 1/3 - 1/3
        let (_, b) = corollary1_coefficients(&rat(1, 1), &rat(-1, 4), &rat(0, 1));
        assert_eq!(b, rat(-1, 16));
    }

    #[test]
    fn corollary1_identity_holds_for_any_parameters() {
        for (a, b, g) in [(1, -1, 0), (1, -2, 3), (-2, 5, 1), (0, 0, 0)] {
            let cert = corollary1_certificate(&rat(a, 1), &rat(b, 7), &rat(g, 3));
            assert!(certificate_residual(&cert).unwrap().is_zero());
        }
    }

    #[test]
    fn corollary2_examples() {
        let r = check_corollary2(&rat(1, 3));
        assert!(r.accepted && r.single_remainder);
        assert_eq!(r.coefficients, (rat(0, 1), rat(1, 45)));
        // 6 * 67/200 - 2 = 1/100 and 6/5 - 16*67/1000 - 4489/40000 = 631/40000
        let r = check_corollary2(&rat(67, 200));
        assert!(r.accepted && !r.single_remainder);
        assert_eq!(r.coefficients, (rat(1, 100), rat(631, 40000)));
        assert!(!check_corollary2(&rat(17, 50)).accepted);
        let r = check_corollary2(&rat(1, 2));
        assert!(!r.accepted);
        assert_eq!(r.coefficients.1, rat(-13, 20));
        for beta in [rat(1, 3), rat(17, 50), rat(-3, 7)] {
            assert!(certificate_residual(&corollary2_certificate(&beta))
                .unwrap()
                .is_zero());
        }
    }

    #[test]
    fn corollary2_endpoint_is_a_root() {
        let end = corollary2_upper_endpoint();
        assert!(corollary2_sixth_power_coefficient(&end).is_zero());
        assert!((end.to_f64() - 0.33905).abs() < 1e-4);
    }

    #[test]
    fn json_round_trip() {
        let cert = fourth_derivative_certificate();
        let text = cert.to_json();
        assert!(text.contains("\"f1 f3/f^2\""));
        assert_eq!(Certificate::from_json(&text).unwrap(), cert);
        assert!(Certificate::from_json("{\"order\": 3}").is_err());
    }
}
