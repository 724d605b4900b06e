//! Integration-by-parts reduction to the canonical basis.
//!
//! A monomial is canonical when its highest-order derivative appears with
//! exponent at least two. Any other monomial `R * f(m-1)^e * fm / f^(K-1)` is
//! the remainder of a total derivative: with `N = R * f(m-1)^(e+1) / f^(K-1)`,
//! `d/dy N` contains `(e+1) * M` exactly, so under the integral
//! `M == M - d/dy(N) / (e+1)`. Boundary terms vanish for the heat-flow
//! densities and are dropped. Every rewrite strictly lowers the maximal order
//! of the terms it introduces, and the weight of every term is preserved.

use num_traits::Zero;
use thiserror::Error;

use crate::term_algebra::{Combination, DerivMonomial, Rational};

/// Rewrites allowed per input term before reduction is declared stuck.
pub const DEFAULT_STEP_BOUND: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error(
        "reduction did not reach canonical form within {bound} rewrites (last rewritten: {last})"
    )]
    DepthExceeded { bound: usize, last: String },
    #[error("derivative order must be at least 1, got {0}")]
    InvalidOrder(u32),
}

/// True when the highest-order derivative of `m` has exponent at least two
/// (this includes the pure powers `f1^K/f^(K-1)` with `K >= 2`). The density
/// `f` itself is treated as canonical.
pub fn is_canonical(m: &DerivMonomial) -> bool {
    match m.max_order() {
        None => true,
        Some(top) => m.exponent(top) >= 2,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `f1` is `d/dy f`; its integral is zero.
    TotalDerivative,
    /// `M -> M - d/dy(antiderivative) / multiplicity`.
    IntegrateByParts {
        antiderivative: DerivMonomial,
        multiplicity: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub monomial: DerivMonomial,
    /// Coefficient of `monomial` in the working combination when rewritten.
    pub coefficient: Rational,
    pub rule: Rule,
    /// What one unit of `monomial` was replaced by.
    pub replacement: Combination,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub result: Combination,
}

impl ReductionTrace {
    /// Re-applies the recorded rewrites to `input`.
    pub fn replay(&self, input: &Combination) -> Combination {
        let mut work = input.clone();
        for step in &self.steps {
            let unit = Combination::monomial(step.monomial.clone());
            work.add_scaled(&unit, &-step.coefficient.clone());
            work.add_scaled(&step.replacement, &step.coefficient);
        }
        work
    }
}

/// The single-monomial rewrite. Returns `None` for canonical monomials.
pub fn rewrite(m: &DerivMonomial) -> Option<(Rule, Combination)> {
    if is_canonical(m) {
        return None;
    }
    let top = m
        .max_order()
        .expect("non-canonical monomials are non-empty");
    if top == 1 {
        // exponent one on f1 and nothing below it: the monomial is f1 itself
        return Some((Rule::TotalDerivative, Combination::zero()));
    }
    let e = m.exponent(top - 1);
    let anti = m.replace_factor(top, top - 1);
    let mult = e + 1;
    let mut out = Combination::monomial(m.clone());
    let d = Combination::monomial(anti.clone()).d_dy();
    out.add_scaled(&d, &-Rational::new(1.into(), mult.into()));
    debug_assert!(out.coeff(m).is_zero());
    Some((
        Rule::IntegrateByParts {
            antiderivative: anti,
            multiplicity: mult,
        },
        out,
    ))
}

// Largest maximal order first, then larger degree, then print order.
fn priority_key(m: &DerivMonomial) -> (u32, u32) {
    (m.max_order().unwrap_or(0), m.degree())
}

#[derive(Clone, Debug)]
pub struct Reducer {
    step_bound: usize,
}

impl Default for Reducer {
    fn default() -> Self {
        Self {
            step_bound: DEFAULT_STEP_BOUND,
        }
    }
}

impl Reducer {
    pub fn with_step_bound(step_bound: usize) -> Self {
        Self { step_bound }
    }

    pub fn reduce(&self, c: &Combination) -> Result<Combination, ReduceError> {
        self.run(c, false).map(|t| t.result)
    }

    pub fn reduce_traced(&self, c: &Combination) -> Result<ReductionTrace, ReduceError> {
        self.run(c, true)
    }

    fn run(&self, input: &Combination, record: bool) -> Result<ReductionTrace, ReduceError> {
        let bound = self.step_bound.saturating_mul(input.len().max(1));
        let mut work = input.clone();
        let mut steps = Vec::new();
        let mut count = 0usize;
        loop {
            let next = work
                .monomials()
                .filter(|m| !is_canonical(m))
                .fold(None::<&DerivMonomial>, |best, m| match best {
                    None => Some(m),
                    Some(b) => {
                        // BTreeMap order puts higher derivatives first, so a
                        // strict comparison keeps the earliest on ties
                        if priority_key(m) > priority_key(b) {
                            Some(m)
                        } else {
                            Some(b)
                        }
                    }
                })
                .cloned();
            let Some(m) = next else { break };
            if count >= bound {
                return Err(ReduceError::DepthExceeded {
                    bound,
                    last: m.to_string(),
                });
            }
            count += 1;
            let coeff = work.coeff(&m);
            let (rule, replacement) = rewrite(&m).expect("selected monomial is non-canonical");
            work.add_term(m.clone(), -coeff.clone());
            work.add_scaled(&replacement, &coeff);
            if record {
                steps.push(ReductionStep {
                    monomial: m,
                    coefficient: coeff,
                    rule,
                    replacement,
                });
            }
        }
        Ok(ReductionTrace {
            steps,
            result: work,
        })
    }
}

/// Reduces with the default step bound.
pub fn reduce(c: &Combination) -> Result<Combination, ReduceError> {
    Reducer::default().reduce(c)
}

/// Canonical integrand `C_n` with `integral C_n dy = 2 d^n h(Y_t) / dt^n`.
///
/// `C_1 = f1^2/f` (twice the de Bruijn derivative) and
/// `C_(n+1) = reduce(d/dt C_n)`.
pub fn entropy_derivative(n: u32) -> Result<Combination, ReduceError> {
    Ok(entropy_derivatives(n)?.pop().expect("n >= 1"))
}

/// `[C_1, ..., C_n]`.
pub fn entropy_derivatives(n: u32) -> Result<Vec<Combination>, ReduceError> {
    if n == 0 {
        return Err(ReduceError::InvalidOrder(n));
    }
    let mut out = vec![Combination::monomial(
        DerivMonomial::from_orders(&[1, 1]).expect("valid orders"),
    )];
    for _ in 1..n {
        let next = reduce(&out.last().expect("non-empty").d_dt())?;
        out.push(next);
    }
    Ok(out)
}

/// One integration-by-parts identity `integral lhs = integral rhs`.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub label: &'static str,
    pub lhs: DerivMonomial,
    pub expected: Combination,
    pub residual: Combination,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_zero()
    }
}

/// The four weight-6 and nine weight-8 identities used to reach the third and
/// fourth derivatives, as `(label, lhs, rhs)` in the one-term-per-line format.
pub const IBP_IDENTITIES: [(&str, &str, &str); 13] = [
    ("w6.1", "f1^4 f2/f^4", "4/5 f1^6/f^5"),
    ("w6.2", "f1^3 f3/f^3", "-3 f1^2 f2^2/f^3\n12/5 f1^6/f^5"),
    ("w6.3", "f1 f2 f3/f^2", "-1/2 f2^3/f^2\n1 f1^2 f2^2/f^3"),
    (
        "w6.4",
        "f2 f4/f",
        "-1 f3^2/f\n-1/2 f2^3/f^2\n1 f1^2 f2^2/f^3",
    ),
    ("w8.1", "f1^6 f2/f^6", "6/7 f1^8/f^7"),
    ("w8.2", "f1^5 f3/f^5", "-5 f1^4 f2^2/f^5\n30/7 f1^8/f^7"),
    (
        "w8.3",
        "f1^3 f2 f3/f^4",
        "-3/2 f1^2 f2^3/f^4\n2 f1^4 f2^2/f^5",
    ),
    ("w8.4", "f1 f2^2 f3/f^3", "-1/3 f2^4/f^3\n1 f1^2 f2^3/f^4"),
    (
        "w8.5",
        "f1^4 f4/f^4",
        "6 f1^2 f2^3/f^4\n-28 f1^4 f2^2/f^5\n120/7 f1^8/f^7",
    ),
    (
        "w8.6",
        "f1^2 f2 f4/f^3",
        "2/3 f2^4/f^3\n-13/2 f1^2 f2^3/f^4\n-1 f1^2 f3^2/f^3\n6 f1^4 f2^2/f^5",
    ),
    (
        "w8.7",
        "f2^2 f4/f^2",
        "-2 f2 f3^2/f^2\n-2/3 f2^4/f^3\n2 f1^2 f2^3/f^4",
    ),
    ("w8.8", "f1 f3 f4/f^2", "-1/2 f2 f3^2/f^2\n1 f1^2 f3^2/f^3"),
    (
        "w8.9",
        "f3 f5/f",
        "-1 f4^2/f\n-1/2 f2 f3^2/f^2\n1 f1^2 f3^2/f^3",
    ),
];

/// Reduces the left side of each identity and compares with the right side.
pub fn verify_lemma_identities() -> Result<Vec<IdentityCheck>, ReduceError> {
    IBP_IDENTITIES
        .iter()
        .map(|(label, lhs, rhs)| {
            let lhs: DerivMonomial = lhs.parse().expect("static identity table parses");
            let expected = Combination::from_text(rhs).expect("static identity table parses");
            let reduced = reduce(&Combination::monomial(lhs.clone()))?;
            Ok(IdentityCheck {
                label,
                lhs,
                residual: &reduced - &expected,
                expected,
            })
        })
        .collect()
}

/// True when every monomial of `c` is canonical.
pub fn is_reduced(c: &Combination) -> bool {
    c.monomials().all(is_canonical)
}

/// Coefficient lookup that treats a missing monomial as zero; convenient for
/// comparing against displayed coefficient lists.
pub fn coefficient_of(c: &Combination, m: &str) -> Rational {
    c.coeff(&m.parse().expect("valid monomial"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term_algebra::rat;

    fn c(s: &str) -> Combination {
        Combination::from_text(s).unwrap()
    }

    fn mono(s: &str) -> DerivMonomial {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_examples() {
        assert!(!is_canonical(&mono("f2 f4/f")));
        assert!(is_canonical(&mono("f3^2/f")));
        assert!(is_canonical(&mono("f1^6/f^5")));
        assert!(!is_canonical(&mono("f1")));
        assert!(!is_canonical(&mono("f1^4 f2/f^4")));
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&c("1 f1^4 f2/f^4")).unwrap(), c("4/5 f1^6/f^5"));
        assert_eq!(
            reduce(&c("1 f2 f4/f")).unwrap(),
            c("-1 f3^2/f\n-1/2 f2^3/f^2\n1 f1^2 f2^2/f^3")
        );
        assert_eq!(
            reduce(&c("1 f3 f5/f")).unwrap(),
            c("-1 f4^2/f\n-1/2 f2 f3^2/f^2\n1 f1^2 f3^2/f^3")
        );
        assert!(reduce(&c("1 f1")).unwrap().is_zero());
    }

    #[test]
    fn second_derivative_pieces() {
        assert_eq!(reduce(&c("1 f1^2 f2/f^2")).unwrap(), c("2/3 f1^4/f^3"));
        assert_eq!(
            reduce(&c("1 f1 f3/f")).unwrap(),
            c("-1 f2^2/f\n2/3 f1^4/f^3")
        );
    }

    #[test]
    fn total_derivatives_reduce_to_zero() {
        for s in ["f2", "f3", "f1 f2/f", "f5"] {
            let d = Combination::monomial(mono(s)).d_dy();
            assert!(reduce(&d).unwrap().is_zero(), "d/dy {s}");
        }
    }

    #[test]
    fn entropy_derivatives_match_displays() {
        assert_eq!(entropy_derivative(1).unwrap(), c("1 f1^2/f"));
        assert_eq!(entropy_derivative(2).unwrap(), c("-1 f2^2/f\n1/3 f1^4/f^3"));
        assert_eq!(
            entropy_derivative(3).unwrap(),
            c("1 f3^2/f\n1 f2^3/f^2\n-3 f1^2 f2^2/f^3\n6/5 f1^6/f^5")
        );
        assert_eq!(
            entropy_derivative(4).unwrap(),
            c("-1 f4^2/f\n-4 f2 f3^2/f^2\n4 f1^2 f3^2/f^3\n-3 f2^4/f^3\n\
               24 f1^2 f2^3/f^4\n-36 f1^4 f2^2/f^5\n90/7 f1^8/f^7")
        );
        assert_eq!(entropy_derivative(0), Err(ReduceError::InvalidOrder(0)));
    }

    #[test]
    fn fifth_derivative_is_canonical_and_homogeneous() {
        let c5 = entropy_derivative(5).unwrap();
        assert!(is_reduced(&c5));
        assert_eq!(c5.homogeneous_weight(), Some(10));
        assert_eq!(c5.coeff(&mono("f5^2/f")), rat(1, 1));
    }

    #[test]
    fn all_lemma_identities_hold() {
        let report = verify_lemma_identities().unwrap();
        assert_eq!(report.len(), 13);
        for row in &report {
            assert!(
                row.passed(),
                "identity {} residual {}",
                row.label,
                row.residual
            );
        }
    }

    #[test]
    fn trace_replays_to_result() {
        let input = entropy_derivative(3).unwrap().d_dt();
        let trace = Reducer::default().reduce_traced(&input).unwrap();
        assert!(!trace.steps.is_empty());
        assert_eq!(trace.replay(&input), trace.result);
        assert_eq!(trace.result, entropy_derivative(4).unwrap());
        // the first rewrite targets the highest derivative present
        assert_eq!(trace.steps[0].monomial.max_order(), Some(5));
    }

    #[test]
    fn step_bound_is_enforced() {
        let err = Reducer::with_step_bound(1)
            .reduce(&c("1 f3 f5/f"))
            .unwrap_err();
        assert!(matches!(err, ReduceError::DepthExceeded { .. }));
    }
}
