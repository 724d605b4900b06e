//! Randomized invariants, shared with the CLI acceptance suite.
#![allow(dead_code)]

use heatcalc_core::gauss_oracle::{functional, functionals, Component, GaussianMixture};
use heatcalc_core::ibp_reduce::{entropy_derivatives, is_reduced, reduce};
use heatcalc_core::sos_certify::{
    certificate_residual, corollary1_certificate, expand_square, square_basis, SquareForm,
};
use heatcalc_core::{rat, Combination, DerivMonomial, Rational};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

/// A multiset of derivative orders summing to exactly `weight`.
fn orders_of_weight(weight: u32) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1u32..=weight.max(1), 1..=weight.max(1) as usize).prop_map(move |raw| {
        let mut left = weight;
        let mut out = Vec::new();
        for o in raw {
            if left == 0 {
                break;
            }
            let o = o.min(left);
            out.push(o as i64);
            left -= o;
        }
        if left > 0 {
            out.push(left as i64);
        }
        out
    })
}

fn coeff() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=6)
        .prop_filter("nonzero", |(n, _)| *n != 0)
        .prop_map(|(n, d)| rat(n, d))
}

fn homogeneous(weight: u32) -> impl Strategy<Value = Combination> {
    prop::collection::vec((orders_of_weight(weight), coeff()), 1..5).prop_map(|terms| {
        Combination::from_terms(
            terms
                .into_iter()
                .map(|(o, q)| (DerivMonomial::from_orders(&o).expect("positive orders"), q)),
        )
    })
}

fn combination() -> impl Strategy<Value = Combination> {
    (1u32..=8).prop_flat_map(homogeneous)
}

fn mixture() -> impl Strategy<Value = GaussianMixture> {
    prop::collection::vec((0.2f64..1.0, -3.0f64..3.0, 0.2f64..2.0), 1..=3).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.0).sum();
        GaussianMixture::new(
            raw.into_iter()
                .map(|(w, mean, variance)| Component {
                    weight: w / total,
                    mean,
                    variance,
                })
                .collect(),
        )
        .expect("valid mixture")
    })
}

/// Sum of `|coefficient| * integral |monomial|` bounds the cancellation a
/// functional can suffer.
fn scale(c: &Combination, mix: &GaussianMixture, t: f64) -> f64 {
    let parts: Vec<Combination> = c
        .iter()
        .map(|(m, _)| Combination::from_terms([(m.clone(), rat(1, 1))]))
        .collect();
    let vals = functionals(&parts, mix, t).expect("quadrature");
    c.iter()
        .zip(vals)
        .map(|((_, q), v)| num_traits::ToPrimitive::to_f64(q).unwrap().abs() * v.value.abs())
        .sum::<f64>()
        .max(1.0)
}

/// Cases per property.
pub const CASES: u32 = 128;

fn check<S, F>(strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        failure_persistence: None,
        ..Config::with_cases(CASES)
    };
    TestRunner::new(config)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

pub fn reduce_is_idempotent() -> Result<(), String> {
    check(combination(), |c| {
        let once = reduce(&c).unwrap();
        prop_assert!(is_reduced(&once));
        prop_assert_eq!(reduce(&once).unwrap(), once);
        Ok(())
    })
}

pub fn reduce_preserves_weight() -> Result<(), String> {
    check(
        (1u32..=8).prop_flat_map(|w| (Just(w), homogeneous(w))),
        |(w, c)| {
            let r = reduce(&c).unwrap();
            prop_assert!(r.monomials().all(|m| m.weight() == w));
            Ok(())
        },
    )
}

pub fn space_and_time_derivatives_commute() -> Result<(), String> {
    check(combination(), |c| {
        prop_assert_eq!(c.d_dt().d_dy(), c.d_dy().d_dt());
        Ok(())
    })
}

pub fn total_derivatives_reduce_to_zero() -> Result<(), String> {
    check(combination(), |c| {
        prop_assert!(reduce(&c.d_dy()).unwrap().is_zero());
        Ok(())
    })
}

pub fn functional_is_invariant_under_reduce() -> Result<(), String> {
    check((combination(), mixture(), 0.3f64..3.0), |(c, mix, t)| {
        let a = functional(&c, &mix, t).unwrap().value;
        let b = functional(&reduce(&c).unwrap(), &mix, t).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8 * scale(&c, &mix, t), "{} vs {}", a, b);
        Ok(())
    })
}

pub fn total_derivatives_integrate_to_zero() -> Result<(), String> {
    check((combination(), mixture(), 0.3f64..3.0), |(c, mix, t)| {
        let d = c.d_dy();
        let v = functional(&d, &mix, t).unwrap().value;
        prop_assert!(v.abs() <= 1e-8 * scale(&d, &mix, t), "{}", v);
        Ok(())
    })
}

pub fn text_round_trip() -> Result<(), String> {
    check(combination(), |c| {
        prop_assert_eq!(Combination::from_text(&c.to_text()).unwrap(), c.clone());
        prop_assert_eq!(c.to_string().parse::<Combination>().unwrap(), c);
        Ok(())
    })
}

pub fn squares_are_invariant_under_negation() -> Result<(), String> {
    check(
        (1u32..=5, prop::collection::vec(coeff(), 1..8)),
        |(n, raw)| {
            let k = square_basis(n).len();
            let coeffs: Vec<Rational> = raw.into_iter().take(k).collect();
            let s = SquareForm::from_basis_coeffs(n, &coeffs).unwrap();
            prop_assert_eq!(
                expand_square(&s).unwrap(),
                expand_square(&s.negated()).unwrap()
            );
            Ok(())
        },
    )
}

pub fn second_order_family_identity() -> Result<(), String> {
    check((coeff(), coeff(), coeff()), |(a, b, g)| {
        prop_assert!(certificate_residual(&corollary1_certificate(&a, &b, &g))
            .unwrap()
            .is_zero());
        Ok(())
    })
}

pub fn canonical_forms_carry_the_alternating_sign() -> Result<(), String> {
    check((mixture(), 0.2f64..4.0), |(mix, t)| {
        let forms = entropy_derivatives(4).unwrap();
        let vals = functionals(&forms, &mix, t).unwrap();
        for (n, v) in (1..=4).zip(vals) {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            prop_assert!(sign * v.value > -3.0 * v.error, "order {}: {:?}", n, v);
        }
        Ok(())
    })
}
