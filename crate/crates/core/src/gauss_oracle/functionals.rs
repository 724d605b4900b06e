//! Entropy, Fisher information and integrals of derivative monomials.

use num_traits::ToPrimitive;

use super::mixture::GaussianMixture;
use super::quadrature::{integrate_many, Estimate};
use super::OracleError;
use crate::term_algebra::Combination;

pub const ABS_TOL: f64 = 1e-10;

fn domain(mix: &GaussianMixture, t: f64) -> Result<(f64, f64, f64), OracleError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(OracleError::NegativeTime(t));
    }
    let (a, b) = mix.support(t);
    Ok((a, b, 0.5 * (mix.min_variance() + t).sqrt()))
}

/// `-integral f log f` of the density at time `t`.
pub fn entropy(mix: &GaussianMixture, t: f64) -> Result<Estimate, OracleError> {
    let (a, b, w) = domain(mix, t)?;
    let est = integrate_many(
        |y, out: &mut [f64], _: &mut [f64]| {
            let p = mix.eval(t, y, 0);
            out[0] = -p.density() * p.log_density;
        },
        1,
        a,
        b,
        w,
        ABS_TOL,
    )?;
    Ok(est[0])
}

/// `integral f (f1/f)^2`.
pub fn fisher(mix: &GaussianMixture, t: f64) -> Result<Estimate, OracleError> {
    let (a, b, w) = domain(mix, t)?;
    let est = integrate_many(
        |y, out: &mut [f64], _: &mut [f64]| {
            let p = mix.eval(t, y, 1);
            out[0] = p.density() * p.ratios[1] * p.ratios[1];
        },
        1,
        a,
        b,
        w,
        ABS_TOL,
    )?;
    Ok(est[0])
}

/// A combination flattened to `(factors, coefficient)` pairs for evaluation.
struct Compiled {
    terms: Vec<(Vec<(usize, i32)>, f64)>,
    max_order: usize,
}

impl Compiled {
    fn new(c: &Combination) -> Self {
        let terms: Vec<_> = c
            .iter()
            .map(|(m, q)| {
                let factors = m.factors().map(|(o, k)| (o as usize, k as i32)).collect();
                (factors, q.to_f64().unwrap_or(f64::NAN))
            })
            .collect();
        let max_order = c
            .monomials()
            .filter_map(|m| m.max_order())
            .max()
            .unwrap_or(0) as usize;
        Self { terms, max_order }
    }

    /// Integrand divided by the density, and the sum of the absolute terms.
    fn eval(&self, ratios: &[f64]) -> (f64, f64) {
        let (mut sum, mut scale) = (0.0, 0.0);
        for (factors, q) in &self.terms {
            let term = q * factors
                .iter()
                .map(|&(o, k)| ratios[o].powi(k))
                .product::<f64>();
            sum += term;
            scale += term.abs();
        }
        (sum, scale)
    }
}

/// `integral c(f) dy`, each monomial evaluated as `f * prod (f_m/f)^k_m`.
pub fn functional(c: &Combination, mix: &GaussianMixture, t: f64) -> Result<Estimate, OracleError> {
    Ok(functionals(std::slice::from_ref(c), mix, t)?[0])
}

/// Several functionals sharing one set of quadrature nodes.
pub fn functionals(
    cs: &[Combination],
    mix: &GaussianMixture,
    t: f64,
) -> Result<Vec<Estimate>, OracleError> {
    let (a, b, w) = domain(mix, t)?;
    let compiled: Vec<Compiled> = cs.iter().map(Compiled::new).collect();
    let max_order = compiled.iter().map(|c| c.max_order).max().unwrap_or(0);
    integrate_many(
        |y, out: &mut [f64], scale: &mut [f64]| {
            let p = mix.eval(t, y, max_order);
            let f = p.density();
            for ((o, s), c) in out.iter_mut().zip(scale.iter_mut()).zip(&compiled) {
                let (v, m) = c.eval(&p.ratios);
                *o = f * v;
                *s = f * m;
            }
        },
        cs.len(),
        a,
        b,
        w,
        ABS_TOL,
    )
}

/// Total mass of the density at time `t`.
pub fn normalization(mix: &GaussianMixture, t: f64) -> Result<Estimate, OracleError> {
    functional(
        &Combination::monomial(crate::term_algebra::DerivMonomial::density()),
        mix,
        t,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibp_reduce::entropy_derivative;
    use crate::term_algebra::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gauss(var: f64) -> GaussianMixture {
        GaussianMixture::gaussian(0.0, var).unwrap()
    }

    #[test]
    fn standard_normal_examples() {
        let g = gauss(1.0);
        let h = entropy(&g, 1.0).unwrap();
        assert!(
            (h.value - 0.5 * (4.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs() < 1e-12
        );
        assert!((fisher(&g, 1.0).unwrap().value - 0.5).abs() < 1e-12);
        let j = functional(&Combination::monomial("f1^2/f".parse().unwrap()), &g, 1.0).unwrap();
        assert!((j.value - 0.5).abs() < 1e-12);
        let c3 = functional(&entropy_derivative(3).unwrap(), &g, 1.0).unwrap();
        assert!((c3.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gaussian_closed_forms_through_order_five() {
        let cs: Vec<Combination> = (1..=5).map(|n| entropy_derivative(n).unwrap()).collect();
        for var in [0.5, 1.0, 4.0] {
            for t in [0.3, 1.0, 3.0] {
                let s: f64 = var + t;
                let vals = functionals(&cs, &gauss(var), t).unwrap();
                let mut fact = 1.0;
                for (n, v) in (1..=5).zip(vals) {
                    if n > 1 {
                        fact *= (n - 1) as f64;
                    }
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    let expected = 2.0 * sign * fact / 2.0 * s.powi(-n);
                    assert!(
                        (v.value - expected).abs() <= 1e-8 * expected.abs(),
                        "n={n} var={var} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn densities_are_normalized() {
        let mix = GaussianMixture::bimodal_example();
        for t in [0.01, 0.5, 3.0, 100.0] {
            assert!((normalization(&mix, t).unwrap().value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        let g = gauss(1.0);
        assert!(matches!(
            entropy(&g, -1.0),
            Err(OracleError::NegativeTime(_))
        ));
        assert!(fisher(&g, 0.0).is_err());
    }

    #[test]
    fn total_derivative_integrates_to_zero() {
        let mix = GaussianMixture::bimodal_example();
        let c = Combination::from_terms([
            ("f1 f2/f".parse().unwrap(), rat(3, 2)),
            ("f1^3 f3/f^3".parse().unwrap(), rat(-5, 7)),
        ]);
        let v = functional(&c.d_dy(), &mix, 0.7).unwrap();
        assert!(v.value.abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn fisher_agrees_with_monte_carlo() {
        // score-squared average over 10^7 draws of X + sqrt(t) Z
        let mix = GaussianMixture::bimodal_example();
        let t = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000_000usize;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let c = if rng.random::<f64>() < 0.5 {
                &mix.components()[0]
            } else {
                &mix.components()[1]
            };
            let z: f64 = rng.sample(StandardNormal);
            let y = c.mean + (c.variance + t).sqrt() * z;
            let score = mix.eval(t, y, 1).ratios[1];
            let s2 = score * score;
            sum += s2;
            sum_sq += s2 * s2;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        let q = fisher(&mix, t).unwrap().value;
        assert!(
            (q - mean).abs() < 5.0 * se,
            "quadrature {q}, monte carlo {mean} +- {se}"
        );
        assert!(se < 1e-3);
    }
}
