//! Central finite differences of the entropy in `t` with one Richardson step.

use log::warn;
use num_traits::ToPrimitive;

use super::functionals::entropy;
use super::mixture::GaussianMixture;
use super::quadrature::Estimate;
use super::OracleError;
use crate::sos_certify::solve_square;
use crate::term_algebra::Rational;

pub fn default_step(t: f64) -> f64 {
    (0.02 * t).max(1e-3)
}

/// Half-width of the stencil used for an order-`n` derivative.
pub fn stencil_radius(n: u32) -> i64 {
    n.div_ceil(2).max(1) as i64
}

/// Weights on offsets `-p..=p` for the `n`-th derivative, solved exactly from
/// the moment conditions.
pub fn central_weights(n: u32) -> Vec<Rational> {
    let p = stencil_radius(n);
    let offsets: Vec<i64> = (-p..=p).collect();
    let size = offsets.len();
    let a: Vec<Vec<Rational>> = (0..size)
        .map(|k| {
            offsets
                .iter()
                .map(|&j| Rational::from_integer(num_bigint::BigInt::from(j).pow(k as u32)))
                .collect()
        })
        .collect();
    let mut b = vec![Rational::from_integer(0.into()); size];
    let factorial: u64 = (1..=n as u64).product();
    b[n as usize] = Rational::from_integer(factorial.into());
    solve_square(a, b).expect("Vandermonde systems on distinct nodes are regular")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub error: f64,
    pub step: f64,
}

/// Entropy samples at `t + j h` for `j` in `-radius..=radius`.
#[derive(Clone, Debug)]
pub struct EntropySamples {
    pub t: f64,
    pub step: f64,
    pub radius: i64,
    pub values: Vec<Estimate>,
}

impl EntropySamples {
    pub fn collect(
        mix: &GaussianMixture,
        t: f64,
        step: f64,
        max_order: u32,
    ) -> Result<Self, OracleError> {
        let radius = 2 * stencil_radius(max_order);
        if !(step > 0.0) || t - radius as f64 * step <= 0.0 {
            return Err(OracleError::StepTooLarge {
                t,
                step,
                order: max_order,
            });
        }
        let values = (-radius..=radius)
            .map(|j| entropy(mix, t + j as f64 * step))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            t,
            step,
            radius,
            values,
        })
    }

    pub fn at(&self, j: i64) -> Estimate {
        self.values[(j + self.radius) as usize]
    }

    /// Richardson-extrapolated `n`-th derivative from steps `h` and `2h`.
    pub fn derivative(&self, n: u32) -> FdEstimate {
        let p = stencil_radius(n);
        assert!(2 * p <= self.radius, "order {n} needs more samples");
        let weights: Vec<f64> = central_weights(n)
            .iter()
            .map(|w| w.to_f64().unwrap_or(f64::NAN))
            .collect();
        let noise = self
            .values
            .iter()
            .map(|e| e.error + 4.0 * f64::EPSILON * e.value.abs())
            .fold(0.0, f64::max);
        let abs_w: f64 = weights.iter().map(|w| w.abs()).sum();
        let apply = |scale: i64| {
            let h = self.step * scale as f64;
            let sum: f64 = (-p..=p)
                .zip(&weights)
                .map(|(j, w)| w * self.at(j * scale).value)
                .sum();
            sum / h.powi(n as i32)
        };
        let d1 = apply(1);
        let d2 = apply(2);
        let value = (4.0 * d1 - d2) / 3.0;
        let hn = self.step.powi(n as i32);
        let roundoff = abs_w * noise * (4.0 + 0.5f64.powi(n as i32)) / (3.0 * hn);
        let error = (d1 - d2).abs() / 3.0 + roundoff;
        if error > 0.1 * value.abs() {
            warn!(
                "d^{n}h/dt^{n} at t = {}: estimate {value:.6e} has error {error:.2e}",
                self.t
            );
        }
        FdEstimate {
            value,
            error,
            step: self.step,
        }
    }
}

/// `d^n h / dt^n` at `t` by finite differences; `step` defaults to
/// `max(1e-3, 0.02 t)`.
pub fn fd_entropy_deriv(
    mix: &GaussianMixture,
    t: f64,
    n: u32,
    step: Option<f64>,
) -> Result<FdEstimate, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidOrder(0));
    }
    let step = step.unwrap_or_else(|| default_step(t));
    Ok(EntropySamples::collect(mix, t, step, n)?.derivative(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term_algebra::rat;

    #[test]
    fn stencil_weights() {
        assert_eq!(central_weights(1), [rat(-1, 2), rat(0, 1), rat(1, 2)]);
        assert_eq!(central_weights(2), [rat(1, 1), rat(-2, 1), rat(1, 1)]);
        assert_eq!(
            central_weights(3),
            [rat(-1, 2), rat(1, 1), rat(0, 1), rat(-1, 1), rat(1, 2)]
        );
        assert_eq!(
            central_weights(4),
            [rat(1, 1), rat(-4, 1), rat(6, 1), rat(-4, 1), rat(1, 1)]
        );
        assert_eq!(central_weights(5).len(), 7);
    }

    #[test]
    fn standard_normal_examples() {
        let g = GaussianMixture::gaussian(0.0, 1.0).unwrap();
        let d1 = fd_entropy_deriv(&g, 1.0, 1, None).unwrap();
        assert!((d1.value - 0.25).abs() < 1e-7, "{d1:?}");
        let d4 = fd_entropy_deriv(&g, 1.0, 4, None).unwrap();
        assert!((d4.value + 3.0 / 16.0).abs() < 1e-6 * 3.0 / 16.0, "{d4:?}");
        assert!(d4.error < 1e-3);
    }

    #[test]
    fn bimodal_third_derivative_is_positive() {
        let mix = GaussianMixture::bimodal_example();
        let d3 = fd_entropy_deriv(&mix, 0.5, 3, None).unwrap();
        assert!(d3.value > 3.0 * d3.error, "{d3:?}");
    }

    #[test]
    fn step_must_leave_the_domain_positive() {
        let g = GaussianMixture::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            fd_entropy_deriv(&g, 0.01, 4, Some(0.01)),
            Err(OracleError::StepTooLarge { .. })
        ));
    }
}
