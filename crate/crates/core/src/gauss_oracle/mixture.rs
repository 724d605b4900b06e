//! Gaussian mixtures smoothed by the heat flow.

use serde::{Deserialize, Serialize};

use super::OracleError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "w")]
    pub weight: f64,
    #[serde(rename = "mu")]
    pub mean: f64,
    #[serde(rename = "var")]
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

/// Density and the ratios `f_m / f` for `m = 0..=max_order` at one point.
#[derive(Clone, Debug)]
pub struct PointEval {
    pub log_density: f64,
    pub ratios: Vec<f64>,
}

impl PointEval {
    pub fn density(&self) -> f64 {
        self.log_density.exp()
    }
}

impl GaussianMixture {
    /// Weights must be positive and sum to one within `1e-12`; they are then
    /// renormalized exactly.
    pub fn new(components: Vec<Component>) -> Result<Self, OracleError> {
        if components.is_empty() {
            return Err(OracleError::InvalidMixture("no components".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(OracleError::InvalidMixture(format!(
                    "component {i}: weight {} is not positive",
                    c.weight
                )));
            }
            if !c.mean.is_finite() {
                return Err(OracleError::InvalidMixture(format!(
                    "component {i}: mean is not finite"
                )));
            }
            if !(c.variance.is_finite() && c.variance > 0.0) {
                return Err(OracleError::InvalidMixture(format!(
                    "component {i}: variance {} is not positive",
                    c.variance
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OracleError::InvalidMixture(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let components = components
            .into_iter()
            .map(|c| Component {
                weight: c.weight / total,
                ..c
            })
            .collect();
        Ok(Self { components })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, OracleError> {
        Self::new(vec![Component {
            weight: 1.0,
            mean,
            variance,
        }])
    }

    /// `0.5 N(0, 0.1) + 0.5 N(10, 0.1)`, the bimodal test case.
    pub fn bimodal_example() -> Self {
        let c = |mean| Component {
            weight: 0.5,
            mean,
            variance: 0.1,
        };
        Self::new(vec![c(0.0), c(10.0)]).expect("valid")
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Interval outside which every component at time `t` is below 12 sigma.
    pub fn support(&self, t: f64) -> (f64, f64) {
        let spread = 12.0 * (self.max_variance() + t).sqrt();
        let lo = self
            .components
            .iter()
            .map(|c| c.mean)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo - spread, hi + spread)
    }

    pub fn min_variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.variance)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.variance)
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|c| c.weight * (c.variance + (c.mean - m).powi(2)))
            .sum()
    }

    /// Log-density and derivative ratios with per-component weights taken
    /// through log-sum-exp, so far tails neither overflow nor cancel.
    pub fn eval(&self, t: f64, y: f64, max_order: usize) -> PointEval {
        let n = self.components.len();
        let mut logs = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        let mut scales = Vec::with_capacity(n);
        for c in &self.components {
            let s = c.variance + t;
            let z = (y - c.mean) / s.sqrt();
            logs.push(c.weight.ln() - 0.5 * z * z - 0.5 * (LN_2PI + s.ln()));
            zs.push(z);
            scales.push(-1.0 / s.sqrt());
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        let log_density = top + sum.ln();
        let mut ratios = vec![0.0; max_order + 1];
        for i in 0..n {
            let w = (logs[i] - log_density).exp();
            // (d/dy)^m phi = (-1/sqrt s)^m He_m(z) phi
            let (z, g) = (zs[i], scales[i]);
            let (mut he_prev, mut he) = (0.0, 1.0);
            let mut gm = 1.0;
            for (m, r) in ratios.iter_mut().enumerate() {
                *r += w * gm * he;
                let next = z * he - m as f64 * he_prev;
                he_prev = he;
                he = next;
                gm *= g;
            }
        }
        PointEval {
            log_density,
            ratios,
        }
    }

    /// `d^m f / dy^m` at `(y, t)`.
    pub fn density_deriv(&self, t: f64, y: f64, m: usize) -> Result<f64, OracleError> {
        if t < 0.0 || t.is_nan() {
            return Err(OracleError::NegativeTime(t));
        }
        if t == 0.0 && m > 0 {
            return Err(OracleError::ZeroTimeDerivative(m));
        }
        let p = self.eval(t, y, m);
        Ok(p.density() * p.ratios[m])
    }
}
