//! Checks along `W_t = sqrt(t) X + sqrt(1 - t) Z`, computed through the heat
//! flow at time `s = 1/t - 1` and a rescaling by `sqrt(t)`.

use rayon::prelude::*;

use super::functionals::{entropy, fisher, functional};
use super::mixture::GaussianMixture;
use super::quadrature::Estimate;
use super::scan::{SecondDifference, Tolerances, Verdict};
use super::OracleError;
use crate::ibp_reduce::entropy_derivative;
use crate::term_algebra::Combination;

#[derive(Clone, Debug)]
pub struct WtRow {
    pub t: f64,
    pub step: f64,
    /// `h(W_t) = h(X + sqrt(s) Z) + log(t)/2`.
    pub entropy: f64,
    /// `J(W_t) = J(X + sqrt(s) Z) / t`.
    pub fisher: f64,
    pub entropy_dd: SecondDifference,
    pub fisher_dd: SecondDifference,
    /// `-J'(s) + t^2 - 2 t J(s)`, nonnegative when the inequality holds.
    pub txz_gap: Estimate,
    pub concave: Verdict,
    pub txz: Verdict,
}

#[derive(Clone, Debug)]
pub struct WtReport {
    pub rows: Vec<WtRow>,
}

impl WtReport {
    pub fn entropy_concave(&self) -> bool {
        self.rows.iter().all(|r| !r.concave.failed())
    }

    pub fn txz_holds(&self) -> bool {
        self.rows.iter().all(|r| !r.txz.failed())
    }

    /// Counts of `J(W_t)` second differences that clear their error with
    /// each sign.
    pub fn fisher_dd_signs(&self, factor: f64) -> (usize, usize) {
        let pos = self
            .rows
            .iter()
            .filter(|r| r.fisher_dd.sign(factor) > 0)
            .count();
        let neg = self
            .rows
            .iter()
            .filter(|r| r.fisher_dd.sign(factor) < 0)
            .count();
        (pos, neg)
    }

    pub fn fisher_changes_convexity(&self, factor: f64) -> bool {
        let (pos, neg) = self.fisher_dd_signs(factor);
        pos > 0 && neg > 0
    }

    pub fn asserted_ok(&self) -> bool {
        self.entropy_concave() && self.txz_holds()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,h_w,J_w,h_w_dd,J_w_dd,txz_gap,concave_ok,txz_ok\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}\n",
                r.t,
                r.entropy,
                r.fisher,
                r.entropy_dd.value,
                r.fisher_dd.value,
                r.txz_gap.value,
                !r.concave.failed(),
                !r.txz.failed()
            ));
        }
        out
    }
}

/// Step for the second differences: small against both ends of `(0, 1)`.
pub fn wt_step(t: f64) -> f64 {
    1e-3f64.min(t / 4.0).min((1.0 - t) / 4.0)
}

fn heat_time(t: f64) -> f64 {
    1.0 / t - 1.0
}

fn point(
    mix: &GaussianMixture,
    t: f64,
    c2: &Combination,
    tol: &Tolerances,
) -> Result<WtRow, OracleError> {
    let step = wt_step(t);
    let ts = [t - step, t, t + step];
    let mut h = [0.0; 3];
    let mut j = [0.0; 3];
    let (mut h_noise, mut j_noise) = (0.0f64, 0.0f64);
    let mut j_s = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for (i, &u) in ts.iter().enumerate() {
        let s = heat_time(u);
        let he = entropy(mix, s)?;
        let je = fisher(mix, s)?;
        h[i] = he.value + 0.5 * u.ln();
        j[i] = je.value / u;
        h_noise = h_noise.max(he.error + 4.0 * f64::EPSILON * (he.value.abs() + u.ln().abs()));
        j_noise = j_noise.max((je.error + 4.0 * f64::EPSILON * je.value.abs()) / u);
        if i == 1 {
            j_s = je;
        }
    }
    let entropy_dd = SecondDifference::new(h[0], h[1], h[2], h_noise, step);
    let fisher_dd = SecondDifference::new(j[0], j[1], j[2], j_noise, step);
    let s = heat_time(t);
    let j_prime = functional(c2, mix, s)?;
    let txz_gap = Estimate {
        value: -j_prime.value + t * t - 2.0 * t * j_s.value,
        error: j_prime.error
            + 2.0 * t * j_s.error
            + 8.0 * f64::EPSILON * (j_prime.value.abs() + t * t),
    };
    Ok(WtRow {
        t,
        step,
        entropy: h[1],
        fisher: j[1],
        concave: Verdict::at_least(
            entropy_dd.value,
            entropy_dd.error,
            -1.0,
            tol.second_difference,
            tol,
        ),
        txz: Verdict::at_least(txz_gap.value, txz_gap.error, 1.0, 0.0, tol),
        entropy_dd,
        fisher_dd,
        txz_gap,
    })
}

/// `h(W_t)` concavity, the inequality `-J'(s) + t^2 >= 2 t J(s)` and the
/// second differences of `J(W_t)` on a grid strictly inside `(0, 1)`.
pub fn wt_checks(
    mix: &GaussianMixture,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<WtReport, OracleError> {
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(OracleError::Grid(
            "W_t grid must lie strictly inside (0, 1)".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OracleError::Grid("grid must be strictly increasing".into()));
    }
    let c2 = entropy_derivative(2).map_err(|e| OracleError::Symbolic(e.to_string()))?;
    let rows = grid
        .par_iter()
        .map(|&t| point(mix, t, &c2, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WtReport { rows })
}

/// 91 evenly spaced points on `[0.05, 0.95]`.
pub fn default_wt_grid() -> Vec<f64> {
    super::scan::linear_grid(0.05, 0.95, 91)
}
