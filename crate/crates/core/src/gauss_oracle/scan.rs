//! Per-`t` sweeps of the heat-flow quantities and the sign and convexity
//! checks built on them.

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::finite_diff::{default_step, EntropySamples, FdEstimate};
use super::functionals::{fisher, functionals};
use super::mixture::GaussianMixture;
use super::quadrature::Estimate;
use super::OracleError;
use crate::ibp_reduce::entropy_derivatives;

pub const CSV_HEADER: &str =
    "t,h,J,d1_fd,d2_fd,d3_fd,d4_fd,d1_sym,d2_sym,d3_sym,d4_sym,logJ_dd,invJ_dd,e2h_dd,costa_ok,signs_ok";

/// Orders at and below this are checked against the symbolic forms and
/// count toward the asserted verdicts.
pub const ASSERTED_ORDER: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// A value counts only when it clears zero by this many error estimates.
    pub sign_factor: f64,
    /// Slack on convexity and concavity of second differences.
    pub second_difference: f64,
    /// Slack on `-J' - J^2 >= 0`.
    pub costa: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sign_factor: 3.0,
            second_difference: 1e-8,
            costa: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// `value` should be `>= -slack` (with `sign = 1`) or `<= slack` (with `sign = -1`).
    pub fn at_least(value: f64, error: f64, sign: f64, slack: f64, tol: &Tolerances) -> Self {
        let v = sign * value + slack;
        let margin = tol.sign_factor * error;
        if v > margin {
            Verdict::Pass
        } else if v < -margin {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn failed(self) -> bool {
        self == Verdict::Fail
    }
}

/// `(g(t+d) - 2 g(t) + g(t-d)) / d^2` with its rounding error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondDifference {
    pub value: f64,
    pub error: f64,
}

impl SecondDifference {
    pub fn new(lo: f64, mid: f64, hi: f64, noise: f64, step: f64) -> Self {
        Self {
            value: (hi - 2.0 * mid + lo) / (step * step),
            error: 4.0 * noise / (step * step),
        }
    }

    /// Counts as a sign only when it clears the error by `factor`.
    pub fn sign(&self, factor: f64) -> i8 {
        if self.value > factor * self.error {
            1
        } else if self.value < -factor * self.error {
            -1
        } else {
            0
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub t: f64,
    pub step: f64,
    pub entropy: Estimate,
    pub fisher: Estimate,
    /// `d^n h/dt^n` for `n = 1..=max(4, max_order)`.
    pub fd: Vec<FdEstimate>,
    /// Half the integral of the canonical form, `n = 1..=4`.
    pub sym: Vec<Estimate>,
    pub log_j_dd: SecondDifference,
    pub inv_j_dd: SecondDifference,
    pub e2h_dd: SecondDifference,
    /// `-J' - J^2` with `J'` from the second canonical form.
    pub costa: Estimate,
    pub fd_signs: Vec<Verdict>,
    pub sym_signs: Vec<Verdict>,
    pub log_j_convex: Verdict,
    pub e2h_concave: Verdict,
    pub costa_verdict: Verdict,
}

impl ScanRow {
    /// No asserted sign fails at orders up to four.
    pub fn signs_ok(&self) -> bool {
        let upto = ASSERTED_ORDER as usize;
        !self.fd_signs.iter().take(upto).any(|v| v.failed())
            && !self.sym_signs.iter().any(|v| v.failed())
    }

    pub fn costa_ok(&self) -> bool {
        !self.costa_verdict.failed()
    }

    pub fn asserted_ok(&self) -> bool {
        self.signs_ok() && self.costa_ok() && !self.e2h_concave.failed()
    }

    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        let num = |s: &mut String, x: f64| write!(s, "{x:.12e},").expect("string write");
        num(&mut s, self.t);
        num(&mut s, self.entropy.value);
        num(&mut s, self.fisher.value);
        for n in 0..4 {
            num(&mut s, self.fd[n].value);
        }
        for n in 0..4 {
            num(&mut s, self.sym[n].value);
        }
        num(&mut s, self.log_j_dd.value);
        num(&mut s, self.inv_j_dd.value);
        num(&mut s, self.e2h_dd.value);
        write!(s, "{},{}", self.costa_ok(), self.signs_ok()).expect("string write");
        s
    }
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub max_order: u32,
    pub rows: Vec<ScanRow>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanSummary {
    pub points: usize,
    /// `(pass, fail, inconclusive)` per finite-difference order.
    pub fd_signs: Vec<(usize, usize, usize)>,
    pub costa_failures: usize,
    pub e2h_failures: usize,
    pub log_j_failures: usize,
    pub inv_j_positive: usize,
    pub inv_j_negative: usize,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    /// Signs up to order four, Costa's inequality and concavity of `e^{2h}`.
    pub fn asserted_ok(&self) -> bool {
        self.rows.iter().all(ScanRow::asserted_ok)
    }

    /// `1/J` second differences of both signs, each clearing its error.
    pub fn inv_j_changes_convexity(&self, tol: &Tolerances) -> bool {
        let s = self.summary(tol);
        s.inv_j_positive > 0 && s.inv_j_negative > 0
    }

    pub fn summary(&self, tol: &Tolerances) -> ScanSummary {
        let orders = self.rows.first().map_or(0, |r| r.fd_signs.len());
        let mut fd_signs = vec![(0, 0, 0); orders];
        let mut s = ScanSummary {
            points: self.rows.len(),
            ..ScanSummary::default()
        };
        for row in &self.rows {
            for (slot, v) in fd_signs.iter_mut().zip(&row.fd_signs) {
                match v {
                    Verdict::Pass => slot.0 += 1,
                    Verdict::Fail => slot.1 += 1,
                    Verdict::Inconclusive => slot.2 += 1,
                }
            }
            s.costa_failures += row.costa_verdict.failed() as usize;
            s.e2h_failures += row.e2h_concave.failed() as usize;
            s.log_j_failures += row.log_j_convex.failed() as usize;
            match row.inv_j_dd.sign(tol.sign_factor) {
                1 => s.inv_j_positive += 1,
                -1 => s.inv_j_negative += 1,
                _ => {}
            }
        }
        s.fd_signs = fd_signs;
        s
    }
}

/// Sign expected of `d^n h/dt^n`: `(-1)^(n+1)`.
pub fn expected_sign(n: u32) -> f64 {
    if n % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn scan_point(
    mix: &GaussianMixture,
    t: f64,
    orders: u32,
    forms: &[crate::term_algebra::Combination],
    tol: &Tolerances,
) -> Result<ScanRow, OracleError> {
    let step = default_step(t);
    let samples = EntropySamples::collect(mix, t, step, orders)?;
    let fd: Vec<FdEstimate> = (1..=orders).map(|n| samples.derivative(n)).collect();
    let sym: Vec<Estimate> = functionals(forms, mix, t)?
        .into_iter()
        .map(|e| Estimate {
            value: e.value / 2.0,
            error: e.error / 2.0,
        })
        .collect();
    let j = [
        fisher(mix, t - step)?,
        fisher(mix, t)?,
        fisher(mix, t + step)?,
    ];
    let noise = |e: &Estimate| e.error + 4.0 * f64::EPSILON * e.value.abs();
    let j_noise = j.iter().map(noise).fold(0.0, f64::max);
    let j_mid = j[1].value;
    let log_j_dd = SecondDifference::new(
        j[0].value.ln(),
        j[1].value.ln(),
        j[2].value.ln(),
        j_noise / j.iter().map(|e| e.value).fold(f64::INFINITY, f64::min),
        step,
    );
    let inv = |e: &Estimate| 1.0 / e.value;
    let inv_j_dd = SecondDifference::new(
        inv(&j[0]),
        inv(&j[1]),
        inv(&j[2]),
        j_noise * inv(&j[0]).max(inv(&j[2])).powi(2),
        step,
    );
    let h = [samples.at(-1), samples.at(0), samples.at(1)];
    let e2h = |e: &Estimate| (2.0 * e.value).exp();
    let h_noise = h.iter().map(noise).fold(0.0, f64::max);
    let e2h_dd = SecondDifference::new(
        e2h(&h[0]),
        e2h(&h[1]),
        e2h(&h[2]),
        2.0 * h_noise * h.iter().map(e2h).fold(0.0, f64::max),
        step,
    );
    // J' = integral of the second canonical form = 2 sym[1]
    let j_prime = 2.0 * sym[1].value;
    let costa = Estimate {
        value: -j_prime - j_mid * j_mid,
        error: 2.0 * sym[1].error
            + 2.0 * j_mid.abs() * j[1].error
            + 8.0 * f64::EPSILON * j_prime.abs(),
    };
    let fd_signs = fd
        .iter()
        .zip(1..)
        .map(|(e, n)| Verdict::at_least(e.value, e.error, expected_sign(n), 0.0, tol))
        .collect();
    let sym_signs = sym
        .iter()
        .zip(1..)
        .map(|(e, n)| Verdict::at_least(e.value, e.error, expected_sign(n), 0.0, tol))
        .collect();
    Ok(ScanRow {
        t,
        step,
        entropy: h[1],
        fisher: j[1],
        fd,
        sym,
        log_j_convex: Verdict::at_least(
            log_j_dd.value,
            log_j_dd.error,
            1.0,
            tol.second_difference,
            tol,
        ),
        e2h_concave: Verdict::at_least(
            e2h_dd.value,
            e2h_dd.error,
            -1.0,
            tol.second_difference,
            tol,
        ),
        costa_verdict: Verdict::at_least(costa.value, costa.error, 1.0, tol.costa, tol),
        log_j_dd,
        inv_j_dd,
        e2h_dd,
        costa,
        fd_signs,
        sym_signs,
    })
}

/// Evaluates every grid point (concurrently, results kept in grid order).
/// Finite differences run to `max(4, max_order)`.
pub fn scan_conjectures(
    mix: &GaussianMixture,
    grid: &[f64],
    max_order: u32,
    tol: &Tolerances,
) -> Result<ScanResult, OracleError> {
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(OracleError::Grid(
            "grid points must be positive and finite".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OracleError::Grid("grid must be strictly increasing".into()));
    }
    let orders = max_order.max(ASSERTED_ORDER);
    let forms =
        entropy_derivatives(ASSERTED_ORDER).map_err(|e| OracleError::Symbolic(e.to_string()))?;
    let rows = grid
        .par_iter()
        .map(|&t| scan_point(mix, t, orders, &forms, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanResult { max_order, rows })
}

pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn log_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    linear_grid(start.ln(), stop.ln(), points)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// 400 log-spaced points on `[0.05, 100]`.
pub fn default_bimodal_grid() -> Vec<f64> {
    log_grid(0.05, 100.0, 400)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_grid_passes_everything() {
        let g = GaussianMixture::gaussian(0.0, 1.0).unwrap();
        let tol = Tolerances::default();
        let res = scan_conjectures(&g, &[0.5, 1.0, 2.0], 4, &tol).unwrap();
        assert!(res.asserted_ok());
        for row in &res.rows {
            assert!(
                row.fd_signs.iter().all(|v| *v == Verdict::Pass),
                "{:?}",
                row.fd_signs
            );
            assert!(row.sym_signs.iter().all(|v| *v == Verdict::Pass));
            assert_ne!(row.log_j_convex, Verdict::Fail);
            let s = 1.0 + row.t;
            assert!((row.fisher.value - 1.0 / s).abs() < 1e-10);
            assert!((row.sym[2].value - 1.0 / s.powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_is_stable() {
        let g = GaussianMixture::gaussian(0.0, 1.0).unwrap();
        let tol = Tolerances::default();
        let a = scan_conjectures(&g, &[0.5, 1.0], 4, &tol).unwrap().to_csv();
        let b = scan_conjectures(&g, &[0.5, 1.0], 4, &tol).unwrap().to_csv();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), CSV_HEADER.split(',').count());
        assert!(first.ends_with("true,true"));
    }

    #[test]
    fn grids() {
        let g = log_grid(0.05, 100.0, 400);
        assert_eq!(g.len(), 400);
        assert!((g[0] - 0.05).abs() < 1e-15 && (g[399] - 100.0).abs() < 1e-10);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(linear_grid(0.0, 1.0, 3), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        let g = GaussianMixture::gaussian(0.0, 1.0).unwrap();
        let tol = Tolerances::default();
        assert!(scan_conjectures(&g, &[1.0, 0.5], 4, &tol).is_err());
        assert!(scan_conjectures(&g, &[0.0, 0.5], 4, &tol).is_err());
    }
}
