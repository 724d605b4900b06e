//! Multi-start damped least squares over square coefficients and remainder
//! weights, followed by rational rounding and an exact repair of the
//! coordinates the remainder cannot reach.

use std::collections::BTreeMap;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::exact::{rationalize, solve_square};
use super::{
    known_certificate, square_basis, verify_certificate, Certificate, SosError, SquareForm,
};
use crate::ibp_reduce::{entropy_derivative, reduce};
use crate::term_algebra::{Combination, DerivMonomial, Rational};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub starts: usize,
    pub seed: u64,
    /// Largest denominator tried when rounding; bounds 10, 100, ... up to it.
    pub max_denominator: u64,
    pub use_known_seeds: bool,
    pub max_iterations: usize,
    /// Weight of the rows penalizing negative remainder weights.
    pub penalty: f64,
    /// Remainder weights from random starts are pushed above this value, which
    /// keeps optima off the boundary so rounding has slack. Built-in seeds
    /// use zero.
    pub margin: f64,
    /// Residual norm below which a start is handed to the rounding stage.
    pub tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            seed: 0x5eed,
            max_denominator: 1_000_000,
            use_known_seeds: true,
            max_iterations: 400,
            penalty: 10.0,
            margin: 1e-5,
            tolerance: 1e-7,
        }
    }
}

/// Numeric optimum of one start.
#[derive(Clone, Debug)]
pub struct CandidatePoint {
    pub start: usize,
    /// Row `j` holds the coefficients of square `j` on basis positions `j..`.
    pub squares: Vec<Vec<f64>>,
    /// Weight on `f * B_a^2` for each basis position `a`.
    pub remainder: Vec<f64>,
    pub residual_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub order: u32,
    pub certificate: Option<Certificate>,
    pub best: Option<CandidatePoint>,
    pub starts_run: usize,
    pub certified_start: Option<usize>,
}

/// Coefficient-matching system in canonical coordinates.
struct Problem {
    order: u32,
    sign: i32,
    basis: Vec<DerivMonomial>,
    coords: Vec<DerivMonomial>,
    /// `products[a][b]` = reduced `f B_a B_b` as exact coordinates.
    exact_products: Vec<Vec<Vec<(usize, Rational)>>>,
    products: Vec<Vec<DVector<f64>>>,
    target: DVector<f64>,
    /// `sign * C_n` in the same coordinates.
    exact_target: Vec<Rational>,
    /// Coordinate of the diagonal monomial `f B_a^2`.
    diagonal: Vec<usize>,
}

impl Problem {
    fn new(order: u32) -> Result<Self, SosError> {
        let basis = square_basis(order);
        let k = basis.len();
        let sign = Certificate::expected_sign(order);
        let target_exact = entropy_derivative(order)?;
        let mut reduced = vec![vec![Combination::zero(); k]; k];
        let mut index: BTreeMap<DerivMonomial, usize> = BTreeMap::new();
        for m in target_exact.monomials() {
            index.insert(m.clone(), 0);
        }
        for a in 0..k {
            for b in a..k {
                let c = reduce(&Combination::monomial(basis[a].product(&basis[b])))?;
                for m in c.monomials() {
                    index.insert(m.clone(), 0);
                }
                reduced[a][b] = c.clone();
                reduced[b][a] = c;
            }
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let coords: Vec<DerivMonomial> = index.keys().cloned().collect();
        let dense = |c: &Combination| {
            let mut v = DVector::zeros(coords.len());
            for (m, q) in c.iter() {
                v[index[m]] = q.to_f64().unwrap_or(f64::NAN);
            }
            v
        };
        let sparse = |c: &Combination| c.iter().map(|(m, q)| (index[m], q.clone())).collect();
        let products = reduced
            .iter()
            .map(|row| row.iter().map(dense).collect())
            .collect();
        let exact_products = reduced
            .iter()
            .map(|row| row.iter().map(sparse).collect())
            .collect();
        let diagonal = basis.iter().map(|b| index[&b.product(b)]).collect();
        let target = dense(&target_exact) * f64::from(sign);
        let mut exact_target = vec![Rational::zero(); coords.len()];
        for (m, q) in target_exact.iter() {
            exact_target[index[m]] = q * Rational::from_integer(sign.into());
        }
        Ok(Self {
            order,
            sign,
            basis,
            coords,
            exact_products,
            products,
            target,
            exact_target,
            diagonal,
        })
    }

    fn k(&self) -> usize {
        self.basis.len()
    }

    /// Packed layout: square `j` occupies `k - j` slots, then `k` remainder weights.
    fn layout(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        (0..k).flat_map(|j| (j..k).map(move |a| (j, a))).collect()
    }

    fn n_vars(&self) -> usize {
        let k = self.k();
        k * (k + 1) / 2 + k
    }

    fn unpack(&self, x: &DVector<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
        let k = self.k();
        let mut squares = vec![vec![0.0; k]; k];
        for (i, (j, a)) in self.layout().into_iter().enumerate() {
            squares[j][a] = x[i];
        }
        let rem = (0..k).map(|a| x[k * (k + 1) / 2 + a]).collect();
        (squares, rem)
    }

    fn pack(&self, squares: &[Vec<f64>], rem: &[f64]) -> DVector<f64> {
        let k = self.k();
        let mut x = DVector::zeros(self.n_vars());
        for (i, (j, a)) in self.layout().into_iter().enumerate() {
            x[i] = squares[j][a];
        }
        for a in 0..k {
            x[k * (k + 1) / 2 + a] = rem[a];
        }
        x
    }

    /// Matching residual only, without penalty rows.
    fn matching_residual(&self, squares: &[Vec<f64>], rem: &[f64]) -> DVector<f64> {
        let k = self.k();
        let mut r = -self.target.clone();
        for row in squares {
            for a in 0..k {
                if row[a] == 0.0 {
                    continue;
                }
                for b in 0..k {
                    if row[b] != 0.0 {
                        r.axpy(row[a] * row[b], &self.products[a][b], 1.0);
                    }
                }
            }
        }
        for a in 0..k {
            r[self.diagonal[a]] += rem[a];
        }
        r
    }

    fn residual_and_jacobian(
        &self,
        x: &DVector<f64>,
        cfg: &SearchConfig,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.k();
        let m = self.coords.len();
        let (squares, rem) = self.unpack(x);
        let mut r = DVector::zeros(m + k);
        r.rows_mut(0, m)
            .copy_from(&self.matching_residual(&squares, &rem));
        let mut jac = DMatrix::zeros(m + k, self.n_vars());
        for (i, (j, a)) in self.layout().into_iter().enumerate() {
            let mut col = DVector::zeros(m);
            for b in j..k {
                if squares[j][b] != 0.0 {
                    col.axpy(2.0 * squares[j][b], &self.products[a][b], 1.0);
                }
            }
            jac.view_mut((0, i), (m, 1)).copy_from(&col);
        }
        let base = k * (k + 1) / 2;
        for a in 0..k {
            jac[(self.diagonal[a], base + a)] = 1.0;
            let slack = rem[a] - cfg.margin;
            if slack < 0.0 {
                r[m + a] = cfg.penalty * slack;
                jac[(m + a, base + a)] = cfg.penalty;
            }
        }
        (r, jac)
    }

    fn levenberg_marquardt(&self, mut x: DVector<f64>, cfg: &SearchConfig) -> (DVector<f64>, f64) {
        let (mut r, mut jac) = self.residual_and_jacobian(&x, cfg);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..cfg.max_iterations {
            if cost.sqrt() < 1e-14 {
                break;
            }
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let grad = &jt * &r;
            let mut improved = false;
            for _ in 0..20 {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = &x + &step;
                let (tr, tj) = self.residual_and_jacobian(&trial, cfg);
                let tc = tr.norm_squared();
                if tc < cost {
                    x = trial;
                    r = tr;
                    jac = tj;
                    let gain = cost - tc;
                    cost = tc;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = gain > 1e-30;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (x, cost.sqrt())
    }

    /// Rounds a numeric point at one denominator bound, repairs the odd
    /// coordinates exactly, and returns the verified certificate if any.
    fn snap(&self, point: &CandidatePoint, max_den: u64) -> Option<Certificate> {
        let mut squares: Vec<Vec<Rational>> = point
            .squares
            .iter()
            .map(|row| row.iter().map(|&c| rationalize(c, max_den)).collect())
            .collect();
        let odd: Vec<usize> = (0..self.coords.len())
            .filter(|&i| !self.coords[i].all_exponents_even())
            .collect();
        if !odd.is_empty() {
            let chosen = self.choose_pivots(point, &odd)?;
            // Each chosen variable enters the odd coordinates linearly since
            // its own square term lands on an all-even monomial.
            let eval = |sq: &[Vec<Rational>]| -> Vec<Rational> {
                let full = self.exact_matching(sq);
                odd.iter().map(|&i| full[i].clone()).collect()
            };
            let mut zeroed = squares.clone();
            for &(j, a) in &chosen {
                zeroed[j][a] = Rational::zero();
            }
            let base = eval(&zeroed);
            let mut columns = Vec::with_capacity(chosen.len());
            for &(j, a) in &chosen {
                let mut unit = zeroed.clone();
                unit[j][a] = Rational::from_integer(1.into());
                let e = eval(&unit);
                columns.push(e.iter().zip(&base).map(|(x, y)| x - y).collect::<Vec<_>>());
            }
            let matrix: Vec<Vec<Rational>> = (0..odd.len())
                .map(|row| columns.iter().map(|c| c[row].clone()).collect())
                .collect();
            let rhs: Vec<Rational> = odd
                .iter()
                .zip(&base)
                .map(|(&i, b)| &self.exact_target[i] - b)
                .collect();
            let solution = solve_square(matrix, rhs)?;
            for (&(j, a), v) in chosen.iter().zip(solution) {
                squares[j][a] = v;
            }
        }
        let forms: Vec<SquareForm> = squares
            .iter()
            .filter(|row| row.iter().any(|c| !c.is_zero()))
            .map(|row| SquareForm::from_basis_coeffs(self.order, row).expect("weights match"))
            .collect();
        let target = entropy_derivative(self.order).ok()?;
        let mut remainder = target.scaled(&Rational::from_integer(self.sign.into()));
        for s in &forms {
            remainder -= &super::expand_square(s).ok()?;
        }
        if remainder
            .iter()
            .any(|(m, c)| !m.all_exponents_even() || c.is_negative())
        {
            return None;
        }
        let cert = Certificate {
            order: self.order,
            sign: self.sign,
            squares: forms,
            remainder,
        };
        match verify_certificate(&cert) {
            Ok(v) if v.verified => Some(cert),
            _ => None,
        }
    }

    /// Exact `sum_j (sum_a c_ja B_a)^2` in canonical coordinates.
    fn exact_matching(&self, squares: &[Vec<Rational>]) -> Vec<Rational> {
        let k = self.k();
        let mut out = vec![Rational::zero(); self.coords.len()];
        for row in squares {
            for a in 0..k {
                if row[a].is_zero() {
                    continue;
                }
                for b in 0..k {
                    if row[b].is_zero() {
                        continue;
                    }
                    let w = &row[a] * &row[b];
                    for (i, q) in &self.exact_products[a][b] {
                        out[*i] += &w * q;
                    }
                }
            }
        }
        out
    }

    /// One variable per square, picked greedily by the size of its entry in
    /// the odd-coordinate Jacobian at the numeric point.
    fn choose_pivots(&self, point: &CandidatePoint, odd: &[usize]) -> Option<Vec<(usize, usize)>> {
        let k = self.k();
        let cols: Vec<(usize, usize)> = self.layout();
        let mut jac = DMatrix::<f64>::zeros(odd.len(), cols.len());
        for (ci, &(j, a)) in cols.iter().enumerate() {
            for b in j..k {
                let c = point.squares[j][b];
                if c == 0.0 {
                    continue;
                }
                for (ri, &row) in odd.iter().enumerate() {
                    jac[(ri, ci)] += 2.0 * c * self.products[a][b][row];
                }
            }
        }
        let mut used_square = vec![false; k];
        let mut used_col = vec![false; cols.len()];
        let mut used_row = vec![false; odd.len()];
        let mut chosen = Vec::new();
        for _ in 0..odd.len() {
            let mut best: Option<(usize, usize, f64)> = None;
            for r in (0..odd.len()).filter(|&r| !used_row[r]) {
                for c in (0..cols.len()).filter(|&c| !used_col[c] && !used_square[cols[c].0]) {
                    let v = jac[(r, c)].abs();
                    if v > best.map_or(1e-9, |b| b.2) {
                        best = Some((r, c, v));
                    }
                }
            }
            let (r, c, _) = best?;
            used_row[r] = true;
            used_col[c] = true;
            used_square[cols[c].0] = true;
            chosen.push(cols[c]);
            // eliminate the pivot column from the remaining rows
            let pivot_row = jac.row(r).clone_owned();
            let pv = jac[(r, c)];
            for rr in (0..odd.len()).filter(|&rr| !used_row[rr]) {
                let factor = jac[(rr, c)] / pv;
                if factor != 0.0 {
                    let updated = jac.row(rr) - &pivot_row * factor;
                    jac.set_row(rr, &updated);
                }
            }
        }
        Some(chosen)
    }

    fn seeds(&self, cfg: &SearchConfig) -> Vec<DVector<f64>> {
        let k = self.k();
        let mut seeds = Vec::new();
        if cfg.use_known_seeds {
            if let Some(cert) = known_certificate(self.order) {
                let mut squares = vec![vec![0.0; k]; k];
                let mut free = vec![true; k];
                let mut ok = true;
                for s in &cert.squares {
                    let coeffs: Vec<f64> = self
                        .basis
                        .iter()
                        .map(|b| {
                            s.terms()
                                .iter()
                                .find(|(t, _)| t == b)
                                .map_or(0.0, |(_, c)| c.to_f64().unwrap_or(0.0))
                        })
                        .collect();
                    match coeffs.iter().position(|&c| c != 0.0) {
                        Some(j) if free[j] => {
                            free[j] = false;
                            squares[j] = coeffs;
                        }
                        _ => ok = false,
                    }
                }
                let rem: Vec<f64> = self
                    .basis
                    .iter()
                    .map(|b| cert.remainder.coeff(&b.product(b)).to_f64().unwrap_or(0.0))
                    .collect();
                if ok {
                    seeds.push(self.pack(&squares, &rem));
                }
            }
        }
        seeds
    }

    fn random_start(&self, seed: u64, index: usize) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let n = self.n_vars();
        let base = self.k() * (self.k() + 1) / 2;
        DVector::from_fn(n, |i, _| {
            if i < base {
                rng.sample::<f64, _>(StandardNormal)
            } else {
                rng.random::<f64>()
            }
        })
    }
}

/// Searches for an order-`n` certificate. The outcome always carries the best
/// numeric point; `certificate` is set only when one verifies exactly.
pub fn search_certificate(order: u32, cfg: &SearchConfig) -> Result<SearchOutcome, SosError> {
    if order == 0 {
        return Err(SosError::InvalidOrder { min: 1, got: 0 });
    }
    let problem = Problem::new(order)?;
    let mut starts = problem.seeds(cfg);
    let known = starts.len();
    for i in 0..cfg.starts.saturating_sub(known) {
        starts.push(problem.random_start(cfg.seed, i));
    }
    let bounds: Vec<u64> = std::iter::successors(Some(10u64), |b| b.checked_mul(10))
        .take_while(|&b| b <= cfg.max_denominator.max(10))
        .collect();
    let results: Vec<(CandidatePoint, Option<Certificate>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(start, x0)| {
            let local = SearchConfig {
                margin: if start < known { 0.0 } else { cfg.margin },
                ..cfg.clone()
            };
            let (x, norm) = problem.levenberg_marquardt(x0, &local);
            let (squares, remainder) = problem.unpack(&x);
            let residual_norm = problem.matching_residual(&squares, &remainder).norm();
            debug!(
                "order {order} start {start}: residual {residual_norm:.3e} (objective {norm:.3e})"
            );
            let point = CandidatePoint {
                start,
                squares,
                remainder,
                residual_norm,
            };
            let cert = if residual_norm < cfg.tolerance {
                bounds.iter().find_map(|&b| problem.snap(&point, b))
            } else {
                None
            };
            (point, cert)
        })
        .collect();
    let starts_run = results.len();
    let best = results
        .iter()
        .map(|(p, _)| p)
        .min_by(|a, b| {
            a.residual_norm
                .total_cmp(&b.residual_norm)
                .then(a.start.cmp(&b.start))
        })
        .cloned();
    // every certified start has exact residual zero; the earliest wins
    let certified = results.into_iter().find(|(_, c)| c.is_some());
    let (certificate, certified_start) = match certified {
        Some((p, c)) => (c, Some(p.start)),
        None => (None, None),
    };
    info!(
        "order {order}: {starts_run} starts, best residual {:.3e}, certified: {}",
        best.as_ref().map_or(f64::NAN, |p| p.residual_norm),
        certified_start.is_some()
    );
    Ok(SearchOutcome {
        order,
        certificate,
        best,
        starts_run,
        certified_start,
    })
}
