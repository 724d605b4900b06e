//! Composite adaptive Gauss-Legendre quadrature.

use std::sync::OnceLock;

use super::OracleError;

const NODES: usize = 20;
const MAX_DEPTH: u32 = 40;
const MAX_PANELS: usize = 1 << 20;

/// Nodes and weights of the 20-point rule on `[-1, 1]`.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(NODES))
}

/// Newton iteration on `P_n` from the usual cosine guesses.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of accepted panel discrepancies plus a rounding allowance.
    pub error: f64,
}

/// Writes the rule's estimate of each integral and of the integrated
/// rounding scale.
fn panel<F>(
    f: &F,
    a: f64,
    b: f64,
    out: &mut [f64],
    abs: &mut [f64],
    scratch: &mut [f64],
    scale: &mut [f64],
) where
    F: Fn(f64, &mut [f64], &mut [f64]),
{
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    out.iter_mut().for_each(|v| *v = 0.0);
    abs.iter_mut().for_each(|v| *v = 0.0);
    for &(x, w) in rule() {
        scale.iter_mut().for_each(|v| *v = 0.0);
        f(mid + half * x, scratch, scale);
        for d in 0..out.len() {
            out[d] += w * half * scratch[d];
            abs[d] += w * half * scale[d].max(scratch[d].abs());
        }
    }
}

/// Integrates `dim` functions at once over `[a, b]`, starting from panels no
/// wider than `width` and bisecting until each panel agrees with its halves
/// to within `abs_tol` (shared out by length) or to rounding level.
/// `f(x, out, scale)` writes the integrand values at `x` and, in `scale`, the
/// size of the terms they were summed from (left alone it means `|out|`).
pub fn integrate_many<F>(
    f: F,
    dim: usize,
    a: f64,
    b: f64,
    width: f64,
    abs_tol: f64,
) -> Result<Vec<Estimate>, OracleError>
where
    F: Fn(f64, &mut [f64], &mut [f64]),
{
    let pieces = (((b - a) / width).ceil() as usize).max(1);
    let h = (b - a) / pieces as f64;
    let mut sums = vec![Neumaier::default(); dim];
    let mut errors = vec![0.0; dim];
    let mut magnitude = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    let mut panels = 0usize;
    let mut whole = vec![0.0; dim];
    let (mut left, mut right) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut left_abs, mut right_abs) = (vec![0.0; dim], vec![0.0; dim]);
    let mut unconverged = false;
    for i in 0..pieces {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == pieces { b } else { lo + h };
        panel(
            &f,
            lo,
            hi,
            &mut whole,
            &mut left_abs,
            &mut scratch,
            &mut scale,
        );
        let mut stack = vec![(lo, hi, abs_tol * (hi - lo) / (b - a), 0u32, whole.clone())];
        while let Some((p, q, tol, depth, coarse)) = stack.pop() {
            let m = 0.5 * (p + q);
            panel(&f, p, m, &mut left, &mut left_abs, &mut scratch, &mut scale);
            panel(
                &f,
                m,
                q,
                &mut right,
                &mut right_abs,
                &mut scratch,
                &mut scale,
            );
            panels += 2;
            let mut excess: f64 = 0.0;
            for d in 0..dim {
                let fine = left[d] + right[d];
                let floor = 64.0 * f64::EPSILON * (left_abs[d] + right_abs[d]);
                excess = excess.max((fine - coarse[d]).abs() - floor - tol);
            }
            if excess <= 0.0 || depth >= MAX_DEPTH || panels >= MAX_PANELS {
                unconverged |= excess > 0.0;
                for d in 0..dim {
                    sums[d].add(left[d]);
                    sums[d].add(right[d]);
                    errors[d] += (left[d] + right[d] - coarse[d]).abs();
                    magnitude[d] += left_abs[d] + right_abs[d];
                }
            } else {
                stack.push((m, q, tol / 2.0, depth + 1, right.clone()));
                stack.push((p, m, tol / 2.0, depth + 1, left.clone()));
            }
        }
    }
    let estimates: Vec<Estimate> = (0..dim)
        .map(|d| Estimate {
            value: sums[d].value(),
            error: errors[d] + 4.0 * f64::EPSILON * magnitude[d],
        })
        .collect();
    if unconverged {
        let achieved = estimates.iter().map(|e| e.error).fold(0.0, f64::max);
        return Err(OracleError::Quadrature {
            achieved,
            tolerance: abs_tol,
        });
    }
    Ok(estimates)
}

pub fn integrate<F>(f: F, a: f64, b: f64, width: f64, abs_tol: f64) -> Result<Estimate, OracleError>
where
    F: Fn(f64) -> f64,
{
    let est = integrate_many(
        |x, out: &mut [f64], _: &mut [f64]| out[0] = f(x),
        1,
        a,
        b,
        width,
        abs_tol,
    )?;
    Ok(est[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let r = legendre_rule(NODES);
        assert_eq!(r.len(), NODES);
        let total: f64 = r.iter().map(|p| p.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        for k in 0..40 {
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            let q: f64 = r.iter().map(|&(x, w)| w * x.powi(k)).sum();
            assert!((q - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn gaussian_integral() {
        let est = integrate(|x| (-x * x / 2.0).exp(), -40.0, 40.0, 0.5, 1e-12).unwrap();
        assert!((est.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
        assert!(est.error < 1e-12);
    }

    #[test]
    fn adaptive_refinement_handles_a_kink() {
        let est = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 2.0, 1e-10).unwrap();
        assert!((est.value - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum() {
        let mut s = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
