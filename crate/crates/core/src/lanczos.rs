//! Lanczos iteration for the lowest eigenpair of a Hermitian operator.
//!
//! The Krylov basis is fully reorthogonalized (two Gram-Schmidt passes per
//! step). Runs that exhaust `max_krylov` restart from the current Ritz
//! vector, so the reported Ritz values never increase.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Field the iteration runs over (`f64` or `Complex64`).
pub trait Scalar:
    Copy + Send + Sync + Default + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + AddAssign + 'static
{
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs_sqr(self) -> f64;
    fn scale(self, a: f64) -> Self;
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, a: f64) -> Self {
        self * a
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, a: f64) -> Self {
        self * a
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::default(), |acc, (&x, &y)| acc + x.conj() * y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Target for `|H x - theta x|` with `|x| = 1`.
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Solve the tridiagonal problem every this many steps.
    pub check_every: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_krylov: 300,
            max_restarts: 30,
            check_every: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOutcome<T> {
    pub eigenvalue: f64,
    /// Second-lowest Ritz value of the final Krylov space, if it had one.
    pub next_ritz: Option<f64>,
    pub vector: Vec<T>,
    pub residual: f64,
    pub iterations: usize,
    /// Lowest Ritz value at every check, in order.
    pub ritz_history: Vec<f64>,
}

struct Ritz {
    lowest: f64,
    second: Option<f64>,
    coeffs: Vec<f64>,
}

fn tridiagonal_ritz(alphas: &[f64], betas: &[f64]) -> Ritz {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lo = order[0];
    Ritz {
        lowest: eig.eigenvalues[lo],
        second: order.get(1).map(|&i| eig.eigenvalues[i]),
        coeffs: eig.eigenvectors.column(lo).iter().copied().collect(),
    }
}

/// Lowest eigenpair of the Hermitian operator `apply` (which writes `H x`
/// into its second argument), starting from `start`.
pub fn lowest<T, F>(dim: usize, apply: F, start: Vec<T>, opts: &LanczosOptions) -> Result<LanczosOutcome<T>>
where
    T: Scalar,
    F: Fn(&[T], &mut [T]),
{
    assert_eq!(start.len(), dim, "start vector has wrong length");
    let mut x = start;
    let n0 = norm(&x);
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("zero start vector".into()));
    }
    x.iter_mut().for_each(|e| *e = e.scale(1.0 / n0));

    let mut hx = vec![T::default(); dim];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;
    let max_krylov = opts.max_krylov.max(2).min(dim.max(1));

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<T>> = vec![x.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![T::default(); dim];
        let mut last = None;

        for j in 0..max_krylov {
            apply(&basis[j], &mut w);
            iterations += 1;
            let alpha = dot(&basis[j], &w).re();
            axpy(&mut w, T::from_real(-alpha), &basis[j]);
            if j > 0 {
                axpy(&mut w, T::from_real(-betas[j - 1]), &basis[j - 1]);
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(&mut w, T::default() - c, q);
                }
            }
            alphas.push(alpha);
            let beta = norm(&w);
            let scale = alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            let breakdown = beta <= 1e-13 * scale;
            let at_end = j + 1 == max_krylov;

            if breakdown || at_end || (j + 1) % opts.check_every.max(1) == 0 {
                let ritz = tridiagonal_ritz(&alphas, &betas);
                history.push(ritz.lowest);
                let estimate = beta * ritz.coeffs.last().copied().unwrap_or(0.0).abs();
                if breakdown || at_end || estimate <= 0.5 * opts.tol {
                    let mut v = vec![T::default(); dim];
                    for (q, &c) in basis.iter().zip(&ritz.coeffs) {
                        axpy(&mut v, T::from_real(c), q);
                    }
                    let nv = norm(&v);
                    v.iter_mut().for_each(|e| *e = e.scale(1.0 / nv));
                    apply(&v, &mut hx);
                    let theta = dot(&v, &hx).re();
                    let residual = hx
                        .iter()
                        .zip(&v)
                        .map(|(&h, &e)| (h - e.scale(theta)).abs_sqr())
                        .sum::<f64>()
                        .sqrt();
                    best_residual = best_residual.min(residual);
                    last = Some((v, theta, ritz.second, residual));
                    let (_, _, _, r) = last.as_ref().unwrap();
                    if *r <= opts.tol {
                        let (vector, eigenvalue, next_ritz, residual) = last.unwrap();
                        return Ok(LanczosOutcome {
                            eigenvalue,
                            next_ritz,
                            vector,
                            residual,
                            iterations,
                            ritz_history: history,
                        });
                    }
                    if breakdown || at_end {
                        break;
                    }
                }
            }
            if breakdown {
                break;
            }
            betas.push(beta);
            let inv = 1.0 / beta;
            basis.push(w.iter().map(|e| e.scale(inv)).collect());
        }
        match last {
            Some((v, ..)) => x = v,
            None => break,
        }
    }
    Err(Error::NotConverged {
        iterations,
        best_residual,
    })
}

/// Lowest Ritz value after a fixed number of steps; an upper bound on the
/// true lowest eigenvalue, used for cheap sector probing.
pub fn probe<T, F>(dim: usize, apply: F, start: Vec<T>, steps: usize) -> f64
where
    T: Scalar,
    F: Fn(&[T], &mut [T]),
{
    let steps = steps.max(1).min(dim);
    let n0 = norm(&start);
    let mut basis: Vec<Vec<T>> = vec![start.iter().map(|e| e.scale(1.0 / n0)).collect()];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![T::default(); dim];
    for j in 0..steps {
        apply(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w).re();
        axpy(&mut w, T::from_real(-alpha), &basis[j]);
        if j > 0 {
            axpy(&mut w, T::from_real(-betas[j - 1]), &basis[j - 1]);
        }
        for q in &basis {
            let c = dot(q, &w);
            axpy(&mut w, T::default() - c, q);
        }
        alphas.push(alpha);
        let beta = norm(&w);
        if beta <= 1e-13 * alphas.iter().fold(1.0f64, |m, a| m.max(a.abs())) || j + 1 == steps {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|e| e.scale(1.0 / beta)).collect());
    }
    tridiagonal_ritz(&alphas, &betas).lowest
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag_laplacian(n: usize) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut acc = 2.0 * x[i];
                if i > 0 {
                    acc -= x[i - 1];
                }
                if i + 1 < n {
                    acc -= x[i + 1];
                }
                y[i] = acc;
            }
        }
    }

    #[test]
    fn laplacian_lowest_mode() {
        let n = 200;
        let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
        let out = lowest(n, tridiag_laplacian(n), start, &LanczosOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((out.eigenvalue - exact).abs() < 1e-10, "{} vs {exact}", out.eigenvalue);
        assert!(out.residual <= 1e-10);
        assert!(out.ritz_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn restart_path_converges() {
        let n = 400;
        let start = vec![1.0; n];
        let opts = LanczosOptions {
            max_krylov: 20,
            max_restarts: 500,
            ..Default::default()
        };
        let out = lowest(n, tridiag_laplacian(n), start, &opts).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((out.eigenvalue - exact).abs() < 1e-9);
        assert!(out.ritz_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn exhausted_budget_reports_best_residual() {
        let n = 400;
        let opts = LanczosOptions {
            max_krylov: 5,
            max_restarts: 1,
            ..Default::default()
        };
        match lowest(n, tridiag_laplacian(n), vec![1.0; n], &opts) {
            Err(Error::NotConverged { best_residual, .. }) => assert!(best_residual.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn complex_diagonal() {
        let d = [3.0, -1.5, 0.25, 2.0];
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..4 {
                y[i] = x[i] * d[i];
            }
        };
        let out = lowest(4, apply, vec![Complex64::new(1.0, 0.5); 4], &LanczosOptions::default()).unwrap();
        assert!((out.eigenvalue + 1.5).abs() < 1e-12);
    }
}
