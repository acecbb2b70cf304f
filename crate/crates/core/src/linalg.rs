//! Matrix-free eigen-solvers for symmetric operators and a few dense helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// A real symmetric operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let out = self * xv;
        y.copy_from_slice(out.as_slice());
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_unit(dim: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, stream);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let len = norm(&v);
    v.iter_mut().for_each(|a| *a /= len);
    v
}

/// Number of applications of `A` after which the power-method estimate of
/// `‖A‖` is at least `(1 - tol)‖A‖` except with probability `2^-30` over a
/// random start (Kuczyński–Woźniakowski bound for the power method on `A²`).
pub fn power_iterations_required(dim: usize, tol: f64) -> usize {
    let eps = 1.0 - (1.0 - tol) * (1.0 - tol);
    let log_fail = 30.0 * std::f64::consts::LN_2 + 0.824f64.ln() + 0.5 * (dim.max(1) as f64).ln();
    let steps_on_square = 0.5 + log_fail / -(1.0 - eps).ln();
    2 * steps_on_square.ceil().max(1.0) as usize
}

/// Estimates the spectral norm by power iteration on `A` with the estimate
/// `‖A v‖ / ‖v‖`.
///
/// The estimate never exceeds `‖A‖`. Iteration stops after
/// [`power_iterations_required`] steps, or earlier once the estimate is
/// stationary to machine precision.
pub fn spectral_norm<A: SymmetricOperator + ?Sized>(
    a: &A,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<f64> {
    if !(tol > 1e-8 && tol < 0.5) {
        return Err(Error::param(format!("tol = {tol} outside (1e-8, 0.5)")));
    }
    let dim = a.dim();
    if dim == 0 {
        return Ok(0.0);
    }
    let required = power_iterations_required(dim, tol);
    let mut v = random_unit(dim, seed, streams::SPECTRAL);
    let mut w = vec![0.0; dim];
    let mut history = [0.0f64; 2];
    let mut best = 0.0f64;
    let mut stationary = 0;
    for iter in 1..=max_iters {
        a.apply(&v, &mut w);
        let estimate = norm(&w);
        if estimate == 0.0 {
            // a random start in the kernel of a nonzero matrix has probability zero
            return Ok(best);
        }
        best = best.max(estimate);
        if iter >= required {
            return Ok(best);
        }
        let two_back = history[iter % 2];
        if iter > 2 && (estimate - two_back).abs() <= 1e-14 * estimate {
            stationary += 1;
            if stationary >= 8 {
                return Ok(best);
            }
        } else {
            stationary = 0;
        }
        history[iter % 2] = estimate;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / estimate;
        }
    }
    Err(Error::Convergence {
        stage: "spectral norm",
        iterations: max_iters,
        best,
    })
}

/// Largest (algebraic) eigenvalue and a unit eigenvector, by restarted
/// Lanczos with full reorthogonalization.
pub fn top_eigenpair<A: SymmetricOperator + ?Sized>(
    a: &A,
    krylov_dim: usize,
    restarts: usize,
    tol: f64,
    seed: u64,
) -> (f64, Vec<f64>) {
    let dim = a.dim();
    if dim == 0 {
        return (0.0, Vec::new());
    }
    let basis_dim = krylov_dim.clamp(1, dim);
    let mut start = random_unit(dim, seed, streams::SPECTRAL);
    let mut best = (f64::NEG_INFINITY, start.clone());
    for _ in 0..=restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(basis_dim);
        let mut alpha = Vec::with_capacity(basis_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(basis_dim);
        let mut q = start.clone();
        let mut w = vec![0.0; dim];
        let mut residual = 0.0;
        for j in 0..basis_dim {
            a.apply(&q, &mut w);
            let aj = dot(&w, &q);
            alpha.push(aj);
            basis.push(q.clone());
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let bj = norm(&w);
            residual = bj;
            if j + 1 == basis_dim || bj <= 1e-12 * aj.abs().max(1.0) {
                break;
            }
            beta.push(bj);
            q = w.iter().map(|x| x / bj).collect();
        }
        let m = alpha.len();
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (top, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        let coeffs = eig.eigenvectors.column(top);
        let mut ritz = vec![0.0; dim];
        for (b, &c) in basis.iter().zip(coeffs.iter()) {
            ritz.iter_mut().zip(b).for_each(|(r, bi)| *r += c * bi);
        }
        let len = norm(&ritz);
        ritz.iter_mut().for_each(|r| *r /= len);
        if theta > best.0 {
            best = (theta, ritz.clone());
        }
        let err = residual * coeffs[m - 1].abs();
        if m < basis_dim || err <= tol * theta.abs().max(1e-300) {
            break;
        }
        start = ritz;
    }
    best
}

/// Smallest eigenvalue of a dense symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Nearest-PSD surrogate with unit diagonal: clip negative eigenvalues, then
/// rescale `D^-1/2 X D^-1/2` and clip entries to [-1, 1]. A row whose
/// diagonal vanishes after clipping is replaced by the unit vector.
pub fn project_psd_unit_diagonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let psd = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = psd[(i, i)];
            if d > 1e-300 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (0.5 * (psd[(i, j)] + psd[(j, i)]) * scale[i] * scale[j]).clamp(-1.0, 1.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}
