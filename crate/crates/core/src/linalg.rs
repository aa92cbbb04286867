//! Matrix-free operators, Krylov solvers, power iteration and dense helpers.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GaborError, Result};

/// Largest size for which dense matrices are formed.
pub const DENSE_LIMIT: usize = 1024;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOperator for DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

/// `shift * I - op`.
pub struct Shifted<'a, O: ?Sized> {
    pub op: &'a O,
    pub shift: Complex64,
}

impl<O: LinearOperator + ?Sized> LinearOperator for Shifted<'_, O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let ox = self.op.apply(x);
        x.iter().zip(ox).map(|(xi, oi)| self.shift * xi - oi).collect()
    }
}

pub(crate) fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Iteration count and relative residual after each iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub solver: String,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// CSV with columns `solver,iteration,residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            solver: &'a str,
            iteration: usize,
            residual: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (i, &residual) in self.residual_history.iter().enumerate() {
            w.serialize(Row { solver: &self.solver, iteration: i + 1, residual })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Conjugate gradients for Hermitian positive definite `op`; stops when
/// `||b - op x|| <= tol ||b||`.
pub fn conjugate_gradient<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let n = b.len();
    let mut report = SolveReport { solver: "cg".into(), ..Default::default() };
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r).re;
    for it in 1..=max_iter {
        let ap = op.apply(&p);
        let pap = dot(&p, &ap).re;
        if pap.is_nan() || pap <= 0.0 {
            return Err(GaborError::NotAFrame { lower: pap, upper: f64::NAN });
        }
        let alpha = Complex64::new(rs / pap, 0.0);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rs_new = dot(&r, &r).re;
        let rel = rs_new.sqrt() / bnorm;
        report.iterations = it;
        report.residual_history.push(rel);
        if rel <= tol {
            return Ok((x, report));
        }
        let beta = Complex64::new(rs_new / rs, 0.0);
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rs = rs_new;
    }
    Err(GaborError::Convergence {
        solver: "cg",
        iterations: max_iter,
        last_change: report.final_residual(),
    })
}

/// Solve `(shift I - op) x = b` for Hermitian `op` and complex `shift` by
/// conjugate gradients on the normal equations. The shifted operator is
/// normal but not Hermitian, so plain CG does not apply.
pub fn resolvent_solve<O: LinearOperator + ?Sized>(
    op: &O,
    shift: Complex64,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let a = Shifted { op, shift };
    let a_adj = Shifted { op, shift: shift.conj() };
    let n = b.len();
    let mut report = SolveReport { solver: "cgnr".into(), ..Default::default() };
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z = a_adj.apply(&r);
    let mut p = z.clone();
    let mut zz = dot(&z, &z).re;
    for it in 1..=max_iter {
        let w = a.apply(&p);
        let ww = dot(&w, &w).re;
        if ww == 0.0 {
            return Err(GaborError::Branch(format!("resolvent singular at {shift}")));
        }
        let alpha = Complex64::new(zz / ww, 0.0);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &w, &mut r);
        let rel = norm(&r) / bnorm;
        report.iterations = it;
        report.residual_history.push(rel);
        if rel <= tol {
            return Ok((x, report));
        }
        z = a_adj.apply(&r);
        let zz_new = dot(&z, &z).re;
        let beta = Complex64::new(zz_new / zz, 0.0);
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        zz = zz_new;
    }
    Err(GaborError::Convergence {
        solver: "cgnr",
        iterations: max_iter,
        last_change: report.final_residual(),
    })
}

/// Dominant eigenvalue of a Hermitian positive semidefinite operator by power
/// iteration on the Rayleigh quotient; converged when successive quotients
/// differ by at most `tol` relative and the eigen-residual `|Sv - theta v|`
/// is at most `tol * theta`.
pub fn power_iteration<O: LinearOperator + ?Sized>(
    op: &O,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut theta = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let w = op.apply(&v);
        let next = dot(&v, &w).re;
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok((0.0, it));
        }
        change = (next - theta).abs();
        theta = next;
        if change <= tol * theta.abs() {
            // a stalled quotient is not enough when the top eigenvalues cluster
            let resid: Vec<Complex64> = w.iter().zip(&v).map(|(wi, vi)| wi - theta * vi).collect();
            if norm(&resid) <= tol * theta.abs() {
                return Ok((theta, it));
            }
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    Err(GaborError::Convergence { solver: "power_iteration", iterations: max_iter, last_change: change })
}

/// Dense matrix of `op`: column `j` is `op(e_j)`. Columns are computed in
/// parallel and placed by index.
pub fn dense_from_operator<O: LinearOperator + Sync + ?Sized>(op: &O) -> Result<DMatrix<Complex64>> {
    let n = op.dim();
    dense_from_columns(n, |j| {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        op.apply(&e)
    })
}

pub(crate) fn dense_from_columns<F>(n: usize, column: F) -> Result<DMatrix<Complex64>>
where
    F: Fn(usize) -> Vec<Complex64> + Sync + Send,
{
    if n > DENSE_LIMIT {
        return Err(GaborError::Size(format!("dense matrices are limited to L <= {DENSE_LIMIT}, got {n}")));
    }
    let cols: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(column).collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, &DVector::from_column_slice(col));
    }
    Ok(m)
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `f(m)` for Hermitian `m` through its eigendecomposition.
pub fn hermitian_function<F: Fn(f64) -> f64>(m: &DMatrix<Complex64>, f: F) -> DMatrix<Complex64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(f(l), 0.0)));
    q * d * q.adjoint()
}

pub fn max_abs_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}
