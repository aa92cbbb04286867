//! Frame bounds, canonical dual and tight windows, and `S^{-1}` application.
//!
//! Iterative paths run on the Walnut fast-apply. The dense paths (full
//! eigendecomposition or Cholesky) are the oracles they are checked against.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::frame_op::{analysis, synthesis, walnut_coefficients, WalnutCoeffs};
use crate::grid::{GaborLattice, Signal};
use crate::linalg::{
    conjugate_gradient, dense_from_operator, hermitian_eigenvalues, hermitian_function, norm,
    power_iteration, resolvent_solve, LinearOperator, Shifted, SolveReport,
};

/// Default relative tolerance for iterative solvers.
pub const SOLVER_TOL: f64 = 1e-10;
/// Default tolerance for cross-method agreement.
pub const CROSS_TOL: f64 = 1e-8;
/// `A < NOT_A_FRAME_RATIO * B` is treated as `A = 0`.
pub const NOT_A_FRAME_RATIO: f64 = 1e-12;
/// Above this length the automatic bounds estimate uses power iteration.
pub const AUTO_DENSE_LIMIT: usize = 512;

const POWER_MAX_ITER: usize = 200_000;
const CONTOUR_START_NODES: usize = 16;
const CONTOUR_MAX_NODES: usize = 4096;
/// Margin of the integration circle past the spectrum, as a fraction of `A`.
pub const CONTOUR_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMethod {
    PowerIteration,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualMethod {
    Cg,
    Richardson,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TightMethod {
    Contour,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub method: BoundsMethod,
    /// Set when `lower < 1e-12 * upper`; `lower` is then reported as 0.
    pub not_a_frame: bool,
}

impl FrameBounds {
    pub fn is_frame(&self) -> bool {
        !self.not_a_frame
    }

    pub fn condition(&self) -> f64 {
        self.upper / self.lower
    }

    fn require_frame(&self) -> Result<()> {
        if self.not_a_frame {
            Err(GaborError::NotAFrame { lower: self.lower, upper: self.upper })
        } else {
            Ok(())
        }
    }
}

fn finish_bounds(lower: f64, upper: f64, method: BoundsMethod) -> FrameBounds {
    let not_a_frame = lower.is_nan() || lower < NOT_A_FRAME_RATIO * upper || upper <= 0.0;
    FrameBounds {
        lower: if not_a_frame { 0.0 } else { lower },
        upper: upper.max(0.0),
        method,
        not_a_frame,
    }
}

/// Row-sum bound `max_j sum_i |S_{j,i}|` read off the Walnut multipliers.
pub fn gershgorin_upper(w: &WalnutCoeffs) -> f64 {
    let a = w.lattice().time_step();
    (0..a)
        .map(|x| w.entries().iter().map(|(_, v)| v.values[x].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * w.factor()
}

/// Extreme eigenvalues of `S` from its Walnut form.
pub fn bounds_from_walnut(w: &WalnutCoeffs, method: BoundsMethod, tol: f64) -> Result<FrameBounds> {
    match method {
        BoundsMethod::Dense => {
            let ev = hermitian_eigenvalues(&dense_from_operator(w)?);
            Ok(finish_bounds(ev[0], ev[ev.len() - 1], method))
        }
        BoundsMethod::PowerIteration => {
            let (upper, _) = power_iteration(w, tol, POWER_MAX_ITER, 0x5eed)?;
            let mu = gershgorin_upper(w).max(upper);
            let shifted = Shifted { op: w, shift: Complex64::new(mu, 0.0) };
            let (top, _) = power_iteration(&shifted, tol, POWER_MAX_ITER, 0x5eed + 1)?;
            Ok(finish_bounds(mu - top, upper, method))
        }
    }
}

pub fn frame_bounds(g: &Signal, lat: &GaborLattice, method: BoundsMethod) -> Result<FrameBounds> {
    bounds_from_walnut(&walnut_coefficients(g, lat)?, method, SOLVER_TOL)
}

/// The frame operator of one window on one lattice, with its bounds.
#[derive(Debug, Clone)]
pub struct FrameSystem {
    pub walnut: WalnutCoeffs,
    pub bounds: FrameBounds,
}

impl FrameSystem {
    /// Walnut form plus bounds; dense eigenvalues up to [`AUTO_DENSE_LIMIT`], power iteration beyond.
    pub fn new(g: &Signal, lat: &GaborLattice) -> Result<Self> {
        let walnut = walnut_coefficients(g, lat)?;
        let method = if lat.grid().len() <= AUTO_DENSE_LIMIT {
            BoundsMethod::Dense
        } else {
            BoundsMethod::PowerIteration
        };
        let bounds = bounds_from_walnut(&walnut, method, SOLVER_TOL)?;
        Ok(Self { walnut, bounds })
    }

    /// `S^{-1} f` by the requested method.
    pub fn solve(&self, f: &[Complex64], method: DualMethod, tol: f64) -> Result<(Vec<Complex64>, SolveReport)> {
        self.bounds.require_frame()?;
        let n = f.len();
        match method {
            DualMethod::Cg => conjugate_gradient(&self.walnut, f, tol, 20 * n + 1000),
            DualMethod::Richardson => richardson(&self.walnut, &self.bounds, f, tol),
            DualMethod::Dense => {
                let m = dense_from_operator(&self.walnut)?;
                let chol = m.cholesky().ok_or(GaborError::NotAFrame {
                    lower: self.bounds.lower,
                    upper: self.bounds.upper,
                })?;
                let x = chol.solve(&DVector::from_column_slice(f));
                let report = SolveReport { solver: "dense".into(), iterations: 1, residual_history: vec![] };
                Ok((x.as_slice().to_vec(), report))
            }
        }
    }

    /// `S^{-1/2} f` by the requested method.
    pub fn inverse_sqrt(&self, f: &[Complex64], method: TightMethod, tol: f64) -> Result<(Vec<Complex64>, ContourReport)> {
        self.bounds.require_frame()?;
        match method {
            TightMethod::Contour => inverse_sqrt_contour(&self.walnut, &self.bounds, f, tol),
            TightMethod::Dense => {
                let m = dense_from_operator(&self.walnut)?;
                let r = hermitian_function(&m, |l| l.powf(-0.5));
                Ok((r.apply(f), ContourReport::default()))
            }
        }
    }
}

/// Frame algorithm `x <- x + 2/(A+B) (f - S x)`; contracts by `(B-A)/(B+A)`.
fn richardson<O: LinearOperator + ?Sized>(
    op: &O,
    bounds: &FrameBounds,
    f: &[Complex64],
    tol: f64,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let relax = 2.0 / (bounds.lower + bounds.upper);
    let q = (bounds.upper - bounds.lower) / (bounds.upper + bounds.lower);
    let max_iter = if q <= 0.0 {
        10
    } else {
        ((tol.ln() / q.ln()).ceil() as usize).saturating_mul(2).clamp(10, 1_000_000)
    };
    let mut report = SolveReport { solver: "richardson".into(), ..Default::default() };
    let fnorm = norm(f);
    let mut x = vec![Complex64::new(0.0, 0.0); f.len()];
    if fnorm == 0.0 {
        return Ok((x, report));
    }
    let mut resid = f.to_vec();
    for it in 1..=max_iter {
        x.iter_mut().zip(&resid).for_each(|(xi, ri)| *xi += relax * ri);
        let sx = op.apply(&x);
        resid = f.iter().zip(&sx).map(|(fi, si)| fi - si).collect();
        let rel = norm(&resid) / fnorm;
        report.iterations = it;
        report.residual_history.push(rel);
        if rel <= tol {
            return Ok((x, report));
        }
    }
    Err(GaborError::Convergence {
        solver: "richardson",
        iterations: max_iter,
        last_change: report.final_residual(),
    })
}

/// Quadrature history of a contour evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContourReport {
    pub center: f64,
    pub radius: f64,
    pub nodes: usize,
    /// Relative change between successive node counts.
    pub changes: Vec<(usize, f64)>,
    pub resolvent_iterations: usize,
}

/// `S^{-1/2} v = (1/2 pi i) \oint z^{-1/2} (z I - S)^{-1} v dz` on the circle
/// centred at `(A+B)/2` with radius `(B-A)/2 + 0.1 A`, trapezoidal rule with
/// node doubling from 16 up to 4096 nodes. Principal branch of the root.
pub fn inverse_sqrt_contour<O: LinearOperator + Sync + ?Sized>(
    op: &O,
    bounds: &FrameBounds,
    v: &[Complex64],
    tol: f64,
) -> Result<(Vec<Complex64>, ContourReport)> {
    bounds.require_frame()?;
    let center = 0.5 * (bounds.lower + bounds.upper);
    let radius = 0.5 * (bounds.upper - bounds.lower) + CONTOUR_MARGIN * bounds.lower;
    if center - radius <= 0.0 {
        return Err(GaborError::Branch(format!(
            "contour centre {center} radius {radius} reaches the branch cut"
        )));
    }
    let mut report = ContourReport { center, radius, ..Default::default() };
    let n = v.len();
    if norm(v) == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n], report));
    }
    let inner_tol = (tol * 1e-2).max(1e-14);
    let node_term = |theta: f64| -> Result<(Vec<Complex64>, usize)> {
        let e = Complex64::from_polar(1.0, theta);
        let z = center + radius * e;
        let (x, rep) = resolvent_solve(op, z, v, inner_tol, 50 * n + 2000)?;
        // dz / (2 pi i) = radius e dtheta / (2 pi)
        let w = z.powf(-0.5) * radius * e;
        Ok((x.into_iter().map(|xi| xi * w).collect(), rep.iterations))
    };
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    let mut nodes = 0usize;
    let mut previous: Option<Vec<Complex64>> = None;
    let mut next_nodes = CONTOUR_START_NODES;
    loop {
        // new nodes at this level: all for the first pass, odd ones afterwards
        let thetas: Vec<f64> = if nodes == 0 {
            (0..next_nodes).map(|k| TAU * k as f64 / next_nodes as f64).collect()
        } else {
            (0..nodes).map(|k| TAU * (2 * k + 1) as f64 / next_nodes as f64).collect()
        };
        let terms: Vec<(Vec<Complex64>, usize)> =
            thetas.par_iter().map(|&t| node_term(t)).collect::<Result<_>>()?;
        for (term, iters) in &terms {
            sum.iter_mut().zip(term).for_each(|(s, t)| *s += t);
            report.resolvent_iterations += iters;
        }
        nodes = next_nodes;
        let estimate: Vec<Complex64> = sum.iter().map(|s| s / nodes as f64).collect();
        if let Some(prev) = &previous {
            let diff: Vec<Complex64> = estimate.iter().zip(prev).map(|(x, y)| x - y).collect();
            let change = norm(&diff) / norm(&estimate);
            report.changes.push((nodes, change));
            if change < tol {
                report.nodes = nodes;
                return Ok((estimate, report));
            }
        }
        if nodes >= CONTOUR_MAX_NODES {
            return Err(GaborError::Convergence {
                solver: "contour",
                iterations: nodes,
                last_change: report.changes.last().map_or(f64::INFINITY, |c| c.1),
            });
        }
        previous = Some(estimate);
        next_nodes = nodes * 2;
    }
}

/// Canonical dual window `S^{-1} g`.
pub fn dual_window(g: &Signal, lat: &GaborLattice, method: DualMethod, tol: f64) -> Result<Signal> {
    dual_window_report(g, lat, method, tol).map(|(s, _)| s)
}

pub fn dual_window_report(
    g: &Signal,
    lat: &GaborLattice,
    method: DualMethod,
    tol: f64,
) -> Result<(Signal, SolveReport)> {
    let sys = FrameSystem::new(g, lat)?;
    let (x, rep) = sys.solve(g.samples(), method, tol)?;
    Ok((Signal::new(g.grid(), x)?, rep))
}

/// Canonical tight window `S^{-1/2} g`.
pub fn tight_window(g: &Signal, lat: &GaborLattice, method: TightMethod, tol: f64) -> Result<Signal> {
    tight_window_report(g, lat, method, tol).map(|(s, _)| s)
}

pub fn tight_window_report(
    g: &Signal,
    lat: &GaborLattice,
    method: TightMethod,
    tol: f64,
) -> Result<(Signal, ContourReport)> {
    let sys = FrameSystem::new(g, lat)?;
    let (x, rep) = sys.inverse_sqrt(g.samples(), method, tol)?;
    Ok((Signal::new(g.grid(), x)?, rep))
}

/// `S^{-1} f` for the frame generated by `g`.
pub fn apply_inverse(
    g: &Signal,
    lat: &GaborLattice,
    f: &Signal,
    method: DualMethod,
    tol: f64,
) -> Result<Signal> {
    lat.ensure_grid(f)?;
    let sys = FrameSystem::new(g, lat)?;
    let (x, _) = sys.solve(f.samples(), method, tol)?;
    Signal::new(f.grid(), x)
}

pub(crate) fn random_signal(grid: crate::grid::Grid, rng: &mut ChaCha8Rng) -> Signal {
    let v = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Signal::new(grid, v).expect("length matches grid")
}

/// Worst relative reconstruction error over `trials` random signals, using
/// both `synthesis(g, analysis(gd, f))` and `synthesis(gd, analysis(g, f))`.
pub fn verify_reconstruction(
    g: &Signal,
    gd: &Signal,
    lat: &GaborLattice,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    lat.ensure_grid(g)?;
    lat.ensure_grid(gd)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = random_signal(lat.grid(), &mut rng);
        let fnorm = f.norm_l2();
        let one = synthesis(g, lat, &analysis(gd, lat, &f)?)?;
        let two = synthesis(gd, lat, &analysis(g, lat, &f)?)?;
        worst = worst
            .max(one.sub(&f)?.norm_l2() / fnorm)
            .max(two.sub(&f)?.norm_l2() / fnorm);
    }
    Ok(worst)
}
