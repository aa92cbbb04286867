//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{chi, corpus, divisors, gaussian, hat, random_signal, random_window, scalar_instance};
use gabor_walnut::amalgam::{amalgam_norm, amalgam_profile};
use gabor_walnut::diagnostics::{
    build_counterexample, convo_identity_residual, counterexample_report, dense_matrix,
    dual_summability_report, estimate_convest, extract_walnut_from_matrix, forbound_check,
    CoefficientRule,
};
use gabor_walnut::frame_op::{frame_operator_direct, frame_operator_walnut, walnut_coefficients};
use gabor_walnut::invert::{
    dual_window, frame_bounds, tight_window, BoundsMethod, DualMethod, FrameSystem, TightMethod,
    SOLVER_TOL,
};
use gabor_walnut::linalg::{dense_from_operator, hermitian_eigenvalues, hermitian_function, max_abs_entry};
use gabor_walnut::{build_grid, GaborLattice, Signal, Weight};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WALNUT_REL_TOL: f64 = 1e-10;
const SCALAR_TOL: f64 = 1e-12;
const CROSS_TOL: f64 = 1e-8;
const TAIL_FRACTION_MAX: f64 = 0.05;
const IDENTITY_TOL: f64 = 1e-8;
const NEGATIVE_CONTROL_MIN: f64 = 1e-2;
const ORTHOGONALITY_TOL: f64 = 1e-12;
const HARMONIC_REL_TOL: f64 = 0.05;
const FORBOUND_TRIALS: usize = 100;
const OFF_STRUCTURE_MAX: f64 = 1e-14;
const ROUND_TRIP_TOL: f64 = 1e-12;
const SPEEDUP_MIN: f64 = 5.0;
const BENCH_REPS: usize = 5;
const SEED: u64 = 20240917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn weights() -> Vec<Weight> {
    vec![
        Weight::Constant,
        Weight::polynomial(1.0).unwrap(),
        Weight::polynomial(2.0).unwrap(),
        Weight::subexponential(0.5, 0.5).unwrap(),
    ]
}

fn rel_err(x: &Signal, reference: &Signal) -> f64 {
    let diff = x.sub(reference).unwrap().norm_l2();
    let scale = reference.norm_l2();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn walnut_vs_direct() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    for (len, s) in [(48, 4), (64, 8)] {
        let grid = build_grid(len, s).unwrap();
        let windows = [
            ("chi", chi(grid)),
            ("gaussian", gaussian(grid)),
            ("hat", hat(grid)),
            ("random", random_window(grid, SEED + len as u64)),
        ];
        for (name, g) in &windows {
            for a in divisors(len) {
                for b in divisors(len) {
                    let lat = GaborLattice::new(grid, a, b).unwrap();
                    let w = walnut_coefficients(g, &lat).unwrap();
                    for _ in 0..2 {
                        let f = random_signal(grid, &mut rng);
                        let direct = frame_operator_direct(g, &lat, &f).unwrap();
                        let fast = frame_operator_walnut(&w, &f).unwrap();
                        let e = rel_err(&fast, &direct);
                        if e > worst.0 || worst.1.is_empty() {
                            worst = (e, format!("{name} L={len} a={a} b={b}"));
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    outcome(
        worst.0 < WALNUT_REL_TOL,
        format!("{cases} cases, worst relative error {:.2e} at {}", worst.0, worst.1),
    )
}

fn scalar_instance_check() -> Outcome {
    let inst = scalar_instance();
    let (g, lat) = (&inst.g, &inst.lat);
    let mut worst = 0.0f64;
    for method in [BoundsMethod::Dense, BoundsMethod::PowerIteration] {
        let b = frame_bounds(g, lat, method).unwrap();
        worst = worst.max((b.lower - 2.0).abs()).max((b.upper - 2.0).abs());
    }
    let s = dense_matrix(|f| frame_operator_direct(g, lat, f), lat.grid()).unwrap();
    let s_err = max_abs_entry(&(s - DMatrix::identity(8, 8) * Complex64::new(2.0, 0.0)));
    let half = g.scale(Complex64::new(0.5, 0.0));
    let root = g.scale(Complex64::new(0.5f64.sqrt(), 0.0));
    let mut dual_err = 0.0f64;
    for m in [DualMethod::Cg, DualMethod::Richardson, DualMethod::Dense] {
        dual_err = dual_err.max(dual_window(g, lat, m, SOLVER_TOL).unwrap().max_abs_diff(&half));
    }
    let mut tight_err = 0.0f64;
    for m in [TightMethod::Contour, TightMethod::Dense] {
        tight_err = tight_err.max(tight_window(g, lat, m, SOLVER_TOL).unwrap().max_abs_diff(&root));
    }
    let all = worst.max(s_err).max(dual_err).max(tight_err);
    outcome(
        all <= SCALAR_TOL,
        format!(
            "|A-2|,|B-2| <= {worst:.1e}; |S-2I| = {s_err:.1e}; |gd-g/2| = {dual_err:.1e}; |gt-g/sqrt2| = {tight_err:.1e}"
        ),
    )
}

fn inverse_summability() -> Outcome {
    let grid = build_grid(256, 16).unwrap();
    let g = gaussian(grid);
    let lat = GaborLattice::new(grid, 8, 8).unwrap();
    let nu = Weight::polynomial(2.0).unwrap();
    let (gd, rep) = dual_summability_report(&g, &lat, &nu).unwrap();
    let cross = rep.cross_check.unwrap();
    let tail = rep.tail_fraction(lat.freq_step() as i64 / 4);
    let norm = amalgam_norm(&gd, lat.time_step(), &nu).unwrap();
    outcome(
        rep.weighted_sum.is_finite() && cross <= CROSS_TOL && norm.is_finite() && tail < TAIL_FRACTION_MAX,
        format!(
            "weighted sum {:.4e}, bracket vs dense-inverse {cross:.1e}, amalgam norm of dual {norm:.4e}, tail fraction {tail:.1e}",
            rep.weighted_sum
        ),
    )
}

fn identity_residuals() -> Outcome {
    let mut worst = (0.0f64, "");
    let mut weakest_control = (f64::INFINITY, "");
    for inst in corpus() {
        let gd = dual_window(&inst.g, &inst.lat, DualMethod::Cg, SOLVER_TOL).unwrap();
        let r = convo_identity_residual(&inst.g, &gd, &inst.lat).unwrap();
        if r.max_abs_error >= worst.0 {
            worst = (r.max_abs_error, inst.name);
        }
        let control = convo_identity_residual(&inst.g, &inst.g, &inst.lat).unwrap();
        if control.max_abs_error < weakest_control.0 {
            weakest_control = (control.max_abs_error, inst.name);
        }
    }
    outcome(
        worst.0 < IDENTITY_TOL && weakest_control.0 > NEGATIVE_CONTROL_MIN,
        format!(
            "worst residual {:.1e} ({}); smallest negative-control residual {:.2e} ({})",
            worst.0, worst.1, weakest_control.0, weakest_control.1
        ),
    )
}

fn norm_estimate() -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut tightest = f64::NEG_INFINITY;
    for inst in corpus() {
        let gd = dual_window(&inst.g, &inst.lat, DualMethod::Cg, SOLVER_TOL).unwrap();
        for nu in weights() {
            let e = estimate_convest(&inst.g, &gd, &inst.lat, &nu).unwrap();
            if !e.rhs.is_finite() {
                continue;
            }
            checked += 1;
            tightest = tightest.max(e.lhs / e.rhs);
            if !e.holds() {
                violations.push(format!("{} {:?}: {} > {}", inst.name, nu, e.lhs, e.rhs));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checked} instance/weight pairs, max lhs/rhs {tightest:.3}; violations: {violations:?}"),
    )
}

fn counterexample() -> Outcome {
    let grid = build_grid(16 * 8, 8).unwrap();
    let h = build_counterexample(&CoefficientRule::Harmonic, grid).unwrap();
    let rep = counterexample_report(&h, &chi(grid), &Weight::Constant).unwrap();
    let orthogonal = rep.max_inner < ORTHOGONALITY_TOL;

    let mut totals = Vec::new();
    let mut increasing = true;
    let mut worst_literal = 0.0f64;
    let mut worst_exact = 0.0f64;
    let mut lines = Vec::new();
    for units in [8usize, 16, 32, 64] {
        let grid = build_grid(units * 8, 8).unwrap();
        let h = build_counterexample(&CoefficientRule::Harmonic, grid).unwrap();
        let profile = amalgam_profile(&h, 4, &Weight::Constant).unwrap();
        increasing &= profile.cumsums().windows(2).all(|w| w[1] > w[0]);
        let total = profile.norm();
        // half-unit blocks: two per unit, amplitude 1/(|k|+1) on signed unit k
        let exact: f64 = (0..units as i64)
            .map(|u| 2.0 / (gabor_walnut::signed_index(u, units).abs() as f64 + 1.0))
            .sum();
        let nonnegative: f64 = profile.entries.iter().filter(|e| e.n >= 0).map(|e| e.weighted_sup).sum();
        let literal: f64 = (0..=units / 2).map(|k| 2.0 / (k as f64 + 1.0)).sum();
        worst_exact = worst_exact.max((total - exact).abs() / exact);
        worst_literal = worst_literal.max((nonnegative - literal).abs() / literal);
        lines.push(format!("K={units}: total {total:.4}, n>=0 {nonnegative:.4} vs {literal:.4}"));
        totals.push(total);
    }
    increasing &= totals.windows(2).all(|w| w[1] > w[0]);
    outcome(
        orthogonal && increasing && worst_literal < HARMONIC_REL_TOL && worst_exact < HARMONIC_REL_TOL,
        format!(
            "max |<h, atom>| = {:.1e} over {} atoms; cumsums increasing: {increasing}; n>=0 half vs sum_(k<=K/2) 2/(k+1): worst {:.2}%; two-sided vs harmonic sum: worst {:.1e}; {}",
            rep.max_inner,
            rep.inner_products,
            100.0 * worst_literal,
            worst_exact,
            lines.join("; ")
        ),
    )
}

fn functional_calculus() -> Outcome {
    let grid = build_grid(64, 8).unwrap();
    let g = gaussian(grid);
    let lat = GaborLattice::new(grid, 4, 8).unwrap();
    let sys = FrameSystem::new(&g, &lat).unwrap();
    let s = dense_from_operator(&sys.walnut).unwrap();
    let oracle = hermitian_function(&s, |l| l.powf(-0.5));
    let mut contour = DMatrix::zeros(64, 64);
    for j in 0..64 {
        let e = Signal::delta(grid, j);
        let (col, _) = sys.inverse_sqrt(e.samples(), TightMethod::Contour, SOLVER_TOL).unwrap();
        for (i, v) in col.iter().enumerate() {
            contour[(i, j)] = *v;
        }
    }
    let matrix_err = max_abs_entry(&(&contour - &oracle));
    let mut mapped: Vec<f64> = hermitian_eigenvalues(&s).iter().map(|l| l.powf(-0.5)).collect();
    mapped.sort_by(f64::total_cmp);
    let spectral_err = hermitian_eigenvalues(&contour)
        .iter()
        .zip(&mapped)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let gt = tight_window(&g, &lat, TightMethod::Contour, SOLVER_TOL).unwrap();
    let b = frame_bounds(&gt, &lat, BoundsMethod::Dense).unwrap();
    let bound_err = (b.lower - 1.0).abs().max((b.upper - 1.0).abs());
    outcome(
        matrix_err <= CROSS_TOL && spectral_err <= CROSS_TOL && bound_err <= CROSS_TOL,
        format!(
            "B/A = {:.3}; contour vs eigendecomposition {matrix_err:.1e}; spectral mapping {spectral_err:.1e}; bounds of tight window within {bound_err:.1e} of 1",
            sys.bounds.condition()
        ),
    )
}

fn boundedness() -> Outcome {
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut pass = true;
    let mut runs = 0;
    for inst in corpus() {
        for nu in weights() {
            let rep = forbound_check(&inst.g, &inst.lat, &nu, FORBOUND_TRIALS, SEED).unwrap();
            runs += 1;
            pass &= rep.holds();
            let margin = rep.max_ratio / (1.0 + rep.eps_align);
            if margin > worst.0 {
                worst = (margin, format!("{} {:?}: ratio {:.4} eps {:.4}", inst.name, nu, rep.max_ratio, rep.eps_align));
            }
        }
    }
    outcome(
        pass,
        format!("{runs} instance/weight pairs x {FORBOUND_TRIALS} trials; max ratio/(1+eps) {:.4} ({})", worst.0, worst.1),
    )
}

fn operator_structure() -> Outcome {
    let inst = scalar_instance();
    let s = dense_matrix(|f| frame_operator_direct(&inst.g, &inst.lat, f), inst.lat.grid()).unwrap();
    let (_, scalar_mass) = extract_walnut_from_matrix(&s, &inst.lat).unwrap();

    let mut round_trip = 0.0f64;
    let mut assembled_mass = 0.0f64;
    let mut oracle_masses = Vec::new();
    for inst in corpus() {
        let w = walnut_coefficients(&inst.g, &inst.lat).unwrap();
        let m = dense_matrix(|f| frame_operator_walnut(&w, f), inst.lat.grid()).unwrap();
        let (back, mass) = extract_walnut_from_matrix(&m, &inst.lat).unwrap();
        round_trip = round_trip.max(back.max_abs_diff(&w));
        assembled_mass = assembled_mass.max(mass);
        if inst.lat.grid().len() <= 64 {
            let direct = dense_matrix(|f| frame_operator_direct(&inst.g, &inst.lat, f), inst.lat.grid()).unwrap();
            let (_, mass) = extract_walnut_from_matrix(&direct, &inst.lat).unwrap();
            oracle_masses.push(format!("{}: {mass:.1e}", inst.name));
        }
    }
    outcome(
        scalar_mass < OFF_STRUCTURE_MAX && assembled_mass < OFF_STRUCTURE_MAX && round_trip < ROUND_TRIP_TOL,
        format!(
            "scalar-instance oracle mass {scalar_mass:.1e}; Walnut-assembled mass {assembled_mass:.1e}; round trip {round_trip:.1e}; oracle masses (rounding, info) [{}]",
            oracle_masses.join(", ")
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn performance() -> Outcome {
    let grid = build_grid(4096, 64).unwrap();
    let g = gaussian(grid);
    let lat = GaborLattice::new(grid, 32, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut t_direct, mut t_walnut) = (Vec::new(), Vec::new());
    let mut worst = 0.0f64;
    for _ in 0..BENCH_REPS {
        let f = random_signal(grid, &mut rng);
        let t0 = Instant::now();
        let direct = frame_operator_direct(&g, &lat, &f).unwrap();
        t_direct.push(t0.elapsed().as_secs_f64());
        let t0 = Instant::now();
        let w = walnut_coefficients(&g, &lat).unwrap();
        let fast = frame_operator_walnut(&w, &f).unwrap();
        t_walnut.push(t0.elapsed().as_secs_f64());
        worst = worst.max(rel_err(&fast, &direct));
    }
    let (td, tw) = (median(t_direct), median(t_walnut));
    let speedup = td / tw;
    outcome(
        speedup >= SPEEDUP_MIN && worst <= WALNUT_REL_TOL,
        format!(
            "L=4096 redundancy {}: direct {:.3e}s, Walnut (incl. multipliers) {:.3e}s, speedup {speedup:.1}x, max relative difference {worst:.1e}",
            lat.redundancy(),
            td,
            tw
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("walnut form matches the direct double sum", walnut_vs_direct),
        ("scalar instance S = 2I, dual g/2, tight g/sqrt2", scalar_instance_check),
        ("dual multipliers are weighted-summable", inverse_summability),
        ("mixed-bracket identity", identity_residuals),
        ("mixed-bracket norm estimate", norm_estimate),
        ("orthogonal non-amalgam counterexample", counterexample),
        ("contour-integral inverse square root", functional_calculus),
        ("amalgam boundedness of S", boundedness),
        ("strided-diagonal operator structure", operator_structure),
        ("Walnut application speedup", performance),
    ];
    let mut failures = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} {:>2}. {title} [{:.1}s] -- {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
