use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gabor_walnut::amalgam::{amalgam_norm, amalgam_profile, embedding_check, AmalgamProfile};
use gabor_walnut::diagnostics::{
    build_counterexample, conjecture_probe, convo_identity_residual, counterexample_report,
    dual_summability_report_with, estimate_convest, forbound_check, LatticeInfo, SummabilityReport,
    SummabilityRow,
};
use gabor_walnut::frame_op::{frame_operator_direct, frame_operator_walnut, walnut_coefficients, walnut_weighted_sum};
use gabor_walnut::invert::{
    bounds_from_walnut, dual_window, tight_window_report, verify_reconstruction, BoundsMethod, AUTO_DENSE_LIMIT,
};
use gabor_walnut::window::{build_window, read_window_file, write_window_file, WindowSpec};
use gabor_walnut::{build_grid, GaborError, GaborLattice, Signal};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{ConfigError, DualSource, Instance};
use crate::plot::{write_line_chart, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gabor(#[from] GaborError),
    #[error("ContractViolation: {0}")]
    Contract(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Gabor(GaborError::Io(e))
    }
}

impl CliError {
    /// 2 config/validation, 3 not a frame, 4 contract violation, 5 no convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Contract(_) => 4,
            CliError::Gabor(e) => match e {
                GaborError::NotAFrame { .. } => 3,
                GaborError::Convergence { .. } => 5,
                GaborError::Branch(_) => 4,
                _ => 2,
            },
        }
    }
}

pub type CmdResult = Result<(), CliError>;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> CmdResult {
    serde_json::to_writer_pretty(create(out, name)?, value).map_err(GaborError::from)?;
    Ok(())
}

fn write_rows<T: Serialize>(out: &Path, name: &str, rows: impl IntoIterator<Item = T>) -> CmdResult {
    let mut w = csv::Writer::from_writer(create(out, name)?);
    for row in rows {
        w.serialize(row).map_err(GaborError::from)?;
    }
    w.flush()?;
    Ok(())
}

fn cumulative(rows: &[SummabilityRow]) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            acc += row.product;
            (i as f64, acc)
        })
        .collect()
}

fn profile_series(label: String, profile: &AmalgamProfile) -> Series {
    Series { label, points: profile.entries.iter().enumerate().map(|(i, e)| (i as f64, e.cumsum)).collect() }
}

pub fn analyze(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let w = walnut_coefficients(&inst.g, &inst.lat)?;
    let method = if inst.grid.len() <= AUTO_DENSE_LIMIT { BoundsMethod::Dense } else { BoundsMethod::PowerIteration };
    let bounds = bounds_from_walnut(&w, method, cfg.run.tol)?;

    #[derive(Serialize)]
    struct BoundsRow {
        #[serde(rename = "A")]
        lower: f64,
        #[serde(rename = "B")]
        upper: f64,
        method: BoundsMethod,
        not_a_frame: bool,
    }
    write_rows(
        out,
        "bounds.csv",
        [BoundsRow { lower: bounds.lower, upper: bounds.upper, method: bounds.method, not_a_frame: bounds.not_a_frame }],
    )?;

    let multipliers = SummabilityReport::from_walnut(&w, &cfg.weight);
    multipliers.write_csv(create(out, "walnut.csv")?)?;
    w.write_csv(create(out, "walnut_multipliers.csv")?)?;
    let a = inst.lat.time_step();
    let profile = amalgam_profile(&inst.g, a, &cfg.weight)?;
    profile.write_csv(create(out, "amalgam.csv")?)?;
    let embedding = embedding_check(&inst.g, a, &cfg.weight)?;
    let forbound = forbound_check(&inst.g, &inst.lat, &cfg.weight, cfg.run.trials, cfg.run.seed)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        lattice: LatticeInfo,
        weight: &'a gabor_walnut::Weight,
        bounds: gabor_walnut::invert::FrameBounds,
        walnut_factor: f64,
        walnut_weighted_sum: f64,
        embedding: gabor_walnut::amalgam::EmbeddingNorms,
        forbound: gabor_walnut::diagnostics::ForboundReport,
    }
    write_json(
        out,
        "analyze.json",
        &Summary {
            lattice: LatticeInfo::from(&inst.lat),
            weight: &cfg.weight,
            bounds,
            walnut_factor: w.factor(),
            walnut_weighted_sum: walnut_weighted_sum(&w, &cfg.weight),
            embedding,
            forbound,
        },
    )?;
    let mut rows = multipliers.per_r.clone();
    rows.sort_by_key(|row| row.r);
    write_line_chart(
        &out.join("walnut.svg"),
        "multiplier sup norms",
        "r",
        "sup |G_r|",
        &[Series { label: "sup".into(), points: rows.iter().map(|row| (row.r as f64, row.sup)).collect() }],
    )?;
    Ok(())
}

#[derive(Serialize)]
struct WindowSummary {
    lattice: LatticeInfo,
    residual: f64,
    trials: usize,
    seed: u64,
    amalgam_norm: f64,
    weighted_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<f64>,
    iterations: usize,
}

pub fn dual(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let (gd, report, solve) =
        dual_summability_report_with(&inst.g, &inst.lat, &cfg.weight, cfg.run.dual_method, cfg.run.tol)?;
    write_window_file(&out.join("dual_window.txt"), &gd)?;
    report.write_csv(create(out, "dual_summability.csv")?)?;
    report.write_json(create(out, "dual_summability.json")?)?;
    solve.write_csv(create(out, "solver.csv")?)?;
    let residual = verify_reconstruction(&inst.g, &gd, &inst.lat, cfg.run.trials, cfg.run.seed)?;
    write_json(
        out,
        "dual.json",
        &WindowSummary {
            lattice: LatticeInfo::from(&inst.lat),
            residual,
            trials: cfg.run.trials,
            seed: cfg.run.seed,
            amalgam_norm: amalgam_norm(&gd, inst.lat.time_step(), &cfg.weight)?,
            weighted_sum: report.weighted_sum,
            cross_check: report.cross_check,
            iterations: solve.iterations,
        },
    )?;
    write_line_chart(
        &out.join("dual_summability.svg"),
        "dual multipliers: weighted cumulative sum",
        "terms (by |r|)",
        "cumulative sum",
        &[Series { label: "dual".into(), points: cumulative(&report.per_r) }],
    )?;
    Ok(())
}

pub fn tight(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let (gt, contour) = tight_window_report(&inst.g, &inst.lat, cfg.run.tight_method, cfg.run.tol)?;
    write_window_file(&out.join("tight_window.txt"), &gt)?;
    let report = SummabilityReport::from_walnut(&walnut_coefficients(&gt, &inst.lat)?, &cfg.weight);
    report.write_csv(create(out, "tight_summability.csv")?)?;
    report.write_json(create(out, "tight_summability.json")?)?;
    let residual = verify_reconstruction(&gt, &gt, &inst.lat, cfg.run.trials, cfg.run.seed)?;

    #[derive(Serialize)]
    struct TightSummary {
        #[serde(flatten)]
        window: WindowSummary,
        contour: gabor_walnut::invert::ContourReport,
    }
    write_json(
        out,
        "tight.json",
        &TightSummary {
            window: WindowSummary {
                lattice: LatticeInfo::from(&inst.lat),
                residual,
                trials: cfg.run.trials,
                seed: cfg.run.seed,
                amalgam_norm: amalgam_norm(&gt, inst.lat.time_step(), &cfg.weight)?,
                weighted_sum: report.weighted_sum,
                cross_check: None,
                iterations: contour.resolvent_iterations,
            },
            contour,
        },
    )?;
    Ok(())
}

fn paired_window(inst: &Instance, source: &DualSource) -> Result<Signal, CliError> {
    let cfg = &inst.config;
    Ok(match source {
        DualSource::Canonical => dual_window(&inst.g, &inst.lat, cfg.run.dual_method, cfg.run.tol)?,
        DualSource::Window => inst.g.clone(),
        DualSource::File(path) => read_window_file(&inst.base.join(path), inst.grid)?,
    })
}

pub fn verify(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let gd = paired_window(inst, &cfg.verify.dual)?;
    let identity = convo_identity_residual(&inst.g, &gd, &inst.lat)?;
    let convest = estimate_convest(&inst.g, &gd, &inst.lat, &cfg.weight)?;
    let forbound = forbound_check(&inst.g, &inst.lat, &cfg.weight, cfg.run.trials, cfg.run.seed)?;

    #[derive(Serialize)]
    struct Row {
        max_abs_error: f64,
        worst_k: i64,
        worst_x: usize,
        lhs: f64,
        rhs: f64,
        forbound_ratio: f64,
        eps_align: f64,
    }
    write_rows(
        out,
        "identity.csv",
        [Row {
            max_abs_error: identity.max_abs_error,
            worst_k: identity.worst_k,
            worst_x: identity.worst_x,
            lhs: convest.lhs,
            rhs: convest.rhs,
            forbound_ratio: forbound.max_ratio,
            eps_align: forbound.eps_align,
        }],
    )?;

    #[derive(Serialize)]
    struct Summary {
        lattice: LatticeInfo,
        tol: f64,
        identity: gabor_walnut::diagnostics::IdentityResidual,
        convest: gabor_walnut::diagnostics::ConvestEstimate,
        forbound: gabor_walnut::diagnostics::ForboundReport,
        identity_ok: bool,
        convest_ok: bool,
    }
    let identity_ok = identity.max_abs_error < cfg.verify.tol;
    let convest_ok = convest.holds();
    write_json(
        out,
        "identity.json",
        &Summary {
            lattice: LatticeInfo::from(&inst.lat),
            tol: cfg.verify.tol,
            identity,
            convest,
            forbound,
            identity_ok,
            convest_ok,
        },
    )?;
    if !identity_ok {
        return Err(CliError::Contract(format!(
            "identity residual {:e} at k={}, x={} exceeds {:e}",
            identity.max_abs_error, identity.worst_k, identity.worst_x, cfg.verify.tol
        )));
    }
    if !convest_ok {
        return Err(CliError::Contract(format!("norm estimate fails: {:e} > {:e}", convest.lhs, convest.rhs)));
    }
    Ok(())
}

pub fn counterexample(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let s = inst.grid.per_unit();
    let units = if cfg.counterexample.units.is_empty() {
        vec![inst.grid.units()]
    } else {
        cfg.counterexample.units.clone()
    };

    #[derive(Serialize)]
    struct Run {
        #[serde(rename = "K")]
        units: usize,
        s: usize,
        #[serde(rename = "L")]
        len: usize,
        max_inner: f64,
        inner_products: usize,
        block_total: f64,
        unit_total: f64,
        unit_profile_terms: usize,
    }
    let mut runs = Vec::new();
    let mut series = Vec::new();
    for k in units {
        let grid = build_grid(k * s, s)?;
        let h = build_counterexample(&cfg.counterexample.rule, grid)?;
        let g = build_window(&WindowSpec::Characteristic { length: 1.0 }, grid)?;
        let report = counterexample_report(&h, &g, &cfg.weight)?;
        let unit_profile = amalgam_profile(&h, s, &cfg.weight)?;
        report.profile.write_csv(create(out, &format!("profile_K{k}.csv"))?)?;
        unit_profile.write_csv(create(out, &format!("unit_profile_K{k}.csv"))?)?;
        series.push(profile_series(format!("K={k}"), &report.profile));
        runs.push(Run {
            units: k,
            s,
            len: k * s,
            max_inner: report.max_inner,
            inner_products: report.inner_products,
            block_total: report.profile.norm(),
            unit_total: unit_profile.norm(),
            unit_profile_terms: unit_profile.entries.len(),
        });
    }
    write_rows(out, "totals.csv", runs.iter())?;

    #[derive(Serialize)]
    struct Summary<'a> {
        weight: &'a gabor_walnut::Weight,
        max_inner: f64,
        runs: &'a [Run],
    }
    write_json(
        out,
        "counterexample.json",
        &Summary { weight: &cfg.weight, max_inner: runs.iter().map(|r| r.max_inner).fold(0.0, f64::max), runs: &runs },
    )?;
    write_line_chart(&out.join("growth.svg"), "amalgam cumulative sums", "blocks (by |n|)", "cumulative sum", &series)?;
    Ok(())
}

pub fn conjecture(inst: &Instance, out: &Path) -> CmdResult {
    let cfg = &inst.config;
    let gd = dual_window(&inst.g, &inst.lat, cfg.run.dual_method, cfg.run.tol)?;
    let probe = conjecture_probe(&gd, &inst.lat, &cfg.weight)?;

    #[derive(Serialize)]
    struct Row<'a> {
        family: &'a str,
        index: i64,
        sup: f64,
        weight: f64,
        product: f64,
    }
    let rows = probe
        .alpha_rows
        .iter()
        .map(|r| ("alpha", r))
        .chain(probe.invbeta_rows.iter().map(|r| ("invbeta", r)))
        .map(|(family, r)| Row { family, index: r.r, sup: r.sup, weight: r.weight, product: r.product });
    write_rows(out, "conjecture.csv", rows)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        lattice: LatticeInfo,
        weight: &'a gabor_walnut::Weight,
        sum_alpha_blocks: f64,
        sum_invbeta_blocks: f64,
        ratio: f64,
    }
    write_json(
        out,
        "conjecture.json",
        &Summary {
            lattice: LatticeInfo::from(&inst.lat),
            weight: &cfg.weight,
            sum_alpha_blocks: probe.sum_alpha_blocks,
            sum_invbeta_blocks: probe.sum_invbeta_blocks,
            ratio: probe.ratio(),
        },
    )?;
    write_line_chart(
        &out.join("bracket_sums.svg"),
        "weighted bracket sums of the dual window",
        "terms (by |index|)",
        "cumulative sum",
        &[
            Series { label: "period a, shifts rM".into(), points: cumulative(&probe.alpha_rows) },
            Series { label: "period M, shifts na".into(), points: cumulative(&probe.invbeta_rows) },
        ],
    )?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

pub fn bench(inst: &Instance, out: &Path) -> CmdResult {
    use rand::{Rng, SeedableRng};

    let cfg = &inst.config;
    let reps = cfg.bench.reps;
    if reps < 3 {
        return Err(ConfigError::Invalid(format!("bench needs at least 3 repetitions, got {reps}")).into());
    }
    let cases: Vec<(usize, usize, usize, usize)> = if cfg.bench.cases.is_empty() {
        vec![(inst.grid.len(), inst.grid.per_unit(), inst.lat.time_step(), inst.lat.freq_step())]
    } else {
        cfg.bench.cases.iter().map(|c| (c.len, c.s, c.a, c.b)).collect()
    };
    // validate every case before timing anything
    let mut prepared = Vec::new();
    for (len, s, a, b) in cases {
        let grid = build_grid(len, s)?;
        let lat = GaborLattice::new(grid, a, b)?;
        let g = cfg.window.build(grid, &inst.base)?;
        prepared.push((lat, g));
    }

    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        len: usize,
        a: usize,
        b: usize,
        t_direct: f64,
        t_walnut: f64,
        speedup: f64,
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut rows = Vec::new();
    for (lat, g) in &prepared {
        let (mut td, mut tw) = (Vec::new(), Vec::new());
        for rep in 0..reps {
            let f: Vec<Complex64> = (0..lat.grid().len())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let f = Signal::new(lat.grid(), f)?;
            let t0 = Instant::now();
            let direct = frame_operator_direct(g, lat, &f)?;
            td.push(t0.elapsed().as_secs_f64());
            let t0 = Instant::now();
            let fast = frame_operator_walnut(&walnut_coefficients(g, lat)?, &f)?;
            tw.push(t0.elapsed().as_secs_f64());
            let err = fast.sub(&direct)?.norm_l2() / direct.norm_l2().max(f64::MIN_POSITIVE);
            if err > 1e-10 {
                return Err(CliError::Contract(format!(
                    "Walnut and direct application differ by {err:e} (L={}, a={}, b={}, rep {rep})",
                    lat.grid().len(),
                    lat.time_step(),
                    lat.freq_step()
                )));
            }
        }
        let (t_direct, t_walnut) = (median(td), median(tw));
        rows.push(Row {
            len: lat.grid().len(),
            a: lat.time_step(),
            b: lat.freq_step(),
            t_direct,
            t_walnut,
            speedup: t_direct / t_walnut,
        });
    }
    write_rows(out, "bench.csv", rows.iter())?;

    #[derive(Serialize)]
    struct Summary {
        seed: u64,
        reps: usize,
        threads: usize,
    }
    write_json(out, "bench.json", &Summary { seed: cfg.run.seed, reps, threads: rayon::current_num_threads() })?;
    Ok(())
}

/// Output directory: `--out`, else `[run] out` relative to the config file.
pub fn output_dir(inst: &Instance, cli_out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let out = cli_out.unwrap_or_else(|| inst.base.join(&inst.config.run.out));
    std::fs::create_dir_all(&out)?;
    Ok(out)
}
