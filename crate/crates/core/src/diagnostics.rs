//! Desk-scale checks on concrete instances: operator-structure extraction,
//! summability of the dual's multipliers, the mixed-bracket identity and its
//! norm estimate, a probe of bracket sums, the orthogonal non-amalgam
//! counterexample, and the amalgam boundedness ratio of `S`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::amalgam::{amalgam_norm, amalgam_profile, AmalgamProfile};
use crate::bracket::{bracket_product, PeriodicVector};
use crate::error::{GaborError, Result};
use crate::frame_op::{frame_operator_walnut, walnut_coefficients, walnut_weighted_sum, WalnutCoeffs};
use crate::grid::{inner_product, signed_index, signed_order, tf_shift, GaborLattice, Grid, Signal};
use crate::invert::{random_signal, DualMethod, FrameSystem};
use crate::linalg::{dense_from_operator, SolveReport, DENSE_LIMIT};
use crate::weight::Weight;

/// Tolerance used for the inner solve feeding the dual-window reports.
const DUAL_TOL: f64 = 1e-12;

/// Matrix of a linear map on signals: column `j` is `op(delta_j)`.
pub fn dense_matrix<F>(op: F, grid: Grid) -> Result<DMatrix<Complex64>>
where
    F: Fn(&Signal) -> Result<Signal> + Sync,
{
    let n = grid.len();
    if n > DENSE_LIMIT {
        return Err(GaborError::Size(format!("dense matrices are limited to L <= {DENSE_LIMIT}, got {n}")));
    }
    let cols = (0..n)
        .into_par_iter()
        .map(|j| {
            let col = op(&Signal::delta(grid, j))?;
            grid.ensure_same(&col.grid())?;
            Ok(col.into_samples())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

/// Read the Walnut multipliers off the `M`-strided diagonals of a matrix.
///
/// Multiplier `r` at `x` is `m[x, x - rM] / factor`. The returned mass sums
/// the moduli of all entries off the strided diagonals and adds the largest
/// deviation from `a`-periodicity found along them.
pub fn extract_walnut_from_matrix(m: &DMatrix<Complex64>, lat: &GaborLattice) -> Result<(WalnutCoeffs, f64)> {
    let len = lat.grid().len();
    if m.nrows() != len || m.ncols() != len {
        return Err(GaborError::Dimension(format!(
            "matrix is {}x{}, lattice grid has L={len}",
            m.nrows(),
            m.ncols()
        )));
    }
    let a = lat.time_step();
    let stride = lat.stride();
    let factor = lat.walnut_factor();
    let mut on_structure = DMatrix::from_element(len, len, false);
    let mut deviation = 0.0f64;
    let mut entries = Vec::with_capacity(lat.freq_step());
    for r in signed_order(lat.freq_step()) {
        let shift = (r * stride as i64).rem_euclid(len as i64) as usize;
        let col = |j: usize| (j + len - shift) % len;
        let values: Vec<Complex64> = (0..a).map(|x| m[(x, col(x))]).collect();
        for j in 0..len {
            on_structure[(j, col(j))] = true;
            deviation = deviation.max((m[(j, col(j))] - values[j % a]).norm());
        }
        let values = values.into_iter().map(|v| v / factor).collect();
        entries.push((r, PeriodicVector { values }));
    }
    let off: f64 = m
        .iter()
        .zip(on_structure.iter())
        .filter(|(_, &on)| !on)
        .map(|(v, _)| v.norm())
        .sum();
    Ok((WalnutCoeffs::from_entries(*lat, entries, factor)?, off + deviation))
}

/// Lattice parameters as they appear in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeInfo {
    #[serde(rename = "L")]
    pub len: usize,
    pub s: usize,
    pub a: usize,
    pub b: usize,
    #[serde(rename = "M")]
    pub stride: usize,
    #[serde(rename = "N")]
    pub time_shifts: usize,
    pub redundancy: f64,
}

impl From<&GaborLattice> for LatticeInfo {
    fn from(lat: &GaborLattice) -> Self {
        Self {
            len: lat.grid().len(),
            s: lat.grid().per_unit(),
            a: lat.time_step(),
            b: lat.freq_step(),
            stride: lat.stride(),
            time_shifts: lat.time_shifts(),
            redundancy: lat.redundancy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummabilityRow {
    pub r: i64,
    pub sup: f64,
    pub weight: f64,
    pub product: f64,
}

/// Weighted sup norms of a family of multipliers, in signed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub lattice: LatticeInfo,
    pub weight: Weight,
    pub per_r: Vec<SummabilityRow>,
    pub weighted_sum: f64,
    /// Running sums of `product`, by increasing `|r|`.
    #[serde(skip)]
    pub tail_profile: Vec<f64>,
    /// Max deviation between the bracket multipliers and those extracted from
    /// the dense inverse; `None` when `L` is too large for a dense check.
    #[serde(skip)]
    pub cross_check: Option<f64>,
}

impl SummabilityReport {
    pub fn from_walnut(w: &WalnutCoeffs, nu: &Weight) -> Self {
        let mut tail_profile = Vec::with_capacity(w.entries().len());
        let mut acc = 0.0;
        let per_r = w
            .entries()
            .iter()
            .map(|(r, v)| {
                let (sup, weight) = (v.sup_norm(), nu.eval(*r));
                acc += sup * weight;
                tail_profile.push(acc);
                SummabilityRow { r: *r, sup, weight, product: sup * weight }
            })
            .collect();
        Self {
            lattice: LatticeInfo::from(&w.lattice()),
            weight: *nu,
            per_r,
            weighted_sum: acc,
            tail_profile,
            cross_check: None,
        }
    }

    /// Share of the weighted sum carried by `|r| > radius`.
    pub fn tail_fraction(&self, radius: i64) -> f64 {
        let tail: f64 = self.per_r.iter().filter(|row| row.r.abs() > radius).map(|row| row.product).sum();
        if self.weighted_sum == 0.0 {
            0.0
        } else {
            tail / self.weighted_sum
        }
    }

    /// CSV with columns `r,sup,weight,product,cumsum`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            r: i64,
            sup: f64,
            weight: f64,
            product: f64,
            cumsum: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (row, cumsum) in self.per_r.iter().zip(&self.tail_profile) {
            w.serialize(Row { r: row.r, sup: row.sup, weight: row.weight, product: row.product, cumsum: *cumsum })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Summability of the dual window's multipliers `[gd, T_{rM} gd]_a`.
///
/// Returns the dual window alongside the report. When `L` allows, the
/// multipliers are cross-checked against those extracted from the dense
/// inverse of `S`.
pub fn dual_summability_report(g: &Signal, lat: &GaborLattice, nu: &Weight) -> Result<(Signal, SummabilityReport)> {
    dual_summability_report_with(g, lat, nu, DualMethod::Cg, DUAL_TOL).map(|(gd, rep, _)| (gd, rep))
}

/// As [`dual_summability_report`], with an explicit solver; also returns the solver history.
pub fn dual_summability_report_with(
    g: &Signal,
    lat: &GaborLattice,
    nu: &Weight,
    method: DualMethod,
    tol: f64,
) -> Result<(Signal, SummabilityReport, SolveReport)> {
    let sys = FrameSystem::new(g, lat)?;
    let (gd, solve) = sys.solve(g.samples(), method, tol)?;
    let gd = Signal::new(g.grid(), gd)?;
    let dual_walnut = walnut_coefficients(&gd, lat)?;
    let mut report = SummabilityReport::from_walnut(&dual_walnut, nu);
    if lat.grid().len() <= DENSE_LIMIT {
        let inv = dense_from_operator(&sys.walnut)?
            .cholesky()
            .ok_or(GaborError::NotAFrame { lower: sys.bounds.lower, upper: sys.bounds.upper })?
            .inverse();
        let (extracted, _) = extract_walnut_from_matrix(&inv, lat)?;
        report.cross_check = Some(extracted.max_abs_diff(&dual_walnut));
    }
    Ok((gd, report, solve))
}

fn ensure_pair(g: &Signal, gd: &Signal, lat: &GaborLattice) -> Result<()> {
    lat.ensure_grid(g)?;
    lat.ensure_grid(gd)
}

/// `(M/s) [gd, T_{k a} g]_M`.
pub fn mixed_bracket(g: &Signal, gd: &Signal, lat: &GaborLattice, k: i64) -> Result<PeriodicVector> {
    ensure_pair(g, gd, lat)?;
    let shifted = tf_shift(g, k * lat.time_step() as i64, 0);
    let mut br = bracket_product(gd, &shifted, lat.stride())?;
    let factor = lat.walnut_factor();
    br.values.iter_mut().for_each(|v| *v *= factor);
    Ok(br)
}

/// `[f, T_{n a} h]_M` for `n = 0..N`.
fn time_brackets(f: &Signal, h: &Signal, lat: &GaborLattice) -> Result<Vec<PeriodicVector>> {
    (0..lat.time_shifts())
        .into_par_iter()
        .map(|n| bracket_product(f, &tf_shift(h, (n * lat.time_step()) as i64, 0), lat.stride()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub max_abs_error: f64,
    pub worst_k: i64,
    pub worst_x: usize,
}

/// Largest violation of
/// `[gd, T_{ka} g]_M(x) = (M/s) sum_n conj([g, T_{na} g]_M(x - ka)) [gd, T_{(k+n)a} gd]_M(x)`
/// over signed `k` and `x = 0..M`. The sum over `n` is finite and exact on the
/// cyclic grid. Ties go to the smallest `k`, then the smallest `x`.
pub fn convo_identity_residual(g: &Signal, gd: &Signal, lat: &GaborLattice) -> Result<IdentityResidual> {
    ensure_pair(g, gd, lat)?;
    let shifts = lat.time_shifts();
    let (a, m) = (lat.time_step() as i64, lat.stride());
    let factor = lat.walnut_factor();
    let gg = time_brackets(g, g, lat)?;
    let dd = time_brackets(gd, gd, lat)?;
    let dg = time_brackets(gd, g, lat)?;
    let per_k: Vec<(f64, i64, usize)> = (0..shifts)
        .into_par_iter()
        .map(|kpos| {
            let k = signed_index(kpos as i64, shifts);
            let mut worst = (0.0, k, 0usize);
            for x in 0..m {
                let rhs: Complex64 = (0..shifts)
                    .map(|n| gg[n].at(x as i64 - k * a).conj() * dd[(kpos + n) % shifts].values[x])
                    .sum::<Complex64>()
                    * factor;
                let err = (dg[kpos].values[x] - rhs).norm();
                if err > worst.0 {
                    worst = (err, k, x);
                }
            }
            worst
        })
        .collect();
    let (max_abs_error, worst_k, worst_x) = per_k.into_iter().fold((0.0, i64::MAX, 0), |best, cur| {
        if cur.0 > best.0 || (cur.0 == best.0 && cur.1 < best.1) {
            cur
        } else {
            best
        }
    });
    let worst_k = if worst_k == i64::MAX { 0 } else { worst_k };
    Ok(IdentityResidual { max_abs_error, worst_k, worst_x })
}

fn time_rows(brackets: &[PeriodicVector], nu: &Weight) -> Vec<SummabilityRow> {
    let p = brackets.len();
    signed_order(p)
        .into_iter()
        .map(|n| {
            let sup = brackets[n.rem_euclid(p as i64) as usize].sup_norm();
            let weight = nu.eval(n);
            SummabilityRow { r: n, sup, weight, product: sup * weight }
        })
        .collect()
}

fn weighted_time_sum(brackets: &[PeriodicVector], nu: &Weight) -> f64 {
    time_rows(brackets, nu).iter().map(|row| row.product).sum()
}

/// Both sides of the weighted norm estimate for the mixed brackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvestEstimate {
    pub lhs: f64,
    pub rhs: f64,
}

impl ConvestEstimate {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

/// `lhs = sum_k |[gd, T_{ka} g]_M|_inf nu(k)` against
/// `rhs = (M/s) (sum_n |[g, T_{na} g]_M|_inf nu(n)) (sum_n |[gd, T_{na} gd]_M|_inf nu(n))`.
pub fn estimate_convest(g: &Signal, gd: &Signal, lat: &GaborLattice, nu: &Weight) -> Result<ConvestEstimate> {
    ensure_pair(g, gd, lat)?;
    let lhs = weighted_time_sum(&time_brackets(gd, g, lat)?, nu);
    let rhs = lat.walnut_factor()
        * weighted_time_sum(&time_brackets(g, g, lat)?, nu)
        * weighted_time_sum(&time_brackets(gd, gd, lat)?, nu);
    Ok(ConvestEstimate { lhs, rhs })
}

/// Weighted bracket sums of a window at period `a` (shifts by `rM`) and at
/// period `M` (shifts by `na`). Reported only; nothing is asserted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureProbe {
    pub sum_alpha_blocks: f64,
    pub sum_invbeta_blocks: f64,
    /// Terms of the first sum, signed `r` in `Z_b`.
    #[serde(skip)]
    pub alpha_rows: Vec<SummabilityRow>,
    /// Terms of the second sum, signed `n` in `Z_N`.
    #[serde(skip)]
    pub invbeta_rows: Vec<SummabilityRow>,
}

impl ConjectureProbe {
    pub fn ratio(&self) -> f64 {
        self.sum_invbeta_blocks / self.sum_alpha_blocks
    }
}

pub fn conjecture_probe(gd: &Signal, lat: &GaborLattice, nu: &Weight) -> Result<ConjectureProbe> {
    lat.ensure_grid(gd)?;
    let alpha = SummabilityReport::from_walnut(&walnut_coefficients(gd, lat)?, nu);
    let invbeta_rows = time_rows(&time_brackets(gd, gd, lat)?, nu);
    Ok(ConjectureProbe {
        sum_alpha_blocks: alpha.weighted_sum,
        sum_invbeta_blocks: invbeta_rows.iter().map(|row| row.product).sum(),
        alpha_rows: alpha.per_r,
        invbeta_rows,
    })
}

/// Per-unit amplitudes of the counterexample signal.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `a_k = 1/(|k|+1)` on the signed unit index `k`.
    Harmonic,
    /// One amplitude per unit, in storage order `0..K`.
    Custom { values: Vec<f64> },
}

/// `h(j) = a_{unit(j)} exp(2 pi i j / s)`: one full oscillation per unit, so
/// `h` is orthogonal to every atom of the half-step lattice over `chi_[0,1)`.
pub fn build_counterexample(rule: &CoefficientRule, grid: Grid) -> Result<Signal> {
    let (s, units) = (grid.per_unit(), grid.units());
    if units < 4 || s < 4 {
        return Err(GaborError::Domain(format!(
            "counterexample needs at least 4 units and 4 samples per unit, got K={units}, s={s}"
        )));
    }
    let amps: Vec<f64> = match rule {
        CoefficientRule::Harmonic => (0..units)
            .map(|u| 1.0 / (signed_index(u as i64, units).abs() as f64 + 1.0))
            .collect(),
        CoefficientRule::Custom { values } if values.len() == units => values.clone(),
        CoefficientRule::Custom { values } => {
            return Err(GaborError::Domain(format!("{} amplitudes given for {units} units", values.len())))
        }
    };
    let samples = (0..grid.len())
        .map(|j| Complex64::from_polar(amps[j / s], std::f64::consts::TAU * (j % s) as f64 / s as f64))
        .collect();
    Signal::new(grid, samples)
}

/// The lattice with time step half a unit and one unit of frequency:
/// `a = s/2` samples and `b = K` bins.
pub fn counterexample_lattice(grid: Grid) -> Result<GaborLattice> {
    let s = grid.per_unit();
    if !s.is_multiple_of(2) {
        return Err(GaborError::Lattice(format!("half-unit time step needs even s, got s={s}")));
    }
    let lat = GaborLattice::new(grid, s / 2, grid.units()).map_err(|e| GaborError::Lattice(e.to_string()))?;
    if (lat.alpha() - 0.5).abs() > 1e-15 || (lat.beta() - 1.0).abs() > 1e-15 {
        return Err(GaborError::Lattice(format!(
            "expected alpha=1/2, beta=1, got alpha={}, beta={}",
            lat.alpha(),
            lat.beta()
        )));
    }
    Ok(lat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub lattice: LatticeInfo,
    /// Largest `|<h, M_{2m} T_n g>|` over the adjoint lattice (unit steps in
    /// time, frequency steps of two).
    pub max_inner: f64,
    pub inner_products: usize,
    pub profile: AmalgamProfile,
}

pub fn counterexample_report(h: &Signal, g: &Signal, nu: &Weight) -> Result<CounterexampleReport> {
    let grid = h.grid();
    let lat = counterexample_lattice(grid)?;
    lat.ensure_grid(g).map_err(|e| GaborError::GridMismatch(e.to_string()))?;
    let (s, units) = (grid.per_unit(), grid.units());
    // frequency 2m sits at bin 2mK; the bins repeat after m = s/2
    let atoms: Vec<(i64, i64)> = (0..s / 2)
        .flat_map(|m| (0..units).map(move |n| ((2 * m * units) as i64, (n * s) as i64)))
        .collect();
    let max_inner = atoms
        .par_iter()
        .map(|&(bin, shift)| inner_product(h, &tf_shift(g, shift, bin)).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CounterexampleReport {
        lattice: LatticeInfo::from(&lat),
        max_inner,
        inner_products: atoms.len(),
        profile: amalgam_profile(h, s / 2, nu)?,
    })
}

/// Amalgam boundedness ratio of `S` against its weighted Walnut bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForboundReport {
    pub max_ratio: f64,
    /// Slack for the shifts `rM` that straddle two blocks of length `a`.
    pub eps_align: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ForboundReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= (1.0 + self.eps_align) * (1.0 + 1e-12)
    }
}

/// Block-misalignment slack of the bound `|Sf|_W <= factor sum_r |G_r| nu(r) |f|_W`.
///
/// Writing `rM = q a + rho` with `0 <= rho < a`, a block of `Sf` draws on
/// blocks `p - q` and, when `rho > 0`, `p - q - 1` of `f`. Submultiplicativity
/// then gives the bound with `nu(r)` replaced by `nu(q) + [rho > 0] nu(q + 1)`.
pub fn alignment_slack(w: &WalnutCoeffs, nu: &Weight) -> f64 {
    let lat = w.lattice();
    let (a, m) = (lat.time_step() as i64, lat.stride() as i64);
    let (mut aligned, mut nominal) = (0.0, 0.0);
    for (r, v) in w.entries() {
        let sup = v.sup_norm();
        let (q, rho) = ((r * m).div_euclid(a), (r * m).rem_euclid(a));
        let c = nu.eval(q) + if rho > 0 { nu.eval(q + 1) } else { 0.0 };
        aligned += sup * c;
        nominal += sup * nu.eval(*r);
    }
    if nominal == 0.0 {
        0.0
    } else {
        (aligned / nominal - 1.0).max(0.0)
    }
}

/// Max over seeded random `f` of `|Sf|_W / (factor * sum_r |G_r| nu(r) * |f|_W)`
/// with amalgam blocks of length `a`.
pub fn forbound_check(g: &Signal, lat: &GaborLattice, nu: &Weight, trials: usize, seed: u64) -> Result<ForboundReport> {
    let w = walnut_coefficients(g, lat)?;
    let bound = walnut_weighted_sum(&w, nu) * w.factor();
    let a = lat.time_step();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    for _ in 0..trials {
        let f = random_signal(lat.grid(), &mut rng);
        max_ratio = max_ratio.max(forbound_ratio(&w, bound, &f, a, nu)?);
    }
    Ok(ForboundReport { max_ratio, eps_align: alignment_slack(&w, nu), trials, seed })
}

/// The ratio for one signal; `f = 0` has no ratio and is rejected.
pub fn forbound_ratio_single(g: &Signal, lat: &GaborLattice, nu: &Weight, f: &Signal) -> Result<f64> {
    let w = walnut_coefficients(g, lat)?;
    let bound = walnut_weighted_sum(&w, nu) * w.factor();
    forbound_ratio(&w, bound, f, lat.time_step(), nu)
}

fn forbound_ratio(w: &WalnutCoeffs, bound: f64, f: &Signal, a: usize, nu: &Weight) -> Result<f64> {
    let nf = amalgam_norm(f, a, nu)?;
    if nf == 0.0 {
        return Err(GaborError::Domain("boundedness ratio is undefined for f = 0".into()));
    }
    let sf = frame_operator_walnut(w, f)?;
    Ok(amalgam_norm(&sf, a, nu)? / (bound * nf))
}
