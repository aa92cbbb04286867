//! Gabor analysis and synthesis, the frame operator as a direct double sum,
//! and its Walnut form
//!
//! ```text
//! S f(j) = (M/s) sum_r G_r(j mod a) f(j - r M),   G_r = [g, T_{rM} g]_a
//! ```
//!
//! which follows from collapsing the modulation sum: `sum_m exp(2 pi i m b k / L)`
//! vanishes unless `k` is a multiple of `M = L/b`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bracket::{correlation_g, PeriodicVector};
use crate::error::{GaborError, Result};
use crate::grid::{signed_index, signed_order, unit_root, GaborLattice, Signal};
use crate::linalg::LinearOperator;
use crate::weight::Weight;

/// Gabor coefficients, `values[m * N + n] = <f, M_{m b} T_{n a} g>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeffs {
    lat: GaborLattice,
    values: Vec<Complex64>,
}

impl Coeffs {
    pub fn new(lat: GaborLattice, values: Vec<Complex64>) -> Result<Self> {
        let expect = lat.modulations() * lat.time_shifts();
        if values.len() != expect {
            return Err(GaborError::Dimension(format!(
                "{} coefficients given, lattice has {} = {} x {}",
                values.len(),
                expect,
                lat.modulations(),
                lat.time_shifts()
            )));
        }
        Ok(Self { lat, values })
    }

    pub fn zeros(lat: GaborLattice) -> Self {
        Self {
            lat,
            values: vec![Complex64::new(0.0, 0.0); lat.modulations() * lat.time_shifts()],
        }
    }

    /// Single unit coefficient at `(m, n)`.
    pub fn unit(lat: GaborLattice, m: usize, n: usize) -> Self {
        let mut c = Self::zeros(lat);
        *c.get_mut(m, n) = Complex64::new(1.0, 0.0);
        c
    }

    pub fn lattice(&self) -> GaborLattice {
        self.lat
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[m * self.lat.time_shifts() + n]
    }

    pub fn get_mut(&mut self, m: usize, n: usize) -> &mut Complex64 {
        let idx = m * self.lat.time_shifts() + n;
        &mut self.values[idx]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn root_table(len: usize) -> Vec<Complex64> {
    (0..len as i64).map(|k| unit_root(k, len)).collect()
}

pub fn analysis(g: &Signal, lat: &GaborLattice, f: &Signal) -> Result<Coeffs> {
    lat.ensure_grid(g)?;
    lat.ensure_grid(f)?;
    let len = lat.grid().len();
    let (a, b) = (lat.time_step(), lat.freq_step());
    let (mods, shifts) = (lat.modulations(), lat.time_shifts());
    let roots = root_table(len);
    let inv_s = 1.0 / lat.grid().per_unit() as f64;
    let (fs, gs) = (f.samples(), g.samples());
    let mut values = vec![Complex64::new(0.0, 0.0); mods * shifts];
    let mut prod = vec![Complex64::new(0.0, 0.0); len];
    for n in 0..shifts {
        for (j, p) in prod.iter_mut().enumerate() {
            *p = fs[j] * gs[(j + len - n * a) % len].conj();
        }
        for m in 0..mods {
            let step = m * b;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0usize;
            for p in &prod {
                acc += p * roots[k].conj();
                k += step;
                if k >= len {
                    k -= len;
                }
            }
            values[m * shifts + n] = acc * inv_s;
        }
    }
    Coeffs::new(*lat, values)
}

pub fn synthesis(g: &Signal, lat: &GaborLattice, c: &Coeffs) -> Result<Signal> {
    lat.ensure_grid(g)?;
    if c.lat != *lat {
        return Err(GaborError::Dimension("coefficients belong to a different lattice".into()));
    }
    let len = lat.grid().len();
    let (a, b) = (lat.time_step(), lat.freq_step());
    let (mods, shifts) = (lat.modulations(), lat.time_shifts());
    let roots = root_table(len);
    let gs = g.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for n in 0..shifts {
        for m in 0..mods {
            let cmn = c.values[m * shifts + n];
            if cmn == Complex64::new(0.0, 0.0) {
                continue;
            }
            let step = m * b;
            let mut k = 0usize;
            for (j, o) in out.iter_mut().enumerate() {
                *o += cmn * roots[k] * gs[(j + len - n * a) % len];
                k += step;
                if k >= len {
                    k -= len;
                }
            }
        }
    }
    Signal::new(lat.grid(), out)
}

/// `S f = sum_{m,n} <f, g_{m,n}> g_{m,n}` evaluated literally; the reference
/// every faster path is checked against.
pub fn frame_operator_direct(g: &Signal, lat: &GaborLattice, f: &Signal) -> Result<Signal> {
    synthesis(g, lat, &analysis(g, lat, f)?)
}

/// The multipliers `G_r` of the Walnut form, one `a`-periodic vector per
/// signed `r` in `(-b/2, b/2]`, kept in order `0, 1, -1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalnutCoeffs {
    lat: GaborLattice,
    entries: Vec<(i64, PeriodicVector)>,
    factor: f64,
}

impl WalnutCoeffs {
    /// Assemble from explicit multipliers; missing `r` are zero.
    pub fn from_entries(
        lat: GaborLattice,
        entries: Vec<(i64, PeriodicVector)>,
        factor: f64,
    ) -> Result<Self> {
        let b = lat.freq_step();
        let a = lat.time_step();
        let mut slots: Vec<Option<PeriodicVector>> = vec![None; b];
        for (r, v) in entries {
            if v.period() != a {
                return Err(GaborError::Dimension(format!(
                    "multiplier for r={r} has period {}, lattice needs {a}",
                    v.period()
                )));
            }
            if signed_index(r, b) != r {
                return Err(GaborError::Lattice(format!("r={r} outside the signed range of Z_{b}")));
            }
            let slot = &mut slots[r.rem_euclid(b as i64) as usize];
            if slot.is_some() {
                return Err(GaborError::Lattice(format!("duplicate multiplier for r={r}")));
            }
            *slot = Some(v);
        }
        let entries = signed_order(b)
            .into_iter()
            .map(|r| {
                let v = slots[r.rem_euclid(b as i64) as usize]
                    .take()
                    .unwrap_or_else(|| PeriodicVector::zeros(a));
                (r, v)
            })
            .collect();
        Ok(Self { lat, entries, factor })
    }

    pub fn lattice(&self) -> GaborLattice {
        self.lat
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn entries(&self) -> &[(i64, PeriodicVector)] {
        &self.entries
    }

    pub fn get(&self, r: i64) -> &PeriodicVector {
        let b = self.lat.freq_step() as i64;
        let r = signed_index(r, b as usize);
        &self.entries.iter().find(|(k, _)| *k == r).expect("all residues present").1
    }

    /// Largest entrywise deviation from `other` across all multipliers.
    pub fn max_abs_diff(&self, other: &WalnutCoeffs) -> f64 {
        self.entries
            .iter()
            .map(|(r, v)| v.max_abs_diff(other.get(*r)))
            .fold(0.0, f64::max)
    }

    fn apply_slice(&self, f: &[Complex64]) -> Vec<Complex64> {
        let len = f.len();
        let a = self.lat.time_step();
        let stride = self.lat.stride() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (r, gr) in &self.entries {
            let shift = (r * stride).rem_euclid(len as i64) as usize;
            for (j, o) in out.iter_mut().enumerate() {
                *o += gr.values[j % a] * f[(j + len - shift) % len];
            }
        }
        out.iter_mut().for_each(|v| *v *= self.factor);
        out
    }

    /// CSV: one `# factor=..,a=..,b=..,M=..,L=..,s=..` line, then `r,x,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# factor={:e},a={},b={},M={},L={},s={}",
            self.factor,
            self.lat.time_step(),
            self.lat.freq_step(),
            self.lat.stride(),
            self.lat.grid().len(),
            self.lat.grid().per_unit()
        )?;
        let mut w = csv::Writer::from_writer(out);
        for (r, v) in &self.entries {
            for (x, c) in v.values.iter().enumerate() {
                w.serialize(WalnutRow { r: *r, x, re: c.re, im: c.im })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let meta = header
            .trim()
            .strip_prefix("# ")
            .ok_or_else(|| GaborError::Parse("missing walnut metadata line".into()))?;
        let mut factor = None;
        let (mut a, mut b, mut len, mut s) = (None, None, None, None);
        for kv in meta.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| GaborError::Parse(format!("bad metadata field `{kv}`")))?;
            let bad = |e: &dyn std::fmt::Display| GaborError::Parse(format!("{k}: {e}"));
            match k {
                "factor" => factor = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
                "a" => a = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                "b" => b = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                "L" => len = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                "s" => s = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                _ => {}
            }
        }
        let missing = |name: &str| GaborError::Parse(format!("metadata field {name} missing"));
        let grid = crate::grid::Grid::new(len.ok_or_else(|| missing("L"))?, s.ok_or_else(|| missing("s"))?)?;
        let lat = GaborLattice::new(grid, a.ok_or_else(|| missing("a"))?, b.ok_or_else(|| missing("b"))?)?;
        let a = lat.time_step();
        let mut rows: Vec<(i64, PeriodicVector)> = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<WalnutRow>() {
            let row = row?;
            if row.x >= a {
                return Err(GaborError::Parse(format!("x={} outside period {a}", row.x)));
            }
            let idx = match rows.iter().position(|(r, _)| *r == row.r) {
                Some(i) => i,
                None => {
                    rows.push((row.r, PeriodicVector::zeros(a)));
                    rows.len() - 1
                }
            };
            rows[idx].1.values[row.x] = Complex64::new(row.re, row.im);
        }
        Self::from_entries(lat, rows, factor.ok_or_else(|| missing("factor"))?)
    }
}

#[derive(Serialize, Deserialize)]
struct WalnutRow {
    r: i64,
    x: usize,
    re: f64,
    im: f64,
}

impl LinearOperator for WalnutCoeffs {
    fn dim(&self) -> usize {
        self.lat.grid().len()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_slice(x)
    }
}

pub fn walnut_coefficients(g: &Signal, lat: &GaborLattice) -> Result<WalnutCoeffs> {
    let entries = signed_order(lat.freq_step())
        .into_iter()
        .map(|r| Ok((r, correlation_g(g, lat, r)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WalnutCoeffs { lat: *lat, entries, factor: lat.walnut_factor() })
}

/// `factor * sum_r G_r(j) f(j - r M)` in `O(L b)`.
pub fn frame_operator_walnut(w: &WalnutCoeffs, f: &Signal) -> Result<Signal> {
    w.lat.ensure_grid(f)?;
    Signal::new(f.grid(), w.apply_slice(f.samples()))
}

/// `sum_r ||G_r||_inf nu(r)` over signed `r`.
pub fn walnut_weighted_sum(w: &WalnutCoeffs, nu: &Weight) -> f64 {
    w.entries.iter().map(|(r, v)| v.sup_norm() * nu.eval(*r)).sum()
}
