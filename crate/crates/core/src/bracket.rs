//! Periodization, bracket products and the correlation functions `G_r`.
//!
//! A bracket `[f, h]_p` is the `p`-periodic fold of `f * conj(h)`, stored
//! over one period. No `1/s` factor enters the fold.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{GaborError, Result};
use crate::grid::{signed_index, tf_shift, GaborLattice, Signal};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicVector {
    pub values: Vec<Complex64>,
}

impl PeriodicVector {
    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn zeros(period: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); period] }
    }

    /// Value at any integer position, read cyclically.
    pub fn at(&self, x: i64) -> Complex64 {
        self.values[x.rem_euclid(self.period() as i64) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Repeat the period to fill `len` samples.
    pub fn tile(&self, len: usize) -> Vec<Complex64> {
        (0..len).map(|j| self.values[j % self.period()]).collect()
    }

    pub fn max_abs_diff(&self, other: &PeriodicVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    /// CSV with columns `index,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            index: usize,
            re: f64,
            im: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (index, v) in self.values.iter().enumerate() {
            w.serialize(Row { index, re: v.re, im: v.im })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_period(len: usize, p: usize) -> Result<()> {
    if p == 0 || !len.is_multiple_of(p) {
        return Err(GaborError::Divisibility(format!("period {p} does not divide L={len}")));
    }
    Ok(())
}

/// Cyclic fold `values(x) = sum_k u(x + k p)`, `k` ascending.
pub fn periodize(u: &Signal, p: usize) -> Result<PeriodicVector> {
    check_period(u.len(), p)?;
    let mut values = vec![Complex64::new(0.0, 0.0); p];
    for chunk in u.samples().chunks(p) {
        for (acc, v) in values.iter_mut().zip(chunk) {
            *acc += v;
        }
    }
    Ok(PeriodicVector { values })
}

/// `[f, h]_p = periodize(f * conj(h), p)`.
pub fn bracket_product(f: &Signal, h: &Signal, p: usize) -> Result<PeriodicVector> {
    periodize(&f.mul_conj(h)?, p)
}

/// Fourier-series coefficients of `[f, h]_p`:
/// `c_n = (1/p) sum_x [f,h]_p(x) exp(-2 pi i n x / p)`, `n = 0..p`.
///
/// With the scaled inner product these equal `(s/p) <f, M_{n L/p} h>`.
pub fn bracket_fourier_coeffs(f: &Signal, h: &Signal, p: usize) -> Result<Vec<Complex64>> {
    let br = bracket_product(f, h, p)?;
    Ok(fourier_coeffs(&br))
}

/// Forward DFT with `exp(-2 pi i j n / p)`, then `1/p` for series coefficients.
pub fn fourier_coeffs(v: &PeriodicVector) -> Vec<Complex64> {
    let p = v.period();
    let mut buf = v.values.clone();
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    let inv = 1.0 / p as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    buf
}

/// `G_r = [g, T_{r M} g]_a`, an `a`-periodic vector; `r` is reduced into the
/// signed range of `Z_b`.
pub fn correlation_g(g: &Signal, lat: &GaborLattice, r: i64) -> Result<PeriodicVector> {
    lat.ensure_grid(g).map_err(|e| GaborError::Lattice(e.to_string()))?;
    let r = signed_index(r, lat.freq_step());
    let shifted = tf_shift(g, r * lat.stride() as i64, 0);
    bracket_product(g, &shifted, lat.time_step())
}
