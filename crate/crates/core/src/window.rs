//! Window families and the plain-text window file format.
//!
//! A window file holds one complex sample per line as `re im`; the line count
//! must equal the grid length.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::grid::{Grid, Signal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowSpec {
    /// Indicator of `[0, length)` in units.
    Characteristic { length: f64 },
    /// `exp(-pi ((x - center)/width)^2)` sampled at `x = j/s`.
    Gaussian { width: f64, center: f64 },
    /// Triangle supported on `[0, 1]` with peak 1 at `x = 1/2`.
    Hat,
    File { path: PathBuf },
}

pub fn build_window(spec: &WindowSpec, grid: Grid) -> Result<Signal> {
    let s = grid.per_unit() as f64;
    match spec {
        WindowSpec::Characteristic { length } => {
            let support = length * s;
            if support.is_nan() || support < 1.0 || (support - support.round()).abs() > 1e-9 {
                return Err(GaborError::Domain(format!(
                    "characteristic length {length} does not cover a whole positive number of samples"
                )));
            }
            let support = support.round() as usize;
            if support > grid.len() {
                return Err(GaborError::Domain(format!(
                    "support of {support} samples exceeds grid length {}",
                    grid.len()
                )));
            }
            let v: Vec<f64> = (0..grid.len()).map(|j| if j < support { 1.0 } else { 0.0 }).collect();
            Signal::from_real(grid, &v)
        }
        WindowSpec::Gaussian { width, center } => {
            if width.is_nan() || *width <= 0.0 {
                return Err(GaborError::Domain(format!("gaussian width {width} must be positive")));
            }
            let v: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let x = (j as f64 / s - center) / width;
                    (-std::f64::consts::PI * x * x).exp()
                })
                .collect();
            Signal::from_real(grid, &v)
        }
        WindowSpec::Hat => {
            if grid.per_unit() > grid.len() {
                return Err(GaborError::Domain("hat support exceeds grid".into()));
            }
            let v: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let x = j as f64 / s;
                    (1.0 - (2.0 * x - 1.0).abs()).max(0.0)
                })
                .collect();
            Signal::from_real(grid, &v)
        }
        WindowSpec::File { path } => read_window_file(path, grid),
    }
}

pub fn parse_window(text: &str, grid: Grid) -> Result<Signal> {
    let mut samples = Vec::with_capacity(grid.len());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64> {
            tok.ok_or_else(|| GaborError::Parse(format!("line {}: expected `re im`", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| GaborError::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let re = parse(parts.next())?;
        let im = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(GaborError::Parse(format!("line {}: trailing fields", lineno + 1)));
        }
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != grid.len() {
        return Err(GaborError::Parse(format!(
            "window file has {} samples, grid needs {}",
            samples.len(),
            grid.len()
        )));
    }
    Signal::new(grid, samples)
}

pub fn read_window_file(path: &Path, grid: Grid) -> Result<Signal> {
    let text = std::fs::read_to_string(path)?;
    parse_window(&text, grid)
}

pub fn format_window(f: &Signal) -> String {
    let mut out = String::with_capacity(f.len() * 48);
    for v in f.samples() {
        // `{:e}` round-trips f64 exactly
        let _ = writeln!(out, "{:e} {:e}", v.re, v.im);
    }
    out
}

pub fn write_window_file(path: &Path, f: &Signal) -> Result<()> {
    std::fs::write(path, format_window(f))?;
    Ok(())
}
