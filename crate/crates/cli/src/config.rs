//! Run configuration: a TOML file with `[grid]`, `[window]`, `[lattice]`,
//! `[weight]` and `[run]` sections plus optional per-command sections.
//!
//! ```toml
//! [grid]
//! L = 256
//! s = 16
//!
//! [window]
//! kind = "gaussian"   # characteristic | gaussian | hat | file
//! width = 1.0         # center defaults to the middle of the grid
//!
//! [lattice]
//! a = 8
//! b = 8
//!
//! [weight]
//! kind = "polynomial" # constant | polynomial | subexponential
//! exponent = 2.0
//!
//! [run]
//! tol = 1e-10
//! trials = 10
//! seed = 1
//! out = "out"
//! ```

use std::path::{Path, PathBuf};

use gabor_walnut::diagnostics::CoefficientRule;
use gabor_walnut::invert::{DualMethod, TightMethod, SOLVER_TOL};
use gabor_walnut::window::build_window;
use gabor_walnut::{build_grid, GaborError, GaborLattice, Grid, Signal, Weight, WindowSpec};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub window: WindowConfig,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub weight: Weight,
    #[serde(default)]
    pub run: RunOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub counterexample: CounterexampleOptions,
    #[serde(default)]
    pub bench: BenchOptions,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub len: usize,
    pub s: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub a: usize,
    pub b: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowConfig {
    Characteristic {
        #[serde(default = "one")]
        length: f64,
    },
    Gaussian {
        #[serde(default = "one")]
        width: f64,
        center: Option<f64>,
    },
    Hat,
    /// One `re im` pair per line; relative paths resolve against the config file.
    File { path: PathBuf },
}

impl WindowConfig {
    pub fn spec(&self, grid: Grid, base: &Path) -> WindowSpec {
        match self {
            WindowConfig::Characteristic { length } => WindowSpec::Characteristic { length: *length },
            WindowConfig::Gaussian { width, center } => WindowSpec::Gaussian {
                width: *width,
                center: center.unwrap_or(grid.units() as f64 / 2.0),
            },
            WindowConfig::Hat => WindowSpec::Hat,
            WindowConfig::File { path } => WindowSpec::File { path: base.join(path) },
        }
    }

    pub fn build(&self, grid: Grid, base: &Path) -> Result<Signal, GaborError> {
        build_window(&self.spec(grid, base), grid)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Solver tolerance.
    pub tol: f64,
    /// Random signals used by reconstruction and boundedness checks.
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub dual_method: DualMethod,
    pub tight_method: TightMethod,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: SOLVER_TOL,
            trials: 10,
            seed: 1,
            out: PathBuf::from("out"),
            dual_method: DualMethod::Cg,
            tight_method: TightMethod::Contour,
        }
    }
}

/// Which window `verify` pairs with `g`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DualSource {
    /// The computed canonical dual.
    Canonical,
    /// `g` itself; a negative control on non-tight frames.
    Window,
    /// A window file.
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Largest accepted identity residual.
    pub tol: f64,
    pub dual: DualSource,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { tol: 1e-8, dual: DualSource::Canonical }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleOptions {
    pub rule: CoefficientRule,
    /// Unit counts `K`; each run uses `L = K s` with `s` from `[grid]`.
    /// Empty means the configured grid only.
    pub units: Vec<usize>,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        Self { rule: CoefficientRule::Harmonic, units: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCase {
    #[serde(rename = "L")]
    pub len: usize,
    pub s: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub reps: usize,
    /// Empty means the configured instance only.
    pub cases: Vec<BenchCase>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { reps: 3, cases: Vec::new() }
    }
}

/// A validated configuration together with the objects built from it.
pub struct Instance {
    pub config: RunConfig,
    pub base: PathBuf,
    pub grid: Grid,
    pub lat: GaborLattice,
    pub g: Signal,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("ConfigError: cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("ConfigError: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("ConfigError: {0}")]
    Invalid(String),
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    Ok(toml::from_str(&text)?)
}

impl Instance {
    /// Build grid, lattice, window and weight, failing before any computation.
    pub fn new(config: RunConfig, base: PathBuf) -> Result<Self, GaborError> {
        let grid = build_grid(config.grid.len, config.grid.s)?;
        let lat = GaborLattice::new(grid, config.lattice.a, config.lattice.b)?;
        config.weight.validate()?;
        if !(config.run.tol > 0.0 && config.run.tol < 1.0) {
            return Err(GaborError::Domain(format!("tolerance {} must lie in (0, 1)", config.run.tol)));
        }
        let g = config.window.build(grid, &base)?;
        Ok(Self { config, base, grid, lat, g })
    }
}
