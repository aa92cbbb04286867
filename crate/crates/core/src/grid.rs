//! Finite cyclic signal model.
//!
//! The real line is replaced by `Z_L` with `s` samples per unit length, so a
//! grid spans `K = L / s` unit intervals. Time shifts are integer sample
//! counts and modulations are integer frequency bins; every lattice quantity
//! (`alpha = a/s`, `beta = b*s/L`, `1/beta = M/s` with `M = L/b`) is exact.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

/// Uniform cyclic sampling grid: `len` samples, `per_unit` samples per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    len: usize,
    per_unit: usize,
}

impl Grid {
    pub fn new(len: usize, per_unit: usize) -> Result<Self> {
        if len < 2 {
            return Err(GaborError::Domain(format!("grid length {len} must be at least 2")));
        }
        if per_unit < 1 {
            return Err(GaborError::Domain("samples per unit must be at least 1".into()));
        }
        if !len.is_multiple_of(per_unit) {
            return Err(GaborError::Divisibility(format!(
                "samples per unit {per_unit} does not divide grid length {len}"
            )));
        }
        Ok(Self { len, per_unit })
    }

    /// Total number of samples `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Samples per unit length `s`.
    pub fn per_unit(&self) -> usize {
        self.per_unit
    }

    /// Number of unit intervals `K = L / s`.
    pub fn units(&self) -> usize {
        self.len / self.per_unit
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(GaborError::GridMismatch(format!(
                "grid {{L={}, s={}}} vs {{L={}, s={}}}",
                self.len, self.per_unit, other.len, other.per_unit
            )));
        }
        Ok(())
    }
}

/// Convenience constructor matching the operation name used in reports.
pub fn build_grid(len: usize, per_unit: usize) -> Result<Grid> {
    Grid::new(len, per_unit)
}

/// Signed representative of `i mod p` in `(-p/2, p/2]`.
pub fn signed_index(i: i64, p: usize) -> i64 {
    let p = p as i64;
    let r = i.rem_euclid(p);
    if 2 * r > p {
        r - p
    } else {
        r
    }
}

/// All signed representatives of `Z_p`, ordered by increasing magnitude with
/// the positive index first on ties: `0, 1, -1, 2, -2, ...`.
pub fn signed_order(p: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(p);
    out.push(0);
    let mut k = 1i64;
    while out.len() < p {
        out.push(k);
        if out.len() < p {
            out.push(-k);
        }
        k += 1;
    }
    out
}

/// `exp(2 pi i k / n)` with `k` reduced modulo `n` first.
pub(crate) fn unit_root(k: i64, n: usize) -> Complex64 {
    let k = k.rem_euclid(n as i64);
    Complex64::from_polar(1.0, TAU * k as f64 / n as f64)
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(GaborError::Dimension(format!(
                "{} samples given for a grid of length {}",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Unit spike at sample `j`.
    pub fn delta(grid: Grid, j: usize) -> Self {
        let mut s = Self::zeros(grid);
        s.samples[j % grid.len()] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            samples: self.samples.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Signal {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Signal {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(x, y)| x - y).collect(),
        })
    }

    /// Pointwise `self * conj(other)`.
    pub fn mul_conj(&self, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Signal {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(x, y)| x * y.conj()).collect(),
        })
    }

    /// Discrete L2 norm with the `1/s` Riemann weight.
    pub fn norm_l2(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|v| v.norm_sqr()).sum();
        (sum / self.grid.per_unit() as f64).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest pointwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Signal) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }
}

/// Time-frequency shift `M_m T_n f`, i.e. `exp(2 pi i m j / L) f(j - n)`.
/// Translation is applied first, then modulation; both indices are taken mod `L`.
pub fn tf_shift(f: &Signal, n: i64, m: i64) -> Signal {
    let len = f.len();
    let n = n.rem_euclid(len as i64) as usize;
    let m = m.rem_euclid(len as i64);
    let samples = (0..len)
        .map(|j| {
            let v = f.samples[(j + len - n) % len];
            if m == 0 {
                v
            } else {
                v * unit_root(m * j as i64, len)
            }
        })
        .collect();
    Signal { grid: f.grid, samples }
}

/// Scaled inner product `(1/s) sum_j f(j) conj(h(j))`, summed in ascending index order.
pub fn inner_product(f: &Signal, h: &Signal) -> Result<Complex64> {
    f.grid.ensure_same(&h.grid)?;
    let sum: Complex64 = f.samples.iter().zip(&h.samples).map(|(x, y)| x * y.conj()).sum();
    Ok(sum / f.grid.per_unit() as f64)
}

/// Separable time-frequency lattice `{M_{m b} T_{n a}}` on a grid.
///
/// `a` is the time step in samples and `b` the frequency step in bins. The
/// redundancy `L/(a b)` is reported but not enforced, so undersampled systems
/// can be built on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaborLattice {
    grid: Grid,
    a: usize,
    b: usize,
}

impl GaborLattice {
    pub fn new(grid: Grid, a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(GaborError::Domain("lattice steps must be positive".into()));
        }
        if !grid.len().is_multiple_of(a) {
            return Err(GaborError::Divisibility(format!(
                "time step a={a} does not divide L={}",
                grid.len()
            )));
        }
        if !grid.len().is_multiple_of(b) {
            return Err(GaborError::Divisibility(format!(
                "frequency step b={b} does not divide L={}",
                grid.len()
            )));
        }
        Ok(Self { grid, a, b })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Time step `a` in samples.
    pub fn time_step(&self) -> usize {
        self.a
    }

    /// Frequency step `b` in bins.
    pub fn freq_step(&self) -> usize {
        self.b
    }

    /// `M = L/b`: samples per `1/beta`, the stride of the Walnut translations.
    pub fn stride(&self) -> usize {
        self.grid.len() / self.b
    }

    /// `N = L/a`, number of time shifts.
    pub fn time_shifts(&self) -> usize {
        self.grid.len() / self.a
    }

    /// Number of modulations, `L/b`.
    pub fn modulations(&self) -> usize {
        self.grid.len() / self.b
    }

    pub fn redundancy(&self) -> f64 {
        self.grid.len() as f64 / (self.a * self.b) as f64
    }

    /// Continuum time step `alpha = a/s`.
    pub fn alpha(&self) -> f64 {
        self.a as f64 / self.grid.per_unit() as f64
    }

    /// Continuum frequency step `beta = b s / L`.
    pub fn beta(&self) -> f64 {
        (self.b * self.grid.per_unit()) as f64 / self.grid.len() as f64
    }

    /// Walnut factor `1/beta = M/s`.
    pub fn walnut_factor(&self) -> f64 {
        self.stride() as f64 / self.grid.per_unit() as f64
    }

    pub(crate) fn ensure_grid(&self, f: &Signal) -> Result<()> {
        self.grid.ensure_same(&f.grid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn chi(grid: Grid) -> Signal {
        let mut v = vec![0.0; grid.len()];
        v[..grid.per_unit()].fill(1.0);
        Signal::from_real(grid, &v).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = build_grid(8, 4).unwrap();
        assert_eq!((g.len(), g.per_unit(), g.units()), (8, 4, 2));
        assert!(matches!(build_grid(8, 3), Err(GaborError::Divisibility(_))));
        assert!(matches!(build_grid(1, 1), Err(GaborError::Domain(_))));
        assert!(matches!(build_grid(8, 0), Err(GaborError::Domain(_))));
        let g = build_grid(256, 16).unwrap();
        assert_eq!(g.units(), 16);
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(3, 8), 3);
        assert_eq!(signed_index(4, 8), 4);
        assert_eq!(signed_index(5, 8), -3);
        assert_eq!(signed_index(-1, 8), -1);
        assert_eq!(signed_index(1, 2), 1);
        assert_eq!(signed_index(2, 5), 2);
        assert_eq!(signed_index(3, 5), -2);
        assert_eq!(signed_order(4), vec![0, 1, -1, 2]);
        assert_eq!(signed_order(5), vec![0, 1, -1, 2, -2]);
        assert_eq!(signed_order(1), vec![0]);
    }

    #[test]
    fn shift_examples() {
        let g = build_grid(8, 4).unwrap();
        let d0 = Signal::delta(g, 0);
        assert_eq!(tf_shift(&d0, 2, 0), Signal::delta(g, 2));
        assert_eq!(tf_shift(&d0, 0, 3), d0);
        let shifted = tf_shift(&chi(g), 4, 0);
        let expect: Vec<_> = [0., 0., 0., 0., 1., 1., 1., 1.].iter().map(|&v| c(v)).collect();
        assert_eq!(shifted.samples(), &expect[..]);
    }

    #[test]
    fn inner_product_examples() {
        let g = build_grid(8, 4).unwrap();
        assert_eq!(inner_product(&chi(g), &chi(g)).unwrap(), c(1.0));
        assert_eq!(inner_product(&Signal::delta(g, 0), &Signal::delta(g, 1)).unwrap(), c(0.0));
        let other = Signal::zeros(build_grid(8, 2).unwrap());
        assert!(matches!(inner_product(&chi(g), &other), Err(GaborError::GridMismatch(_))));
    }

    #[test]
    fn lattice_derived_quantities() {
        let lat = GaborLattice::new(build_grid(8, 4).unwrap(), 2, 2).unwrap();
        assert_eq!(lat.stride(), 4);
        assert_eq!(lat.time_shifts(), 4);
        assert_eq!(lat.alpha(), 0.5);
        assert_eq!(lat.beta(), 1.0);
        assert_eq!(lat.walnut_factor(), 1.0);
        assert_eq!(lat.redundancy(), 2.0);
        assert!(matches!(
            GaborLattice::new(build_grid(8, 4).unwrap(), 3, 2),
            Err(GaborError::Divisibility(_))
        ));
        // undersampled systems are constructible
        assert!(GaborLattice::new(build_grid(8, 4).unwrap(), 4, 4).unwrap().redundancy() < 1.0);
    }

    fn arb_signal(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
    }

    fn to_signal(grid: Grid, v: &[(f64, f64)]) -> Signal {
        Signal::new(grid, v.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn shifts_compose(v in arb_signal(12), n1 in -30i64..30, n2 in -30i64..30) {
            let g = build_grid(12, 3).unwrap();
            let f = to_signal(g, &v);
            prop_assert_eq!(tf_shift(&tf_shift(&f, n1, 0), n2, 0), tf_shift(&f, n1 + n2, 0));
            let lhs = tf_shift(&tf_shift(&f, 0, n1), 0, n2);
            let rhs = tf_shift(&f, 0, n1 + n2);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }

        #[test]
        fn commutation_phase(v in arb_signal(12), n in -30i64..30, m in -30i64..30) {
            let g = build_grid(12, 3).unwrap();
            let f = to_signal(g, &v);
            let mt = tf_shift(&f, n, m);
            let tm = tf_shift(&tf_shift(&f, 0, m), n, 0).scale(unit_root(m * n, 12));
            prop_assert!(mt.max_abs_diff(&tm) < 1e-14);
        }

        #[test]
        fn inner_product_is_hermitian(v in arb_signal(12), w in arb_signal(12)) {
            let g = build_grid(12, 3).unwrap();
            let (f, h) = (to_signal(g, &v), to_signal(g, &w));
            let fh = inner_product(&f, &h).unwrap();
            let hf = inner_product(&h, &f).unwrap();
            prop_assert!((fh - hf.conj()).norm() < 1e-15);
            let ff = inner_product(&f, &f).unwrap();
            prop_assert!(ff.re >= 0.0 && ff.im == 0.0);
            prop_assert_eq!(ff.re == 0.0, v.iter().all(|&(a, b)| a == 0.0 && b == 0.0));
        }
    }
}
