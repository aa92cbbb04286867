//! Weights on signed integer indices and their admissibility checks.

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

/// Built-in even, submultiplicative weight families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum Weight {
    /// `nu(n) = 1`.
    #[default]
    Constant,
    /// `nu(n) = (1 + |n|)^exponent`.
    Polynomial { exponent: f64 },
    /// `nu(n) = exp(c |n|^gamma)` with `0 < gamma < 1`.
    Subexponential { c: f64, gamma: f64 },
}

impl Weight {
    pub fn polynomial(exponent: f64) -> Result<Self> {
        let w = Weight::Polynomial { exponent };
        w.validate()?;
        Ok(w)
    }

    pub fn subexponential(c: f64, gamma: f64) -> Result<Self> {
        let w = Weight::Subexponential { c, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Weight::Constant => Ok(()),
            Weight::Polynomial { exponent } if exponent >= 0.0 && exponent.is_finite() => Ok(()),
            Weight::Polynomial { exponent } => Err(GaborError::Domain(format!(
                "polynomial weight exponent {exponent} must be finite and >= 0"
            ))),
            Weight::Subexponential { c, gamma }
                if c > 0.0 && c.is_finite() && gamma > 0.0 && gamma < 1.0 =>
            {
                Ok(())
            }
            Weight::Subexponential { c, gamma } => Err(GaborError::Domain(format!(
                "subexponential weight needs c > 0 and 0 < gamma < 1, got c={c}, gamma={gamma}"
            ))),
        }
    }

    pub fn eval(&self, n: i64) -> f64 {
        let m = n.unsigned_abs() as f64;
        match *self {
            Weight::Constant => 1.0,
            Weight::Polynomial { exponent } => (1.0 + m).powf(exponent),
            Weight::Subexponential { c, gamma } => (c * m.powf(gamma)).exp(),
        }
    }
}

/// One sample of the growth ratio `ln(nu(k n)) / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrsSample {
    pub n: i64,
    pub k: i64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub is_even: bool,
    pub at_least_one: bool,
    pub submultiplicative_ok: bool,
    /// First violating pair `(k, n)` if any.
    pub first_violation: Option<(i64, i64)>,
    /// Growth ratios for `n` in [`GRS_SAMPLE_N`] and `k = 1..=K`; reported only.
    pub grs_ratios: Vec<GrsSample>,
}

/// Base indices at which the growth ratio is sampled.
pub const GRS_SAMPLE_N: [i64; 3] = [1, 2, 4];

// Relative slack for rounding in `nu(k+n) <= nu(k) nu(n)`.
const SUBMULT_SLACK: f64 = 1e-12;

pub fn check_admissible(w: &Weight, n_check: i64, k_grs: i64) -> AdmissibilityReport {
    check_admissible_with(|n| w.eval(n), n_check, k_grs)
}

/// Admissibility check for an arbitrary rule `n -> nu(n)`.
///
/// Evenness, `nu >= 1`, and submultiplicativity are checked exhaustively for
/// `|k|, |n| <= n_check`. The growth condition is a limit, so only the ratio
/// sequence is returned.
pub fn check_admissible_with<F: Fn(i64) -> f64>(
    rule: F,
    n_check: i64,
    k_grs: i64,
) -> AdmissibilityReport {
    let n_check = n_check.max(1);
    let range = -n_check..=n_check;
    let is_even = (0..=n_check).all(|n| rule(n) == rule(-n));
    let at_least_one = range.clone().all(|n| rule(n) >= 1.0);
    let mut first_violation = None;
    'outer: for k in range.clone() {
        for n in range.clone() {
            let bound = rule(k) * rule(n);
            if rule(k + n) > bound * (1.0 + SUBMULT_SLACK) {
                first_violation = Some((k, n));
                break 'outer;
            }
        }
    }
    let grs_ratios = GRS_SAMPLE_N
        .iter()
        .flat_map(|&n| (1..=k_grs.max(2)).map(move |k| (n, k)))
        .map(|(n, k)| GrsSample { n, k, ratio: rule(k * n).ln() / k as f64 })
        .collect();
    AdmissibilityReport {
        is_even,
        at_least_one,
        submultiplicative_ok: first_violation.is_none(),
        first_violation,
        grs_ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_is_admissible() {
        let r = check_admissible(&Weight::Constant, 20, 10);
        assert!(r.is_even && r.submultiplicative_ok && r.at_least_one);
        assert!(r.grs_ratios.iter().all(|s| s.ratio == 0.0));
    }

    #[test]
    fn polynomial_weight_is_submultiplicative() {
        let r = check_admissible(&Weight::polynomial(2.0).unwrap(), 50, 10);
        assert!(r.is_even && r.submultiplicative_ok);
        // ln((1+k)^2)/k decreases toward zero
        let first: Vec<f64> = r.grs_ratios.iter().filter(|s| s.n == 1).map(|s| s.ratio).collect();
        assert!(first.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exponential_rule_shows_flat_growth_ratio() {
        let r = check_admissible_with(|n: i64| (n.abs() as f64).exp(), 10, 8);
        assert!(r.submultiplicative_ok);
        for s in &r.grs_ratios {
            assert!((s.ratio - s.n.abs() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_non_submultiplicative_rule() {
        let r = check_admissible_with(|n: i64| 1.0 + (n * n) as f64, 5, 4);
        assert!(!r.submultiplicative_ok);
        assert!(r.first_violation.is_some());
        let odd = check_admissible_with(|n: i64| if n > 0 { 2.0 } else { 1.0 }, 3, 2);
        assert!(!odd.is_even);
    }

    #[test]
    fn builtin_weights_submultiplicative_up_to_64() {
        let weights = [
            Weight::Constant,
            Weight::polynomial(0.5).unwrap(),
            Weight::polynomial(3.0).unwrap(),
            Weight::subexponential(0.7, 0.5).unwrap(),
            Weight::subexponential(2.0, 0.9).unwrap(),
        ];
        for w in weights {
            let r = check_admissible(&w, 64, 4);
            assert!(r.is_even && r.at_least_one && r.submultiplicative_ok, "{w:?}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Weight::polynomial(-1.0).is_err());
        assert!(Weight::subexponential(1.0, 1.0).is_err());
        assert!(Weight::subexponential(0.0, 0.5).is_err());
    }
}
