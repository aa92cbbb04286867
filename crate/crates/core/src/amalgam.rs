//! Weighted Wiener amalgam norms `W(L^inf, l^1_nu)` on block partitions.
//!
//! Blocks are half-open runs of `block_len` samples aligned at sample 0 and
//! never wrap. Block `i` carries the signed index `signed_index(i, L/block_len)`.

use std::io::Write;

use serde::Serialize;

use crate::error::{GaborError, Result};
use crate::grid::{signed_index, signed_order, Signal};
use crate::weight::Weight;

/// One row of an amalgam profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub n: i64,
    pub sup: f64,
    pub weight: f64,
    pub weighted_sup: f64,
    pub cumsum: f64,
}

/// Per-block sups in order of increasing `|n|` (positive first on ties),
/// with the weighted running sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmalgamProfile {
    pub block_len: usize,
    pub entries: Vec<ProfileEntry>,
}

impl AmalgamProfile {
    pub fn norm(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.cumsum)
    }

    pub fn block_sups(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sup).collect()
    }

    pub fn cumsums(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.cumsum).collect()
    }

    /// Running sum over all blocks with `|n| <= radius`.
    pub fn cumsum_within(&self, radius: i64) -> f64 {
        self.entries
            .iter()
            .take_while(|e| e.n.abs() <= radius)
            .last()
            .map_or(0.0, |e| e.cumsum)
    }

    /// CSV with columns `n,sup,weight,weighted_sup,cumsum`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Max modulus on each block, indexed by block position `0..L/block_len`.
pub fn block_sups(f: &Signal, block_len: usize) -> Result<Vec<f64>> {
    if block_len == 0 || !f.len().is_multiple_of(block_len) {
        return Err(GaborError::Divisibility(format!(
            "block length {block_len} does not divide L={}",
            f.len()
        )));
    }
    Ok(f.samples()
        .chunks(block_len)
        .map(|blk| blk.iter().fold(0.0f64, |m, v| m.max(v.norm())))
        .collect())
}

pub fn amalgam_norm(f: &Signal, block_len: usize, w: &Weight) -> Result<f64> {
    let sups = block_sups(f, block_len)?;
    let p = sups.len();
    Ok(sups
        .iter()
        .enumerate()
        .map(|(i, s)| s * w.eval(signed_index(i as i64, p)))
        .sum())
}

pub fn amalgam_profile(f: &Signal, block_len: usize, w: &Weight) -> Result<AmalgamProfile> {
    let sups = block_sups(f, block_len)?;
    let p = sups.len();
    let mut cumsum = 0.0;
    let entries = signed_order(p)
        .into_iter()
        .map(|n| {
            let sup = sups[n.rem_euclid(p as i64) as usize];
            let weight = w.eval(n);
            let weighted_sup = sup * weight;
            cumsum += weighted_sup;
            ProfileEntry { n, sup, weight, weighted_sup, cumsum }
        })
        .collect();
    Ok(AmalgamProfile { block_len, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingNorms {
    pub amalgam: f64,
    pub l2: f64,
    pub linf: f64,
    /// `sqrt(block_len / s)`: `l2 <= l2_constant * amalgam` always holds.
    pub l2_constant: f64,
}

impl EmbeddingNorms {
    pub fn chain_holds(&self) -> bool {
        let slack = 1e-12 * self.amalgam.max(1.0);
        self.amalgam + slack >= self.linf && self.l2 <= self.l2_constant * self.amalgam + slack
    }
}

/// Amalgam, L2 (with `1/s` weight) and sup norms side by side.
pub fn embedding_check(f: &Signal, block_len: usize, w: &Weight) -> Result<EmbeddingNorms> {
    let amalgam = amalgam_norm(f, block_len, w)?;
    Ok(EmbeddingNorms {
        amalgam,
        l2: f.norm_l2(),
        linf: f.norm_inf(),
        l2_constant: (block_len as f64 / f.grid().per_unit() as f64).sqrt(),
    })
}
