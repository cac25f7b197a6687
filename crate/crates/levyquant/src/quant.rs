//! Amplitude quantization `[x]_m = (1/m) floor(1/2 + m x)` and the induced
//! cell histograms and step densities.
//!
//! Cells are left-closed/right-open, `[(i-0.5)/m, (i+0.5)/m)`, matching the
//! floor form exactly; the boundary case is pinned in tests. Histograms are
//! sparse ordered maps: heavy-tailed laws make dense arrays unbounded, and
//! ordered iteration keeps float reductions deterministic under any merge
//! order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One quantizer cell: index `i` at step `1/m`, covering
/// `[(i-0.5)/m, (i+0.5)/m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantIndex {
    pub i: i64,
    pub m: f64,
}

/// Quantize a finite value: `i = floor(1/2 + m x)`.
pub fn quantize(x: f64, m: f64) -> Result<QuantIndex> {
    if !x.is_finite() {
        return Err(Error::NonFiniteValue(x));
    }
    debug_assert!(m > 0.0, "quantizer step must be positive");
    let t = (0.5 + m * x).floor();
    if t.abs() >= 9.0e18 {
        return Err(Error::IndexOverflow { value: x, m });
    }
    Ok(QuantIndex { i: t as i64, m })
}

/// Cell representative `i/m`; the round-trip error is at most `1/(2m)`.
pub fn dequantize(q: QuantIndex) -> f64 {
    q.i as f64 / q.m
}

/// Sparse integer-bin histogram with total count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalPmf {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl EmpiricalPmf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, i: i64) {
        *self.counts.entry(i).or_insert(0) += 1;
        self.total += 1;
    }

    /// Bin-wise count addition; associative and commutative, so parallel
    /// shards can be reduced in any order.
    pub fn merge(&mut self, other: &EmpiricalPmf) {
        for (&i, &c) in &other.counts {
            *self.counts.entry(i).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn observed_support(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    pub fn count(&self, i: i64) -> u64 {
        self.counts.get(&i).copied().unwrap_or(0)
    }

    /// Normalize to exact relative frequencies at step `1/m`.
    pub fn to_cell_pmf(&self, m: f64) -> Result<CellPmf> {
        if self.total == 0 {
            return Err(Error::EmptyPmf);
        }
        let n = self.total as f64;
        CellPmf::new(
            m,
            self.counts
                .iter()
                .map(|(&i, &c)| (i, c as f64 / n))
                .collect(),
        )
    }
}

/// Quantize a block of samples, preserving order, and accumulate the
/// histogram alongside.
pub fn quantize_block(xs: &[f64], m: f64) -> Result<(Vec<i64>, EmpiricalPmf)> {
    let mut indices = Vec::with_capacity(xs.len());
    let mut pmf = EmpiricalPmf::new();
    for &x in xs {
        let q = quantize(x, m)?;
        indices.push(q.i);
        pmf.record(q.i);
    }
    Ok((indices, pmf))
}

/// Exact (normalized) probability masses over quantizer cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPmf {
    pub m: f64,
    probs: BTreeMap<i64, f64>,
}

impl CellPmf {
    pub fn new(m: f64, probs: BTreeMap<i64, f64>) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidParam {
                name: "m",
                reason: "quantizer step must be positive".to_string(),
            });
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedPmf(total));
        }
        if probs.values().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::UnnormalizedPmf(total));
        }
        Ok(CellPmf { m, probs })
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().map(|(&i, &p)| (i, p))
    }

    pub fn prob(&self, i: i64) -> f64 {
        self.probs.get(&i).copied().unwrap_or(0.0)
    }

    /// Exact discrete entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probs
            .values()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }
}

/// Piecewise-constant density of the continuized quantized variable:
/// `q(x) = m P[i]` on cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDensity {
    pub m: f64,
    /// Cell probabilities (not density values); density is `m * P[i]`.
    cells: BTreeMap<i64, f64>,
    pub tail_mass: f64,
}

/// Build the step density of an exact cell pmf; integrates to one by
/// construction.
pub fn step_density_from_pmf(pmf: &CellPmf) -> StepDensity {
    StepDensity {
        m: pmf.m,
        cells: pmf.iter().collect(),
        tail_mass: 0.0,
    }
}

impl StepDensity {
    /// Density value at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        let i = (0.5 + self.m * x).floor() as i64;
        self.m * self.cells.get(&i).copied().unwrap_or(0.0)
    }

    pub fn integral(&self) -> f64 {
        self.cells.values().sum::<f64>() + self.tail_mass
    }

    /// Differential entropy of the step density (exact cell sum):
    /// `sum_i P[i] log(1 / (m P[i]))`.
    pub fn differential_entropy(&self) -> f64 {
        self.cells
            .values()
            .filter(|p| **p > 0.0)
            .map(|p| -p * (self.m * p).ln())
            .sum()
    }

    /// L1 distance between two step densities on the same lattice, plus the
    /// declared-tail gap.
    pub fn tv_distance(&self, other: &StepDensity) -> Result<f64> {
        if self.m != other.m {
            return Err(Error::IncompatibleGrids);
        }
        let mut l1 = 0.0;
        for (&i, &p) in &self.cells {
            l1 += (p - other.cells.get(&i).copied().unwrap_or(0.0)).abs();
        }
        for (&i, &q) in &other.cells {
            if !self.cells.contains_key(&i) {
                l1 += q;
            }
        }
        Ok(l1 + (self.tail_mass - other.tail_mass).abs())
    }

    /// `E |X~_m|^alpha` with exact per-cell integrals of `|x|^alpha`.
    pub fn abs_moment(&self, alpha: f64) -> f64 {
        self.cells
            .iter()
            .map(|(&i, &p)| {
                let lo = (i as f64 - 0.5) / self.m;
                let hi = (i as f64 + 0.5) / self.m;
                self.m * p * abs_power_integral(lo, hi, alpha)
            })
            .sum()
    }
}

/// `int_lo^hi |x|^alpha dx`, splitting at zero when the cell straddles it.
fn abs_power_integral(lo: f64, hi: f64, alpha: f64) -> f64 {
    let prim = |t: f64| t.abs().powf(alpha + 1.0) / (alpha + 1.0);
    if lo >= 0.0 {
        prim(hi) - prim(lo)
    } else if hi <= 0.0 {
        prim(lo) - prim(hi)
    } else {
        prim(lo) + prim(hi)
    }
}
