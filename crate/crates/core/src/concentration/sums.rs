//! The dyadic sums behind the restricted estimate
//! `(Σ_Q |Q|^{s/p-s} |Ω∩Q|^s)^{1/s} ≲ |Ω|^{1/p}`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::rng;

/// Scale range of [`elementary_sum`].
pub const ELEMENTARY_SCALES: (i32, i32) = (-60, 60);

/// Finite union of distinct unit lattice cells `corner + [0,1)^d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaSet {
    d: usize,
    cells: BTreeSet<Vec<i64>>,
}

impl OmegaSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            d,
            cells: BTreeSet::new(),
        })
    }

    /// Rejects repeated cells, which would break disjointness.
    pub fn from_cells<I: IntoIterator<Item = Vec<i64>>>(d: usize, cells: I) -> Result<Self> {
        let mut set = Self::new(d)?;
        for c in cells {
            set.insert(c)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, cell: Vec<i64>) -> Result<()> {
        if cell.len() != self.d {
            return Err(Error::InvalidArgument(format!(
                "cell {cell:?} is not {}-dimensional",
                self.d
            )));
        }
        if !self.cells.insert(cell.clone()) {
            return Err(Error::InvalidArgument(format!("cell {cell:?} listed twice")));
        }
        Ok(())
    }

    /// `count` distinct cells drawn uniformly from `[-spread, spread)^d`.
    pub fn random(d: usize, count: usize, spread: i64, seed: u64) -> Result<Self> {
        let room = (2 * spread.max(0) as u128).pow(d as u32);
        if (count as u128) > room {
            return Err(Error::InvalidArgument(format!(
                "{count} cells do not fit in [-{spread}, {spread})^{d}"
            )));
        }
        let mut r = rng(seed);
        let mut set = Self::new(d)?;
        while set.cells.len() < count {
            let c: Vec<i64> = (0..d).map(|_| r.random_range(-spread..spread)).collect();
            set.cells.insert(c);
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn measure(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.cells.iter()
    }
}

fn check_exponents(s: f64, p: f64) -> Result<()> {
    if !(s.is_finite() && p.is_finite() && p > 1.0 && s > p) {
        return Err(Error::InvalidArgument(format!(
            "need s > p > 1, got s = {s}, p = {p}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedSum {
    pub measure: usize,
    /// `(Σ_Q |Q|^{s/p-s} |Ω∩Q|^s)^{1/s}`.
    pub lhs: f64,
    /// `lhs / |Ω|^{1/p}` (zero for empty `Ω`).
    pub ratio: f64,
    /// Closed-form contribution of all sub-unit scales.
    pub fine_tail: f64,
    /// Closed-form contribution of the scales past which the cube
    /// occupancies no longer change.
    pub coarse_tail: f64,
}

/// Evaluates the restricted sum over every dyadic scale exactly: below the
/// unit scale each cube lies in or out of `Ω`, and far above it the
/// occupancies freeze into one cube per orthant, so both ends are geometric.
pub fn restricted_sum_check(omega: &OmegaSet, s: f64, p: f64) -> Result<RestrictedSum> {
    check_exponents(s, p)?;
    let m = omega.measure();
    if m == 0 {
        return Ok(RestrictedSum {
            measure: 0,
            lhs: 0.0,
            ratio: 0.0,
            fine_tail: 0.0,
            coarse_tail: 0.0,
        });
    }
    let d = omega.dim() as f64;
    let mf = m as f64;
    // k < 0: |Ω| 2^{-dk} cubes of weight 2^{dk s/p}
    let r_fine = 2f64.powf(-d * (s / p - 1.0));
    let fine_tail = mf * r_fine / (1.0 - r_fine);
    let mut total = fine_tail + mf;

    let a = 2f64.powf(d * (s / p - s));
    let mut cells: Vec<Vec<i64>> = omega.cells().cloned().collect();
    let mut k = 0i32;
    loop {
        if cells.iter().all(|c| c.iter().all(|&x| x == 0 || x == -1)) {
            break;
        }
        k += 1;
        let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for c in &cells {
            let parent: Vec<i64> = c.iter().map(|x| x.div_euclid(2)).collect();
            *counts.entry(parent).or_default() += 1;
        }
        total += a.powi(k) * counts.values().map(|&n| (n as f64).powf(s)).sum::<f64>();
        cells = cells
            .iter()
            .map(|c| c.iter().map(|x| x.div_euclid(2)).collect())
            .collect();
    }
    // from scale k+1 on, the orthant counts are fixed
    let mut frozen: BTreeMap<&Vec<i64>, usize> = BTreeMap::new();
    for c in &cells {
        *frozen.entry(c).or_default() += 1;
    }
    let occupancy: f64 = frozen.values().map(|&n| (n as f64).powf(s)).sum();
    let coarse_tail = occupancy * a.powi(k + 1) / (1.0 - a);
    total += coarse_tail;

    let lhs = total.powf(1.0 / s);
    Ok(RestrictedSum {
        measure: m,
        lhs,
        ratio: lhs / mf.powf(1.0 / p),
        fine_tail,
        coarse_tail,
    })
}

/// `Σ_{k=-60}^{60} (2^{dk})^{s/p-s} |Ω| min(|Ω|, 2^{dk})^{s-1}`.
pub fn elementary_sum(measure: f64, s: f64, p: f64, d: usize) -> Result<f64> {
    check_exponents(s, p)?;
    if !(measure.is_finite() && measure > 0.0) || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "measure {measure} must be positive and d = {d} at least 1"
        )));
    }
    let (lo, hi) = ELEMENTARY_SCALES;
    Ok((lo..=hi)
        .map(|k| {
            let q = 2f64.powi(d as i32 * k);
            q.powf(s / p - s) * measure * measure.min(q).powf(s - 1.0)
        })
        .sum())
}

/// [`elementary_sum`] divided by `|Ω|^{s/p}`.
pub fn elementary_sum_check(measure: f64, s: f64, p: f64, d: usize) -> Result<f64> {
    Ok(elementary_sum(measure, s, p, d)? / measure.powf(s / p))
}
