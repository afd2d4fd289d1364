//! Fourier restriction to dyadic cubes of the wave-index lattice and the
//! close-pair (Whitney) decomposition of `u²`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dyadic::{DyadicCube, MAX_SCALE};
use crate::error::{Error, Result};
use crate::functionals::diagonal_exponent;
use crate::grid::{Field, GridSpec, C64};

/// Coefficients below this fraction of the largest are transform roundoff
/// and carry no pair.
pub const MODE_FLOOR: f64 = 1e-13;

/// Integer wave index of each FFT-ordered coefficient.
pub fn lattice_point(grid: &GridSpec, flat: usize) -> Vec<i64> {
    let idx = grid.unflatten(flat);
    (0..grid.dim()).map(|a| grid.wave_index(idx[a])).collect()
}

/// `1_Q û`: the part of `f` whose wave indices lie in `Q`. An empty
/// intersection gives the zero field.
pub fn freq_restrict(f: &Field, q: &DyadicCube) -> Result<Field> {
    let g = f.grid();
    if q.dim() != g.dim() {
        return Err(Error::InvalidArgument(format!(
            "cube dimension {} on a {}-d grid",
            q.dim(),
            g.dim()
        )));
    }
    let mut coeffs = f.dft();
    for (flat, c) in coeffs.iter_mut().enumerate() {
        if !q.contains(&lattice_point(g, flat)) {
            *c = C64::new(0.0, 0.0);
        }
    }
    Ok(f.from_dft(coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearOptions {
    /// Inclusive scale range reported in the table; the reconstruction
    /// always uses every scale.
    pub scales: Option<(i32, i32)>,
    /// Free evolution window `[0, window]` for the spacetime norms.
    pub window: f64,
    /// Time slices in the window (trapezoid rule).
    pub slices: usize,
}

impl Default for BilinearOptions {
    fn default() -> Self {
        Self {
            scales: None,
            window: 0.5,
            slices: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearEntry {
    pub cube: DyadicCube,
    pub partner: DyadicCube,
    /// `‖u_Q u_{Q'}‖` in `L^{(d+2)/d}_{t,x}` over the window.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearTable {
    pub exponent: f64,
    /// Unordered close pairs with both restrictions nonzero; each stands for
    /// the two ordered pairs of the decomposition.
    pub entries: Vec<BilinearEntry>,
    /// Close pairs over all scales (not only the reported range).
    pub pair_count: usize,
    /// `sup |u² - Σ_close u_Q u_{Q'}|` at the initial time.
    pub residual: f64,
    /// `sup |Σ_ξ u_ξ²|`, the coincident-frequency part the close pairs omit.
    pub diagonal: f64,
    /// `sup |u² - Σ_close u_Q u_{Q'} - Σ_ξ u_ξ²|`.
    pub off_diagonal_residual: f64,
}

/// Close-pair table for `f` together with the reconstruction check of
/// `u² = Σ_{Q,Q' close} u_Q u_{Q'}` on the lattice.
pub fn whitney_bilinear_table(f: &Field, opts: &BilinearOptions) -> Result<BilinearTable> {
    if opts.slices < 3 {
        return Err(Error::Cadence(format!(
            "{} time slice(s); the spacetime norm needs at least 3",
            opts.slices
        )));
    }
    if !(opts.window.is_finite() && opts.window > 0.0) {
        return Err(Error::InvalidArgument(format!("window {} must be positive", opts.window)));
    }
    let grid = *f.grid();
    let d = grid.dim();
    let n = grid.points_per_axis();
    let exponent = 0.5 * diagonal_exponent(d);
    let coeffs = f.dft();
    let k2 = grid.wavenumber_sq();
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let modes: Vec<(usize, Vec<i64>)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > MODE_FLOOR * peak)
        .map(|(flat, _)| (flat, lattice_point(&grid, flat)))
        .collect();
    let times: Vec<f64> = (0..opts.slices)
        .map(|i| opts.window * i as f64 / (opts.slices - 1) as f64)
        .collect();

    let square: Vec<C64> = f.values().iter().map(|v| v * v).collect();
    let mut sum = vec![C64::new(0.0, 0.0); grid.len()];
    let mut entries = Vec::new();
    let mut pair_count = 0usize;
    let top = (usize::BITS - n.leading_zeros()) as i32;

    for k in -1..=top.min(MAX_SCALE - 1) {
        let mut groups: BTreeMap<DyadicCube, Vec<usize>> = BTreeMap::new();
        for (flat, xi) in &modes {
            groups
                .entry(DyadicCube::containing(xi, k)?)
                .or_default()
                .push(*flat);
        }
        let report = opts.scales.is_none_or(|(lo, hi)| (lo..=hi).contains(&k));
        let piece = |cube: &DyadicCube, t: f64| -> Field {
            let mut c = vec![C64::new(0.0, 0.0); grid.len()];
            for &flat in &groups[cube] {
                c[flat] = coeffs[flat] * C64::from_polar(1.0, -0.5 * k2[flat] * t);
            }
            f.from_dft(c)
        };
        for cube in groups.keys() {
            for partner in cube.close_partners() {
                if partner <= *cube || !groups.contains_key(&partner) {
                    continue;
                }
                pair_count += 1;
                let a = piece(cube, 0.0);
                let b = piece(&partner, 0.0);
                for (s, (x, y)) in sum.iter_mut().zip(a.values().iter().zip(b.values())) {
                    *s += 2.0 * x * y;
                }
                if report {
                    let norm = spacetime_norm(&times, exponent, grid.cell_volume(), |t| {
                        let (a, b) = (piece(cube, t), piece(&partner, t));
                        a.values()
                            .iter()
                            .zip(b.values())
                            .map(|(x, y)| x * y)
                            .collect()
                    });
                    entries.push(BilinearEntry {
                        cube: cube.clone(),
                        partner,
                        norm,
                    });
                }
            }
        }
    }

    // Σ_ξ (ĉ_ξ e_ξ)² lives at the doubled wave index.
    let mut doubled = vec![C64::new(0.0, 0.0); grid.len()];
    let scale = 1.0 / grid.len() as f64;
    for (flat, xi) in &modes {
        let target = xi
            .iter()
            .fold(0usize, |acc, &k| acc * n + (2 * k).rem_euclid(n as i64) as usize);
        doubled[target] += coeffs[*flat] * coeffs[*flat] * scale;
    }
    let diagonal_field = f.from_dft(doubled);

    let mut residual = 0.0f64;
    let mut diagonal = 0.0f64;
    let mut off = 0.0f64;
    for ((sq, s), dg) in square.iter().zip(&sum).zip(diagonal_field.values()) {
        residual = residual.max((sq - s).norm());
        diagonal = diagonal.max(dg.norm());
        off = off.max((sq - s - dg).norm());
    }
    Ok(BilinearTable {
        exponent,
        entries,
        pair_count,
        residual,
        diagonal,
        off_diagonal_residual: off,
    })
}

fn spacetime_norm<F: FnMut(f64) -> Vec<C64>>(times: &[f64], q: f64, cell: f64, mut at: F) -> f64 {
    let vals: Vec<f64> = times
        .iter()
        .map(|&t| at(t).iter().map(|v| v.norm().powf(q)).sum::<f64>() * cell)
        .collect();
    let integral: f64 = times
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    integral.powf(1.0 / q)
}
