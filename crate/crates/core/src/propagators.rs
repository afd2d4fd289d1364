//! Linear propagators: the free evolution `e^{itΔ/2}` as a Fourier
//! multiplier, the harmonic oscillator `e^{-itH}`, `H = -½Δ + ½|x|²`,
//! factored through the lens transform, and a direct Mehler-kernel
//! quadrature used as an independent reference.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::grid::{AliasPolicy, Field, Frame, C64};
use crate::spectral::for_each_line;
use crate::transforms::lens_forward;

/// Largest lens-time substep used when composing the harmonic propagator.
pub const MAX_HARMONIC_SUBSTEP: f64 = 0.7;

/// `e^{-i|ξ|²dt/2}` applied to the spectrum; frame and time stamp untouched.
pub(crate) fn free_multiplier(f: &Field, dt: f64) -> Field {
    if dt == 0.0 {
        return f.clone();
    }
    let mut coeffs = f.dft();
    let k2 = f.grid().wavenumber_sq();
    for (c, k) in coeffs.iter_mut().zip(k2.iter()) {
        *c *= C64::from_polar(1.0, -0.5 * k * dt);
    }
    f.from_dft(coeffs)
}

/// Free Schrödinger evolution `u(t + dt) = e^{i dt Δ/2} u(t)`.
pub fn free_propagate(f: &Field, dt: f64) -> Result<Field> {
    f.expect_frame(Frame::Physical)?;
    let t = f.t() + dt;
    Ok(free_multiplier(f, dt).at_time(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOptions {
    pub policy: AliasPolicy,
    /// Realize multiples of `π/2` exactly (Fourier transform / reflection)
    /// instead of composing lens substeps.
    pub exact_quarters: bool,
    pub max_substep: f64,
}

impl Default for HarmonicOptions {
    fn default() -> Self {
        Self {
            policy: AliasPolicy::default(),
            exact_quarters: true,
            max_substep: MAX_HARMONIC_SUBSTEP,
        }
    }
}

/// Harmonic-oscillator evolution by `dt` in lens time.
pub fn harmonic_propagate(f: &Field, dt: f64) -> Result<Field> {
    harmonic_propagate_with(f, dt, &HarmonicOptions::default())
}

pub fn harmonic_propagate_with(f: &Field, dt: f64, opts: &HarmonicOptions) -> Result<Field> {
    f.expect_frame(Frame::Lens)?;
    if !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step {dt}")));
    }
    if !(opts.max_substep > 0.0 && opts.max_substep < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("substep {}", opts.max_substep)));
    }
    let t_end = f.t() + dt;
    let d = f.grid().dim() as f64;
    if !opts.exact_quarters {
        return Ok(compose_substeps(f, dt, opts)?.at_time(t_end));
    }
    // P(2π) = e^{-iπd}·id: whole periods contribute a sign for odd d.
    let periods = (dt / TAU).round();
    let rest = dt - periods * TAU;
    let quarters = (rest / FRAC_PI_2).round();
    let rem = rest - quarters * FRAC_PI_2;
    let mut out = compose_substeps(f, rem, opts)?;
    let grid = *out.grid();
    out = match quarters as i64 {
        0 => out,
        1 => out
            .fourier_onto(&grid, false)?
            .scaled(C64::from_polar(1.0, -0.25 * PI * d)),
        -1 => out
            .fourier_onto(&grid, true)?
            .scaled(C64::from_polar(1.0, 0.25 * PI * d)),
        2 => out.reflect().scaled(C64::from_polar(1.0, -0.5 * PI * d)),
        -2 => out.reflect().scaled(C64::from_polar(1.0, 0.5 * PI * d)),
        q => unreachable!("quarter count {q} after reduction"),
    };
    let out = out.scaled(C64::from_polar(1.0, -PI * d * periods));
    Ok(out.at_time(t_end))
}

fn compose_substeps(f: &Field, dt: f64, opts: &HarmonicOptions) -> Result<Field> {
    if dt == 0.0 {
        return Ok(f.clone());
    }
    let count = (dt.abs() / opts.max_substep).ceil().max(1.0) as usize;
    let h = dt / count as f64;
    let mut cur = f.clone();
    for _ in 0..count {
        cur = lens_substep(&cur, h, &opts.policy)?;
    }
    Ok(cur)
}

/// `P(τ)v = L[e^{i tan τ Δ/2} v](τ)` for `|τ| < π/2`.
fn lens_substep(v: &Field, tau: f64, policy: &AliasPolicy) -> Result<Field> {
    let t0 = v.t();
    let data = v.clone().in_frame(Frame::Physical).at_time(0.0);
    let evolved = free_propagate(&data, tau.tan())?;
    Ok(lens_forward(&evolved, policy)?.at_time(t0 + tau))
}

/// Harmonic-oscillator kernel variants for the quadrature reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MehlerKernel {
    /// `e^{-iπ/4} e^{-iπ⌊t/π⌋/2} (2π|sin t|)^{-1/2}
    ///  exp(i[(x²+y²)cos t - 2xy]/(2 sin t))` per axis.
    Harmonic,
    /// Same prefactor with the phase `exp(i|x-y|²/(2 tan t))`.
    DifferenceForm,
}

/// Smallest `|sin t|` at which the quadrature oracle is evaluated.
pub const MEHLER_MIN_SIN: f64 = 0.1;

/// Direct `O(N²)`-per-line trapezoid quadrature of the oscillator kernel,
/// applied axis by axis (the kernel factorizes).
pub fn mehler_quadrature(f: &Field, dt: f64, kernel: MehlerKernel) -> Result<Field> {
    f.expect_frame(Frame::Lens)?;
    let (s, c) = dt.sin_cos();
    if s.abs() < MEHLER_MIN_SIN {
        return Err(Error::SingularTime(dt));
    }
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let x = grid.coords();
    let tan = s / c;
    let prefactor = C64::from_polar(
        (2.0 * PI * s.abs()).powf(-0.5) * grid.dx(),
        -0.25 * PI - 0.5 * PI * (dt / PI).floor(),
    );
    let mut matrix = vec![C64::new(0.0, 0.0); n * n];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in x.iter().enumerate() {
            let phase = match kernel {
                MehlerKernel::Harmonic => ((xi * xi + yj * yj) * c - 2.0 * xi * yj) / (2.0 * s),
                MehlerKernel::DifferenceForm => (xi - yj).powi(2) / (2.0 * tan),
            };
            matrix[i * n + j] = prefactor * C64::from_polar(1.0, phase);
        }
    }
    let mut values = f.values().to_vec();
    for axis in 0..grid.dim() {
        for_each_line(&mut values, n, grid.dim(), axis, |line| {
            let input = line.to_vec();
            for (i, slot) in line.iter_mut().enumerate() {
                let row = &matrix[i * n..(i + 1) * n];
                *slot = row.iter().zip(input.iter()).map(|(k, v)| k * v).sum();
            }
        });
    }
    Field::new(grid, values, f.t() + dt, Frame::Lens)
}
