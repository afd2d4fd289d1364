//! Energies and spacetime norms. Derivatives are spectral throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AliasPolicy, Field, Frame};
use crate::solver::weight_exponent;
use crate::transforms::lens_forward;

/// `∫|u|^{p+1} dx`.
pub fn power_integral(f: &Field, p: f64) -> f64 {
    let s: f64 = f.values().iter().map(|v| v.norm().powf(p + 1.0)).sum();
    s * f.grid().cell_volume()
}

/// `∫|x|²|u|² dx`.
pub fn variance_integral(f: &Field) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| g.radius_sq(i) * v.norm_sqr())
        .sum();
    s * g.cell_volume()
}

/// Coefficient of `∫|u|^{p+1}` in the Hamiltonian of
/// `i∂ₜu + ½Δu = μ|u|^{p-1}u` when the kinetic term is `½∫|∇u|²`.
pub fn potential_coefficient(p: f64, mu: f64) -> f64 {
    2.0 * mu / (p + 1.0)
}

/// `∫ ½|∇u|² + 2μ/(p+1)|u|^{p+1}`.
pub fn classical_energy(f: &Field, p: f64, mu: f64) -> f64 {
    let mut e = 0.5 * f.kinetic_integral();
    if mu != 0.0 {
        e += potential_coefficient(p, mu) * power_integral(f, p);
    }
    e
}

/// `∫ ½|(x + iT∇)u|² + 2μT²/(p+1)|u|^{p+1}` with `T` the slice time.
pub fn pseudoconformal_energy(f: &Field, p: f64, mu: f64) -> f64 {
    let g = f.grid();
    let t = f.t();
    let mut s = 0.0;
    for axis in 0..g.dim() {
        let grad = f.gradient(axis);
        s += f
            .values()
            .iter()
            .zip(grad.values())
            .enumerate()
            .map(|(i, (u, du))| {
                let x = g.point(i)[axis];
                (u * x + du * crate::grid::C64::new(0.0, t)).norm_sqr()
            })
            .sum::<f64>();
    }
    let mut e = 0.5 * s * g.cell_volume();
    if mu != 0.0 {
        e += potential_coefficient(p, mu) * t * t * power_integral(f, p);
    }
    e
}

/// `∫ ½|∇v|² + ½|x|²|v|² + 2μ/(p+1)|cos τ|^α|v|^{p+1}` with `τ` the slice
/// time and `α = (d/2)(p-1) - 2`.
pub fn harmonic_energy(f: &Field, p: f64, mu: f64) -> f64 {
    let mut e = 0.5 * f.kinetic_integral() + 0.5 * variance_integral(f);
    if mu != 0.0 {
        let alpha = weight_exponent(p, f.grid().dim());
        let w = if alpha == 0.0 { 1.0 } else { f.t().cos().abs().powf(alpha) };
        e += potential_coefficient(p, mu) * w * power_integral(f, p);
    }
    e
}

/// The three energies at one matched slice and the relative gap of the
/// identity `harmonic(Lu(τ)) = classical(u(T)) + pseudoconformal(u(T))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecomposition {
    pub tau: f64,
    pub harmonic: f64,
    pub classical: f64,
    pub pseudoconformal: f64,
    pub residual: f64,
}

pub fn energy_decomposition(
    u: &Field,
    p: f64,
    mu: f64,
    policy: &AliasPolicy,
) -> Result<EnergyDecomposition> {
    u.expect_frame(Frame::Physical)?;
    let v = lens_forward(u, policy)?;
    let harmonic = harmonic_energy(&v, p, mu);
    let classical = classical_energy(u, p, mu);
    let pseudoconformal = pseudoconformal_energy(u, p, mu);
    let residual = (harmonic - classical - pseudoconformal).abs() / harmonic.abs().max(1.0);
    Ok(EnergyDecomposition {
        tau: v.t(),
        harmonic,
        classical,
        pseudoconformal,
        residual,
    })
}

/// Decomposition residual at lens time `τ`, using the slice `u(tan τ)` from
/// a physical trajectory.
pub fn energy_decomposition_residual(
    slices: &[Field],
    tau: f64,
    p: f64,
    mu: f64,
    policy: &AliasPolicy,
) -> Result<f64> {
    let slice = crate::transforms::find_slice(slices, tau.tan())?;
    Ok(energy_decomposition(slice, p, mu, policy)?.residual)
}

const ADMISSIBLE_TOL: f64 = 1e-12;

/// `2 ≤ q, r ≤ ∞`, `2/q + d/r = d/2`, `(d, q, r) ≠ (2, 2, ∞)`.
pub fn admissible(q: f64, r: f64, d: usize) -> bool {
    if q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 {
        return false;
    }
    let df = d as f64;
    let lhs = 2.0 / q + df / r;
    if (lhs - 0.5 * df).abs() > ADMISSIBLE_TOL {
        return false;
    }
    !(d == 2 && q == 2.0 && r.is_infinite())
}

/// The diagonal exponent `2(d+2)/d`.
pub fn diagonal_exponent(d: usize) -> f64 {
    2.0 * (d as f64 + 2.0) / d as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub q: f64,
    pub r: f64,
    pub window: (f64, f64),
    pub value: f64,
    /// `|N_h - N_{2h}|/3` from the same slices at half cadence, when the
    /// slice count allows it.
    pub quadrature_estimate: Option<f64>,
}

/// `‖u‖_{L^q_t L^r_x}` over the slice window by the composite trapezoid
/// rule in time (`q = ∞` takes the sup). Inadmissible pairs are rejected
/// unless `allow_inadmissible`.
pub fn strichartz_norm(
    slices: &[Field],
    q: f64,
    r: f64,
    allow_inadmissible: bool,
) -> Result<NormReport> {
    if slices.len() < 2 {
        return Err(Error::Cadence(format!("{} slice(s); need at least 2", slices.len())));
    }
    let d = slices[0].grid().dim();
    if !allow_inadmissible && !admissible(q, r, d) {
        return Err(Error::InvalidArgument(format!("(q, r) = ({q}, {r}) not admissible in d={d}")));
    }
    if slices.windows(2).any(|w| !(w[1].t() > w[0].t())) {
        return Err(Error::Cadence("slice times must increase strictly".into()));
    }
    let times: Vec<f64> = slices.iter().map(Field::t).collect();
    let norms = slices
        .iter()
        .map(|s| s.lp_norm(r))
        .collect::<Result<Vec<f64>>>()?;
    let value = time_norm(&times, &norms, q);
    let quadrature_estimate = if slices.len() >= 3 && slices.len() % 2 == 1 {
        let t2: Vec<f64> = times.iter().step_by(2).copied().collect();
        let n2: Vec<f64> = norms.iter().step_by(2).copied().collect();
        Some((value - time_norm(&t2, &n2, q)).abs() / 3.0)
    } else {
        None
    };
    Ok(NormReport {
        q,
        r,
        window: (times[0], times[times.len() - 1]),
        value,
        quadrature_estimate,
    })
}

fn time_norm(times: &[f64], norms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return norms.iter().copied().fold(0.0, f64::max);
    }
    let integral: f64 = times
        .windows(2)
        .zip(norms.windows(2))
        .map(|(t, n)| 0.5 * (t[1] - t[0]) * (n[0].powf(q) + n[1].powf(q)))
        .sum();
    integral.powf(1.0 / q)
}
