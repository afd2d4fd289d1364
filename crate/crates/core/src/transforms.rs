//! Lens and pseudoconformal transforms, the conjugated time translation,
//! Galilean boosts, and the symmetry group acting on initial data.
//!
//! Each operator is a composition of [`Field::dilate`], an amplitude factor
//! and [`Field::apply_chirp`], so aliasing errors from the grid surface as
//! [`Error::Aliasing`] / [`Error::ChirpAliasing`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AliasPolicy, Field, Frame, C64};
use crate::propagators::free_multiplier;

/// Largest lens time the transforms accept; `1/cos τ` diverges at `π/2`.
pub const TAU_MAX: f64 = 1.45;

/// Physical time `T` and the matching lens time `τ = arctan T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensTimePair {
    pub physical: f64,
    pub lens: f64,
}

impl LensTimePair {
    pub fn from_physical(t: f64) -> Self {
        Self {
            physical: t,
            lens: t.atan(),
        }
    }

    pub fn from_lens(tau: f64) -> Result<Self> {
        if !(tau.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Domain(format!("lens time {tau} outside (-π/2, π/2)")));
        }
        Ok(Self {
            physical: tau.tan(),
            lens: tau,
        })
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.abs() > TAU_MAX {
        return Err(Error::Domain(format!(
            "lens time {tau:.6} beyond the cap ±{TAU_MAX}"
        )));
    }
    Ok(())
}

/// `Lu(τ, x) = cos^{-d/2}τ · u(tan τ, x/cos τ) · e^{-i|x|² tan τ/2}` for a
/// physical slice at `t = tan τ`.
pub fn lens_forward(f: &Field, policy: &AliasPolicy) -> Result<Field> {
    f.expect_frame(Frame::Physical)?;
    let t = f.t();
    let tau = t.atan();
    check_tau(tau)?;
    let c = tau.cos();
    let d = f.grid().dim() as f64;
    let out = f
        .dilate(c, policy)?
        .scaled(C64::new(c.powf(-0.5 * d), 0.0))
        .apply_chirp(-t, policy)?;
    Ok(out.at_time(tau).in_frame(Frame::Lens))
}

/// `L⁻¹v(t, x) = (1+t²)^{-d/4} v(arctan t, x/√(1+t²)) e^{i|x|²t/2(1+t²)}`
/// for a lens slice at `τ = arctan t`.
pub fn lens_inverse(v: &Field, policy: &AliasPolicy) -> Result<Field> {
    v.expect_frame(Frame::Lens)?;
    let tau = v.t();
    check_tau(tau)?;
    let t = tau.tan();
    let s = 1.0 + t * t;
    let d = v.grid().dim() as f64;
    let out = v
        .dilate(s.sqrt(), policy)?
        .scaled(C64::new(s.powf(-0.25 * d), 0.0))
        .apply_chirp(t / s, policy)?;
    Ok(out.at_time(t).in_frame(Frame::Physical))
}

/// `u_pc(s, x) = |s|^{-d/2} u(-1/s, x/|s|) e^{i|x|²/2s}`, mapping a slice at
/// `t` to one at `s = -1/t`.
///
/// The spatial argument uses `x/|s|`; the variant `x/s` differs by the
/// reflection `x ↦ -x` for `s < 0` and squares to that reflection instead
/// of the identity.
pub fn pseudoconformal(f: &Field, policy: &AliasPolicy) -> Result<Field> {
    f.expect_frame(Frame::Physical)?;
    let t = f.t();
    if t == 0.0 {
        return Err(Error::Domain("pseudoconformal transform undefined at t = 0".into()));
    }
    let s = -1.0 / t;
    let d = f.grid().dim() as f64;
    let out = f
        .dilate(s.abs(), policy)?
        .scaled(C64::new(s.abs().powf(-0.5 * d), 0.0))
        .apply_chirp(1.0 / s, policy)?;
    Ok(out.at_time(s))
}

/// Sup-norm gap between `L(u_pc)(τ)` and `Lu(τ')`, with `τ' ≡ τ + π/2 (mod π)`
/// taken in `(-π/2, π/2)`. Both sides come from the physical slice at
/// `t = -cot τ`, which must be present in `slices` (matched to 1e-9).
pub fn pc_lens_conjugation_residual(
    slices: &[Field],
    tau: f64,
    policy: &AliasPolicy,
) -> Result<f64> {
    if tau == 0.0 || tau.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::Domain(format!("conjugation check needs 0 < |τ| < π/2, got {tau}")));
    }
    let target = -1.0 / tau.tan();
    let slice = find_slice(slices, target)?;
    let lhs = lens_forward(&pseudoconformal(slice, policy)?, policy)?;
    let rhs = lens_forward(slice, policy)?;
    let gap = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(gap)
}

pub(crate) fn find_slice(slices: &[Field], t: f64) -> Result<&Field> {
    let tol = 1e-9 * t.abs().max(1.0);
    slices.iter().find(|s| (s.t() - t).abs() <= tol).ok_or_else(|| {
        let start = slices.first().map_or(f64::NAN, Field::t);
        let end = slices.last().map_or(f64::NAN, Field::t);
        Error::Window {
            requested: t,
            start,
            end,
        }
    })
}

/// The invariance of the pseudoconformal-power equation obtained by
/// conjugating lens-time translation by `arctan s`: given a slice at `t'`,
/// returns the transformed solution at `t = (t' + s)/(1 - t's)`:
///
/// `ũ(t,x) = (1+s²)^{d/4} (1+ts)^{-d/2} u(t', x√(1+s²)/(1+ts)) e^{i|x|²s/2(1+ts)}`.
///
/// Requires `1 - t's > 0` (equivalently `1 + ts > 0`), i.e. the shifted lens
/// time stays inside the fundamental window.
pub fn conjugated_time_translation(f: &Field, s: f64, policy: &AliasPolicy) -> Result<Field> {
    f.expect_frame(Frame::Physical)?;
    if s == 0.0 {
        return Ok(f.clone());
    }
    let tp = f.t();
    let den = 1.0 - tp * s;
    if !(den > 0.0) {
        return Err(Error::Domain(format!(
            "1 + ts <= 0 for t' = {tp}, s = {s}: shifted lens time leaves (-π/2, π/2)"
        )));
    }
    let t = (tp + s) / den;
    let q = 1.0 + t * s;
    let r = (1.0 + s * s).sqrt();
    let d = f.grid().dim() as f64;
    let out = f
        .dilate(q / r, policy)?
        .scaled(C64::new(r.powf(0.5 * d) * q.powf(-0.5 * d), 0.0))
        .apply_chirp(s / q, policy)?;
    Ok(out.at_time(t))
}

/// Galilean boost of a physical slice at time `t`:
/// `e^{i(v·x - |v|²t/2)} u(t, x - vt)`.
pub fn galilean_boost(f: &Field, v: &[f64]) -> Result<Field> {
    f.expect_frame(Frame::Physical)?;
    let t = f.t();
    let shift: Vec<f64> = v.iter().map(|vi| vi * t).collect();
    let v2: f64 = v.iter().map(|vi| vi * vi).sum();
    Ok(f.translate(&shift)?
        .modulate(v)?
        .scaled(C64::from_polar(1.0, -0.5 * v2 * t)))
}

pub fn galilean_boost_trajectory(slices: &[Field], v: &[f64]) -> Result<Vec<Field>> {
    slices.iter().map(|s| galilean_boost(s, v)).collect()
}

/// Parameters of one element of the symmetry group acting on `L²(R^d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryElement {
    pub x0: Vec<f64>,
    pub theta: f64,
    pub lambda: f64,
    pub t0: f64,
    pub v: Vec<f64>,
}

impl SymmetryElement {
    pub fn identity(d: usize) -> Self {
        Self {
            x0: vec![0.0; d],
            theta: 0.0,
            lambda: 1.0,
            t0: 0.0,
            v: vec![0.0; d],
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.x0.len() != d || self.v.len() != d {
            return Err(Error::InvalidArgument(format!(
                "symmetry element vectors must have {d} components"
            )));
        }
        let finite = self.x0.iter().chain(self.v.iter()).all(|c| c.is_finite())
            && self.theta.is_finite()
            && self.t0.is_finite()
            && self.lambda.is_finite();
        if !finite || !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid symmetry element {self:?}")));
        }
        Ok(())
    }
}

/// `g·f = e^{iθ} e^{iv·x} [λ^{-d/2} (e^{-it₀Δ/2} f)(·/λ)](x - x₀)`, i.e.
/// time translation first, then scaling, translation (periodic), modulation
/// and phase. Grid, time stamp and frame tag are kept.
pub fn apply_symmetry(g: &SymmetryElement, f: &Field, policy: &AliasPolicy) -> Result<Field> {
    let d = f.grid().dim();
    g.validate(d)?;
    let evolved = free_multiplier(f, -g.t0);
    let scaled = evolved
        .dilate(g.lambda, policy)?
        .scaled(C64::new(g.lambda.powf(-0.5 * d as f64), 0.0));
    Ok(scaled
        .translate(&g.x0)?
        .modulate(&g.v)?
        .scaled(C64::from_polar(1.0, g.theta)))
}
