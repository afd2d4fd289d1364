//! Strang split-step integration of `(i∂_t + ½Δ)u = μ|u|^{p-1}u` (physical
//! frame) and of its lens image
//! `(i∂_t + ½Δ - ½|x|²)v = μ|cos t|^α |v|^{p-1}v`, `α = (d/2)(p-1) - 2`,
//! plus ground states of `½ΔQ + Q^p = Q`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{classical_energy, harmonic_energy, pseudoconformal_energy};
use crate::grid::{DiagnosticsRecord, Field, Frame, GridSpec, C64};
use crate::propagators::free_multiplier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Defocusing,
    Focusing,
    /// Nonlinearity switched off.
    Linear,
}

impl Coupling {
    pub fn mu(self) -> f64 {
        match self {
            Coupling::Defocusing => 1.0,
            Coupling::Focusing => -1.0,
            Coupling::Linear => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub p: f64,
    pub coupling: Coupling,
    pub frame: Frame,
    pub d: usize,
}

impl EquationSpec {
    pub fn new(p: f64, coupling: Coupling, frame: Frame, d: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidArgument(format!("exponent p = {p} must exceed 1")));
        }
        if d != 1 && d != 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} not in {{1, 2}}")));
        }
        if frame == Frame::Lens && coupling != Coupling::Linear && weight_exponent(p, d) <= -1.0 {
            return Err(Error::NonIntegrableWeight { p, d });
        }
        Ok(Self { p, coupling, frame, d })
    }

    /// The mass-critical power `1 + 4/d`.
    pub fn critical_power(d: usize) -> f64 {
        1.0 + 4.0 / d as f64
    }

    pub fn mu(&self) -> f64 {
        self.coupling.mu()
    }

    pub fn alpha(&self) -> f64 {
        weight_exponent(self.p, self.d)
    }
}

/// `α = (d/2)(p - 1) - 2`.
pub fn weight_exponent(p: f64, d: usize) -> f64 {
    0.5 * d as f64 * (p - 1.0) - 2.0
}

/// `∫_t^{t+dt} |cos s|^α ds` (negative for `dt < 0`), finite across the
/// zeros of `cos` whenever `α > -1`.
pub fn weight_integral(t: f64, dt: f64, p: f64, d: usize) -> Result<f64> {
    let alpha = weight_exponent(p, d);
    if alpha <= -1.0 {
        return Err(Error::NonIntegrableWeight { p, d });
    }
    if !(t.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("window [{t}, {t} + {dt}]")));
    }
    if alpha == 0.0 || dt == 0.0 {
        return Ok(dt);
    }
    let (a, b, sign) = if dt > 0.0 { (t, t + dt, 1.0) } else { (t + dt, t, -1.0) };
    // Pieces between consecutive multiples of π/2 have one zero of cos at
    // most, at an endpoint; measured from it the weight is sin(δ)^α.
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let j = (lo / FRAC_PI_2).floor();
        let mut hi = ((j + 1.0) * FRAC_PI_2).min(b);
        if hi <= lo {
            hi = ((j + 2.0) * FRAC_PI_2).min(b);
        }
        let left = j * FRAC_PI_2;
        let right = (j + 1.0) * FRAC_PI_2;
        // the odd multiple of π/2 among the piece's endpoints
        let zero = if (j as i64).rem_euclid(2) == 1 { left } else { right };
        let d1 = (lo - zero).abs().min(FRAC_PI_2);
        let d2 = (hi - zero).abs().min(FRAC_PI_2);
        total += sine_power_integral(d1.min(d2), d1.max(d2), alpha);
        lo = hi;
    }
    Ok(sign * total)
}

/// `∫_{δ1}^{δ2} sin(δ)^α dδ` for `0 ≤ δ1 ≤ δ2 ≤ π/2`. The substitution
/// `w = δ^{1+α}` turns the integrand into the smooth `(sin δ/δ)^α/(1+α)`.
fn sine_power_integral(d1: f64, d2: f64, alpha: f64) -> f64 {
    if d2 <= d1 {
        return 0.0;
    }
    let e = 1.0 + alpha;
    let integrand = |w: f64| {
        let delta = w.powf(1.0 / e);
        let sinc = if delta < 1e-8 { 1.0 - delta * delta / 6.0 } else { delta.sin() / delta };
        sinc.powf(alpha) / e
    };
    quadrature::integrate(integrand, d1.powf(e), d2.powf(e), 1e-15).integral
}

/// Threshold on `|W|·max|u|^{p-1}` beyond which a step is refused.
const PHASE_OVERFLOW: f64 = 1e100;

/// One Strang step: half kinetic, pointwise phase
/// `e^{-i(μW|u|^{p-1} + V dt)}` with `W` the weight integral over the step
/// (`W = dt` in the physical frame) and `V = ½|x|²` in the lens frame, half
/// kinetic.
pub fn strang_step(f: &Field, t: f64, dt: f64, eq: &EquationSpec) -> Result<Field> {
    f.expect_frame(eq.frame)?;
    let half = free_multiplier(f, 0.5 * dt);
    let mu = eq.mu();
    let w = if mu == 0.0 {
        0.0
    } else if eq.frame == Frame::Lens {
        weight_integral(t, dt, eq.p, eq.d)?
    } else {
        dt
    };
    let exponent = eq.p - 1.0;
    if mu != 0.0 {
        let peak = half.sup_norm().powf(exponent) * w.abs();
        if !(peak.is_finite() && peak < PHASE_OVERFLOW) {
            return Err(Error::Overflow(peak));
        }
    }
    let lens = eq.frame == Frame::Lens;
    let g = *f.grid();
    let kicked = half.map(|i, u| {
        let mut phase = mu * w * u.norm().powf(exponent);
        if lens {
            phase += 0.5 * g.radius_sq(i) * dt;
        }
        u * C64::from_polar(1.0, -phase)
    });
    Ok(free_multiplier(&kicked, 0.5 * dt).at_time(t + dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adaptivity {
    /// Local error target (relative sup norm of the step-doubling estimate).
    pub tolerance: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for Adaptivity {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            dt_min: 1e-8,
            dt_max: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub sup_ceiling: f64,
    /// Largest spectral-mass fraction allowed outside the inner two thirds
    /// of the wavenumber lattice.
    pub spectral_tail: f64,
    pub boundary_margin: f64,
    pub boundary_threshold: f64,
    /// Steps between monitor evaluations.
    pub every: usize,
}

impl Default for Monitor {
    fn default() -> Self {
        Self {
            sup_ceiling: 1e6,
            spectral_tail: 1e-4,
            boundary_margin: 0.05,
            boundary_threshold: 1e-8,
            every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt: f64,
    pub adaptive: Option<Adaptivity>,
    /// Slice cadence; `None` records only the endpoints.
    pub output_every: Option<f64>,
    /// Cap on the per-step weight integral in the lens frame.
    pub weight_budget: Option<f64>,
    pub monitor: Monitor,
    pub diagnostics: bool,
}

impl StepControl {
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt,
            adaptive: None,
            output_every: None,
            weight_budget: None,
            monitor: Monitor::default(),
            diagnostics: true,
        }
    }

    pub fn with_output_every(mut self, cadence: f64) -> Self {
        self.output_every = Some(cadence);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SupCeiling,
    SpectralTail,
    BoundaryMass,
}

impl EventKind {
    /// Events that end the run.
    pub fn is_blowup(self) -> bool {
        matches!(self, EventKind::SupCeiling | EventKind::SpectralTail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub equation: EquationSpec,
    pub slices: Vec<Field>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub steps: Vec<f64>,
    pub rejected: usize,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn blowup(&self) -> Option<&Event> {
        self.events.iter().find(|e| e.kind.is_blowup())
    }

    /// No blow-up and no boundary contact.
    pub fn is_valid(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last(&self) -> &Field {
        self.slices.last().expect("trajectory holds its initial slice")
    }

    pub fn slice_at(&self, t: f64) -> Result<&Field> {
        crate::transforms::find_slice(&self.slices, t)
    }

    pub fn mass_drift(&self) -> f64 {
        drift(self.diagnostics.iter().map(|d| d.mass))
    }

    pub fn classical_energy_drift(&self) -> Option<f64> {
        drift_opt(self.diagnostics.iter().map(|d| d.classical_energy))
    }

    pub fn harmonic_energy_drift(&self) -> Option<f64> {
        drift_opt(self.diagnostics.iter().map(|d| d.harmonic_energy))
    }
}

/// `max |q - q₀| / max(|q₀|, 1e-300)`.
fn drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut worst: f64 = 0.0;
    for v in values {
        let q0 = *first.get_or_insert(v);
        worst = worst.max((v - q0).abs());
    }
    first.map_or(0.0, |q0: f64| worst / q0.abs().max(1e-300))
}

fn drift_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.map(|v| drift(v.into_iter()))
}

pub fn diagnostics(f: &Field, eq: &EquationSpec, dt: f64, margin: f64) -> Result<DiagnosticsRecord> {
    let mu = eq.mu();
    let (classical, pc, harmonic) = match f.frame() {
        Frame::Physical => (
            Some(classical_energy(f, eq.p, mu)),
            Some(pseudoconformal_energy(f, eq.p, mu)),
            None,
        ),
        Frame::Lens => (None, None, Some(harmonic_energy(f, eq.p, mu))),
    };
    Ok(DiagnosticsRecord {
        t: f.t(),
        mass: f.mass(),
        classical_energy: classical,
        harmonic_energy: harmonic,
        pseudoconformal_energy: pc,
        sup_norm: f.sup_norm(),
        boundary_mass_fraction: f.boundary_mass_fraction(margin)?,
        dt,
    })
}

/// Evolves `f0` (time stamp `t0`) to `t1`, landing exactly on every output
/// time. Blow-up indicators end the run early with an [`Event`]; boundary
/// contact is recorded once and the run continues (marked invalid).
pub fn evolve(f0: &Field, t1: f64, eq: &EquationSpec, control: &StepControl) -> Result<Trajectory> {
    f0.expect_frame(eq.frame)?;
    if f0.grid().dim() != eq.d {
        return Err(Error::InvalidArgument(format!(
            "equation d={} on a d={} grid",
            eq.d,
            f0.grid().dim()
        )));
    }
    if !(control.dt > 0.0 && control.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {}", control.dt)));
    }
    let t0 = f0.t();
    let span = t1 - t0;
    if !span.is_finite() {
        return Err(Error::InvalidArgument(format!("window [{t0}, {t1}]")));
    }
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let targets = output_times(t0, t1, control.output_every)?;
    let margin = control.monitor.boundary_margin;

    let mut traj = Trajectory {
        equation: *eq,
        slices: vec![f0.clone()],
        diagnostics: Vec::new(),
        steps: Vec::new(),
        rejected: 0,
        events: Vec::new(),
    };
    if control.diagnostics {
        traj.diagnostics.push(diagnostics(f0, eq, 0.0, margin)?);
    }
    let mut cur = f0.clone();
    let mut t = t0;
    let mut h_next = match control.adaptive {
        Some(a) => control.dt.clamp(a.dt_min, a.dt_max),
        None => control.dt,
    };
    let mut err_prev = control.adaptive.map_or(1.0, |a| a.tolerance);
    let mut since_check = 0usize;
    let mut boundary_flagged = false;

    for &target in &targets {
        while (target - t) * dir > 0.0 {
            let remaining = (target - t).abs();
            let mut h = h_next.min(remaining);
            if remaining - h < 1e-6 * h {
                h = remaining;
            }
            if let (Some(budget), Frame::Lens, true) =
                (control.weight_budget, eq.frame, eq.mu() != 0.0)
            {
                let floor = control.adaptive.map_or(1e-8, |a| a.dt_min);
                while h > floor && weight_integral(t, dir * h, eq.p, eq.d)?.abs() > budget {
                    h = (0.5 * h).max(floor);
                }
            }
            let (next, taken) = match control.adaptive {
                None => (strang_step(&cur, t, dir * h, eq)?, h),
                Some(a) => {
                    let (field, used, err) =
                        adaptive_step(&cur, t, dir * h, eq, &a, &mut traj.rejected)?;
                    let ratio = pi_factor(a.tolerance, err, err_prev);
                    err_prev = err.max(1e-16 * a.tolerance);
                    h_next = (used.abs() * ratio).clamp(a.dt_min, a.dt_max);
                    (field, used.abs())
                }
            };
            let lands = taken == remaining;
            let end = if lands { target } else { t + dir * taken };
            cur = next.at_time(end);
            traj.steps.push(end - t);
            t = end;

            since_check += 1;
            if since_check >= control.monitor.every.max(1) || lands {
                since_check = 0;
                if let Some(ev) = check_blowup(&cur, &control.monitor) {
                    traj.events.push(ev);
                    traj.slices.push(cur.clone());
                    if control.diagnostics {
                        traj.diagnostics.push(diagnostics(&cur, eq, taken, margin)?);
                    }
                    return Ok(traj);
                }
                let frac = cur.boundary_mass_fraction(margin)?;
                if !boundary_flagged && frac > control.monitor.boundary_threshold {
                    boundary_flagged = true;
                    traj.events.push(Event {
                        t,
                        kind: EventKind::BoundaryMass,
                        value: frac,
                        threshold: control.monitor.boundary_threshold,
                    });
                }
            }
        }
        traj.slices.push(cur.clone());
        if control.diagnostics {
            let last = traj.steps.last().copied().unwrap_or(0.0);
            traj.diagnostics.push(diagnostics(&cur, eq, last, margin)?);
        }
    }
    Ok(traj)
}

fn output_times(t0: f64, t1: f64, every: Option<f64>) -> Result<Vec<f64>> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    if let Some(c) = every {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("output cadence {c}")));
        }
        let count = (span.abs() / c * (1.0 + 1e-12)).floor() as usize;
        for k in 1..=count {
            let tk = t0 + span.signum() * c * k as f64;
            if (t1 - tk).abs() > 1e-12 * c {
                out.push(tk);
            }
        }
    }
    out.push(t1);
    Ok(out)
}

fn pi_factor(tol: f64, err: f64, err_prev: f64) -> f64 {
    if err <= 0.0 {
        return 5.0;
    }
    let f = 0.9 * (tol / err).powf(0.7 / 3.0) * (err_prev / tol).powf(0.4 / 3.0);
    f.clamp(0.2, 5.0)
}

/// Step doubling: compare one step with two half steps; accept the half
/// steps when the Richardson estimate `|u_{h/2} - u_h|/3` is within tolerance.
/// Returns the accepted field, the signed step taken and the error estimate.
fn adaptive_step(
    f: &Field,
    t: f64,
    dt: f64,
    eq: &EquationSpec,
    a: &Adaptivity,
    rejected: &mut usize,
) -> Result<(Field, f64, f64)> {
    let mut h = dt;
    loop {
        let full = strang_step(f, t, h, eq)?;
        let mid = strang_step(f, t, 0.5 * h, eq)?;
        let half = strang_step(&mid, t + 0.5 * h, 0.5 * h, eq)?;
        let scale = half.sup_norm().max(1e-300);
        let err = half.sup_distance(&full)? / (3.0 * scale);
        if err <= a.tolerance || h.abs() <= a.dt_min {
            return Ok((half, h, err));
        }
        *rejected += 1;
        let shrink = (0.9 * (a.tolerance / err).powf(1.0 / 3.0)).clamp(0.2, 0.9);
        h = h.signum() * (h.abs() * shrink).max(a.dt_min);
    }
}

fn check_blowup(f: &Field, m: &Monitor) -> Option<Event> {
    let sup = f.sup_norm();
    if !(sup <= m.sup_ceiling) {
        return Some(Event {
            t: f.t(),
            kind: EventKind::SupCeiling,
            value: sup,
            threshold: m.sup_ceiling,
        });
    }
    let tail = f.spectral_tail_fraction(2.0 / 3.0);
    if tail > m.spectral_tail {
        return Some(Event {
            t: f.t(),
            kind: EventKind::SpectralTail,
            value: tail,
            threshold: m.spectral_tail,
        });
    }
    None
}

/// Observed temporal order: errors of `dt` and `dt/2` runs measured against
/// the next halving, and their ratio (about 4 for a second-order scheme).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichardsonTriplet {
    pub coarse_error: f64,
    pub fine_error: f64,
    pub ratio: f64,
}

pub fn richardson_triplet(f0: &Field, t1: f64, eq: &EquationSpec, dt: f64) -> Result<RichardsonTriplet> {
    let run = |h: f64| -> Result<Field> {
        let mut c = StepControl::fixed(h);
        c.diagnostics = false;
        c.monitor.every = usize::MAX;
        Ok(evolve(f0, t1, eq, &c)?.last().clone())
    };
    let a = run(dt)?;
    let b = run(0.5 * dt)?;
    let c = run(0.25 * dt)?;
    let coarse_error = a.sup_distance(&b)?;
    let fine_error = b.sup_distance(&c)?;
    Ok(RichardsonTriplet {
        coarse_error,
        fine_error,
        ratio: coarse_error / fine_error,
    })
}

/// `Q(x) = 3^{1/4} sech^{1/2}(2√2 x)`, the positive solution of
/// `½Q'' + Q⁵ = Q` on the line.
pub fn ground_state_1d(grid: GridSpec) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("closed-form ground state is one-dimensional".into()));
    }
    let b = 2.0 * 2f64.sqrt();
    let a = 3f64.powf(0.25);
    Ok(Field::from_fn(grid, 0.0, Frame::Physical, |x| {
        C64::new(a / (b * x[0]).cosh().sqrt(), 0.0)
    }))
}

/// `M(Q) = √3 π / (2√2)` for the one-dimensional quintic ground state.
pub fn ground_state_mass_1d() -> f64 {
    3f64.sqrt() * PI / (2.0 * 2f64.sqrt())
}

/// Sup norm of `½ΔQ + |Q|^{p-1}Q - Q` with a spectral Laplacian.
pub fn ground_state_residual(q: &Field, p: f64) -> f64 {
    let lap = q.laplacian();
    q.values()
        .iter()
        .zip(lap.values())
        .map(|(u, l)| (0.5 * l + u * u.norm().powf(p - 1.0) - u).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 2000,
        }
    }
}

/// Positive, even solution of `½ΔQ + Q^p = Q` by Petviashvili iteration
/// `Q ← M^{p/(p-1)} (1 - ½Δ)^{-1} Q^p` with the stabilizing factor
/// `M = ⟨(1 - ½Δ)Q, Q⟩ / ⟨Q^p, Q⟩`, run until the sup residual is below
/// tolerance.
pub fn ground_state_numeric(grid: GridSpec, p: f64, opts: &GroundStateOptions) -> Result<Field> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {p}")));
    }
    let symbol: Vec<f64> = grid.wavenumber_sq().iter().map(|k| 1.0 + 0.5 * k).collect();
    let gamma = p / (p - 1.0);
    let mut q = Field::from_fn(grid, 0.0, Frame::Physical, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new(1.5 * (-r2).exp(), 0.0)
    });
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let qp = q.map(|_, u| C64::new(u.re.max(0.0).powf(p), 0.0));
        let q_hat = q.dft();
        let n_hat = qp.dft();
        let num: f64 = q_hat.iter().zip(&symbol).map(|(c, s)| c.norm_sqr() * s).sum();
        let den: f64 = q_hat.iter().zip(&n_hat).map(|(a, b)| (a.conj() * b).re).sum();
        if !(den > 0.0) {
            return Err(Error::NonConvergence { iterations: 0, residual });
        }
        let m = num / den;
        let next_hat: Vec<C64> = n_hat
            .iter()
            .zip(&symbol)
            .map(|(c, s)| c * (m.powf(gamma) / s))
            .collect();
        let next = q.from_dft(next_hat);
        // keep the iterate real and even
        let sym = next.add(&next.reflect())?.map(|_, u| C64::new(0.5 * u.re, 0.0));
        q = if grid.dim() == 2 { symmetrize_axes(&sym) } else { sym };
        residual = ground_state_residual(&q, p);
        if residual < opts.tolerance {
            return Ok(q);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn symmetrize_axes(f: &Field) -> Field {
    let n = f.grid().points_per_axis();
    let vals = f.values();
    f.map(|i, u| {
        let (a, b) = (i / n, i % n);
        0.5 * (u + vals[b * n + a])
    })
}
