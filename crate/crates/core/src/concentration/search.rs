//! Free Strichartz norm through the lens frame and the search for a
//! symmetry-group element with large overlap.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{diagonal_exponent, variance_integral};
use crate::grid::{AliasPolicy, Field, Frame, GridSpec, C64};
use crate::propagators::{harmonic_propagate_with, HarmonicOptions};
use crate::transforms::{apply_symmetry, SymmetryElement};

/// Orbit points whose spread times this exceeds the half box or the
/// Nyquist wavenumber are skipped by the coarse pass.
const RESOLVED_SPREADS: f64 = 5.0;

/// Tail fraction above which a windowed Strichartz value is flagged.
pub const STRICHARTZ_TAIL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrichartzOptions {
    /// Quadrature nodes in lens time.
    pub nodes: usize,
    /// Lens substep of the harmonic propagator. Each substep contracts the
    /// box by `cos τ`, so broadband data needs short ones.
    pub max_substep: f64,
    pub policy: AliasPolicy,
}

impl Default for StrichartzOptions {
    fn default() -> Self {
        Self {
            nodes: 128,
            max_substep: 0.25,
            policy: AliasPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    /// `q = r = 2(d+2)/d`.
    pub exponent: f64,
    /// Physical half-window `T` (`None`: the whole line).
    pub window: Option<f64>,
    /// `‖e^{itΔ/2}u₀‖` in `L^q_{t,x}` over `[-T, T]`.
    pub value: f64,
    /// The same over the whole line.
    pub full_line: f64,
    /// Share of `∫∫|u|^q` outside the window.
    pub tail_fraction: f64,
    pub tail_ok: bool,
}

/// `‖e^{itΔ/2}u₀‖_{L^q_{t,x}}` at the diagonal exponent. The lens transform
/// maps `t ∈ R` to `τ ∈ (-π/2, π/2)` preserving this norm, and the free flow
/// to the harmonic one started from `u₀`, whose `L^q_x` norm is `π`-periodic.
/// The full line is a periodic trapezoid sum; a window `[-T, T]` uses
/// composite Simpson on `|τ| ≤ atan T`.
pub fn linear_strichartz(
    u0: &Field,
    window: Option<f64>,
    opts: &StrichartzOptions,
) -> Result<StrichartzReport> {
    u0.expect_frame(Frame::Physical)?;
    if let Some(t) = window {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("window {t} must be positive")));
        }
    }
    let nodes = opts.nodes.max(8).next_multiple_of(2);
    check_phase_space(u0, &opts.policy)?;
    let q = diagonal_exponent(u0.grid().dim());
    let start = u0.clone().in_frame(Frame::Lens).at_time(0.0);
    let hopts = HarmonicOptions {
        policy: opts.policy,
        max_substep: opts.max_substep,
        ..HarmonicOptions::default()
    };
    let integrand = |tau: f64| -> Result<f64> {
        let v = harmonic_propagate_with(&start, tau, &hopts)?;
        Ok(v.lp_norm(q)?.powf(q))
    };

    let h = PI / nodes as f64;
    let full: f64 = (0..nodes)
        .into_par_iter()
        .map(|j| integrand(-FRAC_PI_2 + j as f64 * h))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        * h;

    let windowed = match window {
        None => full,
        Some(t) => {
            let a = t.atan();
            let h = 2.0 * a / nodes as f64;
            let vals = (0..=nodes)
                .into_par_iter()
                .map(|j| integrand(-a + j as f64 * h))
                .collect::<Result<Vec<f64>>>()?;
            let inner: f64 = vals[1..nodes]
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
                .sum();
            (vals[0] + vals[nodes] + inner) * h / 3.0
        }
    };
    let tail_fraction = if full > 0.0 { ((full - windowed) / full).max(0.0) } else { 0.0 };
    Ok(StrichartzReport {
        exponent: q,
        window,
        value: windowed.powf(1.0 / q),
        full_line: full.powf(1.0 / q),
        tail_fraction,
        tail_ok: tail_fraction < STRICHARTZ_TAIL_TOLERANCE,
    })
}

/// The harmonic flow rotates phase space; content must fit in the disc of
/// radius `L/2` in both position and frequency.
fn check_phase_space(u0: &Field, policy: &AliasPolicy) -> Result<()> {
    let g = u0.grid();
    let half = 0.5 * g.length();
    let coeffs = u0.dft();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return Ok(());
    }
    let k = g.wavenumbers();
    let outside: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(flat, _)| {
            let idx = g.unflatten(*flat);
            (0..g.dim()).any(|a| k[idx[a]].abs() > half)
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    let frac = outside / total;
    if frac > policy.tolerance {
        return Err(Error::Aliasing {
            reason: format!("spectrum beyond |ξ| = L/2 = {half:.3}"),
            fraction: frac,
            tolerance: policy.tolerance,
        });
    }
    Ok(())
}

/// Profiles tested against the data.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `π^{-d/4} e^{-|x|²/2}`, evaluated in closed form along its orbit.
    Gaussian,
    /// A unit-mass profile, moved with [`apply_symmetry`].
    Sampled(Field),
}

impl Atom {
    /// `g·atom` on `grid` with `θ = 0`.
    pub fn orbit_point(&self, grid: &GridSpec, g: &SymmetryElement, policy: &AliasPolicy) -> Result<Field> {
        match self {
            Atom::Gaussian => Ok(gaussian_orbit_point(grid, g)),
            Atom::Sampled(f) => {
                if f.grid() != grid {
                    return Err(Error::InvalidArgument("atom and data grids differ".into()));
                }
                let g0 = SymmetryElement {
                    theta: 0.0,
                    ..g.clone()
                };
                apply_symmetry(&g0, f, policy)
            }
        }
    }

    /// Per-axis root-mean-square spread of `|f|²` in position and
    /// frequency.
    fn spreads(&self) -> (f64, f64) {
        match self {
            Atom::Gaussian => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            Atom::Sampled(f) => {
                let mass = f.mass().max(f64::MIN_POSITIVE) * f.grid().dim() as f64;
                let sx = (variance_integral(f) / mass).sqrt();
                let sk = (f.kinetic_integral() / mass).sqrt();
                (sx, sk)
            }
        }
    }
}

/// Spreads of `g·atom` for scale `λ` and time shift `t₀`.
fn orbit_spreads((sx, sk): (f64, f64), lambda: f64, t0: f64) -> (f64, f64) {
    (lambda * (sx * sx + sk * sk * t0 * t0).sqrt(), sk / lambda)
}

/// `e^{iv·x} λ^{-d/2} π^{-d/4} (1 - it₀)^{-d/2} exp(-|y|²/(2(1 - it₀)))`,
/// `y = (x - x₀)/λ`.
fn gaussian_orbit_point(grid: &GridSpec, g: &SymmetryElement) -> Field {
    let d = grid.dim() as f64;
    let z = C64::new(1.0, -g.t0);
    let amp = z.powf(-0.5 * d) * (g.lambda.powf(-0.5 * d) * PI.powf(-0.25 * d));
    let inv = 1.0 / (2.0 * z * g.lambda * g.lambda);
    Field::from_fn(*grid, 0.0, Frame::Physical, |x| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for (a, xa) in x.iter().enumerate() {
            let y = xa - g.x0[a];
            r2 += y * y;
            phase += g.v[a] * xa;
        }
        amp * (-inv * r2).exp() * C64::from_polar(1.0, phase)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Scale ladder for the coarse pass.
    pub lambdas: Vec<f64>,
    /// Time-translation grid for the coarse pass.
    pub t0s: Vec<f64>,
    /// Cap on evaluations: each coarse translation sweep (all `x₀` at once)
    /// and each simplex objective call counts as one.
    pub budget: usize,
    /// Coarse maxima refined by the simplex.
    pub refine: usize,
    pub simplex_iterations: u64,
    pub policy: AliasPolicy,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lambdas: (-4..=4).map(|k| 2f64.powi(k)).collect(),
            t0s: (-4..=4).map(f64::from).collect(),
            budget: 200_000,
            refine: 3,
            simplex_iterations: 400,
            policy: AliasPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub g: SymmetryElement,
    /// Index into the dictionary.
    pub atom: usize,
    /// `|⟨u₀, g·atom⟩|`.
    pub overlap: f64,
    /// `overlap / ‖u₀‖`.
    pub correlation: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone)]
struct Candidate {
    atom: usize,
    g: SymmetryElement,
    overlap: f64,
}

/// Lower bound for `sup_{g, atom} |⟨u₀, g·atom⟩|`: a coarse pass over the
/// scale ladder, the time grid and a frequency lattice, with every
/// translation at once by FFT cross-correlation, followed by Nelder–Mead on
/// `(x₀, v, ln λ, t₀)` from the best coarse points. `θ` is chosen to make
/// the overlap real and positive. Ties keep the first candidate found.
pub fn concentration_search(
    u0: &Field,
    dictionary: &[Atom],
    opts: &SearchOptions,
) -> Result<SearchReport> {
    u0.expect_frame(Frame::Physical)?;
    if dictionary.is_empty() {
        return Err(Error::InvalidArgument("empty dictionary".into()));
    }
    if opts.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0))
        || opts.t0s.iter().any(|t| !t.is_finite())
    {
        return Err(Error::InvalidArgument("scale ladder and time grid must be finite, scales positive".into()));
    }
    let norm = u0.mass().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero data".into()));
    }
    let grid = *u0.grid();
    let d = grid.dim();
    let half = 0.5 * grid.length();
    let nyquist = grid.nyquist();
    let dv = 2.0 * PI / grid.length();

    // coarse work list in a fixed order
    let mut work = Vec::new();
    for (ai, atom) in dictionary.iter().enumerate() {
        let spreads = atom.spreads();
        for &lambda in &opts.lambdas {
            for &t0 in &opts.t0s {
                let (wx, wk) = orbit_spreads(spreads, lambda, t0);
                if RESOLVED_SPREADS * wx > half || RESOLVED_SPREADS * wk > nyquist {
                    continue;
                }
                let m = (0.5 * wk / dv).round().max(1.0) as i64;
                let reach = ((nyquist - RESOLVED_SPREADS * wk) / dv).floor() as i64;
                let span = reach / m;
                let lattice: Vec<i64> = (-span..=span).map(|j| j * m).collect();
                work.push((ai, lambda, t0, lattice));
            }
        }
    }
    let sweeps: usize = work.iter().map(|w| w.3.len().pow(d as u32)).sum();
    let mut exhausted = false;
    let mut allowance = opts.budget;
    if sweeps > allowance {
        exhausted = true;
    }

    let spectrum = u0.dft();
    let n = grid.points_per_axis();
    let mut jobs = Vec::new();
    for (ai, lambda, t0, lattice) in &work {
        let count = lattice.len().pow(d as u32);
        if count > allowance {
            break;
        }
        allowance -= count;
        jobs.push((*ai, *lambda, *t0, lattice.clone()));
    }
    let mut evaluations = opts.budget - allowance;

    let per_job: Vec<Vec<Candidate>> = jobs
        .par_iter()
        .map(|(ai, lambda, t0, lattice)| {
            let g = SymmetryElement {
                lambda: *lambda,
                t0: *t0,
                ..SymmetryElement::identity(d)
            };
            let base = dictionary[*ai].orbit_point(&grid, &g, &opts.policy)?;
            let w_hat = base.dft();
            let mut best: Vec<Candidate> = Vec::new();
            for shift in lattice_points(lattice, d) {
                // spectrum of u₀·e^{-iv·x} with v = shift·2π/L
                let mut prod = vec![C64::new(0.0, 0.0); grid.len()];
                for (flat, slot) in prod.iter_mut().enumerate() {
                    let idx = grid.unflatten(flat);
                    let mut src = 0usize;
                    let mut sign = 0i64;
                    for a in 0..d {
                        let s = (idx[a] as i64 + shift[a]).rem_euclid(n as i64) as usize;
                        src = src * n + s;
                        sign += shift[a];
                    }
                    let parity = if sign.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    *slot = spectrum[src] * w_hat[flat].conj() * parity;
                }
                let corr = u0.from_dft(prod);
                let (m, c) = corr
                    .values()
                    .iter()
                    .enumerate()
                    .fold((0usize, 0.0f64), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
                let idx = grid.unflatten(m);
                let x0: Vec<f64> = (0..d)
                    .map(|a| grid.wave_index(idx[a]) as f64 * grid.dx())
                    .collect();
                let v: Vec<f64> = shift.iter().map(|&s| s as f64 * dv).collect();
                let cand = Candidate {
                    atom: *ai,
                    g: SymmetryElement {
                        x0,
                        v,
                        ..g.clone()
                    },
                    overlap: c * grid.cell_volume(),
                };
                insert_top(&mut best, cand, opts.refine.max(1));
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut top: Vec<Candidate> = Vec::new();
    for list in per_job {
        for c in list {
            insert_top(&mut top, c, opts.refine.max(1));
        }
    }
    let Some(first) = top.first().cloned() else {
        return Err(Error::InvalidArgument(
            "no scale/time pair is resolved on this grid within the budget".into(),
        ));
    };

    let mut best = first;
    for cand in &top {
        if allowance == 0 {
            exhausted = true;
            break;
        }
        let (refined, used) = refine(u0, &dictionary[cand.atom], cand, opts, allowance)?;
        allowance -= used.min(allowance);
        evaluations += used;
        if refined.overlap > best.overlap {
            best = refined;
        }
    }
    if allowance == 0 {
        exhausted = true;
    }

    let w = dictionary[best.atom].orbit_point(&grid, &best.g, &opts.policy)?;
    let ip = u0.inner(&w)?;
    let mut g = best.g;
    g.theta = ip.arg();
    let overlap = ip.norm();
    Ok(SearchReport {
        g,
        atom: best.atom,
        overlap,
        correlation: overlap / norm,
        evaluations,
        budget_exhausted: exhausted,
    })
}

fn insert_top(list: &mut Vec<Candidate>, cand: Candidate, keep: usize) {
    let pos = list
        .iter()
        .position(|c| cand.overlap > c.overlap)
        .unwrap_or(list.len());
    if pos < keep {
        list.insert(pos, cand);
        list.truncate(keep);
    }
}

fn lattice_points(axis: &[i64], d: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

struct Overlap<'a> {
    u0: &'a Field,
    atom: &'a Atom,
    policy: AliasPolicy,
}

impl Overlap<'_> {
    fn element(&self, params: &[f64]) -> SymmetryElement {
        let d = self.u0.grid().dim();
        SymmetryElement {
            x0: params[..d].to_vec(),
            v: params[d..2 * d].to_vec(),
            lambda: params[2 * d].exp(),
            t0: params[2 * d + 1],
            theta: 0.0,
        }
    }

    fn overlap(&self, params: &[f64]) -> f64 {
        let g = self.element(params);
        if !g.lambda.is_finite() || g.lambda <= 0.0 {
            return 0.0;
        }
        match self.atom.orbit_point(self.u0.grid(), &g, &self.policy) {
            Ok(w) => self.u0.inner(&w).map_or(0.0, |z| z.norm()),
            Err(_) => 0.0,
        }
    }
}

impl CostFunction for Overlap<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.overlap(p))
    }
}

fn refine(
    u0: &Field,
    atom: &Atom,
    start: &Candidate,
    opts: &SearchOptions,
    allowance: usize,
) -> Result<(Candidate, usize)> {
    let d = u0.grid().dim();
    let g = &start.g;
    let mut x: Vec<f64> = g.x0.clone();
    x.extend_from_slice(&g.v);
    x.push(g.lambda.ln());
    x.push(g.t0);
    let steps: Vec<f64> = (0..2 * d + 2)
        .map(|i| match i {
            i if i < d => 0.5 * g.lambda,
            i if i < 2 * d => 0.5 / g.lambda,
            i if i == 2 * d => 0.3,
            _ => 0.5,
        })
        .collect();
    let simplex: Vec<Vec<f64>> = std::iter::once(x.clone())
        .chain((0..x.len()).map(|i| {
            let mut y = x.clone();
            y[i] += steps[i];
            y
        }))
        .collect();
    let problem = Overlap {
        u0,
        atom,
        policy: opts.policy,
    };
    // each iteration costs at most d + 3 objective calls
    let per_iter = (2 * d + 4) as u64;
    let iters = opts
        .simplex_iterations
        .min((allowance as u64).saturating_sub(x.len() as u64 + 1) / per_iter);
    if iters == 0 {
        return Ok((start.clone(), 0));
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(iters))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = res.state();
    let used = state.get_func_counts().values().sum::<u64>() as usize;
    let best = state.get_best_param().cloned().unwrap_or(x);
    let problem = Overlap {
        u0,
        atom,
        policy: opts.policy,
    };
    let overlap = problem.overlap(&best);
    let cand = if overlap > start.overlap {
        Candidate {
            atom: start.atom,
            g: problem.element(&best),
            overlap,
        }
    } else {
        start.clone()
    };
    Ok((cand, used.max(1)))
}
