//! Scenarios that exercise transforms, propagators and the dyadic tools
//! directly: pseudoconformal checks, the oscillator kernel, Whitney pairs
//! and dyadic sums, and the concentration detector.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;

use super::config::{ScenarioConfig, SearchConfig, WhitneyConfig};
use super::physics::march;
use super::report::{Builder, Check, Outcome, Refinement, Table};
use crate::concentration::{
    close, concentration_search, elementary_sum_check, freq_restrict, linear_strichartz, restricted_sum_check,
    whitney_bilinear_table, whitney_pair_for, Atom, BilinearOptions, DyadicCube, OmegaSet, SearchOptions,
    StrichartzOptions,
};
use crate::error::Result;
use crate::functionals::energy_decomposition;
use crate::grid::{AliasPolicy, Field, Frame, GridSpec, C64};
use crate::initial::{hermite, random_smooth, rng, white_noise};
use crate::propagators::{harmonic_propagate, harmonic_propagate_with, mehler_quadrature, HarmonicOptions, MehlerKernel};
use crate::solver::{Coupling, EquationSpec};
use crate::transforms::{apply_symmetry, lens_forward, pc_lens_conjugation_residual, pseudoconformal, SymmetryElement};

const DECOMPOSITION_TAUS: [f64; 3] = [0.3, 0.5, 0.8];

struct PcRun {
    involution: f64,
    pc_mass: f64,
    lens_mass: f64,
    conjugation: f64,
    decomposition: Vec<f64>,
    diagnostics: Vec<crate::grid::DiagnosticsRecord>,
    slices: Vec<Field>,
}

fn pc_run(u0: &Field, eq: &EquationSpec, dt: f64, policy: &AliasPolicy) -> Result<PcRun> {
    let forward: Vec<f64> = DECOMPOSITION_TAUS.iter().map(|t| t.tan()).collect();
    let fwd = march(u0, &forward, eq, dt)?;
    let backward: Vec<f64> = DECOMPOSITION_TAUS.iter().map(|t| -1.0 / t.tan()).collect();
    let bwd = march(u0, &backward, eq, dt)?;
    let mu = eq.mu();
    let mut decomposition = Vec::new();
    for s in fwd.slices.iter().skip(1) {
        decomposition.push(energy_decomposition(s, eq.p, mu, policy)?.residual);
    }
    let mut conjugation = 0.0f64;
    for &tau in &DECOMPOSITION_TAUS {
        conjugation = conjugation.max(pc_lens_conjugation_residual(&bwd.slices, tau, policy)?);
    }
    let last = fwd.slices.last().expect("forward slices");
    let once = pseudoconformal(last, policy)?;
    let twice = pseudoconformal(&once, policy)?;
    let lens = lens_forward(last, policy)?;
    Ok(PcRun {
        involution: twice.sup_distance(last)?,
        pc_mass: (once.mass() - last.mass()).abs(),
        lens_mass: (lens.mass() - last.mass()).abs(),
        conjugation,
        decomposition,
        diagnostics: fwd.diagnostics,
        slices: fwd.slices,
    })
}

/// Pseudoconformal involution and mass, its conjugation to the quarter-period
/// lens-time shift, and the decomposition of the harmonic energy into
/// classical and pseudoconformal parts along linear and nonlinear runs.
pub fn pc_check(cfg: &ScenarioConfig) -> Result<Outcome> {
    let policy = cfg.policy();
    let dt = cfg.steps.dt.unwrap_or(1e-3);
    let eq = cfg.equation(Frame::Physical)?;
    let linear = EquationSpec::new(eq.p, Coupling::Linear, Frame::Physical, eq.d)?;
    let u0 = cfg.initial_field(Frame::Physical)?;
    let mut b = Builder::default();

    let nl = pc_run(&u0, &eq, dt, &policy)?;
    let lin = pc_run(&u0, &linear, dt, &policy)?;
    b.check(Check::at_most("involution", nl.involution, cfg.threshold("involution")));
    b.check(Check::at_most("pc_mass", nl.pc_mass, cfg.threshold("mass")));
    b.check(Check::at_most("lens_mass", nl.lens_mass, cfg.threshold("mass")));
    b.check(Check::at_most("conjugation", nl.conjugation, cfg.threshold("conjugation")));
    let mut table = Table::new("energy_decomposition", &["tau", "nonlinear_residual", "linear_residual"]);
    for (i, tau) in DECOMPOSITION_TAUS.iter().enumerate() {
        table.push(vec![*tau, nl.decomposition[i], lin.decomposition[i]]);
    }
    b.tables.push(table);
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    b.check(Check::at_most("decomposition_nonlinear", worst(&nl.decomposition), cfg.threshold("decomposition")));
    b.check(Check::at_most("decomposition_linear", worst(&lin.decomposition), cfg.threshold("decomposition")));

    // the same nonlinear checks on the half-resolution grid
    let grid = cfg.grid_spec();
    let coarse_grid = GridSpec::new(grid.dim(), grid.points_per_axis() / 2, grid.length())?;
    let coarse_u0 = Field::from_fn(coarse_grid, 0.0, Frame::Physical, |x| sample_like(&u0, x));
    let coarse = pc_run(&coarse_u0, &eq, dt, &AliasPolicy::unchecked())?;

    if cfg.output.diagnostics {
        b.diagnostics.push(("physical".into(), nl.diagnostics.clone()));
    }
    if cfg.output.snapshots {
        b.slices("physical", &nl.slices);
    }
    let refinement = Refinement::new(
        "decomposition_nonlinear",
        "n",
        (coarse_grid.points_per_axis() as f64, grid.points_per_axis() as f64),
        (worst(&coarse.decomposition), worst(&nl.decomposition)),
    );
    Ok(b.finish(cfg.scenario.name(), cfg.seed, refinement))
}

/// Band-limited interpolation of `f` at the point `x`.
fn sample_like(f: &Field, x: &[f64]) -> C64 {
    let g = f.grid();
    let coeffs = f.dft();
    let n = g.len() as f64;
    let origin = -0.5 * g.length();
    coeffs
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            let idx = g.unflatten(flat);
            let phase: f64 = (0..g.dim()).map(|a| g.wavenumber(idx[a]) * (x[a] - origin)).sum();
            c * C64::from_polar(1.0 / n, phase)
        })
        .sum()
}

/// Harmonic propagator against the kernel quadrature, period and
/// quarter-period identities and Hermite eigenphases.
pub fn mehler_check(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid_spec();
    let d = grid.dim();
    let f = random_smooth(grid, cfg.seed, 3, 2.5).in_frame(Frame::Lens);
    let generic = HarmonicOptions {
        exact_quarters: false,
        ..HarmonicOptions::default()
    };
    let mut b = Builder::default();

    let times = [0.7, 1.9, -0.9, 2.6, 4.0];
    let mut table = Table::new("mehler", &["t", "gap"]);
    let mut worst = 0.0f64;
    for &t in &times {
        let gap = harmonic_propagate(&f, t)?.sup_distance(&mehler_quadrature(&f, t, MehlerKernel::Harmonic)?)?;
        worst = worst.max(gap);
        table.push(vec![t, gap]);
    }
    b.tables.push(table);
    b.check(Check::at_most("quadrature", worst, cfg.threshold("quadrature")));

    let sign = if d % 2 == 1 { -1.0 } else { 1.0 };
    let period = harmonic_propagate_with(&f, 2.0 * PI, &generic)?.sup_distance(&f.scaled(C64::new(sign, 0.0)))?;
    b.check(Check::at_most("period", period, cfg.threshold("period")));

    let quarter = harmonic_propagate_with(&f, FRAC_PI_2, &generic)?;
    let ft = f.fourier_onto(&grid, false)?.scaled(C64::from_polar(1.0, -0.25 * PI * d as f64));
    b.check(Check::at_most("quarter_period", quarter.sup_distance(&ft)?, cfg.threshold("quarter_period")));

    let mut hermite_gap = 0.0f64;
    for n in 0..=2usize {
        let mut orders = vec![0; d];
        orders[0] = n;
        let h = hermite(grid, &orders, Frame::Lens)?;
        let t = 1.3;
        let energy = n as f64 + 0.5 * d as f64;
        let expect = h.scaled(C64::from_polar(1.0, -energy * t));
        hermite_gap = hermite_gap.max(harmonic_propagate_with(&h, t, &generic)?.sup_distance(&expect)?);
    }
    b.check(Check::at_most("hermite", hermite_gap, cfg.threshold("hermite")));

    // quadrature gap at t = 0.7 on the grid with half the points
    let coarse_grid = GridSpec::new(d, grid.points_per_axis() / 2, grid.length())?;
    let fc = random_smooth(coarse_grid, cfg.seed, 3, 2.5).in_frame(Frame::Lens);
    let coarse = harmonic_propagate(&fc, 0.7)?.sup_distance(&mehler_quadrature(&fc, 0.7, MehlerKernel::Harmonic)?)?;
    let fine = b.tables[0].rows[0][1];
    let refinement = Refinement::new(
        "mehler_gap_t0.7",
        "n",
        (coarse_grid.points_per_axis() as f64, grid.points_per_axis() as f64),
        (coarse, fine),
    );
    Ok(b.finish(cfg.scenario.name(), cfg.seed, refinement))
}

const WHITNEY_DEFAULT: WhitneyConfig = WhitneyConfig {
    lattice_1d: 512,
    lattice_2d: 32,
    omega_sets: 1000,
};

/// Close-pair existence and uniqueness for every ordered pair of distinct
/// points of the lattice `[-side/2, side/2)^d`. Returns (pairs, failures).
fn exhaustive_pairs(d: usize, side: i64) -> Result<(usize, usize)> {
    let half = side / 2;
    let pts: Vec<Vec<i64>> = if d == 1 {
        (-half..side - half).map(|a| vec![a]).collect()
    } else {
        (-half..side - half)
            .flat_map(|a| (-half..side - half).map(move |c| vec![a, c]))
            .collect()
    };
    let top = 64 - (side as u64).leading_zeros() as i32 + 1;
    let counts: Vec<(usize, usize)> = pts
        .par_iter()
        .map(|a| -> Result<(usize, usize)> {
            let mut pairs = 0;
            let mut failures = 0;
            for c in &pts {
                if a == c {
                    continue;
                }
                pairs += 1;
                let mut found = Vec::new();
                for k in -4..=top {
                    if close(&DyadicCube::containing(a, k)?, &DyadicCube::containing(c, k)?) {
                        found.push(k);
                    }
                }
                let (q, q2) = whitney_pair_for(a, c)?;
                let ok = found.len() == 1 && q.k == found[0] && q.contains(a) && q2.contains(c) && close(&q, &q2);
                if !ok {
                    failures += 1;
                }
            }
            Ok((pairs, failures))
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1)))
}

/// Largest relative Parseval gap of the restriction partitions at scales
/// `0..=top` of a random field.
fn parseval_gap(f: &Field) -> Result<f64> {
    let g = f.grid();
    let n = g.points_per_axis() as i64;
    let mut worst = 0.0f64;
    let top = (n as u64).trailing_zeros() as i32 + 1;
    for k in 0..=top {
        let side = 1i64 << k;
        let range: Vec<i64> = ((-n / 2).div_euclid(side)..=(n / 2 - 1).div_euclid(side)).collect();
        let mut total = 0.0;
        if g.dim() == 1 {
            for &c in &range {
                total += freq_restrict(f, &DyadicCube::new(k, vec![c])?)?.mass();
            }
        } else {
            for &c0 in &range {
                for &c1 in &range {
                    total += freq_restrict(f, &DyadicCube::new(k, vec![c0, c1])?)?.mass();
                }
            }
        }
        worst = worst.max((total - f.mass()).abs() / f.mass());
    }
    Ok(worst)
}

/// Whitney pairs, restriction partitions, the close-pair reconstruction and
/// the dyadic sums.
pub fn whitney(cfg: &ScenarioConfig) -> Result<Outcome> {
    let w = cfg.whitney.unwrap_or(WHITNEY_DEFAULT);
    let mut b = Builder::default();

    let (p1, f1) = exhaustive_pairs(1, w.lattice_1d)?;
    let (p2, f2) = exhaustive_pairs(2, w.lattice_2d)?;
    b.value("pairs_checked_1d", p1 as f64);
    b.value("pairs_checked_2d", p2 as f64);
    b.check(Check::at_most("pair_failures_1d", f1 as f64, 0.0));
    b.check(Check::at_most("pair_failures_2d", f2 as f64, 0.0));

    let g1 = GridSpec::new(1, 256, 30.0)?;
    let g2 = GridSpec::new(2, 16, 6.0)?;
    let parseval = parseval_gap(&random_smooth(g1, cfg.seed, 4, 5.0))?
        .max(parseval_gap(&random_smooth(g2, cfg.seed + 1, 2, 1.0))?);
    b.check(Check::at_most("parseval", parseval, cfg.threshold("parseval")));

    let mut recon = Table::new("reconstruction", &["d", "n", "pairs", "residual", "diagonal", "off_diagonal_residual"]);
    let mut worst = 0.0f64;
    let mut coarse_fine = Vec::new();
    for g in [
        GridSpec::new(1, 32, 12.0)?,
        GridSpec::new(1, 64, 12.0)?,
        GridSpec::new(2, 16, 6.0)?,
    ] {
        let f = random_smooth(g, cfg.seed, 3, 1.5);
        let t = whitney_bilinear_table(&f, &BilinearOptions::default())?;
        let rel = t.off_diagonal_residual / f.sup_norm().powi(2);
        worst = worst.max(rel);
        if g.dim() == 1 {
            coarse_fine.push(rel);
        }
        recon.push(vec![
            g.dim() as f64,
            g.points_per_axis() as f64,
            t.pair_count as f64,
            t.residual,
            t.diagonal,
            t.off_diagonal_residual,
        ]);
    }
    b.tables.push(recon);
    b.check(Check::at_most("reconstruction", worst, cfg.threshold("reconstruction")));

    let mut sums = Table::new("dyadic_sums", &["s", "p", "elementary_spread", "restricted_max_ratio", "bound"]);
    let mut spread_worst = 0.0f64;
    let mut bounded = true;
    for (i, (s, p)) in [(4.0, 2.0), (3.0, 1.5)].into_iter().enumerate() {
        let ratios: Vec<f64> = (-20..=20)
            .map(|j| elementary_sum_check(2f64.powi(j), s, p, 1))
            .collect::<Result<_>>()?;
        let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
        let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / lo;
        spread_worst = spread_worst.max(spread);
        let bound = hi.powf(1.0 / s) * (1.0 + 1e-12);
        let maxima: Vec<f64> = (0..w.omega_sets)
            .into_par_iter()
            .map(|k| {
                let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((i * w.omega_sets + k) as u64);
                let mut r = rng(seed);
                let d = 1 + (k % 2);
                let count = r.random_range(1..=64usize);
                let omega = OmegaSet::random(d, count, 64, seed)?;
                Ok(restricted_sum_check(&omega, s, p)?.ratio)
            })
            .collect::<Result<_>>()?;
        let max_ratio = maxima.iter().copied().fold(0.0, f64::max);
        bounded &= max_ratio <= bound;
        sums.push(vec![s, p, spread, max_ratio, bound]);
    }
    b.tables.push(sums);
    b.check(Check::at_most("elementary_spread", spread_worst, cfg.threshold("elementary")));
    b.check(Check::at_least("restricted_bounded", f64::from(u8::from(bounded)), 1.0));
    b.value("omega_sets_per_pair", w.omega_sets as f64);

    let refinement = Refinement::new(
        "off_diagonal_residual",
        "n",
        (32.0, 64.0),
        (coarse_fine[0], coarse_fine[1]),
    );
    Ok(b.finish(cfg.scenario.name(), cfg.seed, refinement))
}

const SEARCH_DEFAULT: SearchConfig = SearchConfig {
    plants: 20,
    noise: 0.1,
    noise_controls: 5,
    budget: None,
};

/// A random symmetry element in the range the default search covers.
pub fn random_element(d: usize, seed: u64) -> SymmetryElement {
    let mut r = rng(seed);
    SymmetryElement {
        x0: (0..d).map(|_| r.random_range(-8.0..8.0)).collect(),
        v: (0..d).map(|_| r.random_range(-2.0..2.0)).collect(),
        lambda: r.random_range(0.5..2.0),
        t0: r.random_range(-1.5..1.5),
        theta: r.random_range(-PI..PI),
    }
}

struct PlantRow {
    el: SymmetryElement,
    found: SymmetryElement,
    clean: f64,
    noisy: f64,
    evaluations: usize,
    exhausted: bool,
}

/// Planted-atom recovery with and without white noise, and white-noise
/// negative controls.
pub fn concentrate(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid_spec();
    let d = grid.dim();
    let s = cfg.search.unwrap_or(SEARCH_DEFAULT);
    let policy = cfg.policy();
    let mut opts = SearchOptions {
        policy,
        ..SearchOptions::default()
    };
    if let Some(budget) = s.budget {
        opts.budget = budget;
    }
    let dict = [Atom::Gaussian];
    let unit = Atom::Gaussian.orbit_point(&grid, &SymmetryElement::identity(d), &policy)?;
    let mut b = Builder::default();

    let rows: Vec<PlantRow> = (0..s.plants)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let el = random_element(d, 1000 + seed);
            let u0 = apply_symmetry(&el, &unit, &policy)?;
            let clean = concentration_search(&u0, &dict, &opts)?;
            let noise = white_noise(grid, seed).scaled(C64::new(s.noise, 0.0));
            let noisy = concentration_search(&u0.add(&noise)?, &dict, &opts)?;
            Ok(PlantRow {
                el,
                found: clean.g,
                clean: clean.correlation,
                noisy: noisy.correlation,
                evaluations: clean.evaluations,
                exhausted: clean.budget_exhausted || noisy.budget_exhausted,
            })
        })
        .collect::<Result<_>>()?;
    let controls: Vec<f64> = (0..s.noise_controls)
        .into_par_iter()
        .map(|i| {
            let u0 = white_noise(grid, cfg.seed.wrapping_add(10_000 + i as u64));
            Ok(concentration_search(&u0, &dict, &opts)?.correlation)
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "plants",
        &[
            "x0", "v", "lambda", "t0", "theta", "found_x0", "found_v", "found_lambda", "found_t0", "clean", "noisy",
            "evaluations",
        ],
    );
    for r in &rows {
        table.push(vec![
            r.el.x0[0],
            r.el.v[0],
            r.el.lambda,
            r.el.t0,
            r.el.theta,
            r.found.x0[0],
            r.found.v[0],
            r.found.lambda,
            r.found.t0,
            r.clean,
            r.noisy,
            r.evaluations as f64,
        ]);
        if r.exhausted {
            b.note(format!("search budget exhausted for plant at x0 = {:?}", r.el.x0));
        }
    }
    b.tables.push(table);
    let mut ctl = Table::new("noise_controls", &["seed", "correlation"]);
    for (i, c) in controls.iter().enumerate() {
        ctl.push(vec![cfg.seed.wrapping_add(10_000 + i as u64) as f64, *c]);
    }
    b.tables.push(ctl);

    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    b.value("plants", rows.len() as f64);
    b.check(Check::at_least("clean", min(&mut rows.iter().map(|r| r.clean)), cfg.threshold("clean")));
    b.check(Check::at_least("noisy", min(&mut rows.iter().map(|r| r.noisy)), cfg.threshold("noisy")));
    let worst_control = controls.iter().copied().fold(0.0, f64::max);
    b.check(Check::at_most("noise_control", worst_control, cfg.threshold("noise_control")));

    if let Some(first) = rows.first() {
        let u0 = apply_symmetry(&first.el, &unit, &policy)?;
        let st = linear_strichartz(&u0, None, &StrichartzOptions { policy, ..StrichartzOptions::default() })?;
        b.value("first_plant_strichartz", st.value);
    }

    // first plant with a halved simplex budget
    let refinement = match rows.first() {
        Some(first) => {
            let u0 = apply_symmetry(&first.el, &unit, &policy)?;
            let half = SearchOptions {
                simplex_iterations: opts.simplex_iterations / 2,
                ..opts.clone()
            };
            let coarse = concentration_search(&u0, &dict, &half)?.correlation;
            Refinement::new(
                "first_plant_correlation",
                "simplex_iterations",
                (half.simplex_iterations as f64, opts.simplex_iterations as f64),
                (coarse, first.clean),
            )
        }
        None => Refinement::new("first_plant_correlation", "simplex_iterations", (0.0, 0.0), (f64::NAN, f64::NAN)),
    };
    Ok(b.finish(cfg.scenario.name(), cfg.seed, refinement))
}
