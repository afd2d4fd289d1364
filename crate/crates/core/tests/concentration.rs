use std::collections::BTreeSet;
use std::f64::consts::PI;

use lensnls::concentration::*;
use lensnls::functionals::strichartz_norm;
use lensnls::initial::{band_noise, hermite, random_smooth, rng, white_noise, Gaussian};
use lensnls::propagators::free_propagate;
use lensnls::transforms::{apply_symmetry, SymmetryElement};
use lensnls::{AliasPolicy, Field, Frame, GridSpec, C64};
use rand::Rng;

/// Every scale at which the cubes containing `a` and `b` are close.
fn close_scales(a: &[i64], b: &[i64], scales: std::ops::RangeInclusive<i32>) -> Vec<i32> {
    scales
        .filter(|&k| {
            let q = DyadicCube::containing(a, k).unwrap();
            let q2 = DyadicCube::containing(b, k).unwrap();
            close(&q, &q2)
        })
        .collect()
}

#[test]
fn whitney_pairs_exist_and_are_unique_in_one_dimension() {
    for a in 0..256i64 {
        for b in 0..256i64 {
            if a == b {
                continue;
            }
            let found = close_scales(&[a], &[b], -4..=10);
            assert_eq!(found.len(), 1, "{a} {b}: {found:?}");
            let (q, q2) = whitney_pair_for(&[a], &[b]).unwrap();
            assert_eq!(q.k, found[0]);
            assert!(q.contains(&[a]) && q2.contains(&[b]) && close(&q, &q2));
        }
    }
}

#[test]
fn whitney_pairs_exist_and_are_unique_in_two_dimensions() {
    let pts: Vec<[i64; 2]> = (0..16i64).flat_map(|i| (0..16i64).map(move |j| [i - 8, j - 8])).collect();
    for a in &pts {
        for b in &pts {
            if a == b {
                continue;
            }
            let found = close_scales(a, b, -3..=6);
            assert_eq!(found.len(), 1, "{a:?} {b:?}: {found:?}");
            let (q, _) = whitney_pair_for(a, b).unwrap();
            assert_eq!(q.k, found[0]);
        }
    }
}

fn coeff_field(grid: GridSpec, modes: &[(usize, C64)]) -> Field {
    let mut c = vec![C64::new(0.0, 0.0); grid.len()];
    for &(slot, v) in modes {
        c[slot] = v;
    }
    Field::zeros(grid, 0.0, Frame::Physical).from_dft(c)
}

#[test]
fn restriction_partitions_are_parseval_exact() {
    let g = GridSpec::new(1, 256, 30.0).unwrap();
    let f = random_smooth(g, 3, 4, 5.0);
    for k in [0, 2, 5] {
        let side = 1i64 << k;
        let total: f64 = (-128 / side..128 / side)
            .map(|c| freq_restrict(&f, &DyadicCube::new(k, vec![c]).unwrap()).unwrap().mass())
            .sum();
        assert!((total - f.mass()).abs() < 1e-12 * f.mass(), "k={k}");
    }
    let g2 = GridSpec::new(2, 16, 6.0).unwrap();
    let f2 = random_smooth(g2, 4, 2, 1.0);
    let mut total = 0.0;
    for c0 in -4..4 {
        for c1 in -4..4 {
            total += freq_restrict(&f2, &DyadicCube::new(1, vec![c0, c1]).unwrap()).unwrap().mass();
        }
    }
    assert!((total - f2.mass()).abs() < 1e-12 * f2.mass());
}

#[test]
fn restriction_of_a_single_mode() {
    let g = GridSpec::new(1, 64, 10.0).unwrap();
    let f = coeff_field(g, &[(5, C64::new(1.0, 0.5))]);
    let inside = freq_restrict(&f, &DyadicCube::new(2, vec![1]).unwrap()).unwrap();
    assert!(inside.sup_distance(&f).unwrap() < 1e-15);
    let outside = freq_restrict(&f, &DyadicCube::new(2, vec![3]).unwrap()).unwrap();
    assert!(outside.sup_norm() < 1e-15);
}

/// `Σ_ξ (c_ξ e_ξ)²` summed mode by mode.
fn brute_diagonal(f: &Field) -> Vec<C64> {
    let g = f.grid();
    let n = g.points_per_axis();
    let coeffs = f.dft();
    let scale = 1.0 / g.len() as f64;
    (0..g.len())
        .map(|j| {
            let jj = g.unflatten(j);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let kk = g.unflatten(k);
                    let phase: f64 = (0..g.dim())
                        .map(|a| 2.0 * PI * (jj[a] * kk[a]) as f64 / n as f64)
                        .sum();
                    let mode = c * scale * C64::from_polar(1.0, phase);
                    mode * mode
                })
                .sum()
        })
        .collect()
}

#[test]
fn two_modes_in_one_close_pair() {
    let g = GridSpec::new(1, 32, 8.0).unwrap();
    let f = coeff_field(g, &[(0, C64::new(2.0, 0.0)), (2, C64::new(0.0, 3.0))]);
    let table = whitney_bilinear_table(&f, &BilinearOptions::default()).unwrap();
    assert_eq!(table.pair_count, 1);
    assert_eq!(table.entries.len(), 1);
    let e = &table.entries[0];
    assert_eq!(e.cube, DyadicCube::new(0, vec![0]).unwrap());
    assert_eq!(e.partner, DyadicCube::new(0, vec![2]).unwrap());
    assert!(e.norm > 0.0);
    assert!(table.off_diagonal_residual < 1e-10);
    let diag = brute_diagonal(&f).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!((table.diagonal - diag).abs() < 1e-12);
}

#[test]
fn single_mode_residual_is_the_diagonal() {
    let g = GridSpec::new(1, 32, 8.0).unwrap();
    let f = coeff_field(g, &[(3, C64::new(1.0, -1.0))]);
    let table = whitney_bilinear_table(&f, &BilinearOptions::default()).unwrap();
    assert_eq!(table.pair_count, 0);
    assert!((table.residual - table.diagonal).abs() < 1e-15);
    assert!(table.off_diagonal_residual < 1e-15);
}

#[test]
fn band_limited_reconstruction_matches_the_pair_sum() {
    for (g, seed) in [
        (GridSpec::new(1, 64, 12.0).unwrap(), 1u64),
        (GridSpec::new(2, 16, 6.0).unwrap(), 2u64),
    ] {
        let f = random_smooth(g, seed, 3, 1.5);
        let table = whitney_bilinear_table(&f, &BilinearOptions::default()).unwrap();
        assert!(table.off_diagonal_residual < 1e-8 * f.sup_norm().powi(2));
        let diag = brute_diagonal(&f).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((table.diagonal - diag).abs() < 1e-10 * diag.max(1.0));

        // the close pairs reached by distinct nonzero modes
        let peak = f.dft().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let modes: Vec<Vec<i64>> = f
            .dft()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > MODE_FLOOR * peak)
            .map(|(i, _)| lattice_point(&g, i))
            .collect();
        let mut pairs = BTreeSet::new();
        for a in &modes {
            for b in &modes {
                if a < b {
                    let (q, q2) = whitney_pair_for(a, b).unwrap();
                    pairs.insert(if q < q2 { (q, q2) } else { (q2, q) });
                }
            }
        }
        assert_eq!(table.pair_count, pairs.len());
        assert_eq!(table.entries.len(), pairs.len());
    }
}

#[test]
fn scale_range_limits_the_table_only() {
    let g = GridSpec::new(1, 64, 12.0).unwrap();
    let f = random_smooth(g, 5, 2, 2.0);
    let all = whitney_bilinear_table(&f, &BilinearOptions::default()).unwrap();
    let some = whitney_bilinear_table(
        &f,
        &BilinearOptions {
            scales: Some((0, 1)),
            ..BilinearOptions::default()
        },
    )
    .unwrap();
    assert!(some.entries.len() < all.entries.len());
    assert!(some.entries.iter().all(|e| (0..=1).contains(&e.cube.k)));
    assert_eq!(some.off_diagonal_residual, all.off_diagonal_residual);
}

#[test]
fn elementary_sum_is_scale_invariant() {
    for (s, p) in [(4.0, 2.0), (3.0, 1.5)] {
        let base = elementary_sum_check(1.0, s, p, 1).unwrap();
        for j in -20..=20 {
            let r = elementary_sum_check(2f64.powi(j), s, p, 1).unwrap();
            assert!((r / base - 1.0).abs() < 1e-10, "s={s} p={p} j={j}");
        }
        // in the plane the shift argument needs |Ω| = 4^j
        let base2 = elementary_sum_check(1.0, s, p, 2).unwrap();
        for j in -10..=10 {
            let r = elementary_sum_check(4f64.powi(j), s, p, 2).unwrap();
            assert!((r / base2 - 1.0).abs() < 1e-10);
        }
    }
    // |Ω| = 1, d = 1, (4, 2): Σ_{k≤0} 2^k + Σ_{k≥1} 4^{-k} = 2 + 1/3
    let r = elementary_sum_check(1.0, 4.0, 2.0, 1).unwrap();
    assert!((r - 7.0 / 3.0).abs() < 1e-15);
}

/// Direct sum over scales `lo..=hi` with explicit cube occupancies.
fn restricted_direct(omega: &OmegaSet, s: f64, p: f64, lo: i32, hi: i32) -> f64 {
    let d = omega.dim() as i32;
    let mut total = 0.0;
    for k in lo..=hi {
        let measure = 2f64.powi(d * k);
        if k <= 0 {
            let sub = 2f64.powi(-d * k) * omega.measure() as f64;
            total += sub * measure.powf(s / p - s) * measure.powf(s);
        } else {
            let mut counts = std::collections::BTreeMap::new();
            for c in omega.cells() {
                let q = DyadicCube::containing(c, k).unwrap();
                *counts.entry(q).or_insert(0usize) += 1;
            }
            total += counts
                .values()
                .map(|&n| measure.powf(s / p - s) * (n as f64).powf(s))
                .sum::<f64>();
        }
    }
    total
}

#[test]
fn restricted_sum_agrees_with_direct_summation() {
    for seed in 0..20 {
        let omega = OmegaSet::random(1 + (seed % 2) as usize, 1 + seed as usize * 3, 40, seed).unwrap();
        for (s, p) in [(4.0, 2.0), (3.0, 1.5)] {
            let r = restricted_sum_check(&omega, s, p).unwrap();
            let direct = restricted_direct(&omega, s, p, -60, 60);
            assert!((r.lhs.powf(s) / direct - 1.0).abs() < 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn restricted_sum_is_bounded_by_the_elementary_sum() {
    for (s, p) in [(4.0, 2.0), (3.0, 1.5)] {
        for d in 1..=2usize {
            // lhs^s ≤ elementary(|Ω|) ≤ sup_m ratio(m)·|Ω|^{s/p}
            let bound = (1..=64)
                .map(|m| elementary_sum_check(m as f64, s, p, d).unwrap())
                .fold(0.0, f64::max)
                .powf(1.0 / s);
            let mut worst = 0.0f64;
            let mut r = rng(17 + d as u64);
            for trial in 0..1000u64 {
                let count = r.random_range(1..=64usize);
                let spread = r.random_range(count as i64..=4096);
                let omega = OmegaSet::random(d, count, spread, trial).unwrap();
                let rep = restricted_sum_check(&omega, s, p).unwrap();
                let elem = elementary_sum(count as f64, s, p, d).unwrap();
                assert!(rep.lhs.powf(s) <= elem * (1.0 + 1e-12));
                worst = worst.max(rep.ratio);
            }
            assert!(worst <= bound * (1.0 + 1e-12), "s={s} p={p} d={d}: {worst} > {bound}");
        }
    }
}

#[test]
fn far_cells_do_not_inflate_the_ratio() {
    let near = OmegaSet::from_cells(1, (0..8).map(|i| vec![i])).unwrap();
    let far = OmegaSet::from_cells(1, (0..8).map(|i| vec![i]).chain((0..8).map(|i| vec![1 << 20 | i]))).unwrap();
    let a = restricted_sum_check(&near, 4.0, 2.0).unwrap().ratio;
    let b = restricted_sum_check(&far, 4.0, 2.0).unwrap().ratio;
    assert!(b <= 1.5 * a && b > 0.5 * a, "{a} {b}");
}

fn unit_gaussian(g: GridSpec) -> Field {
    let d = g.dim();
    Gaussian::with_mass(d, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap()
}

#[test]
fn strichartz_of_a_gaussian_in_closed_form() {
    // |u|² = π^{-d/2}(1+t²)^{-d/2}e^{-|x|²/(1+t²)}: ∫∫|u|^q = 1/√3 (d=1), 1/2 (d=2)
    let g = GridSpec::new(1, 1024, 60.0).unwrap();
    let rep = linear_strichartz(&unit_gaussian(g), None, &StrichartzOptions::default()).unwrap();
    assert!((rep.value - 3f64.powf(-1.0 / 12.0)).abs() < 1e-10);
    let g2 = GridSpec::new(2, 64, (2.0 * PI * 64.0).sqrt()).unwrap();
    let rep = linear_strichartz(&unit_gaussian(g2), None, &StrichartzOptions::default()).unwrap();
    assert!((rep.value - 0.5f64.powf(0.25)).abs() < 1e-8);
}

#[test]
fn strichartz_windows_converge() {
    let g = GridSpec::new(1, 1024, 60.0).unwrap();
    let u0 = unit_gaussian(g);
    let opts = StrichartzOptions::default();
    let a = linear_strichartz(&u0, Some(100.0), &opts).unwrap();
    let b = linear_strichartz(&u0, Some(200.0), &opts).unwrap();
    assert!((a.value - b.value).abs() < 1e-3);
    assert!(!a.tail_ok && !b.tail_ok);
    let c = linear_strichartz(&u0, Some(1e4), &opts).unwrap();
    assert!(c.tail_ok);
    assert!((c.value - c.full_line).abs() < 1e-4);
    // tail ∫_{|t|>T} dt/(π(1+t²)) relative to the whole line
    let tail = 1.0 - 2.0 * 100f64.atan() / PI;
    assert!((a.tail_fraction - tail).abs() < 1e-8);
}

#[test]
fn strichartz_window_matches_physical_slices() {
    let g = GridSpec::new(1, 1024, 60.0).unwrap();
    let u0 = random_smooth(g, 9, 3, 3.0);
    let lens = linear_strichartz(&u0, Some(1.0), &StrichartzOptions::default()).unwrap();
    let mut slices = Vec::new();
    let m = 400;
    for j in 0..=m {
        let t = -1.0 + 2.0 * j as f64 / m as f64;
        slices.push(free_propagate(&u0, t).unwrap());
    }
    let phys = strichartz_norm(&slices, 6.0, 6.0, false).unwrap();
    assert!((lens.value - phys.value).abs() < 1e-4 * lens.value);
}

#[test]
fn strichartz_is_invariant_under_scaling_and_modulation() {
    let g = GridSpec::new(1, 1024, 60.0).unwrap();
    let u0 = random_smooth(g, 2, 2, 2.0);
    let opts = StrichartzOptions::default();
    let base = linear_strichartz(&u0, None, &opts).unwrap().value;
    let policy = AliasPolicy::default();
    for g_el in [
        SymmetryElement {
            lambda: 2.0,
            ..SymmetryElement::identity(1)
        },
        SymmetryElement {
            v: vec![1.0],
            ..SymmetryElement::identity(1)
        },
        SymmetryElement {
            x0: vec![4.0],
            t0: 0.7,
            theta: 1.0,
            ..SymmetryElement::identity(1)
        },
    ] {
        let moved = apply_symmetry(&g_el, &u0, &policy).unwrap();
        let v = linear_strichartz(&moved, None, &opts).unwrap().value;
        assert!((v - base).abs() < 1e-4, "{g_el:?}: {v} vs {base}");
    }
}

#[test]
fn broadband_data_outside_the_phase_space_disc_is_rejected() {
    let g = GridSpec::new(1, 256, 20.0).unwrap();
    let u0 = white_noise(g, 1);
    assert!(linear_strichartz(&u0, None, &StrichartzOptions::default()).is_err());
}

fn rig() -> GridSpec {
    GridSpec::new(1, 1024, 60.0).unwrap()
}

#[test]
fn closed_form_orbit_matches_the_group_action() {
    let g = rig();
    let policy = AliasPolicy::default();
    let atom = Atom::Gaussian
        .orbit_point(&g, &SymmetryElement::identity(1), &policy)
        .unwrap();
    assert!((atom.mass() - 1.0).abs() < 1e-12);
    let el = SymmetryElement {
        x0: vec![-2.5],
        v: vec![0.8],
        lambda: 1.7,
        t0: -0.6,
        theta: 0.0,
    };
    let closed = Atom::Gaussian.orbit_point(&g, &el, &policy).unwrap();
    let acted = apply_symmetry(&el, &atom, &policy).unwrap();
    assert!(closed.sup_distance(&acted).unwrap() < 1e-9);
}

fn random_element(seed: u64) -> SymmetryElement {
    let mut r = rng(1000 + seed);
    SymmetryElement {
        x0: vec![r.random_range(-8.0..8.0)],
        v: vec![r.random_range(-2.0..2.0)],
        lambda: r.random_range(0.5..2.0),
        t0: r.random_range(-1.5..1.5),
        theta: r.random_range(-PI..PI),
    }
}

fn planted(g: GridSpec, el: &SymmetryElement) -> Field {
    let atom = Atom::Gaussian
        .orbit_point(&g, &SymmetryElement::identity(1), &AliasPolicy::default())
        .unwrap();
    apply_symmetry(el, &atom, &AliasPolicy::default()).unwrap()
}

#[test]
fn planted_atom_is_recovered() {
    let g = rig();
    let el = SymmetryElement {
        x0: vec![3.0],
        lambda: 2.0,
        v: vec![1.0],
        t0: 0.0,
        theta: 0.0,
    };
    let u0 = planted(g, &el);
    let rep = concentration_search(&u0, &[Atom::Gaussian], &SearchOptions::default()).unwrap();
    assert!(rep.correlation >= 0.99);
    assert!(!rep.budget_exhausted);
    assert!((rep.g.x0[0] - 3.0).abs() < 1e-3 && (rep.g.v[0] - 1.0).abs() < 1e-3);
    assert!((rep.g.lambda - 2.0).abs() < 1e-3 && rep.g.t0.abs() < 1e-3);
}

#[test]
fn seeded_plants_with_and_without_noise() {
    let g = rig();
    let opts = SearchOptions::default();
    for seed in 0..20 {
        let el = random_element(seed);
        let u0 = planted(g, &el);
        let clean = concentration_search(&u0, &[Atom::Gaussian], &opts).unwrap();
        assert!(clean.correlation >= 0.99, "seed {seed}: {}", clean.correlation);
        let noise = white_noise(g, seed).scaled(C64::new(0.1, 0.0));
        let noisy = u0.add(&noise).unwrap();
        let rep = concentration_search(&noisy, &[Atom::Gaussian], &opts).unwrap();
        assert!(rep.correlation >= 0.9, "seed {seed}: {}", rep.correlation);
    }
}

#[test]
fn white_noise_has_no_concentration() {
    let g = rig();
    for seed in 0..5 {
        let rep = concentration_search(&white_noise(g, seed), &[Atom::Gaussian], &SearchOptions::default()).unwrap();
        assert!(rep.correlation < 0.2, "seed {seed}: {}", rep.correlation);
    }
}

#[test]
fn high_frequency_noise_has_small_strichartz_norm() {
    // self-dual box: the harmonic flow keeps the noise inside
    let g = GridSpec::new(1, 2048, (2.0 * PI * 2048.0).sqrt()).unwrap();
    let gauss = linear_strichartz(&unit_gaussian(g), None, &StrichartzOptions::default()).unwrap();
    for seed in 0..3 {
        let u0 = band_noise(g, seed, 15.0, 35.0, 30.0);
        let rep = linear_strichartz(&u0, None, &StrichartzOptions::default()).unwrap();
        assert!(rep.value < 0.5 * gauss.value, "seed {seed}: {}", rep.value);
    }
}

#[test]
fn search_is_equivariant() {
    let g = rig();
    let u0 = random_smooth(g, 21, 2, 3.0);
    let opts = SearchOptions::default();
    let base = concentration_search(&u0, &[Atom::Gaussian], &opts).unwrap();
    let el = SymmetryElement {
        x0: vec![1.3],
        v: vec![-0.4],
        lambda: 1.0,
        t0: 0.0,
        theta: 0.9,
    };
    let moved = apply_symmetry(&el, &u0, &AliasPolicy::default()).unwrap();
    let rep = concentration_search(&moved, &[Atom::Gaussian], &opts).unwrap();
    assert!((rep.correlation - base.correlation).abs() < 1e-3, "{} {}", rep.correlation, base.correlation);
}

#[test]
fn sampled_atoms_join_the_dictionary() {
    let g = rig();
    let h1 = hermite(g, &[1], Frame::Physical).unwrap();
    let el = SymmetryElement {
        x0: vec![-4.0],
        v: vec![0.5],
        lambda: 1.0,
        t0: 0.0,
        theta: 0.3,
    };
    let u0 = apply_symmetry(&el, &h1, &AliasPolicy::default()).unwrap();
    let dict = [Atom::Gaussian, Atom::Sampled(h1)];
    let rep = concentration_search(&u0, &dict, &SearchOptions::default()).unwrap();
    assert_eq!(rep.atom, 1);
    assert!(rep.correlation >= 0.99, "{}", rep.correlation);
}

#[test]
fn small_budget_is_flagged() {
    let g = rig();
    let u0 = planted(g, &random_element(3));
    let opts = SearchOptions {
        budget: 300,
        ..SearchOptions::default()
    };
    let rep = concentration_search(&u0, &[Atom::Gaussian], &opts).unwrap();
    assert!(rep.budget_exhausted);
    assert!(rep.evaluations <= 300);
}

#[test]
fn searches_are_deterministic() {
    let g = rig();
    let u0 = random_smooth(g, 8, 3, 4.0);
    let a = concentration_search(&u0, &[Atom::Gaussian], &SearchOptions::default()).unwrap();
    let b = concentration_search(&u0, &[Atom::Gaussian], &SearchOptions::default()).unwrap();
    assert_eq!(a, b);
}
