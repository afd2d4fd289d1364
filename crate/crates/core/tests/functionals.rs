use std::f64::consts::PI;

use lensnls::functionals::{
    admissible, classical_energy, diagonal_exponent, energy_decomposition, harmonic_energy, power_integral,
    pseudoconformal_energy, strichartz_norm,
};
use lensnls::initial::Gaussian;
use lensnls::solver::{evolve, Coupling, EquationSpec, StepControl};
use lensnls::{AliasPolicy, Field, Frame, GridSpec};

fn rig() -> GridSpec {
    GridSpec::new(1, 1024, 60.0).unwrap()
}

fn policy() -> AliasPolicy {
    AliasPolicy::default()
}

fn unit_gaussian(frame: Frame) -> Field {
    Gaussian::with_mass(1, 1.0, 1.0).sample(rig(), 0.0, frame).unwrap()
}

#[test]
fn gaussian_energies_in_closed_form() {
    let u = unit_gaussian(Frame::Physical);
    assert!((power_integral(&u, 5.0) - 1.0 / (PI * 3f64.sqrt())).abs() < 1e-12);
    assert!((classical_energy(&u, 5.0, 0.0) - 0.25).abs() < 1e-12);
    // oscillator ground state: ½ per dimension
    let v = unit_gaussian(Frame::Lens);
    assert!((harmonic_energy(&v, 5.0, 0.0) - 0.5).abs() < 1e-12);
    // at T = 0 the pseudoconformal energy is ½∫x²|u|²
    assert!((pseudoconformal_energy(&u, 5.0, 1.0) - 0.25).abs() < 1e-12);
    let defocusing = classical_energy(&u, 5.0, 1.0);
    assert!((defocusing - 0.25 - (1.0 / 3.0) / (PI * 3f64.sqrt())).abs() < 1e-12);
}

#[test]
fn admissible_pairs() {
    assert!(admissible(6.0, 6.0, 1));
    assert!(admissible(4.0, 4.0, 2));
    assert!(admissible(f64::INFINITY, 2.0, 1));
    assert!(admissible(4.0, f64::INFINITY, 1));
    assert!(!admissible(2.0, f64::INFINITY, 2));
    assert!(!admissible(5.0, 5.0, 1));
    assert!(!admissible(1.5, 6.0, 1));
    assert_eq!(diagonal_exponent(1), 6.0);
    assert_eq!(diagonal_exponent(2), 4.0);
}

fn slices_at(u0: &Field, eq: &EquationSpec, times: &[f64], dt: f64) -> Vec<Field> {
    let mut cur = u0.clone();
    let mut out = Vec::new();
    for &t in times {
        cur = evolve(&cur, t, eq, &StepControl::fixed(dt)).unwrap().last().clone();
        out.push(cur.clone());
    }
    out
}

#[test]
fn energy_decomposition_along_linear_and_nonlinear_runs() {
    let u0 = Gaussian::with_mass(1, 1.0, 0.5).sample(rig(), 0.0, Frame::Physical).unwrap();
    let taus = [0.3, 0.5, 0.8];
    let times: Vec<f64> = taus.iter().map(|t: &f64| t.tan()).collect();
    for coupling in [Coupling::Defocusing, Coupling::Linear] {
        let eq = EquationSpec::new(5.0, coupling, Frame::Physical, 1).unwrap();
        for (s, tau) in slices_at(&u0, &eq, &times, 1e-3).iter().zip(taus) {
            let e = energy_decomposition(s, 5.0, eq.mu(), &policy()).unwrap();
            assert!((e.tau - tau).abs() < 1e-12);
            assert!(e.residual < 1e-5, "{coupling:?} τ={tau}: {}", e.residual);
            assert!(e.pseudoconformal > 0.0);
        }
    }
}

#[test]
fn decomposition_rejects_lens_fields() {
    assert!(energy_decomposition(&unit_gaussian(Frame::Lens), 5.0, 1.0, &policy()).is_err());
}

#[test]
fn strichartz_norm_rejects_bad_input() {
    let u = unit_gaussian(Frame::Physical);
    assert!(strichartz_norm(std::slice::from_ref(&u), 6.0, 6.0, false).is_err());
    let later = u.clone().at_time(1.0);
    assert!(strichartz_norm(&[later.clone(), u.clone()], 6.0, 6.0, false).is_err());
    assert!(strichartz_norm(&[u.clone(), later.clone()], 5.0, 5.0, false).is_err());
    assert!(strichartz_norm(&[u, later], 5.0, 5.0, true).is_ok());
}

#[test]
fn strichartz_norm_of_a_constant_in_time_profile() {
    let u = unit_gaussian(Frame::Physical);
    let slices: Vec<Field> = (0..5).map(|k| u.clone().at_time(0.5 * k as f64)).collect();
    let r = strichartz_norm(&slices, 6.0, 6.0, false).unwrap();
    let expect = (2.0 * power_integral(&u, 5.0)).powf(1.0 / 6.0);
    assert!((r.value - expect).abs() < 1e-12);
    assert!(r.quadrature_estimate.unwrap() < 1e-14);
    let sup = strichartz_norm(&slices, f64::INFINITY, 2.0, false).unwrap();
    assert!((sup.value - 1.0).abs() < 1e-12);
}

/// The diagonal norm over `[0, tan τ]` equals the lens norm over `[0, τ]`,
/// and halving the output cadence at least quadruples the gap.
#[test]
fn diagonal_norm_is_frame_invariant() {
    let tau: f64 = 1.2;
    let slices = 25;
    let steps = 960;
    let u0 = Gaussian::with_mass(1, 1.0, 0.5).sample(rig(), 0.0, Frame::Physical).unwrap();
    let run = |f: &Field, t1: f64, frame: Frame| {
        let eq = EquationSpec::new(5.0, Coupling::Defocusing, frame, 1).unwrap();
        let c = StepControl::fixed(t1 / steps as f64).with_output_every(t1 / (slices - 1) as f64);
        evolve(f, t1, &eq, &c).unwrap().slices
    };
    let phys = run(&u0, tau.tan(), Frame::Physical);
    let lens = run(&u0.clone().in_frame(Frame::Lens), tau, Frame::Lens);
    assert_eq!(phys.len(), slices);
    assert_eq!(lens.len(), slices);
    let gap = |p: &[Field], l: &[Field]| {
        let np = strichartz_norm(p, 6.0, 6.0, false).unwrap().value;
        let nl = strichartz_norm(l, 6.0, 6.0, false).unwrap().value;
        (np - nl).abs() / nl
    };
    let fine = gap(&phys, &lens);
    let half = |s: &[Field]| s.iter().step_by(2).cloned().collect::<Vec<_>>();
    let coarse = gap(&half(&phys), &half(&lens));
    assert!(fine < 1e-3, "{fine}");
    assert!(coarse / fine > 3.2, "{}", coarse / fine);
}
