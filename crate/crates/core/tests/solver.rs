use std::f64::consts::{FRAC_PI_2, PI};

use lensnls::functionals::{classical_energy, harmonic_energy};
use lensnls::initial::Gaussian;
use lensnls::propagators::free_propagate;
use lensnls::solver::{
    evolve, ground_state_1d, ground_state_mass_1d, ground_state_numeric, ground_state_residual,
    richardson_triplet, strang_step, weight_integral, Adaptivity, Coupling, EquationSpec,
    EventKind, GroundStateOptions, StepControl,
};
use lensnls::transforms::{conjugated_time_translation, galilean_boost};
use lensnls::{AliasPolicy, Field, Frame, GridSpec, C64};

fn rig() -> GridSpec {
    GridSpec::new(1, 1024, 60.0).unwrap()
}

fn quintic(coupling: Coupling, frame: Frame) -> EquationSpec {
    EquationSpec::new(5.0, coupling, frame, 1).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn weight_integral_across_the_singular_time() {
    // with δ = w², ∫_0^{0.1} sin(δ)^{-1/2} dδ = ∫_0^{√0.1} 2w sin(w²)^{-1/2} dw
    let smooth = |w: f64| if w == 0.0 { 2.0 } else { 2.0 * w / (w * w).sin().sqrt() };
    let half = simpson(smooth, 0.0, 0.1f64.sqrt(), 2000);
    let got = weight_integral(FRAC_PI_2 - 0.1, 0.2, 4.0, 1).unwrap();
    assert!((got - 2.0 * half).abs() < 1e-10 * got, "{got} vs {}", 2.0 * half);
    // series: 2(2√0.1 + 0.1^{5/2}/30 + …)
    let series = 2.0 * (2.0 * 0.1f64.sqrt() + 0.1f64.powf(2.5) / 30.0);
    assert!((got - series).abs() < 1e-6);
    assert!((got - 1.26509).abs() < 1e-4);
}

#[test]
fn weight_integral_positive_exponent() {
    // d=1, p=7: α = 1, ∫|cos| over [0, π] = 2
    let got = weight_integral(0.0, PI, 7.0, 1).unwrap();
    assert!((got - 2.0).abs() < 1e-12);
    let got = weight_integral(-1.0, 4.0, 7.0, 1).unwrap();
    // ∫_{-1}^{π/2} cos + ∫_{π/2}^{3} -cos = (1 + sin 1) + (1 - sin 3)
    let want = 1.0 + 1f64.sin() + 1.0 - 3f64.sin();
    assert!((got - want).abs() < 1e-12);
    // d=2, p=2.5: α = -0.5 as well
    let a = weight_integral(1.0, 1.0, 2.5, 2).unwrap();
    let b = weight_integral(1.0, 1.0, 4.0, 1).unwrap();
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn linear_evolution_matches_free_propagator() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Linear, Frame::Physical);
    let traj = evolve(&f, 1.0, &eq, &StepControl::fixed(1e-3)).unwrap();
    let exact = free_propagate(&f, 1.0).unwrap();
    assert!(traj.last().sup_distance(&exact).unwrap() < 1e-8);
    assert_eq!(traj.last().t(), 1.0);
}

#[test]
fn soliton_single_step_error_is_third_order() {
    let g = rig();
    let q = ground_state_1d(g).unwrap();
    let eq = quintic(Coupling::Focusing, Frame::Physical);
    let err = |dt: f64| {
        let out = strang_step(&q, 0.0, dt, &eq).unwrap();
        out.sup_distance(&q.scaled(C64::from_polar(1.0, dt))).unwrap()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn soliton_stays_a_soliton() {
    let g = rig();
    let q = ground_state_1d(g).unwrap();
    let eq = quintic(Coupling::Focusing, Frame::Physical);
    // the phase error grows like t²·dt²; 2.5e-4 keeps it below 1e-4 at t = 5
    let traj = evolve(&q, 5.0, &eq, &StepControl::fixed(2.5e-4).with_output_every(1.0)).unwrap();
    assert!(traj.is_valid());
    for s in &traj.slices {
        let expect = q.scaled(C64::from_polar(1.0, s.t()));
        assert!(s.sup_distance(&expect).unwrap() < 1e-4, "t={}", s.t());
    }
    assert!(traj.mass_drift() < 1e-10);
}

#[test]
fn defocusing_conservation() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let traj = evolve(&f, 2.0, &eq, &StepControl::fixed(1e-3).with_output_every(0.1)).unwrap();
    assert!(traj.mass_drift() < 1e-9);
    assert!(traj.classical_energy_drift().unwrap() < 1e-6);
    assert!(traj.harmonic_energy_drift().is_none());
}

#[test]
fn lens_frame_harmonic_energy_is_conserved_at_critical_power() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Lens).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Lens);
    let traj = evolve(&f, 1.2, &eq, &StepControl::fixed(1e-3).with_output_every(0.1)).unwrap();
    assert!(traj.mass_drift() < 1e-9);
    assert!(traj.harmonic_energy_drift().unwrap() < 1e-6);
}

#[test]
fn mass_drift_over_ten_thousand_steps() {
    let g = GridSpec::new(1, 256, 40.0).unwrap();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let mut c = StepControl::fixed(1e-3).with_output_every(2.0);
    c.monitor.every = 1000;
    let traj = evolve(&f, 10.0, &eq, &c).unwrap();
    assert_eq!(traj.steps.len(), 10_000);
    assert!(traj.mass_drift() < 1e-10);
}

#[test]
fn strang_is_second_order() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    for eq in [
        quintic(Coupling::Defocusing, Frame::Physical),
        quintic(Coupling::Defocusing, Frame::Lens),
    ] {
        let f = f.clone().in_frame(eq.frame);
        let r = richardson_triplet(&f, 0.5, &eq, 0.02).unwrap();
        assert!((r.ratio - 4.0).abs() < 0.8, "{:?}: {r:?}", eq.frame);
    }
}

#[test]
fn forward_then_backward_returns_the_data() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let fwd = evolve(&f, 1.0, &eq, &StepControl::fixed(1e-3)).unwrap();
    let back = evolve(fwd.last(), 0.0, &eq, &StepControl::fixed(1e-3)).unwrap();
    assert_eq!(back.last().t(), 0.0);
    assert!(back.last().sup_distance(&f).unwrap() < 1e-6);
}

#[test]
fn adaptive_control_meets_tolerance() {
    let g = rig();
    let f = Gaussian::with_mass(1, 0.7, 2.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let mut c = StepControl::fixed(0.05);
    c.adaptive = Some(Adaptivity {
        tolerance: 1e-9,
        ..Adaptivity::default()
    });
    let traj = evolve(&f, 1.0, &eq, &c).unwrap();
    assert_eq!(traj.last().t(), 1.0);
    let reference = evolve(&f, 1.0, &eq, &StepControl::fixed(2e-4)).unwrap();
    assert!(traj.last().sup_distance(reference.last()).unwrap() < 1e-5);
    let spread = traj.steps.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    assert!(spread.0 > 0.0 && spread.1 > spread.0);
}

#[test]
fn weight_budget_shrinks_steps_near_the_singular_time() {
    // d=1, p=4: α = -1/2, weight integrable but unbounded at π/2
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 0.1).sample(g, 1.4, Frame::Lens).unwrap();
    let eq = EquationSpec::new(4.0, Coupling::Defocusing, Frame::Lens, 1).unwrap();
    let mut c = StepControl::fixed(0.01);
    c.weight_budget = Some(0.02);
    let traj = evolve(&f, 1.7, &eq, &c).unwrap();
    assert_eq!(traj.last().t(), 1.7);
    assert!(traj.mass_drift() < 1e-9);
    let min = traj.steps.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 0.01);
    let mut t = 1.4;
    for s in &traj.steps {
        assert!(weight_integral(t, *s, 4.0, 1).unwrap() <= 0.02 + 1e-15);
        t += s;
    }
}

#[test]
fn blowup_is_reported_as_an_event() {
    // lens image of the soliton grows like cos^{-1/2}τ
    let g = rig();
    let q = ground_state_1d(g).unwrap().in_frame(Frame::Lens);
    let eq = quintic(Coupling::Focusing, Frame::Lens);
    let mut c = StepControl::fixed(1e-3);
    c.monitor.sup_ceiling = 3.0;
    c.monitor.every = 1;
    let traj = evolve(&q, 1.5, &eq, &c).unwrap();
    let ev = traj.blowup().expect("ceiling crossed");
    assert_eq!(ev.kind, EventKind::SupCeiling);
    let predicted = (3f64.powf(0.25) / 3.0).powi(2).acos();
    assert!((ev.t - predicted).abs() < 5e-3, "{} vs {predicted}", ev.t);
    assert!(!traj.is_valid());
}

#[test]
fn boundary_contact_marks_the_run_invalid() {
    let g = GridSpec::new(1, 256, 20.0).unwrap();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Linear, Frame::Physical);
    let traj = evolve(&f, 6.0, &eq, &StepControl::fixed(0.01)).unwrap();
    assert!(!traj.is_valid());
    assert!(traj.events.iter().any(|e| e.kind == EventKind::BoundaryMass));
    assert!(traj.blowup().is_none());
}

#[test]
fn closed_form_ground_state() {
    let g = rig();
    let q = ground_state_1d(g).unwrap();
    assert!(ground_state_residual(&q, 5.0) < 1e-9);
    assert!((q.mass() - ground_state_mass_1d()).abs() < 1e-10);
    assert!((ground_state_mass_1d() - 1.92382).abs() < 1e-5);
    // classical energy vanishes at the critical power
    assert!(classical_energy(&q, 5.0, -1.0).abs() < 1e-6);
    // analytic second derivative: ½Q'' = A s^{1/2} - 3A s^{5/2}, s = sech(2√2x)
    let a = 3f64.powf(0.25);
    let worst = g
        .coords()
        .iter()
        .map(|x| {
            let s = 1.0 / (2.0 * 2f64.sqrt() * x).cosh();
            let half_q2 = a * s.sqrt() - 3.0 * a * s.powf(2.5);
            let qx = a * s.sqrt();
            (half_q2 + qx.powi(5) - qx).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-12);
}

#[test]
fn numeric_ground_state_matches_closed_form() {
    let g = rig();
    let q = ground_state_numeric(g, 5.0, &GroundStateOptions::default()).unwrap();
    assert!(ground_state_residual(&q, 5.0) < 1e-10);
    assert!(q.values().iter().all(|v| v.im == 0.0 && v.re > -1e-12));
    assert!(q.sup_distance(&q.reflect()).unwrap() < 1e-14);
    let exact = ground_state_1d(g).unwrap();
    assert!(q.sup_distance(&exact).unwrap() < 1e-6);
}

#[test]
fn numeric_ground_state_in_two_dimensions() {
    let g = GridSpec::new(2, 256, 30.0).unwrap();
    let opts = GroundStateOptions {
        tolerance: 1e-9,
        ..GroundStateOptions::default()
    };
    let q = ground_state_numeric(g, 3.0, &opts).unwrap();
    // Pohozaev for ½ΔQ + Q³ = Q in the plane: ∫|∇Q|² = ∫Q⁴ = 2∫Q²
    let kin = q.kinetic_integral();
    let pot = lensnls::functionals::power_integral(&q, 3.0);
    assert!((kin - pot).abs() < 1e-6 * kin, "{kin} {pot}");
    assert!((pot - 2.0 * q.mass()).abs() < 1e-6 * pot, "{pot} {}", q.mass());
}

#[test]
fn conjugated_translation_maps_solutions_to_solutions() {
    // run the critical defocusing equation, map a slice, evolve the image,
    // and compare against the image of the later slice
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 0.5).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let s = 0.5;
    let traj = evolve(&f, 1.2, &eq, &StepControl::fixed(5e-4).with_output_every(0.05)).unwrap();
    let policy = AliasPolicy::default();
    let a = conjugated_time_translation(traj.slice_at(0.2).unwrap(), s, &policy).unwrap();
    // image of t' = 0.2 lives at t = 0.7/0.9; pick the t' whose image is 0.2 later
    let t_img = a.t() + 0.2;
    let t_src = (t_img - s) / (1.0 + t_img * s);
    let evolved = evolve(&a, t_img, &eq, &StepControl::fixed(5e-4)).unwrap();
    let src = evolve(traj.slice_at(0.2).unwrap(), t_src, &eq, &StepControl::fixed(5e-4)).unwrap();
    let b = conjugated_time_translation(src.last(), s, &policy).unwrap();
    assert!((b.t() - t_img).abs() < 1e-12);
    assert!(evolved.last().sup_distance(&b).unwrap() < 1e-4);
}

#[test]
fn boosted_trajectory_solves_the_equation() {
    let g = rig();
    let f = Gaussian::with_mass(1, 1.0, 1.0).sample(g, 0.0, Frame::Physical).unwrap();
    let eq = quintic(Coupling::Defocusing, Frame::Physical);
    let c = StepControl::fixed(1e-3).with_output_every(0.5);
    let base = evolve(&f, 1.0, &eq, &c).unwrap();
    let boosted = evolve(&galilean_boost(&f, &[1.0]).unwrap(), 1.0, &eq, &c).unwrap();
    for (a, b) in base.slices.iter().zip(&boosted.slices) {
        let image = galilean_boost(a, &[1.0]).unwrap();
        assert!(image.sup_distance(b).unwrap() < 1e-4, "t={}", a.t());
    }
}

#[test]
fn harmonic_energy_of_hermite_ground_state() {
    let g = rig();
    let psi = lensnls::initial::hermite(g, &[0], Frame::Lens).unwrap();
    assert!((harmonic_energy(&psi, 5.0, 0.0) - 0.5).abs() < 1e-12);
    let g2 = GridSpec::new(2, 64, 16.0).unwrap();
    let psi2 = lensnls::initial::hermite(g2, &[0, 0], Frame::Lens).unwrap();
    assert!((harmonic_energy(&psi2, 3.0, 0.0) - 1.0).abs() < 1e-12);
    let _ = Field::zeros(g, 0.0, Frame::Lens);
}
