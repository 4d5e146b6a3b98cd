use husimi_flow::classical::{
    classical_pullback, classical_transmission, exit_radius, hamilton_rhs, integrate, trajectory_bundle,
    TransmissionOptions,
};
use husimi_flow::husimi::PhaseSpaceWindow;
use husimi_flow::phase_space::{PhaseSpaceConfig, Physics};
use husimi_flow::Error;

fn cfg() -> PhaseSpaceConfig<f64> {
    PhaseSpaceConfig::paper()
}

/// Initial Husimi density of the coherent state at `(x0, p0)`.
fn launch_density(c: &PhaseSpaceConfig<f64>, x0: f64, p0: f64) -> impl Fn(f64, f64) -> Option<f64> + Sync + '_ {
    move |x, p| Some((-(c.z_from_xp(x, p) - c.z_from_xp(x0, p0)).norm_sqr()).exp())
}

#[test]
fn rhs_examples() {
    let c = cfg();
    assert_eq!(hamilton_rhs(&c, 0.0, 2.0), (2.0, 0.0));
    // -V'(x) = 2kV0 x e^{-kx²}
    let (_, f) = hamilton_rhs(&c, -0.5, 0.0);
    assert!((f - 2.0 * 3.0 * 2.0 * -0.5 * (-0.75f64).exp()).abs() < 1e-14);
    assert!((exit_radius(&c) - 3.0 / 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn trajectories_cross_or_bounce() {
    let c = cfg();
    let bundle = trajectory_bundle(&c, &[(-4.0, 2.05), (-4.0, 1.95)], 6.0, 1e-3, 500).unwrap();
    let (_, x, p) = bundle[0].last();
    assert!(x > 0.0 && p > 0.0);
    let (_, x, p) = bundle[1].last();
    assert!(x < 0.0 && p < 0.0);
    for t in &bundle {
        assert_eq!(t.samples[0], (0.0, -4.0, t.initial.1));
        let (_, x, p) = t.last();
        assert!((c.classical_energy(x, p) - t.energy).abs() / t.energy < 1e-8);
    }
}

#[test]
fn bad_steps_are_reported() {
    let c = cfg();
    assert!(matches!(integrate(&c, -4.0, 2.0, 1.0, 0.0, 1), Err(Error::InvalidConfig(_))));
    let err = integrate(&c, -1.0, 1.9, 3.0, 0.2, 1).unwrap_err();
    assert!(matches!(err, Error::EnergyDrift { .. }) && err.is_physics_failure());
    let opts = TransmissionOptions { np: 1, ..TransmissionOptions::for_config(&c) };
    assert!(matches!(classical_transmission(&c, -4.0, 1.8, &opts), Err(Error::InvalidConfig(_))));
}

#[test]
fn half_transmission_at_the_critical_momentum() {
    let c = cfg();
    let r = classical_transmission(&c, -4.0, c.critical_momentum(), &TransmissionOptions::for_config(&c)).unwrap();
    assert!((r.transmitted - 0.5).abs() < 2e-3, "{}", r.transmitted);
    assert!((r.transmitted + r.reflected - 1.0).abs() < 1e-15);
}

#[test]
fn transmission_below_the_barrier_is_partial() {
    let c = cfg();
    let r = classical_transmission(&c, -4.0, 1.8, &TransmissionOptions::for_config(&c)).unwrap();
    assert!(r.transmitted > 0.0 && r.transmitted < 0.5, "{}", r.transmitted);
    assert!((r.transmitted - r.coarse).abs() <= 1e-3);
}

#[test]
fn no_barrier_transmits_everything() {
    let c = cfg();
    let flat = c.with_physics(Physics { v0: 0.0, ..*c.physics() }).unwrap();
    let r = classical_transmission(&flat, -4.0, 1.8, &TransmissionOptions::for_config(&flat)).unwrap();
    assert_eq!(r.transmitted, 1.0);
    assert_eq!(r.reflected, 0.0);
}

#[test]
fn pullback_at_time_zero_is_the_identity() {
    let c = cfg();
    let w = PhaseSpaceWindow::new(-4.5, -3.5, 1.3, 2.3, 21, 21).unwrap();
    let init = launch_density(&c, -4.0, 1.8);
    let q = classical_pullback(&init, &c, 0.0, &w, 1e-3).unwrap();
    for idx in 0..w.len() {
        let (i, j) = w.coords(idx);
        assert_eq!(q[idx], init(w.x(i), w.p(j)).unwrap());
    }
}

#[test]
fn density_is_carried_along_trajectories() {
    let c = cfg();
    let t = 2.1;
    let (_, x1, p1) = integrate(&c, -4.0, 1.8, t, 1e-3, 1000).unwrap().last();
    let w = PhaseSpaceWindow::new(x1, x1 + 0.01, p1, p1 + 0.01, 2, 2).unwrap();
    let q = classical_pullback(launch_density(&c, -4.0, 1.8), &c, t, &w, 1e-3).unwrap();
    assert!((q[0] - 1.0).abs() < 1e-6, "{}", q[0]);
}

#[test]
fn transported_mass_is_conserved() {
    let c = cfg();
    let w = PhaseSpaceWindow::new(-3.0, 3.0, -3.0, 3.0, 241, 241).unwrap();
    let q = classical_pullback(launch_density(&c, -4.0, 1.8), &c, 2.1, &w, 1e-3).unwrap();
    let mass = q.iter().sum::<f64>() * w.cell_x() * w.cell_p() / (std::f64::consts::TAU * c.hbar());
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
}
