use approx::assert_relative_eq;
use husimi_flow::io::{read_wavefunction, write_wavefunction, Header};
use husimi_flow::phase_space::{GridSpec, PhaseSpaceConfig, Potential};
use husimi_flow::propagator::{evolve, initial_coherent_state, SplitOperator, WavefunctionGrid};
use husimi_flow::Error;
use std::f64::consts::TAU;

fn paper() -> PhaseSpaceConfig<f64> {
    PhaseSpaceConfig::paper()
}

fn wide() -> PhaseSpaceConfig<f64> {
    paper().with_grid(GridSpec { x_min: -20.0, x_max: 20.0, dx: 0.0025, dt: 0.01 }).unwrap()
}

/// `‖a − b‖` in L².
fn distance(a: &WavefunctionGrid<f64>, b: &WavefunctionGrid<f64>) -> f64 {
    (a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * a.dx).sqrt()
}

/// Distance between rays, blind to a global phase.
fn ray_distance(a: &WavefunctionGrid<f64>, b: &WavefunctionGrid<f64>) -> f64 {
    (2.0 * (1.0 - a.overlap(b).norm())).max(0.0).sqrt()
}

#[test]
fn initial_state_moments() {
    let c = paper();
    let psi = initial_coherent_state(-4.0, 1.8, &c).unwrap();
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    assert!((psi.expectation_x() + 4.0).abs() < 1e-8);
    assert!((psi.expectation_p(c.hbar()) - 1.8).abs() < 1e-8);

    let g = initial_coherent_state(0.0, 0.0, &c).unwrap();
    let peak = g.samples.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    assert!(peak.re > 0.0 && peak.im == 0.0);
}

#[test]
fn free_packet_moves_at_constant_speed() {
    let c = paper().with_potential(Potential::Free);
    let mut psi = initial_coherent_state(-2.0, 1.5, &c).unwrap();
    let mut op = SplitOperator::new(&c);
    let mut prev = psi.expectation_x();
    for _ in 0..100 {
        op.step(&mut psi).unwrap();
        let x = psi.expectation_x();
        assert!((x - prev - 1.5 * c.dt()).abs() < 1e-8, "{}", x - prev);
        prev = x;
    }
    assert!((psi.expectation_p(c.hbar()) - 1.5).abs() < 1e-8);
}

#[test]
fn harmonic_period_returns_the_packet() {
    let c = paper().with_potential(Potential::Harmonic).with_dt(TAU / 700.0).unwrap();
    let psi0 = initial_coherent_state(0.5, 0.0, &c).unwrap();
    let mut psi = psi0.clone();
    SplitOperator::new(&c).run(&mut psi, 700).unwrap();
    let f = psi.fidelity(&psi0);
    assert!(f >= 1.0 - 1e-6, "fidelity {f}");
}

#[test]
fn norm_holds_over_a_thousand_steps() {
    // Mostly reflected at p0 = 1.2, so the packet stays inside the wide grid.
    let c = wide();
    let mut psi = initial_coherent_state(-2.0, 1.2, &c).unwrap();
    SplitOperator::new(&c).run(&mut psi, 1000).unwrap();
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-9, "{}", psi.norm_sqr());
}

#[test]
fn backward_steps_undo_forward_steps() {
    let c = wide();
    let psi0 = initial_coherent_state(-4.0, 1.8, &c).unwrap();
    let mut psi = psi0.clone();
    SplitOperator::new(&c).run(&mut psi, 300).unwrap();
    SplitOperator::with_time_step(&c, -c.dt()).run(&mut psi, 300).unwrap();
    assert!(distance(&psi, &psi0) < 1e-8, "{}", distance(&psi, &psi0));
}

#[test]
fn second_order_in_the_time_step() {
    // Start on the barrier flank so the potential splitting error matters.
    let base = paper();
    let run = |dt: f64| {
        let c = base.with_dt(dt).unwrap();
        let psi = initial_coherent_state(-1.0, 1.8, &c).unwrap();
        evolve(&psi, 1.0, &[], &c).unwrap().pop().unwrap()
    };
    let reference = run(0.01 / 16.0);
    let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| ray_distance(&run(dt), &reference)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.0).contains(&ratio), "errors {errs:?}");
    }
}

#[test]
fn evolve_edge_cases() {
    let c = paper();
    let psi0 = initial_coherent_state(-4.0, 1.8, &c).unwrap();
    let out = evolve(&psi0, 0.0, &[], &c).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0], psi0);

    let out = evolve(&psi0, 0.5, &[], &c).unwrap();
    assert_eq!(out.len(), 1);
    assert_relative_eq!(out[0].time, 0.5, max_relative = 1e-12);

    let times: Vec<f64> = (0..9).map(|k| 1.7 + 0.1 * k as f64).collect();
    let out = evolve(&psi0, 2.5, &times, &c).unwrap();
    assert_eq!(out.len(), 10);
    for (s, t) in out.iter().zip(&times) {
        assert_relative_eq!(s.time, *t, max_relative = 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn rejected_requests() {
    let c = paper();
    let psi0 = initial_coherent_state(-4.0, 1.8, &c).unwrap();
    assert!(matches!(evolve(&psi0, 1.0, &[0.015], &c), Err(Error::SnapshotTime(_))));
    assert!(matches!(evolve(&psi0, 1.0, &[2.0], &c), Err(Error::InvalidConfig(_))));
    assert!(matches!(initial_coherent_state(-9.9, 1.0, &c), Err(Error::InvalidConfig(_))));

    let near = c.x_min() + 5.5 * c.sigma_x();
    assert!(matches!(initial_coherent_state(near, 0.0, &c), Err(Error::InitialStateTooWide { .. })));

    let small = c
        .with_potential(Potential::Free)
        .with_grid(GridSpec { x_min: -2.0, x_max: 2.0, dx: 0.0025, dt: 0.01 })
        .unwrap();
    let mut psi = initial_coherent_state(0.0, 2.0, &small).unwrap();
    let err = SplitOperator::new(&small).run(&mut psi, 200).unwrap_err();
    assert!(matches!(err, Error::BoundaryContamination { .. }));
    assert!(err.is_physics_failure());
}

#[test]
fn dump_reloads_bit_exact() {
    let c = paper();
    let psi0 = initial_coherent_state(-4.0, 1.8, &c).unwrap();
    let psi = evolve(&psi0, 0.37, &[], &c).unwrap().pop().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    write_wavefunction(&path, &Header::new("abc123"), &psi).unwrap();
    let (back, hash) = read_wavefunction(&path).unwrap();
    assert_eq!(hash, "abc123");
    assert_eq!(back, psi);
}
