use husimi_flow::classical::TransmissionOptions;
use husimi_flow::experiment::{
    preset, quantum_transmission, run_snapshot_pipeline, run_transmission_sweep, validate, QuantumRunOptions,
    SnapshotOptions,
};
use husimi_flow::io::ConfigFile;
use husimi_flow::phase_space::Physics;
use husimi_flow::Error;

#[test]
fn flat_potential_transmits_everything() {
    let mut spec = preset("desk").unwrap();
    spec.cfg = spec.cfg.with_physics(Physics { v0: 0.0, ..*spec.cfg.physics() }).unwrap();
    let classical = TransmissionOptions::for_config(&spec.cfg);
    let sweep = run_transmission_sweep(&[1.8, 2.2], &spec, &QuantumRunOptions::default(), &classical);
    assert_eq!(sweep.rows.len(), 2);
    for row in sweep.ok_rows() {
        assert!((row.t_q - 1.0).abs() < 1e-9, "{row:?}");
        assert_eq!(row.t_c, 1.0);
        assert!(row.d_t.abs() < 1e-9);
        assert!(row.norm_drift < 1e-9);
    }
    assert_eq!(sweep.ok_rows().count(), 2);
}

#[test]
fn transmission_and_reflection_add_up() {
    let spec = preset("desk").unwrap();
    let q = quantum_transmission(&spec.cfg, spec.x0, 1.9, &QuantumRunOptions::default()).unwrap();
    assert!(q.transmitted > 0.0 && q.transmitted < 1.0);
    assert!((q.transmitted + q.reflected - 1.0).abs() < 1e-15);
    assert!(q.t_final > 0.0 && q.t_final < 8.0);
}

#[test]
fn a_too_tight_norm_tolerance_is_a_physics_failure() {
    let spec = preset("desk").unwrap();
    let opts = QuantumRunOptions { norm_tol: 0.0, t_cap: 1.0, ..Default::default() };
    match quantum_transmission(&spec.cfg, spec.x0, 1.9, &opts) {
        Err(e @ Error::NormLoss { .. }) => assert!(e.is_physics_failure()),
        // Drift of exactly zero is possible in principle; then the run simply succeeds.
        Ok(q) => assert_eq!(q.norm_drift, 0.0),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn no_times_no_snapshots() {
    let spec = preset("desk").unwrap();
    assert!(run_snapshot_pipeline(&spec, 1.8, &[], &SnapshotOptions::default()).unwrap().is_empty());
}

#[test]
fn snapshots_come_back_in_time_order() {
    let spec = preset("desk").unwrap();
    let opts = SnapshotOptions { check_stability: false, zeros_only: true, ..Default::default() };
    let snaps = run_snapshot_pipeline(&spec, 1.8, &[2.2, 2.1], &opts).unwrap();
    let times: Vec<f64> = snaps.iter().map(|s| s.time).collect();
    assert_eq!(times.len(), 2);
    assert!(times.contains(&2.1) && times.contains(&2.2));
    for s in &snaps {
        assert!(s.current.is_none() && s.stagnation.is_none());
        assert!((s.psi.time - s.time).abs() < 1e-12);
    }
}

#[test]
fn desk_validation_passes() {
    let spec = preset("desk").unwrap();
    let checks = validate(&spec, 1.8, 1.0).unwrap();
    assert_eq!(checks.len(), 4);
    for c in &checks {
        assert!(c.pass, "{}: {} (limit {})", c.name, c.value, c.limit);
    }
}

#[test]
fn config_overrides_and_hash() {
    let base = preset("desk").unwrap();
    let file = ConfigFile::parse(
        r#"
        [physics]
        v0 = 1.5
        [window]
        nx = 50
        [run]
        trunc_order = 4
        "#,
    )
    .unwrap();
    let spec = base.apply(&file).unwrap();
    assert_eq!(spec.cfg.v0(), 1.5);
    assert_eq!(spec.window.nx, 50);
    assert_eq!(spec.window.np, base.window.np);
    assert_eq!(spec.cfg.trunc_order(), 4);
    assert_eq!(spec.cfg.dx(), base.cfg.dx());
    assert_ne!(spec.hash(), base.hash());
    assert_eq!(base.hash(), preset("desk").unwrap().hash());
    assert_eq!(base.hash().len(), 16);
    assert_ne!(base.hash_with("p0=1.8"), base.hash_with("p0=1.9"));
    // An empty file changes nothing.
    assert_eq!(base.apply(&ConfigFile::default()).unwrap(), base);
}

#[test]
fn bad_configs_are_rejected() {
    assert!(matches!(ConfigFile::parse("[physics]\nplanck = 1.0\n"), Err(Error::Parse(_))));
    assert!(matches!(ConfigFile::parse("[grid\n"), Err(Error::Parse(_))));
    let base = preset("desk").unwrap();
    let neg = ConfigFile::parse("[physics]\nhbar = -0.01\n").unwrap();
    assert!(matches!(base.apply(&neg), Err(Error::InvalidConfig(_))));
    let empty = ConfigFile::parse("[window]\nx_lo = 1.0\nx_hi = 0.0\n").unwrap();
    assert!(base.apply(&empty).is_err());
    assert!(matches!(preset("laptop"), Err(Error::InvalidConfig(_))));
}
