mod common;

use approx::assert_relative_eq;
use husimi_flow::phase_space::{GridSpec, PhaseSpaceConfig, Physics, Potential};
use husimi_flow::Error;
use num_complex::Complex;
use rand::Rng;

use common::{rng, C64};

fn cfg() -> PhaseSpaceConfig<f64> {
    PhaseSpaceConfig::paper()
}

/// Trapezoid sum over the coordinate grid.
fn integrate(cfg: &PhaseSpaceConfig<f64>, f: impl Fn(f64) -> C64) -> C64 {
    let n = cfg.grid_len();
    (0..n).map(|i| f(cfg.x_min() + cfg.dx() * i as f64)).sum::<C64>() * cfg.dx()
}

#[test]
fn label_of_origin_and_launch_point() {
    let c = cfg();
    assert_eq!(c.z_from_xp(0.0, 0.0), Complex::new(0.0, 0.0));
    // σx = σp = 1/(10√2): z = x/(2σx) + i p/(2σp).
    let z = c.z_from_xp(-4.0, 1.8);
    let s2 = 2f64.sqrt();
    assert_relative_eq!(z.re, -20.0 * s2, max_relative = 1e-14);
    assert_relative_eq!(z.im, 9.0 * s2, max_relative = 1e-14);
    assert_eq!(c.xp_from_z(Complex::new(0.0, 0.0)), (0.0, 0.0));
    let (x, p) = c.xp_from_z(Complex::new(0.0, 1.0));
    assert_eq!(x, 0.0);
    assert_relative_eq!(p, 2.0 * c.sigma_p(), max_relative = 1e-15);
}

#[test]
fn widths_follow_the_constants() {
    for (hbar, m, w) in [(0.01f64, 1.0f64, 1.0f64), (0.3, 2.0, 0.5), (1e-4, 0.1, 7.0)] {
        let c = PhaseSpaceConfig::new(
            Physics { hbar, mass: m, omega: w, v0: 2.0, k: 3.0, potential: Potential::GaussianBarrier },
            GridSpec { x_min: -10.0, x_max: 10.0, dx: 0.01, dt: 0.01 },
            4,
        )
        .unwrap();
        assert_relative_eq!(c.sigma_x(), (hbar / (2.0 * m * w)).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(c.sigma_x() * c.sigma_p(), hbar / 2.0, max_relative = 1e-14);
    }
    // σx ∝ √ħ: quadrupling ħ doubles both widths.
    let c = cfg().with_hbar(0.04).unwrap();
    assert_relative_eq!(c.sigma_x(), 2.0 * cfg().sigma_x(), max_relative = 1e-14);
    assert_relative_eq!(c.sigma_p(), 2.0 * cfg().sigma_p(), max_relative = 1e-14);
}

#[test]
fn invalid_configs_are_rejected() {
    let physics = *cfg().physics();
    let grid = *cfg().grid();
    let bad = |p: Physics<f64>, g: GridSpec<f64>| matches!(PhaseSpaceConfig::new(p, g, 2), Err(Error::InvalidConfig(_)));
    assert!(bad(Physics { hbar: 0.0, ..physics }, grid));
    assert!(bad(Physics { mass: -1.0, ..physics }, grid));
    assert!(bad(physics, GridSpec { dx: 0.0, ..grid }));
    assert!(bad(physics, GridSpec { dt: -0.1, ..grid }));
    assert!(bad(physics, GridSpec { x_min: 1.0, x_max: -1.0, ..grid }));
}

#[test]
fn kernel_is_normalized() {
    let c = cfg();
    let z = c.z_from_xp(-4.0, 1.8);
    let norm = integrate(&c, |x| Complex::new(c.coherent_kernel(z, x).norm_sqr(), 0.0));
    assert!((norm.re - 1.0).abs() < 1e-10, "{norm}");
}

#[test]
fn overlap_law_by_quadrature() {
    let c = cfg();
    let mut g = rng(11);
    for _ in 0..25 {
        let z0 = c.z_from_xp(g.random_range(-3.0..3.0), g.random_range(-2.5..2.5));
        let z = z0 + Complex::new(g.random_range(-3.0..3.0), g.random_range(-3.0..3.0));
        let ov = integrate(&c, |x| c.coherent_kernel(z, x).conj() * c.coherent_kernel(z0, x));
        assert!((ov.norm_sqr() - (-(z - z0).norm_sqr()).exp()).abs() < 1e-8);
        assert!((ov - c.coherent_overlap(z, z0)).norm() < 1e-8, "{ov} vs {}", c.coherent_overlap(z, z0));
    }
}

#[test]
fn ground_state_kernel_is_real_positive() {
    let c = cfg();
    let zero = Complex::new(0.0, 0.0);
    for x in [-0.3, 0.0, 0.1, 0.25] {
        let k = c.coherent_kernel(zero, x);
        assert!(k.re > 0.0 && k.im == 0.0);
    }
}

#[test]
fn critical_momentum_and_energy() {
    let c = cfg();
    assert_relative_eq!(c.critical_momentum(), 2.0, max_relative = 1e-15);
    assert_relative_eq!(c.classical_energy(0.0, 0.0), 2.0, max_relative = 1e-15);
    assert_relative_eq!(c.classical_energy(-40.0, 2.0), 2.0, max_relative = 1e-15);
}
