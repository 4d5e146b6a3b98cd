//! Independent oracles shared by the integration and acceptance tests. Nothing
//! here calls into the library's derivative or quadrature code.
#![allow(dead_code)]

use husimi_flow::experiment::{preset, run_snapshot_pipeline, Snapshot, SnapshotOptions};
use husimi_flow::phase_space::PhaseSpaceConfig;
use num_complex::Complex;

pub type C64 = Complex<f64>;

/// Desk-preset snapshot with stability checks.
pub fn desk_snapshot(p0: f64, t: f64) -> Snapshot {
    let spec = preset("desk").unwrap();
    run_snapshot_pipeline(&spec, p0, &[t], &SnapshotOptions::default()).unwrap().pop().unwrap()
}

/// Averaged barrier Hamiltonian written as a function of two independent
/// complex variables `w` (standing in for z̄) and `z`.
pub fn barrier_h(cfg: &PhaseSpaceConfig<f64>, w: C64, z: C64) -> C64 {
    let (sx, sp) = (cfg.sigma_x(), cfg.sigma_p());
    let x = (z + w) * sx;
    let p = (z - w) * C64::new(0.0, -sp);
    let alpha = 1.0 / (1.0 + 2.0 * cfg.k() * sx * sx).sqrt();
    p * p / (2.0 * cfg.mass())
        + cfg.hbar() * cfg.omega() / 4.0
        + alpha * cfg.v0() * (-(alpha * alpha * cfg.k()) * x * x).exp()
}

/// All mixed partials `∂^{a+b} f / ∂w^a ∂z^b`, `a + b ≤ max`, by the
/// finite-difference stencil on `m × m` points of two circles of radius `r`
/// (a bivariate Lyness–Moler/Fornberg complex-step formula). `out[a][b]`.
pub fn circle_partials(f: impl Fn(C64, C64) -> C64, w0: C64, z0: C64, max: usize, r: f64, m: usize) -> Vec<Vec<C64>> {
    let roots: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64)).collect();
    let samples: Vec<Vec<C64>> =
        roots.iter().map(|&u| roots.iter().map(|&v| f(w0 + u * r, z0 + v * r)).collect()).collect();
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let mut out = vec![vec![C64::new(0.0, 0.0); max + 1]; max + 1];
    for a in 0..=max {
        for b in 0..=max - a {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..m {
                for k in 0..m {
                    s += samples[j][k] * roots[(j * a) % m].conj() * roots[(k * b) % m].conj();
                }
            }
            out[a][b] = s * (fact(a) * fact(b) / ((m * m) as f64 * r.powi((a + b) as i32)));
        }
    }
    out
}

/// `⟨z|V|z⟩` for the bare barrier by trapezoid quadrature against the
/// coherent-state position density `N(xc, σx²)`.
pub fn averaged_barrier_quadrature(cfg: &PhaseSpaceConfig<f64>, xc: f64) -> f64 {
    let sx = cfg.sigma_x();
    let n = 4001;
    let h = 24.0 * sx / (n - 1) as f64;
    let mut s = 0.0;
    for i in 0..n {
        let x = xc - 12.0 * sx + h * i as f64;
        let g = (-(x - xc).powi(2) / (2.0 * sx * sx)).exp() / (std::f64::consts::TAU.sqrt() * sx);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += w * g * cfg.v0() * (-cfg.k() * x * x).exp();
    }
    s * h
}

/// Seeded generator for reproducible sample points.
pub fn rng(seed: u64) -> rand::rngs::StdRng {
    rand::SeedableRng::seed_from_u64(seed)
}
