//! The Gaussian-barrier experiment: presets, transmission sweeps and the
//! snapshot pipeline (Husimi field → current → zeros → stagnation points).
//!
//! Orchestration runs in `f64`; the numerical core underneath stays generic.

use log::{info, warn};
use rayon::prelude::*;

use crate::classical::{classical_transmission, TransmissionOptions};
use crate::current::{quantum_current, CurrentField, CurrentSampler};
use crate::error::{Error, Result};
use crate::hamiltonian::AveragedHamiltonian;
use crate::husimi::{
    find_zeros, husimi_field, husimi_field_with_depth, mark_stability, HusimiField, HusimiSampler, HusimiZero,
    PhaseSpaceWindow, Stability, ZeroOptions, ZeroSearch,
};
use crate::io::RunSpec;
use crate::phase_space::PhaseSpaceConfig;
use crate::propagator::{evolve, initial_coherent_state, SplitOperator, WavefunctionGrid};
use crate::topology::{find_stagnation_points, pair_dipoles, DipolePairing, StagnationOptions, StagnationReport};

/// Barrier interaction region used as the default Husimi window.
const ACTION_REGION: (f64, f64, f64, f64) = (-3.0, 3.0, -3.0, 3.0);

/// Named parameter sets. `paper` follows the published grid, `desk` is the
/// laptop-scale variant (coarser grid, smaller window, lower order).
pub fn preset(name: &str) -> Result<RunSpec> {
    let (lo, hi, plo, phi) = ACTION_REGION;
    let base = PhaseSpaceConfig::<f64>::paper();
    let (cfg, n) = match name {
        "paper" => (base, 500),
        "desk" => (base.with_dx(0.01)?.with_trunc_order(6), 200),
        other => return Err(Error::InvalidConfig(format!("unknown preset {other:?} (paper, desk)"))),
    };
    Ok(RunSpec { preset: name.to_string(), cfg, window: PhaseSpaceWindow::new(lo, hi, plo, phi, n, n)?, x0: -4.0 })
}

/// Default sweep grid.
pub fn default_momenta() -> Vec<f64> {
    (0..=8).map(|i| 1.6 + 0.1 * i as f64).map(|p| (p * 10.0).round() / 10.0).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct QuantumRunOptions {
    /// Hard stop.
    pub t_cap: f64,
    /// Stop once the mass with `|x| < 1/√k` drops below this.
    pub inner_mass: f64,
    /// Largest tolerated `| |ψ|² - 1 |`.
    pub norm_tol: f64,
    /// Half-width of the coordinate grid for transmission runs. Near the
    /// critical momentum the barrier region empties slowly while the fast
    /// transmitted tail already reaches `|x| = 10`.
    pub half_width: Option<f64>,
}

impl Default for QuantumRunOptions {
    fn default() -> Self {
        Self { t_cap: 8.0, inner_mass: 1e-4, norm_tol: 1e-8, half_width: Some(20.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumTransmission {
    pub transmitted: f64,
    pub reflected: f64,
    pub t_final: f64,
    /// Largest `| |ψ|² - |ψ0|² |` seen on any step.
    pub norm_drift: f64,
}

/// Propagates a coherent state from `(x0, p0)` until the barrier region has
/// emptied (or `t_cap`) and splits the mass at `x = 0`.
pub fn quantum_transmission(
    cfg: &PhaseSpaceConfig<f64>,
    x0: f64,
    p0: f64,
    opts: &QuantumRunOptions,
) -> Result<QuantumTransmission> {
    let widened;
    let cfg = match opts.half_width {
        Some(h) => {
            let mut g = *cfg.grid();
            g.x_min = -h;
            g.x_max = h;
            widened = cfg.with_grid(g)?;
            &widened
        }
        None => cfg,
    };
    let mut psi = initial_coherent_state(x0, p0, cfg)?;
    let n0 = psi.norm_sqr();
    let inner = if cfg.k() > 0.0 { cfg.k().sqrt().recip() } else { 0.0 };
    let mut op = SplitOperator::new(cfg);
    let max_steps = (opts.t_cap / cfg.dt()).round() as usize;
    let mut drift: f64 = 0.0;
    let mut entered = false;
    for step in 1..=max_steps {
        op.step(&mut psi)?;
        psi.time = cfg.dt() * step as f64;
        let norm = psi.norm_sqr();
        drift = drift.max((norm - n0).abs());
        if drift > opts.norm_tol {
            return Err(Error::NormLoss { time: psi.time, norm });
        }
        let m = psi.mass_where(|x| x.abs() < inner);
        // The packet starts outside the barrier region; wait until it has
        // visited before applying the emptiness test.
        entered |= m >= opts.inner_mass;
        if entered && m < opts.inner_mass {
            break;
        }
    }
    let transmitted = psi.mass_where(|x| x > 0.0) / psi.norm_sqr();
    Ok(QuantumTransmission { transmitted, reflected: 1.0 - transmitted, t_final: psi.time, norm_drift: drift })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p0: f64,
    pub t_q: f64,
    pub t_c: f64,
    pub r_q: f64,
    pub r_c: f64,
    pub d_t: f64,
    pub d_r: f64,
    /// Classical weight above the barrier energy.
    pub t_c_energy: f64,
    pub t_final: f64,
    pub norm_drift: f64,
}

impl SweepRow {
    fn new(p0: f64, q: &QuantumTransmission, t_c: f64, t_c_energy: f64) -> Self {
        let r_c = 1.0 - t_c;
        Self {
            p0,
            t_q: q.transmitted,
            t_c,
            r_q: q.reflected,
            r_c,
            d_t: (t_c - q.transmitted) / t_c,
            d_r: (r_c - q.reflected) / r_c,
            t_c_energy,
            t_final: q.t_final,
            norm_drift: q.norm_drift,
        }
    }
}

#[derive(Debug)]
pub struct SweepResult {
    /// One entry per requested momentum, in input order; failed rows keep their error.
    pub rows: Vec<(f64, std::result::Result<SweepRow, Error>)>,
}

impl SweepResult {
    pub fn ok_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    pub fn row(&self, p0: f64) -> Option<&SweepRow> {
        self.ok_rows().find(|r| (r.p0 - p0).abs() < 1e-12)
    }
}

/// Quantum and classical transmission for each `p0`; rows run concurrently.
pub fn run_transmission_sweep(
    momenta: &[f64],
    spec: &RunSpec,
    quantum: &QuantumRunOptions,
    classical: &TransmissionOptions<f64>,
) -> SweepResult {
    let rows = momenta
        .par_iter()
        .map(|&p0| {
            let row = (|| {
                let q = quantum_transmission(&spec.cfg, spec.x0, p0, quantum)?;
                let c = classical_transmission(&spec.cfg, spec.x0, p0, classical)?;
                Ok(SweepRow::new(p0, &q, c.transmitted, c.above_barrier))
            })();
            match &row {
                Ok(r) => info!("p0 = {p0}: T_Q = {:.6}, T_C = {:.6}, t_final = {}", r.t_q, r.t_c, r.t_final),
                Err(e) => warn!("p0 = {p0}: row failed: {e}"),
            }
            (p0, row)
        })
        .collect();
    SweepResult { rows }
}

#[derive(Clone, Copy, Debug)]
pub struct SnapshotOptions {
    pub zeros: ZeroOptions<f64>,
    pub stagnation: StagnationOptions<f64>,
    /// Largest saddle/partner distance, in `z` units.
    pub max_sep: f64,
    /// Cross-check zeros on a second grid and a shifted window.
    pub check_stability: bool,
    pub keep_components: bool,
    /// Skip current and topology (zeros only).
    pub zeros_only: bool,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        Self {
            zeros: ZeroOptions::default(),
            stagnation: StagnationOptions::default(),
            max_sep: 1.0,
            check_stability: true,
            keep_components: false,
            zeros_only: false,
        }
    }
}

pub struct Snapshot {
    pub time: f64,
    pub psi: WavefunctionGrid<f64>,
    pub husimi: HusimiField<f64>,
    pub zeros: ZeroSearch<f64>,
    pub current: Option<CurrentField<f64>>,
    pub stagnation: Option<StagnationReport<f64>>,
    pub pairing: Option<DipolePairing<f64>>,
}

/// Coordinate spacing of the cross-check grid: `2dx` when its Nyquist
/// momentum still covers the window, `dx/2` otherwise.
pub fn partner_dx(cfg: &PhaseSpaceConfig<f64>, window: &PhaseSpaceWindow<f64>) -> f64 {
    let coarse = 2.0 * cfg.dx();
    let p_nyquist = std::f64::consts::PI * cfg.hbar() / coarse;
    if p_nyquist > window.p_lo.abs().max(window.p_hi.abs()) {
        coarse
    } else {
        0.5 * cfg.dx()
    }
}

/// Zeros of the same run propagated on the cross-check grid, per time.
fn zero_references(
    spec: &RunSpec,
    p0: f64,
    times: &[f64],
    opts: &SnapshotOptions,
) -> Result<Vec<Vec<HusimiZero<f64>>>> {
    let cfg2 = spec.cfg.with_dx(partner_dx(&spec.cfg, &spec.window))?;
    let psi0 = initial_coherent_state(spec.x0, p0, &cfg2)?;
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let mut states = evolve(&psi0, t_end, times, &cfg2)?;
    states.pop();
    states
        .iter()
        .map(|psi| {
            let f = husimi_field_with_depth(psi, &spec.window, &cfg2, 1)?;
            Ok(find_zeros(&f, &HusimiSampler::new(psi, &cfg2), &opts.zeros).zeros)
        })
        .collect()
}

/// Runs the per-time pipeline for a launch momentum `p0`.
pub fn run_snapshot_pipeline(
    spec: &RunSpec,
    p0: f64,
    times: &[f64],
    opts: &SnapshotOptions,
) -> Result<Vec<Snapshot>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cfg = &spec.cfg;
    let psi0 = initial_coherent_state(spec.x0, p0, cfg)?;
    let t_end = *sorted.last().expect("non-empty");
    let mut states = evolve(&psi0, t_end, &sorted, cfg)?;
    states.pop();
    let refs = if opts.check_stability { Some(zero_references(spec, p0, &sorted, opts)?) } else { None };
    let ham = AveragedHamiltonian::new(cfg);
    let window = spec.window;
    let shifted = window.jittered(0.5, 0.5);

    let mut out = Vec::with_capacity(states.len());
    for (k, psi) in states.into_iter().enumerate() {
        let field = husimi_field(&psi, &window, cfg)?;
        let sampler = HusimiSampler::new(&psi, cfg);
        let mut zeros = find_zeros(&field, &sampler, &opts.zeros);
        if let Some(refs) = &refs {
            let shifted_field = husimi_field_with_depth(&psi, &shifted, cfg, 1)?;
            let shifted_zeros = find_zeros(&shifted_field, &sampler, &opts.zeros).zeros;
            mark_stability(
                &mut zeros.zeros,
                &[&refs[k], &shifted_zeros],
                window.cell_x(),
                window.cell_p(),
            );
        }
        let (current, stagnation, pairing) = if opts.zeros_only {
            (None, None, None)
        } else {
            let current = quantum_current(&field, &ham, cfg, cfg.trunc_order(), opts.keep_components)?;
            let cs = CurrentSampler::new(sampler, &ham, cfg.trunc_order());
            let report = find_stagnation_points(&current, &field, &zeros.zeros, &cs, &opts.stagnation)?;
            let pairing = pair_dipoles(&report.points, opts.max_sep);
            (Some(current), Some(report), Some(pairing))
        };
        out.push(Snapshot { time: psi.time, psi, husimi: field, zeros, current, stagnation, pairing });
    }
    Ok(out)
}

/// Points `(x, p)` on the classical level set `H_cl = level` across the
/// window, upper and lower branches, `n` abscissae.
pub fn energy_contour(cfg: &PhaseSpaceConfig<f64>, level: f64, window: &PhaseSpaceWindow<f64>, n: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for i in 0..n {
        let x = window.x_lo + (window.x_hi - window.x_lo) * i as f64 / (n.max(2) - 1) as f64;
        let kinetic = level - cfg.potential_at(x);
        if kinetic >= 0.0 {
            let p = (2.0 * cfg.mass() * kinetic).sqrt();
            pts.push((x, p));
            if p > 0.0 {
                pts.push((x, -p));
            }
        }
    }
    pts
}

/// Does the level set `H_cl = level` pass within `(cx, cp)` of `(x, p)`?
/// Tested by a sign change of `H_cl - level` over the box perimeter.
pub fn contour_within_cell(cfg: &PhaseSpaceConfig<f64>, level: f64, x: f64, p: f64, cx: f64, cp: f64) -> bool {
    const N: usize = 32;
    let f = |a: f64, b: f64| cfg.classical_energy(a, b) - level;
    let mut has_pos = false;
    let mut has_neg = false;
    for s in 0..=N {
        let u = -1.0 + 2.0 * s as f64 / N as f64;
        for (a, b) in [(x + u * cx, p - cp), (x + u * cx, p + cp), (x - cx, p + u * cp), (x + cx, p + u * cp)] {
            let v = f(a, b);
            has_pos |= v >= 0.0;
            has_neg |= v <= 0.0;
        }
    }
    has_pos && has_neg
}

/// Zeros on each side of the separatrix that lie within one window cell of it.
pub fn separatrix_neighbours(
    cfg: &PhaseSpaceConfig<f64>,
    window: &PhaseSpaceWindow<f64>,
    zeros: &[HusimiZero<f64>],
) -> (Vec<usize>, Vec<usize>) {
    let v0 = cfg.v0();
    let (mut above, mut below) = (Vec::new(), Vec::new());
    for (i, z) in zeros.iter().enumerate() {
        if !contour_within_cell(cfg, v0, z.x, z.p, window.cell_x(), window.cell_p()) {
            continue;
        }
        if cfg.classical_energy(z.x, z.p) > v0 {
            above.push(i);
        } else {
            below.push(i);
        }
    }
    (above, below)
}

/// Stable zeros of a snapshot.
pub fn stable_zeros(s: &Snapshot) -> Vec<HusimiZero<f64>> {
    s.zeros.zeros.iter().copied().filter(|z| z.stability == Stability::Stable).collect()
}

/// One line of the `validate` report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Quick numerical hygiene checks on a spec: norm drift and time-reversal
/// fidelity over a barrier run, Husimi normalization, the coherent-overlap law.
pub fn validate(spec: &RunSpec, p0: f64, t: f64) -> Result<Vec<Check>> {
    let cfg = &spec.cfg;
    let mut checks = Vec::new();
    let psi0 = initial_coherent_state(spec.x0, p0, cfg)?;
    let n = crate::propagator::steps_for(t, cfg.dt())?;
    let mut psi = psi0.clone();
    let mut op = SplitOperator::new(cfg);
    let mut drift: f64 = 0.0;
    let n0 = psi0.norm_sqr();
    for _ in 0..n {
        op.step(&mut psi)?;
        drift = drift.max((psi.norm_sqr() - n0).abs());
    }
    checks.push(Check { name: "norm drift", value: drift, limit: 1e-9, pass: drift < 1e-9 });

    let field = husimi_field_with_depth(&psi, &spec.window, cfg, 0)?;
    let norm = field.normalization(cfg.hbar());
    checks.push(Check { name: "husimi normalization error", value: (norm - 1.0).abs(), limit: 1e-3, pass: (norm - 1.0).abs() < 1e-3 });

    let mut back = SplitOperator::with_time_step(cfg, -cfg.dt());
    back.run(&mut psi, n)?;
    let fid = psi.fidelity(&psi0);
    checks.push(Check { name: "time-reversal infidelity", value: 1.0 - fid, limit: 1e-8, pass: 1.0 - fid <= 1e-8 });

    let sampler = HusimiSampler::new(&psi0, cfg);
    let z0 = cfg.z_from_xp(spec.x0, p0);
    let mut worst: f64 = 0.0;
    for (dx, dp) in [(0.0, 0.0), (0.05, 0.0), (0.0, -0.08), (0.1, 0.1), (-0.2, 0.05)] {
        let z = cfg.z_from_xp(spec.x0 + dx, p0 + dp);
        let q = sampler.amplitude(z).norm_sqr();
        worst = worst.max((q - (-(z - z0).norm_sqr()).exp()).abs());
    }
    checks.push(Check { name: "coherent overlap error", value: worst, limit: 1e-8, pass: worst < 1e-8 });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = preset("paper").unwrap();
        assert_eq!(p.cfg.dx(), 0.0025);
        assert_eq!((p.window.nx, p.window.np), (500, 500));
        assert_eq!(p.cfg.trunc_order(), 10);
        let d = preset("desk").unwrap();
        assert_eq!(d.cfg.dx(), 0.01);
        assert_eq!(d.cfg.trunc_order(), 6);
        assert!(preset("laptop").is_err());
        assert_ne!(p.hash(), d.hash());
        assert_eq!(default_momenta(), vec![1.6, 1.7, 1.8, 1.9, 2.0, 2.1, 2.2, 2.3, 2.4]);
    }

    #[test]
    fn partner_grid_respects_nyquist() {
        let d = preset("desk").unwrap();
        assert_eq!(partner_dx(&d.cfg, &d.window), 0.005);
        let narrow = PhaseSpaceWindow::new(-1.0, 1.0, -1.0, 1.0, 10, 10).unwrap();
        assert_eq!(partner_dx(&d.cfg, &narrow), 0.02);
    }

    #[test]
    fn contour_box() {
        let cfg = preset("desk").unwrap().cfg;
        // Far from the barrier the separatrix is |p| = 2.
        assert!(contour_within_cell(&cfg, 2.0, -8.0, 2.01, 0.03, 0.03));
        assert!(!contour_within_cell(&cfg, 2.0, -8.0, 2.1, 0.03, 0.03));
    }

    #[test]
    fn empty_times_give_no_snapshots() {
        let d = preset("desk").unwrap();
        assert!(run_snapshot_pipeline(&d, 1.8, &[], &SnapshotOptions::default()).unwrap().is_empty());
    }
}
