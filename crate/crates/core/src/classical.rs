//! Classical dynamics: Hamilton's equations for the bare potential, RK4
//! trajectories, the classical transmission of a Husimi-weighted ensemble and
//! Liouville transport of an initial density.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::husimi::{HusimiField, PhaseSpaceWindow};
use crate::phase_space::{PhaseSpaceConfig, Potential};
use crate::real::{lit, Real};

/// Relative energy drift tolerated on a trajectory.
pub const ENERGY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub initial: (T, T),
    /// `(t, x, p)` samples, including the initial point.
    pub samples: Vec<(T, T, T)>,
    pub energy: T,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> (T, T, T) {
        *self.samples.last().expect("trajectory holds its initial point")
    }
}

fn force<T: Real>(cfg: &PhaseSpaceConfig<T>, x: T) -> T {
    match cfg.potential() {
        Potential::Free => T::zero(),
        Potential::GaussianBarrier => {
            lit::<T>(2.0) * cfg.k() * cfg.v0() * x * (-cfg.k() * x * x).exp()
        }
        Potential::Harmonic => -cfg.mass() * cfg.omega() * cfg.omega() * x,
    }
}

/// `(ẋ, ṗ) = (p/m, -V'(x))`.
pub fn hamilton_rhs<T: Real>(cfg: &PhaseSpaceConfig<T>, x: T, p: T) -> (T, T) {
    (p / cfg.mass(), force(cfg, x))
}

#[inline]
fn rk4_step<T: Real>(cfg: &PhaseSpaceConfig<T>, x: T, p: T, h: T) -> (T, T) {
    let half = lit::<T>(0.5);
    let (k1x, k1p) = hamilton_rhs(cfg, x, p);
    let (k2x, k2p) = hamilton_rhs(cfg, x + half * h * k1x, p + half * h * k1p);
    let (k3x, k3p) = hamilton_rhs(cfg, x + half * h * k2x, p + half * h * k2p);
    let (k4x, k4p) = hamilton_rhs(cfg, x + h * k3x, p + h * k3p);
    let sixth = h / lit(6.0);
    let two = lit::<T>(2.0);
    (
        x + sixth * (k1x + two * k2x + two * k3x + k4x),
        p + sixth * (k1p + two * k2p + two * k3p + k4p),
    )
}

fn drift<T: Real>(e0: T, e: T) -> T {
    let scale = e0.abs().max(lit(1e-300));
    (e - e0).abs() / scale
}

/// Integrates from `(x0, p0)` for `t_final` (negative for backward) with fixed
/// steps of at most `|dt|`, recording every `record_every`-th step.
pub fn integrate<T: Real>(
    cfg: &PhaseSpaceConfig<T>,
    x0: T,
    p0: T,
    t_final: T,
    dt: T,
    record_every: usize,
) -> Result<Trajectory<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidConfig("classical time step must be positive".into()));
    }
    let n = (t_final.abs() / dt).ceil().to_usize().unwrap_or(0);
    let h = if n == 0 { T::zero() } else { t_final / T::from_usize_lossy(n) };
    let energy = cfg.classical_energy(x0, p0);
    let every = record_every.max(1);
    let mut samples = vec![(T::zero(), x0, p0)];
    let (mut x, mut p) = (x0, p0);
    for s in 1..=n {
        (x, p) = rk4_step(cfg, x, p, h);
        if s % every == 0 || s == n {
            samples.push((h * T::from_usize_lossy(s), x, p));
        }
    }
    let d = drift(energy, cfg.classical_energy(x, p));
    if d > lit(ENERGY_TOLERANCE) {
        return Err(Error::EnergyDrift { drift: d.as_f64(), tol: ENERGY_TOLERANCE });
    }
    Ok(Trajectory { initial: (x0, p0), samples, energy })
}

/// Where an ensemble member ended up.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Fate<T> {
    x: T,
    p: T,
    drift: T,
}

/// Runs until the member is outgoing beyond `x_exit` or `t_cap` elapses.
fn run_to_exit<T: Real>(cfg: &PhaseSpaceConfig<T>, x0: T, p0: T, t_cap: T, dt: T, x_exit: T) -> Fate<T> {
    let e0 = cfg.classical_energy(x0, p0);
    let n = (t_cap / dt).ceil().to_usize().unwrap_or(0);
    let (mut x, mut p) = (x0, p0);
    for _ in 0..n {
        if x.abs() > x_exit && x * p > T::zero() {
            break;
        }
        (x, p) = rk4_step(cfg, x, p, dt);
    }
    Fate { x, p, drift: drift(e0, cfg.classical_energy(x, p)) }
}

#[derive(Clone, Copy, Debug)]
pub struct TransmissionOptions<T> {
    /// Upper bound on the integration time of any member.
    pub t_cap: T,
    pub dt: T,
    /// Quadrature nodes along `x` and `p`.
    pub nx: usize,
    pub np: usize,
    /// Half-width of the quadrature box in standard deviations.
    pub span: T,
    /// Transmitted means `x > x_cut` and `p > 0` at the end.
    pub x_cut: T,
    /// Refuse results that move by more than this when `np` doubles.
    pub convergence_tol: T,
}

impl<T: Real> TransmissionOptions<T> {
    pub fn for_config(cfg: &PhaseSpaceConfig<T>) -> Self {
        Self {
            t_cap: lit(8.0),
            dt: cfg.dt() / lit(10.0),
            nx: 9,
            np: 2001,
            span: lit(5.0),
            x_cut: T::zero(),
            convergence_tol: lit(1e-3),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalTransmission<T> {
    pub transmitted: T,
    pub reflected: T,
    /// Weight with `H_cl > V0`, a diagnostic alternative to the x-threshold count.
    pub above_barrier: T,
    /// Value at half the momentum resolution.
    pub coarse: T,
    pub n_samples: usize,
}

/// Exit coordinate beyond which the barrier force is negligible.
pub fn exit_radius<T: Real>(cfg: &PhaseSpaceConfig<T>) -> T {
    if cfg.k() > T::zero() {
        lit::<T>(3.0) / cfg.k().sqrt()
    } else {
        T::zero()
    }
}

fn transmission_on_grid<T: Real>(
    cfg: &PhaseSpaceConfig<T>,
    x0: T,
    p0: T,
    opts: &TransmissionOptions<T>,
    np: usize,
) -> Result<(T, T)> {
    // Initial Husimi of a coherent state: independent Gaussians with standard
    // deviations √2σx and √2σp.
    let sx = lit::<T>(2.0).sqrt() * cfg.sigma_x();
    let sp = lit::<T>(2.0).sqrt() * cfg.sigma_p();
    let nodes = |n: usize| -> Vec<(T, T)> {
        (0..n)
            .map(|i| {
                let u = -opts.span
                    + lit::<T>(2.0) * opts.span * (T::from_usize_lossy(i) + lit(0.5)) / T::from_usize_lossy(n);
                (u, (-lit::<T>(0.5) * u * u).exp())
            })
            .collect()
    };
    let ux = nodes(opts.nx);
    let up = nodes(np);
    let exit = exit_radius(cfg).max(opts.x_cut.abs());
    let v0 = cfg.v0();
    let rows: Vec<(T, T, T, T)> = up
        .par_iter()
        .map(|&(u, wp)| {
            let p = p0 + sp * u;
            let (mut trans, mut above, mut total, mut worst) = (T::zero(), T::zero(), T::zero(), T::zero());
            for &(v, wx) in &ux {
                let x = x0 + sx * v;
                let w = wx * wp;
                let fate = run_to_exit(cfg, x, p, opts.t_cap, opts.dt, exit);
                worst = worst.max(fate.drift);
                total = total + w;
                if fate.x > opts.x_cut && fate.p > T::zero() {
                    trans = trans + w;
                }
                if cfg.classical_energy(x, p) > v0 && p > T::zero() {
                    above = above + w;
                }
            }
            (trans, above, total, worst)
        })
        .collect();
    let (mut trans, mut above, mut total, mut worst) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (t, a, w, d) in rows {
        trans = trans + t;
        above = above + a;
        total = total + w;
        worst = worst.max(d);
    }
    if worst > lit(ENERGY_TOLERANCE) {
        return Err(Error::EnergyDrift { drift: worst.as_f64(), tol: ENERGY_TOLERANCE });
    }
    Ok((trans / total, above / total))
}

/// Husimi-weighted fraction of trajectories launched around `(x0, p0)` that
/// end transmitted. Deterministic midpoint tensor grid over `±span` standard
/// deviations; the result is checked against half the momentum resolution.
pub fn classical_transmission<T: Real>(
    cfg: &PhaseSpaceConfig<T>,
    x0: T,
    p0: T,
    opts: &TransmissionOptions<T>,
) -> Result<ClassicalTransmission<T>> {
    if opts.nx == 0 || opts.np < 2 {
        return Err(Error::InvalidConfig("transmission grid needs nx ≥ 1 and np ≥ 2".into()));
    }
    let (fine, above) = transmission_on_grid(cfg, x0, p0, opts, opts.np)?;
    let (coarse, _) = transmission_on_grid(cfg, x0, p0, opts, opts.np / 2)?;
    if (fine - coarse).abs() > opts.convergence_tol {
        return Err(Error::UnconvergedSampling { coarse: coarse.as_f64(), fine: fine.as_f64() });
    }
    Ok(ClassicalTransmission {
        transmitted: fine,
        reflected: T::one() - fine,
        above_barrier: above,
        coarse,
        n_samples: opts.nx * opts.np,
    })
}

/// Liouville transport: `Q_t(x, p) = Q_0(preimage)` for every window node,
/// with the preimage found by integrating back over `t`. `initial` returns
/// `None` outside its support, which maps to 0.
pub fn classical_pullback<T: Real, F>(
    initial: F,
    cfg: &PhaseSpaceConfig<T>,
    t: T,
    window: &PhaseSpaceWindow<T>,
    dt: T,
) -> Result<Vec<T>>
where
    F: Fn(T, T) -> Option<T> + Sync,
{
    let n = (t.abs() / dt).ceil().to_usize().unwrap_or(0);
    let h = if n == 0 { T::zero() } else { -t / T::from_usize_lossy(n) };
    let rows: Vec<Result<Vec<T>>> = (0..window.np)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(window.nx);
            for i in 0..window.nx {
                let (x1, p1) = (window.x(i), window.p(j));
                let (mut x, mut p) = (x1, p1);
                for _ in 0..n {
                    (x, p) = rk4_step(cfg, x, p, h);
                }
                let d = drift(cfg.classical_energy(x1, p1), cfg.classical_energy(x, p));
                if d > lit(ENERGY_TOLERANCE) {
                    return Err(Error::EnergyDrift { drift: d.as_f64(), tol: ENERGY_TOLERANCE });
                }
                row.push(initial(x, p).unwrap_or_else(T::zero));
            }
            Ok(row)
        })
        .collect();
    let mut out = Vec::with_capacity(window.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// [`classical_pullback`] of a sampled initial field, interpolated with
/// bicubic Catmull–Rom splines.
pub fn classical_pullback_field<T: Real>(
    initial: &HusimiField<T>,
    cfg: &PhaseSpaceConfig<T>,
    t: T,
    window: &PhaseSpaceWindow<T>,
    dt: T,
) -> Result<Vec<T>> {
    classical_pullback(|x, p| interpolate(initial, x, p), cfg, t, window, dt)
}

fn catmull_rom<T: Real>(f: [T; 4], s: T) -> T {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    let five = lit::<T>(5.0);
    half * (two * f[1]
        + (f[2] - f[0]) * s
        + (two * f[0] - five * f[1] + four * f[2] - f[3]) * s * s
        + (three * (f[1] - f[2]) + f[3] - f[0]) * s * s * s)
}

/// Bicubic value of the density, `None` outside the sampled window.
pub fn interpolate<T: Real>(field: &HusimiField<T>, x: T, p: T) -> Option<T> {
    let w = &field.window;
    if !w.contains(x, p) {
        return None;
    }
    let fx = (x - w.x_lo) / w.cell_x();
    let fp = (p - w.p_lo) / w.cell_p();
    let i0 = fx.floor().to_isize()?;
    let j0 = fp.floor().to_isize()?;
    let sx = fx - T::from_isize(i0)?;
    let sp = fp - T::from_isize(j0)?;
    let at = |i: isize, j: isize| {
        let ii = i.clamp(0, w.nx as isize - 1) as usize;
        let jj = j.clamp(0, w.np as isize - 1) as usize;
        field.density[w.index(ii, jj)]
    };
    let mut col = [T::zero(); 4];
    for (c, dj) in col.iter_mut().zip(-1isize..=2) {
        let row = [at(i0 - 1, j0 + dj), at(i0, j0 + dj), at(i0 + 1, j0 + dj), at(i0 + 2, j0 + dj)];
        *c = catmull_rom(row, sx);
    }
    Some(catmull_rom(col, sp))
}

/// Trajectories for a set of launch points, sampled every `record_every` steps.
pub fn trajectory_bundle<T: Real>(
    cfg: &PhaseSpaceConfig<T>,
    starts: &[(T, T)],
    t_final: T,
    dt: T,
    record_every: usize,
) -> Result<Vec<Trajectory<T>>> {
    starts.par_iter().map(|&(x, p)| integrate(cfg, x, p, t_final, dt, record_every)).collect()
}
