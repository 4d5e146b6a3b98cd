//! Split-operator propagation of the wavefunction on the periodic coordinate grid.
//!
//! One step of length `dt` applies `e^{-iV dt/2ħ}`, the kinetic phase
//! `e^{-iħk² dt/2m}` in Fourier space, then `e^{-iV dt/2ħ}` again. Every factor
//! is unitary, so the norm is conserved up to rounding, and the scheme is
//! second order and time-reversible.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::phase_space::PhaseSpaceConfig;
use crate::real::{lit, Real};

/// Samples `ψ(x_i)` on `x_i = x_min + i dx` at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefunctionGrid<T> {
    pub x_min: T,
    pub dx: T,
    pub samples: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> WavefunctionGrid<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + self.dx * T::from_usize_lossy(i)
    }

    /// `Σ |ψ_i|² dx`.
    pub fn norm_sqr(&self) -> T {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<T>() * self.dx
    }

    /// `Σ |ψ_i|² dx` restricted to samples whose coordinate satisfies `pred`.
    pub fn mass_where(&self, pred: impl Fn(T) -> bool) -> T {
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| pred(self.x(*i)))
            .map(|(_, s)| s.norm_sqr())
            .sum::<T>()
            * self.dx
    }

    pub fn expectation_x(&self) -> T {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| self.x(i) * s.norm_sqr())
            .sum::<T>()
            * self.dx
            / self.norm_sqr()
    }

    /// `⟨p̂⟩` evaluated in Fourier space.
    pub fn expectation_p(&self, hbar: T) -> T {
        let n = self.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let wavenumbers = fft_wavenumbers::<T>(n, self.dx);
        let (num, den) = buf
            .iter()
            .zip(&wavenumbers)
            .fold((T::zero(), T::zero()), |(num, den), (c, &k)| {
                (num + hbar * k * c.norm_sqr(), den + c.norm_sqr())
            });
        num / den
    }

    /// `⟨self|other⟩ = Σ conj(ψ_i) φ_i dx`.
    pub fn overlap(&self, other: &Self) -> Complex<T> {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v)
            * self.dx
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &Self) -> T {
        self.overlap(other).norm_sqr()
    }

    /// Largest edge amplitude relative to the peak amplitude.
    pub fn edge_ratio(&self) -> T {
        let band = EDGE_BAND.min(self.len() / 2);
        let peak = self.samples.iter().map(|s| s.norm()).fold(T::zero(), T::max);
        if peak == T::zero() {
            return T::zero();
        }
        let n = self.len();
        let edge = self.samples[..band]
            .iter()
            .chain(&self.samples[n - band..])
            .map(|s| s.norm())
            .fold(T::zero(), T::max);
        edge / peak
    }
}

/// Samples at each end of the grid watched for wraparound contamination.
const EDGE_BAND: usize = 16;

/// Angular wavenumbers in FFT order for `n` samples spaced `dx`.
pub fn fft_wavenumbers<T: Real>(n: usize, dx: T) -> Vec<T> {
    let scale = T::TAU() / (T::from_usize_lossy(n) * dx);
    (0..n)
        .map(|j| {
            let signed = if j <= (n - 1) / 2 { j as f64 } else { j as f64 - n as f64 };
            scale * lit::<T>(signed)
        })
        .collect()
}

/// Samples `⟨x|z0⟩` for the coherent state centred at `(x0, p0)`.
///
/// Rejects centres closer than `5σx` to the grid ends and states whose edge
/// amplitude already exceeds the boundary floor.
pub fn initial_coherent_state<T: Real>(
    x0: T,
    p0: T,
    cfg: &PhaseSpaceConfig<T>,
) -> Result<WavefunctionGrid<T>> {
    let margin = lit::<T>(5.0) * cfg.sigma_x();
    if x0 - margin < cfg.x_min() || x0 + margin > cfg.x_max() {
        return Err(Error::InvalidConfig(format!(
            "initial centre {x0} closer than 5 sigma_x to the grid edge"
        )));
    }
    let z0 = cfg.z_from_xp(x0, p0);
    let n = cfg.grid_len();
    let samples: Vec<_> = (0..n)
        .map(|i| cfg.coherent_kernel(z0, cfg.x_min() + cfg.dx() * T::from_usize_lossy(i)))
        .collect();
    let psi = WavefunctionGrid { x_min: cfg.x_min(), dx: cfg.dx(), samples, time: T::zero() };
    let edge = psi.edge_ratio();
    if edge > cfg.boundary_floor() {
        return Err(Error::InitialStateTooWide {
            edge: edge.as_f64(),
            floor: cfg.boundary_floor().as_f64(),
        });
    }
    Ok(psi)
}

/// Precomputed phase factors and FFT plans for one time step.
pub struct SplitOperator<T: Real> {
    half_potential: Vec<Complex<T>>,
    kinetic: Vec<Complex<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    dt: T,
    floor: T,
}

impl<T: Real> SplitOperator<T> {
    pub fn new(cfg: &PhaseSpaceConfig<T>) -> Self {
        Self::with_time_step(cfg, cfg.dt())
    }

    /// Same scheme with a custom (possibly negative) step.
    pub fn with_time_step(cfg: &PhaseSpaceConfig<T>, dt: T) -> Self {
        let n = cfg.grid_len();
        let hbar = cfg.hbar();
        let half = lit::<T>(0.5);
        let half_potential = (0..n)
            .map(|i| {
                let x = cfg.x_min() + cfg.dx() * T::from_usize_lossy(i);
                Complex::from_polar(T::one(), -cfg.potential_at(x) * dt * half / hbar)
            })
            .collect();
        let inv_n = T::one() / T::from_usize_lossy(n);
        let kinetic = fft_wavenumbers(n, cfg.dx())
            .into_iter()
            .map(|k| Complex::from_polar(inv_n, -hbar * k * k * dt * half / cfg.mass()))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len =
            forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            half_potential,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
            dt,
            floor: cfg.boundary_floor(),
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances `psi` by one step, then checks the edge amplitude.
    pub fn step(&mut self, psi: &mut WavefunctionGrid<T>) -> Result<()> {
        self.step_unchecked(psi);
        let edge = psi.edge_ratio();
        if edge > self.floor {
            return Err(Error::BoundaryContamination {
                time: psi.time.as_f64(),
                edge: edge.as_f64(),
                floor: self.floor.as_f64(),
            });
        }
        Ok(())
    }

    fn step_unchecked(&mut self, psi: &mut WavefunctionGrid<T>) {
        debug_assert_eq!(psi.len(), self.kinetic.len());
        for (s, v) in psi.samples.iter_mut().zip(&self.half_potential) {
            *s = *s * v;
        }
        self.forward.process_with_scratch(&mut psi.samples, &mut self.scratch);
        for (s, k) in psi.samples.iter_mut().zip(&self.kinetic) {
            *s = *s * k;
        }
        self.inverse.process_with_scratch(&mut psi.samples, &mut self.scratch);
        for (s, v) in psi.samples.iter_mut().zip(&self.half_potential) {
            *s = *s * v;
        }
        psi.time = psi.time + self.dt;
    }

    /// Takes `n` steps; the edge check runs on every step.
    pub fn run(&mut self, psi: &mut WavefunctionGrid<T>, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step(psi)?;
        }
        Ok(())
    }
}

/// Number of `dt` steps spanning `t`, or an error when `t` is not a multiple of `dt`.
pub fn steps_for<T: Real>(t: T, dt: T) -> Result<usize> {
    let ratio = t / dt;
    let n = ratio.round();
    if n < T::zero() || (ratio - n).abs() > lit(1e-6) {
        return Err(Error::SnapshotTime(t.as_f64()));
    }
    Ok(n.to_usize().unwrap_or(0))
}

/// Propagates `psi0` to `t_final`, returning the states at `snapshot_times`
/// (sorted ascending) followed by the final state.
///
/// Times are absolute; `psi0.time` is the starting point.
pub fn evolve<T: Real>(
    psi0: &WavefunctionGrid<T>,
    t_final: T,
    snapshot_times: &[T],
    cfg: &PhaseSpaceConfig<T>,
) -> Result<Vec<WavefunctionGrid<T>>> {
    let dt = cfg.dt();
    let total = steps_for(t_final - psi0.time, dt)?;
    let mut marks = snapshot_times
        .iter()
        .map(|&t| steps_for(t - psi0.time, dt))
        .collect::<Result<Vec<_>>>()?;
    marks.sort_unstable();
    if marks.last().is_some_and(|&m| m > total) {
        return Err(Error::InvalidConfig("snapshot requested after t_final".into()));
    }

    let mut op = SplitOperator::new(cfg);
    let mut psi = psi0.clone();
    let mut out = Vec::with_capacity(marks.len() + 1);
    let mut done = 0;
    for m in marks {
        op.run(&mut psi, m - done)?;
        done = m;
        psi.time = psi0.time + dt * T::from_usize_lossy(done);
        out.push(psi.clone());
    }
    op.run(&mut psi, total - done)?;
    psi.time = psi0.time + dt * T::from_usize_lossy(total);
    out.push(psi);
    Ok(out)
}
