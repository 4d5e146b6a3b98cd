//! Coherent-state algebra and the configuration shared by every module.
//!
//! Phase-space points are labelled by the complex coherent-state parameter
//!
//! ```text
//! z = x / (2 σx) + i p / (2 σp),      σx = sqrt(ħ / 2mω),  σp = sqrt(ħmω / 2)
//! ```
//!
//! so that `a |z⟩ = z |z⟩` with `[a, a†] = 1`, `|⟨z|z0⟩|² = exp(-|z - z0|²)` and
//! `d²z = dx dp / 2πħ`. `σx` and `σp` are the position and momentum standard
//! deviations of the oscillator ground state.
//!
//! Phase convention: `⟨x|z⟩ = e^{-|z|²/2} θ-kernel`, chosen so the analytic factor
//! `θ(z̄) = e^{|z|²/2} ⟨z|ψ⟩` is real and positive for the ground state at `z = 0`.
//! Written out,
//!
//! ```text
//! ⟨x|z⟩ = (2π σx²)^{-1/4} exp(-(x - xc)² / 4σx² + i pc (x - xc/2) / ħ)
//! ```

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Potential acting on the particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Potential {
    Free,
    /// `V0 exp(-k x²)`.
    #[default]
    GaussianBarrier,
    /// `m ω² x² / 2`, with the same `ω` as the coherent basis.
    Harmonic,
}

/// Physical constants of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physics<T> {
    pub hbar: T,
    pub mass: T,
    pub omega: T,
    pub v0: T,
    pub k: T,
    pub potential: Potential,
}

/// Coordinate grid and time discretization for the propagator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub x_min: T,
    pub x_max: T,
    pub dx: T,
    pub dt: T,
}

/// Immutable simulation configuration.
///
/// `sigma_x`/`sigma_p` are derived from `ħ, m, ω` at construction and cannot
/// be set independently.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceConfig<T> {
    physics: Physics<T>,
    grid: GridSpec<T>,
    sigma_x: T,
    sigma_p: T,
    trunc_order: usize,
    boundary_floor: T,
}

impl<T: Real> PhaseSpaceConfig<T> {
    pub fn new(physics: Physics<T>, grid: GridSpec<T>, trunc_order: usize) -> Result<Self> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite")))
            }
        };
        positive(physics.hbar, "hbar")?;
        positive(physics.mass, "mass")?;
        positive(physics.omega, "omega")?;
        positive(grid.dx, "dx")?;
        positive(grid.dt, "dt")?;
        if !(physics.v0.is_finite() && physics.k.is_finite() && physics.k >= T::zero()) {
            return Err(Error::InvalidConfig("v0 must be finite and k non-negative".into()));
        }
        if !(grid.x_min < grid.x_max) {
            return Err(Error::InvalidConfig("x_min must be below x_max".into()));
        }
        if grid.dx > (grid.x_max - grid.x_min) * lit(0.5) {
            return Err(Error::InvalidConfig("dx too coarse for the coordinate range".into()));
        }
        let two = lit::<T>(2.0);
        let sigma_x = (physics.hbar / (two * physics.mass * physics.omega)).sqrt();
        let sigma_p = (physics.hbar * physics.mass * physics.omega / two).sqrt();
        Ok(Self {
            physics,
            grid,
            sigma_x,
            sigma_p,
            trunc_order,
            boundary_floor: lit(1e-12),
        })
    }

    /// Parameters of the Gaussian-barrier experiment at full resolution:
    /// `m = ω = 1`, `ħ = 1/100`, `V0 = 2`, `k = 3`, `-10 ≤ x ≤ 10`, `Δx = 0.0025`,
    /// `Δt = 0.01`, truncation order 10.
    pub fn paper() -> Self {
        Self::new(
            Physics {
                hbar: lit(0.01),
                mass: T::one(),
                omega: T::one(),
                v0: lit(2.0),
                k: lit(3.0),
                potential: Potential::GaussianBarrier,
            },
            GridSpec { x_min: lit(-10.0), x_max: lit(10.0), dx: lit(0.0025), dt: lit(0.01) },
            10,
        )
        .expect("paper preset is valid")
    }

    pub fn physics(&self) -> &Physics<T> {
        &self.physics
    }
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }
    pub fn hbar(&self) -> T {
        self.physics.hbar
    }
    pub fn mass(&self) -> T {
        self.physics.mass
    }
    pub fn omega(&self) -> T {
        self.physics.omega
    }
    pub fn v0(&self) -> T {
        self.physics.v0
    }
    pub fn k(&self) -> T {
        self.physics.k
    }
    pub fn potential(&self) -> Potential {
        self.physics.potential
    }
    pub fn sigma_x(&self) -> T {
        self.sigma_x
    }
    pub fn sigma_p(&self) -> T {
        self.sigma_p
    }
    pub fn x_min(&self) -> T {
        self.grid.x_min
    }
    pub fn x_max(&self) -> T {
        self.grid.x_max
    }
    pub fn dx(&self) -> T {
        self.grid.dx
    }
    pub fn dt(&self) -> T {
        self.grid.dt
    }
    pub fn trunc_order(&self) -> usize {
        self.trunc_order
    }
    /// Edge amplitude, relative to the peak, above which a wavefunction counts as
    /// contaminated by periodic wraparound.
    pub fn boundary_floor(&self) -> T {
        self.boundary_floor
    }

    /// Number of coordinate samples: `x_i = x_min + i dx` for `i < n`, periodic.
    pub fn grid_len(&self) -> usize {
        ((self.grid.x_max - self.grid.x_min) / self.grid.dx).round().to_usize().unwrap_or(0)
    }

    pub fn with_physics(&self, physics: Physics<T>) -> Result<Self> {
        let mut cfg = Self::new(physics, self.grid, self.trunc_order)?;
        cfg.boundary_floor = self.boundary_floor;
        Ok(cfg)
    }
    pub fn with_grid(&self, grid: GridSpec<T>) -> Result<Self> {
        let mut cfg = Self::new(self.physics, grid, self.trunc_order)?;
        cfg.boundary_floor = self.boundary_floor;
        Ok(cfg)
    }
    pub fn with_hbar(&self, hbar: T) -> Result<Self> {
        self.with_physics(Physics { hbar, ..self.physics })
    }
    pub fn with_potential(&self, potential: Potential) -> Self {
        Self { physics: Physics { potential, ..self.physics }, ..self.clone() }
    }
    pub fn with_dx(&self, dx: T) -> Result<Self> {
        self.with_grid(GridSpec { dx, ..self.grid })
    }
    pub fn with_dt(&self, dt: T) -> Result<Self> {
        self.with_grid(GridSpec { dt, ..self.grid })
    }
    pub fn with_trunc_order(&self, trunc_order: usize) -> Self {
        Self { trunc_order, ..self.clone() }
    }
    pub fn with_boundary_floor(&self, floor: T) -> Result<Self> {
        if !(floor > T::zero()) {
            return Err(Error::InvalidConfig("boundary floor must be positive".into()));
        }
        Ok(Self { boundary_floor: floor, ..self.clone() })
    }

    /// Coherent-state label of the phase-space point `(x, p)`.
    #[inline]
    pub fn z_from_xp(&self, x: T, p: T) -> Complex<T> {
        let half = lit::<T>(0.5);
        Complex::new(half * x / self.sigma_x, half * p / self.sigma_p)
    }

    /// Inverse of [`Self::z_from_xp`].
    #[inline]
    pub fn xp_from_z(&self, z: Complex<T>) -> (T, T) {
        let two = lit::<T>(2.0);
        (two * self.sigma_x * z.re, two * self.sigma_p * z.im)
    }

    /// Position-space wavefunction of the coherent state, `⟨x|z⟩`.
    pub fn coherent_kernel(&self, z: Complex<T>, x: T) -> Complex<T> {
        let (xc, pc) = self.xp_from_z(z);
        let d = x - xc;
        let re = -d * d / (lit::<T>(4.0) * self.sigma_x * self.sigma_x);
        let im = pc * (x - xc * lit(0.5)) / self.physics.hbar;
        Complex::from_polar(self.kernel_norm() * re.exp(), im)
    }

    /// `(2π σx²)^{-1/4}`.
    #[inline]
    pub fn kernel_norm(&self) -> T {
        (T::TAU() * self.sigma_x * self.sigma_x).powf(lit(-0.25))
    }

    /// Analytic overlap `⟨z|w⟩ = exp(-|z|²/2 - |w|²/2 + z̄ w)`.
    pub fn coherent_overlap(&self, z: Complex<T>, w: Complex<T>) -> Complex<T> {
        let half = lit::<T>(0.5);
        (z.conj() * w - (z.norm_sqr() + w.norm_sqr()) * half).exp()
    }

    /// Classical energy `p²/2m + V(x)` with the bare (unsmoothed) potential.
    pub fn classical_energy(&self, x: T, p: T) -> T {
        p * p / (lit::<T>(2.0) * self.mass()) + self.potential_at(x)
    }

    /// Bare potential `V(x)` used by the propagator and the classical dynamics.
    pub fn potential_at(&self, x: T) -> T {
        match self.physics.potential {
            Potential::Free => T::zero(),
            Potential::GaussianBarrier => self.physics.v0 * (-self.physics.k * x * x).exp(),
            Potential::Harmonic => {
                lit::<T>(0.5) * self.mass() * self.omega() * self.omega() * x * x
            }
        }
    }

    /// Critical momentum `sqrt(2 m V0)` whose kinetic energy equals the barrier top.
    pub fn critical_momentum(&self) -> T {
        (lit::<T>(2.0) * self.mass() * self.v0()).sqrt()
    }
}
