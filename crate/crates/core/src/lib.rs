//! Husimi phase-space flow of one-dimensional wavepackets.
//!
//! The pipeline: propagate `ψ` with the split operator, sample its Husimi
//! density on a phase-space window, evaluate the (truncated) quantum current
//! from the averaged Hamiltonian, then locate and classify the stagnation
//! points of that current. The classical module provides the Liouville
//! reference.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, which the experiments use.

pub mod classical;
pub mod current;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod husimi;
pub mod io;
pub mod phase_space;
pub mod propagator;
pub mod real;
pub mod topology;

pub use error::{Error, Result};
pub use real::Real;

pub type Config = phase_space::PhaseSpaceConfig<f64>;
pub type Wavefunction = propagator::WavefunctionGrid<f64>;
pub type Window = husimi::PhaseSpaceWindow<f64>;
pub type Husimi = husimi::HusimiField<f64>;
pub type Zero = husimi::HusimiZero<f64>;
pub type Hamiltonian = hamiltonian::AveragedHamiltonian<f64>;
pub type Current = current::CurrentField<f64>;
pub type Residual = current::ContinuityResidual<f64>;
pub type Point = topology::StagnationPoint<f64>;
pub type Dipole = topology::Dipole<f64>;
pub type Trajectory = classical::Trajectory<f64>;
