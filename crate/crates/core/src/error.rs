use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial state leaks past the grid boundary (edge amplitude {edge:e} > floor {floor:e})")]
    InitialStateTooWide { edge: f64, floor: f64 },

    #[error("boundary contamination at t = {time}: edge amplitude {edge:e} exceeds {floor:e} of peak")]
    BoundaryContamination { time: f64, edge: f64, floor: f64 },

    #[error("norm loss: |psi|^2 = {norm} at t = {time}")]
    NormLoss { time: f64, norm: f64 },

    #[error("snapshot time {0} is not a multiple of the time step")]
    SnapshotTime(f64),

    #[error("derivative order ({a}, {b}) beyond supported total order {max}")]
    UnsupportedOrder { a: usize, b: usize, max: usize },

    #[error("Husimi derivative stack has depth {have}, truncation order {need} requested")]
    InsufficientDepth { have: usize, need: usize },

    #[error("phase-space windows do not match")]
    WindowMismatch,

    #[error("gradient step adaptation failed at z = ({re}, {im})")]
    StepAdaptation { re: f64, im: f64 },

    #[error("current vanishes on winding loop around ({re}, {im}) after shrinking")]
    WindingFloor { re: f64, im: f64 },

    #[error("classical energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDrift { drift: f64, tol: f64 },

    #[error("classical transmission unconverged: {coarse} vs {fine} on refinement")]
    UnconvergedSampling { coarse: f64, fine: f64 },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the physics itself (lost norm, energy drift, contaminated grid)
    /// as opposed to bad input.
    pub fn is_physics_failure(&self) -> bool {
        matches!(
            self,
            Error::BoundaryContamination { .. }
                | Error::NormLoss { .. }
                | Error::EnergyDrift { .. }
                | Error::UnconvergedSampling { .. }
                | Error::InitialStateTooWide { .. }
                | Error::StepAdaptation { .. }
                | Error::WindingFloor { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
