//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by state construction, propagation, and quadrature.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid parameters violate a structural requirement (power-of-two size,
    /// positive extent).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Requested wavepacket width cannot be resolved on the grid.
    #[error("grid too coarse: sigma = {sigma} < 4 dx = {min_sigma}")]
    GridTooCoarse { sigma: f64, min_sigma: f64 },

    /// Wavepacket amplitude at a grid edge exceeds the wrap-around guard.
    /// Periodic images silently corrupt position means, so this is fatal.
    #[error("wavepacket reaches grid boundary: {0}")]
    BoundaryClipping(String),

    /// State norm drifted away from unity.
    #[error("state norm violation: |norm - 1| = {0:.3e}")]
    NormViolation(f64),

    /// Operands live on different grids.
    #[error("grid mismatch between states")]
    GridMismatch,

    /// Operands carry different masses.
    #[error("mass mismatch between states")]
    MassMismatch,

    /// Ensemble weights are negative or do not sum to one.
    #[error("weight sum violation: {0}")]
    WeightSumViolation(String),

    /// Radial mesh is not strictly increasing from zero.
    #[error("unsorted radii: {0}")]
    UnsortedRadii(String),

    /// Density profile contains negative samples.
    #[error("negative density at radius {0}")]
    NegativeDensity(f64),

    /// Density profile fails a structural requirement other than ordering or
    /// positivity (e.g. non-negligible tail at the last radius).
    #[error("invalid density profile: {0}")]
    InvalidProfile(String),

    /// Refining the radial mesh changed the result beyond tolerance.
    #[error("radial quadrature did not converge: {0}")]
    QuadratureNonConvergent(String),

    /// Self-consistent mean iteration failed to settle.
    #[error("fixed-point mean iteration did not converge within {max_iter} iterations")]
    FixedPointDiverged { max_iter: usize },

    /// Step-size control violates the resolution guard.
    #[error("invalid step control: {0}")]
    InvalidStepControl(String),

    /// Hamiltonian parameters out of range.
    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    /// Light pointer specification is inconsistent.
    #[error("invalid light spec: {0}")]
    InvalidLightSpec(String),

    /// Propagation of one ensemble branch failed; the index identifies it.
    #[error("branch {index}: {source}")]
    BranchFailure {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
