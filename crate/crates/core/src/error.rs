use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spectral gap violation between blocks {n} and {m}: distance {distance:.3e}")]
    GapViolation { n: usize, m: usize, distance: f64 },

    #[error("commutator series guard: ‖W‖ = {norm:.3e} exceeds the practicality bound {limit}")]
    SeriesDivergenceGuard { norm: f64, limit: f64 },

    #[error("operator is not antiselfadjoint: ‖W + W†‖ = {0:.3e}")]
    NotAntihermitian(f64),

    #[error("iteration did not converge within {max_steps} steps (last ‖𝒪H‖₁ = {last_off_norm:.3e})")]
    MaxStepsExceeded {
        max_steps: usize,
        last_off_norm: f64,
        trace: Box<crate::flow::IterationTrace>,
    },

    #[error("Ω² = 1 ± 4ε² = {0:.3e} is not positive")]
    OmegaImaginary(f64),

    #[error("initial state is not normalized: ‖ψ‖ = {0:.6e}")]
    UnnormalizedState(f64),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
