use thiserror::Error;

/// Errors produced by model construction, detection guards and the
/// simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible domain.
    #[error("parameter `{name}` out of range: {value} ({requirement})")]
    ParamDomain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// The requested scintillation index cannot be produced by the
    /// turbulence-strength parameterization.
    #[error(
        "scintillation index {si} not attainable; searched sigma^2 in \
         [{searched_lo:e}, {searched_hi:e}] covering S.I. up to {max_si:.6}"
    )]
    UnattainableSi {
        si: f64,
        searched_lo: f64,
        searched_hi: f64,
        max_si: f64,
    },

    /// Poisson mean too large to be a physical slot count.
    #[error("slot count mean {mean:.3e} exceeds the 1e9 sanity guard")]
    MeanOverflow { mean: f64 },

    /// Exhaustive search guard: the candidate space 2^L is too large.
    #[error("block length {l} exceeds the exhaustive-search limit {limit}")]
    BlockTooLong { l: usize, limit: usize },

    /// Invalid simulation setup (stopping rule, grid, receivers, ...).
    #[error("invalid simulation config: {0}")]
    SimConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
