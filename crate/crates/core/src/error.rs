use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("axis is not a unit vector (norm {norm:.6e})")]
    NonUnitAxis { norm: f64 },

    #[error("Bloch vector norm {norm:.6e} exceeds 1")]
    BlochNormExceeded { norm: f64 },

    #[error("matrix is not a density operator: {0}")]
    NotDensity(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (squared norm {norm_sq:.12})")]
    NotNormalized { norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported dimension {0} (expected a power of two up to 8)")]
    InvalidDimension(usize),

    /// Pre- and post-selection are (numerically) orthogonal; the weak value diverges.
    #[error("pre- and post-selection are orthogonal (overlap {overlap:.3e})")]
    OrthogonalSelection { overlap: f64 },

    #[error("Bloch vectors are anti-parallel (1 + ri·rf = {denominator:.3e})")]
    AntiParallel { denominator: f64 },

    #[error("Bloch vectors are parallel; the rotation axis is undefined")]
    ParallelStates,

    #[error("post-selection cannot succeed (acceptance {acceptance:.3e})")]
    PostSelectionImpossible { acceptance: f64 },

    #[error("coupling strength {0} outside the supported range")]
    InvalidCoupling(f64),

    #[error("Werner parameter {0} outside [-1, 1/3]")]
    LambdaOutOfRange(f64),

    #[error("grid too coarse: width {sigma} needs more than 4 grid spacings ({dx})")]
    GridTooCoarse { sigma: f64, dx: f64 },

    #[error("wavepacket touches the grid boundary (edge amplitude {edge:.3e})")]
    PacketClipped { edge: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no trial out of {n_total} passed post-selection")]
    NoAcceptedTrials { n_total: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
