use alloc::string::String;

use crate::tensor::EigenPair;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("frequency {freq} Hz is at or above the Nyquist limit for {sample_rate} Hz")]
    Aliasing { freq: f64, sample_rate: f64 },

    #[error("signal `{0}` has zero power or zero variance")]
    ZeroPower(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("mixing matrix stayed singular after {attempts} draws")]
    SingularMatrix { attempts: usize },

    #[error("covariance has numerical rank {rank}, fewer than the {requested} requested dimensions")]
    RankDeficient { rank: usize, requested: usize },

    #[error("tensor of dimension {dim} needs {bytes} bytes, above the {cap} byte cap")]
    Capacity { dim: usize, bytes: u128, cap: u128 },

    #[error("vector norm {norm} is not 1 within tolerance")]
    NotUnitNorm { norm: f64 },

    #[error("contraction has imaginary part {imag} (real part {real})")]
    NonRealContraction { real: f64, imag: f64 },

    #[error("degenerate direction: |Cw^3| = {0}")]
    DegenerateDirection(f64),

    #[error("complex input where real data is required")]
    ComplexInput,

    #[error("restart budget exhausted; best residual {residual:e}")]
    RestartsExhausted { best: EigenPair, residual: f64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
