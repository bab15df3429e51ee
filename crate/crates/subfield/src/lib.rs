//! Subordinated Gaussian random fields on rectangular domains.
//!
//! A subordinated Gaussian random field evaluates a Gaussian random field `W`
//! at coordinates that are time-changed by independent Lévy subordinators,
//! `L(x_1, ..., x_d) = W(l_1(x_1), ..., l_d(x_d))`. The subordinator jumps
//! produce jump discontinuities of `L` along the coordinate axes while the
//! pointwise law stays analytically accessible through a Lévy-Khinchin-type
//! representation.
//!
//! The crate provides
//! - seedable base samplers and multivariate normal factorization
//!   ([`stochastics`]),
//! - Gaussian field covariance models and joint sampling ([`grf`]),
//! - subordinator families with path sampling, marginal densities, Laplace
//!   exponents, and a compound Poisson approximation ([`subordinator`]),
//! - the composed field itself ([`field`]),
//! - characteristic functions, the transformed jump measure, Gil-Pelaez
//!   Fourier inversion, and Kolmogorov-Smirnov testing ([`spectral`]),
//! - semi-explicit covariance formulas with Monte Carlo validation
//!   ([`covariance`]),
//! - pointwise moment bounds, moment-trace diagnostics, and a bootstrap
//!   moment-existence test ([`moments`]),
//! - Levenberg-Marquardt fitting of field parameters to target pointwise
//!   distributions ([`fit`]),
//! - a reproducible experiment runner emitting CSV/JSON artifacts ([`cli`]).
//!
//! Every randomized operation takes an explicit [`stochastics::RngStream`]
//! (or a generator derived from one); fixing the stream fixes all outputs
//! bit-exactly, including under internal parallelism.

pub mod bessel;
pub mod cli;
pub mod covariance;
pub mod field;
pub mod fit;
pub mod grf;
pub mod moments;
pub mod report;
pub mod spectral;
pub mod stochastics;
pub mod subordinator;

pub use field::FieldModel;
pub use grf::CovarianceModel;
pub use report::{TestReport, Verdict};
pub use stochastics::RngStream;
pub use subordinator::SubordinatorModel;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance factorization failed: jitter ladder exhausted (dim {dim}, best residual {residual:.3e})")]
    FactorizationFailed { dim: usize, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported time {t} for this subordinator family")]
    UnsupportedTime { t: f64 },
    #[error("this subordinator family has no closed marginal density")]
    UnsupportedDensity,
    #[error("operation requires a different covariance kind: {0}")]
    UnsupportedCovariance(String),
    #[error("Lévy measure tail is not integrable away from the origin")]
    NonIntegrableTail,
    #[error("grid of {requested} joint points exceeds the factorization cap of {cap}")]
    GridTooLarge { requested: usize, cap: usize },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
