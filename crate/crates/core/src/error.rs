use thiserror::Error;

/// Errors raised by the propagation engine.
///
/// Every variant corresponds to a violated precondition; none of them are
/// transient.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input vectors are linearly dependent (relative smallest singular value {ratio:.3e})")]
    LinearlyDependentInput { ratio: f64 },

    #[error("frame is not orthonormal (max overlap defect {defect:.3e}, tolerance {tolerance:.1e})")]
    NotOrthonormal { defect: f64, tolerance: f64 },

    #[error("vector is not normalized (|<v|v> - 1| = {defect:.3e})")]
    NotNormalized { defect: f64 },

    #[error("operator is not Hermitian (||M - M^dagger||_F = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not unitary (||U^dagger U - 1||_F = {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("derivative inconsistent with normalization (|Re<dB|B>| = {defect:.3e})")]
    DerivativeInconsistent { defect: f64 },

    #[error("coupling rates do not conserve normalization (|sum r_i r_i'| = {drift:.3e})")]
    NormalizationDrift { drift: f64 },

    #[error("generator sampled at t = {t} is not Hermitian (defect {defect:.3e})")]
    NonHermitianSample { t: f64, defect: f64 },

    #[error("time map is not strictly increasing near s = {at}")]
    NonMonotoneMap { at: f64 },

    #[error("time map sends [{s0}, {s1}] to [{f0}, {f1}], expected [{t0}, {t1}]")]
    TimeMapRange { s0: f64, s1: f64, f0: f64, f1: f64, t0: f64, t1: f64 },

    #[error("path segment {index} moves {step:.3} rad in one coordinate (limit {limit})")]
    SegmentTooCoarse { index: usize, step: f64, limit: f64 },

    #[error("path is not closed (endpoint gap {gap:.3e})")]
    PathNotClosed { gap: f64 },

    #[error("path varies coordinate `{coordinate}` which must stay fixed")]
    PathVariesFixedCoordinates { coordinate: &'static str },

    #[error("coupling matrix has no nonzero singular value")]
    ZeroCoupling,

    #[error("detuned manifolds are not supported (detuning {detuning})")]
    UnsupportedDetuning { detuning: f64 },

    #[error("bright-block eigenvalue {eigenvalue:.3e} vanishes at t = {t}")]
    VanishingBrightEigenvalue { t: f64, eigenvalue: f64 },

    #[error("trajectory derivative inconsistent with its values at t = {t} (error {error:.3e})")]
    TrajectoryDerivative { t: f64, error: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
