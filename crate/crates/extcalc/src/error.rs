use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type.
///
/// Numeric failures carry the achieved accuracy so callers can report it
/// instead of silently accepting a wrong value.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("atom weight must be positive, got {weight} at location {location}")]
    NonpositiveWeight { location: f64, weight: f64 },

    #[error("atom locations must be pairwise distinct, {0} repeats")]
    DuplicateAtom(f64),

    #[error("density interval [{a}, {b}] is empty or inverted")]
    EmptyInterval { a: f64, b: f64 },

    #[error("density intervals [{a0}, {b0}] and [{a1}, {b1}] overlap")]
    OverlappingIntervals { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("density is negative near lambda = {at}")]
    NegativeDensity { at: f64 },

    #[error("density denominator vanishes near lambda = {at}")]
    DensityPole { at: f64 },

    #[error("table abscissae must be strictly increasing")]
    TableNotIncreasing,

    #[error("tabulated density needs at least two samples")]
    TableTooShort,

    #[error("density on an unbounded interval must decay (numerator degree exceeds denominator degree)")]
    NonIntegrableDensity,

    #[error("lattice spacing must be positive, got {0}")]
    NonpositiveSpacing(f64),

    #[error("family scale must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("measure not normalized: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotNormalized { defect: f64, tol: f64 },

    #[error("measure declared infinite but its description has finite total mass")]
    FiniteMassDeclaredInfinite,

    #[error("evaluation point {z} lies on the closed support of the measure")]
    PoleOnSupport { z: Complex64 },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("point {z} must lie in the open upper half-plane")]
    NotUpperHalfPlane { z: Complex64 },

    #[error("point {z} must lie off the real axis")]
    RequiresNonreal { z: Complex64 },

    #[error("von Neumann parameter must satisfy |kappa| < 1, got |kappa| = {modulus}")]
    KappaNotContractive { modulus: f64 },

    #[error("extension parameter must satisfy |kappa| <= 1 and kappa != 1")]
    KappaNotAdmissible,

    #[error("value at i has modulus {modulus} >= 1: not the characteristic function of a dissipative triple")]
    InvalidCharacteristicAtI { modulus: f64 },

    #[error("recovered Weyl-Titchmarsh function has a pole at {z} (the recovered Livsic function equals 1 there)")]
    RecoveredPole { z: Complex64 },

    #[error("model vector has {got} entries but the measure has {expected} atoms")]
    VectorLengthMismatch { got: usize, expected: usize },

    #[error("operation requires a finite purely atomic measure")]
    NotAtomic,

    #[error("domain decomposition is degenerate: the deficiency combination has zero mean on this surrogate measure")]
    DegenerateDecomposition,

    #[error("vector is not in the extension domain: decomposition residual {residual:.3e}")]
    NotInDomain { residual: f64 },

    #[error("z = {z} is an eigenvalue of the dissipative extension (its characteristic function vanishes there), the resolvent is undefined")]
    Eigenvalue { z: Complex64 },

    #[error("near-degenerate denominator (modulus {modulus:.3e}) in inner-product ratio")]
    DegenerateRatio { modulus: f64 },

    #[error("triples must share the same measure")]
    MeasureMismatch,

    #[error("invalid search region: {0}")]
    InvalidRegion(String),

    #[error("winding-number computation unstable: {0}")]
    WindingUnstable(String),

    #[error("root refinement failed near {z}: {detail}")]
    RefinementFailed { z: Complex64, detail: String },

    #[error("boundary-value extrapolation did not settle: estimate {estimate:.6e}, spread {spread:.3e}")]
    ExtrapolationDiverged { estimate: f64, spread: f64 },

    #[error("epsilon schedule must be strictly decreasing and positive")]
    BadSchedule,

    #[error("ray angle {0} is tangential; angles must lie strictly inside (0, pi)")]
    TangentialRay(f64),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
