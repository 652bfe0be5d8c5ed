use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    // -- geometry / mesh ----------------------------------------------------
    #[error("segment count must be odd so a centre feed segment exists (got {0})")]
    EvenSegmentCount(usize),
    #[error("segment count must be at least 3 (got {0})")]
    TooFewSegments(usize),
    #[error("{name} must be positive (got {value})")]
    NonPositiveDimension { name: &'static str, value: f64 },
    #[error("wire radius {radius} m violates the thin-wire limit λ/100 = {limit} m")]
    RadiusTooLarge { radius: f64, limit: f64 },

    // -- Green's functions ----------------------------------------------------
    #[error("quasi-static reflection coefficient has a pole at eps_r = -1")]
    PoleAtMinusOne,
    #[error("spectral root branch violation: Im(k_z1) = {0} > 0")]
    BranchViolation(f64),
    #[error("kernel is singular for coincident source and observation points")]
    SingularCoincidentPoints,
    #[error("linear-prediction system is ill-conditioned (condition estimate {cond:.3e})")]
    IllConditionedPrediction { cond: f64 },
    #[error("only {recovered} of {requested} exponentials are recoverable from the samples")]
    RankDeficient { recovered: usize, requested: usize },
    #[error(
        "spectral tail did not converge: partial sum ({estimate_re:.6e}, {estimate_im:.6e}), \
         error bound {bound:.3e}"
    )]
    NonConvergentTail {
        estimate_re: f64,
        estimate_im: f64,
        bound: f64,
    },

    // -- matrix assembly / solve ----------------------------------------------
    #[error("self terms are singular for zero wire radius")]
    SingularSelfTerm,
    #[error("lossy-ground assembly requires a fitted complex-image set")]
    FitMissing,
    #[error("impedance matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },
    #[error("{matrix} is not positive definite; cannot reduce the symmetric pencil")]
    NotPositiveDefinite { matrix: &'static str },

    // -- modal expansion / coupling ---------------------------------------------
    #[error("modal power matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularPMatrix { cond: f64 },
    #[error("mode set and impedance system were built on different meshes ({left} vs {right})")]
    MeshMismatch { left: usize, right: usize },
    #[error("modal weights require the radiation-weighted or isolated formulation")]
    UnsupportedFormulation,
    #[error("first-order quadratic is degenerate (leading coefficient {a:.3e})")]
    DegenerateQuadratic { a: f64 },
    #[error("first-order quadratic has complex roots (discriminant {discriminant:.3e})")]
    ComplexRoots { discriminant: f64 },

    // -- fields -------------------------------------------------------------
    #[error("sphere patterns were sampled on different grids")]
    GridMismatch,
    #[error("observation point ({x}, {y}, {z}) lies on the wire surface")]
    PointOnWire { x: f64, y: f64, z: f64 },

    // -- metrics ------------------------------------------------------------
    #[error("reference eigenvalue is zero; relative error undefined")]
    ZeroReference,
    #[error("mode angle undefined for a zero vector")]
    ZeroVector,
    #[error("efficiency denominator (isolated radiated power) is zero")]
    ZeroDenominator,

    // -- configuration / IO ---------------------------------------------------
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error("numeric assertion failed: {0}")]
    NumericAssertion(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
