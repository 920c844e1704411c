use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group spec mismatch: {0} vs {1}")]
    SpecMismatch(String, String),

    #[error("group constraint violated: residual {residual:.3e} exceeds {tol:.3e}")]
    ConstraintViolation { residual: f64, tol: f64 },

    #[error("matrix is not in the span of the algebra basis: residual {residual:.3e}")]
    NotInAlgebra { residual: f64 },

    #[error("tangent vector fails trivialization: projection residual {residual:.3e}")]
    NotTangent { residual: f64 },

    #[error("singular matrix cannot be inverted")]
    Singular,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("point too close to the domain boundary for finite differences (margin {0:.3e})")]
    BoundaryProximity(f64),

    #[error("form is not flat: max Maurer-Cartan residual {residual:.3e} exceeds {tol:.3e}")]
    NotFlat { residual: f64, tol: f64 },

    #[error("form is not closed: max exterior-derivative norm {residual:.3e} exceeds {tol:.3e}")]
    NotClosed { residual: f64, tol: f64 },

    #[error("linearized flatness precondition failed: residual {residual:.3e} exceeds {tol:.3e}")]
    NotLinearizedFlat { residual: f64, tol: f64 },

    #[error("loop endpoints differ by {0:.3e}; not a closed loop")]
    LoopNotClosed(f64),

    #[error("path leaves the domain at t = {0}")]
    PathExitsDomain(f64),

    #[error("two evaluation routes disagree by {deviation:.3e} (budget {tol:.3e}); increase step count")]
    RouteDisagreement { deviation: f64, tol: f64 },

    #[error("unknown group id `{0}`")]
    UnknownGroup(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bad preset parameters `{0}`: {1}")]
    BadPreset(String, String),

    #[error("unsupported homomorphism `{0}`")]
    UnsupportedHom(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
