use num_complex::Complex64;
use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tolerance not met in {what}: residual {residual:e}")]
    ToleranceNotMet { what: String, residual: f64 },

    #[error("contour passes within {min_modulus:e} of a zero near {at}")]
    BoundaryTooClose { min_modulus: f64, at: Complex64 },

    #[error("derivative vanished at {at}")]
    DerivativeVanished { at: Complex64 },

    #[error("eigenvalue {value} has multiplicity {multiplicity}; residue formulas need a simple root")]
    MultipleRoot { value: Complex64, multiplicity: u32 },

    #[error("{lambda} lies within {modulus:e} of the spectrum")]
    NearSpectrum { lambda: Complex64, modulus: f64 },

    #[error("expected {expected} enclosed zero(s), found {found}")]
    WrongCount { expected: u32, found: u32 },

    #[error("z_0 = 0 is a double root of h0 when c = -1")]
    DoubleRootExcluded,

    #[error("{needed} gap(s) requested but only {available} resolvable on the {side} side")]
    InsufficientRoots {
        side: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("enumeration incomplete below distance {delta:e} (tail bound {tail_bound:e})")]
    Incomplete { delta: f64, tail_bound: f64 },

    #[error("phi_deriv deviates from the derivative of phi by {deviation:e}")]
    InconsistentHistory { deviation: f64 },

    #[error("state norm underflowed at t = {t}")]
    SignalUnderflow { t: f64 },

    #[error("collision between real part {real_part} and the accumulation line")]
    Collision { real_part: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
