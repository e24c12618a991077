use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("weight missing for vertex `{0}`")]
    MissingWeight(String),

    #[error("weight supplied for root vertex `{0}`")]
    RootWeight(String),

    #[error("zero weight at vertex `{0}`")]
    ZeroWeight(String),

    #[error("expected {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "not a conjugation: unitary residual {unitary:.3e}, symmetric residual {symmetric:.3e}"
    )]
    NotConjugation { unitary: f64, symmetric: f64 },

    #[error("domain vectors are not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),

    #[error("unsupported tree: {0}")]
    UnsupportedTree(String),

    #[error("weights differ within generation {0}")]
    NotGenerationConstant(usize),

    #[error("phase recursion for {sequence} breaks unimodularity at step {step}: |phase| = {modulus}")]
    PhaseRecursion {
        sequence: &'static str,
        step: usize,
        modulus: f64,
    },

    #[error("constructed conjugation fails verification (residual {0:.3e})")]
    Verification(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("step {step} infeasible: s^2 = {s_squared:.6e} (deficit {deficit:.6e})")]
    InfeasibleStep {
        step: usize,
        s_squared: f64,
        deficit: f64,
    },

    #[error("Gram matrix not positive definite at step {0}")]
    GramNotPositive(usize),

    #[error("broom check `{check}` failed for ({i}, {j}): residual {residual:.3e}")]
    BroomCheck {
        check: &'static str,
        i: usize,
        j: usize,
        residual: f64,
    },

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
