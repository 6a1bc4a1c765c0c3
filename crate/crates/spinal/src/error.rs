//! One error type for the whole crate. The CLI maps it onto process exit
//! codes, so variants are grouped by what the caller can do about them.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("multiplication table is not associative at ({x} {y} {z})")]
    NotAssociative { x: String, y: String, z: String },
    #[error("multiplication table has no two-sided identity")]
    NoIdentity,
    #[error("element {0} has no two-sided inverse")]
    NoInverse(String),
    #[error("duplicate element name {0:?}")]
    DuplicateName(String),
    #[error("not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("root action is not faithful: {0} and {1} act identically")]
    NotFaithful(String, String),
    #[error("root action is not transitive on 1..q")]
    NotTransitive,
    #[error("epimorphism {0} is not surjective")]
    NotSurjective(String),
    #[error("kernels do not cover the level group: {0} lies in none")]
    KernelsDoNotCover(String),
    #[error("intersection of the kernels is not trivial: contains {0}")]
    KernelIntersectionNontrivial(String),
    #[error("unknown epimorphism id {0:?}")]
    UnknownEpiId(String),
    #[error("not factorable into complete blocks of length <= {r} (block starting at index {at} never completes)")]
    NotFactorable { r: usize, at: usize },
    #[error("weight undefined: {0} is killed by no omega_i with i <= r")]
    WeightUndefined(String),
    #[error("word does not stabilize tree level {level}: node {path:?} has a nontrivial root permutation")]
    NotLevelStabilizing { level: usize, path: Vec<usize> },
    #[error("subgroup closure exceeded the limit of {0} elements")]
    ClosureLimitExceeded(usize),
    #[error("invalid parameter range: {0}")]
    InvalidRange(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("portrait cutoff {k} is below the minimum {kzeta} for zeta = {zeta}")]
    InvalidCutoff { k: f64, kzeta: f64, zeta: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("recursion limit {0} hit (possible non-torsion element or non-regular action)")]
    RecursionLimit(usize),
    #[error("intermediate word length {len} exceeds the limit {limit}")]
    LengthBlowup { len: usize, limit: usize },
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("no common element in column {0} of the two-line word set")]
    ColumnMatchFailed(usize),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("validation failed: {0}")]
    ValidationError(String),
    #[error("internal invariant breach: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class: 2 for bad input or failed validation, 3 for blown
    /// budgets and limits, 4 for internal invariant breaches.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::ClosureLimitExceeded(_)
            | Error::BudgetExceeded(_)
            | Error::RecursionLimit(_)
            | Error::LengthBlowup { .. } => 3,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }
}
