use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("poset has no elements")]
    EmptyPoset,
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown element label `{0}`")]
    UnknownLabel(String),
    #[error("element index {0} is out of range")]
    UnknownElement(usize),
    #[error("cover relation has a cycle through `{0}`")]
    CycleDetected(String),
    #[error("poset has several minimal elements: {0:?}")]
    MultipleMinimalElements(Vec<String>),
    #[error("cover edge `{child}` ⋖ `{parent}` is implied by transitivity")]
    RedundantCoverEdge { child: String, parent: String },
    #[error("declared bottom `{declared}` but the unique minimal element is `{found}`")]
    BottomMismatch { declared: String, found: String },

    #[error("probability of `{label}` is {value}, must be strictly positive")]
    NonPositiveProbability { label: String, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("probability vector has {got} entries for a poset of {expected} elements")]
    LengthMismatch { expected: usize, got: usize },
    #[error("eta coordinates are inconsistent: p(`{label}`) would be {value}")]
    InconsistentEta { label: String, value: f64 },
    #[error("poset has {size} elements, this routine accepts at most {max}")]
    PosetTooLarge { size: usize, max: usize },
    #[error("distributions live on different posets")]
    PosetMismatch,
    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("no feasible bracket for the singleton solve at `{0}`")]
    NoFeasibleBracket(String),
    #[error("singleton solve at `{element}` did not converge in {iterations} iterations")]
    MaxIterations { element: String, iterations: usize },
    #[error("mixed distribution did not converge after {iterations} sweeps (residual {residual:e})")]
    MaxOuterIterations { iterations: usize, residual: f64 },

    #[error("subsets do not form a chain from ∅ to S⁺: {0}")]
    NotAChain(String),
    #[error("`{0}` and `{1}` have no join")]
    JoinDoesNotExist(String, String),
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDof(i64),
    #[error("sample size must be at least 1")]
    InvalidSampleSize,
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("no observation reaches the frequency threshold")]
    EmptyModel,
    #[error("no representative lies below all others and no bottom vector was supplied")]
    NoBottom,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid joint table: {0}")]
    InvalidJointTable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from a numerical solver rather than from
    /// malformed input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoFeasibleBracket(_) | Error::MaxIterations { .. } | Error::MaxOuterIterations { .. }
        )
    }
}
