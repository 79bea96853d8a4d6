use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimacs parse error at line {line}: {msg}")]
    Dimacs { line: usize, msg: String },

    #[error("clause mentions variable {var} twice")]
    DuplicateVariable { var: u32 },

    #[error("variable {var} out of range 1..={n}")]
    VariableOutOfRange { var: u32, n: u32 },

    #[error("clause width {width} exceeds bound k={k}")]
    WidthExceeded { width: usize, k: usize },

    #[error("{what} supports at most {cap} variables, got {n}")]
    BruteForceCap {
        what: &'static str,
        cap: u32,
        n: u32,
    },

    #[error("formula is not uniquely satisfiable ({solutions} solutions)")]
    NotUniquelySatisfiable { solutions: usize },

    #[error("formula is not normalized to the all-ones solution")]
    NotNormalized,

    #[error("implication width {w} exceeds configured cap {cap}")]
    WidthCapExceeded { w: usize, cap: usize },

    #[error("operation requires k = {expected}, formula has k = {got}")]
    WrongWidth { expected: usize, got: usize },

    #[error("instance generation failed after {attempts} attempts")]
    GenerationBudget { attempts: usize },

    #[error("placement is missing a value for label {label}")]
    MissingLabel { label: String },

    #[error("density 1 + eps*phi can go negative for {spec} at eps={eps}")]
    NegativeDensity { spec: String, eps: f64 },

    #[error("graph density can go negative: {edges} edges at eps={eps} (cap {cap})")]
    GraphDensityNegative { edges: usize, eps: f64, cap: usize },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("critical clause tree construction found no violated clause for node labeled {var}")]
    NoViolatedClause { var: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
