use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("division by an expression that is identically zero")]
    ZeroDenominator,
    #[error("expression has {terms} terms, exceeding the limit of {limit}")]
    ExprTooLarge { terms: usize, limit: usize },
    #[error("tower {family} needs member {index}, beyond the configured depth {max_depth}")]
    TowerExhausted {
        family: String,
        index: usize,
        max_depth: usize,
    },
    #[error("expression has jet order {found}, but only order {allowed} is available")]
    OrderMismatch { allowed: usize, found: usize },
    #[error("denominator vanishes at the given point")]
    DivisionByZeroAtPoint,
    #[error("symbol {0} has no value at the given point")]
    UnassignedSymbol(String),
    #[error("not invariant under {generator}: residual {residual}")]
    NotInvariant { generator: String, residual: String },
    #[error("point lies on the singular hyperplane {0} = 0")]
    SingularPoint(String),
    #[error("identity failed on probe {probe}: residual {residual}")]
    IdentityFailed { probe: String, residual: String },
    #[error("relation {relation} failed: residual {residual}")]
    SyzygyFailed { relation: String, residual: String },
    #[error("only {found} independent invariants of order {order}, expected {expected}")]
    RankDeficiency {
        order: usize,
        found: usize,
        expected: usize,
    },
    #[error("order {order}: codimension {observed} at sample {sample}, expected {expected}")]
    CodimMismatch {
        order: usize,
        sample: usize,
        observed: usize,
        expected: usize,
    },
    #[error("order {order}: stratum rank {observed}, expected {expected}")]
    RankMismatch {
        order: usize,
        observed: usize,
        expected: usize,
    },
    #[error("restriction is identically singular: {0} vanishes for this control function")]
    IdenticallySingular(String),
    #[error("field is not admissible: {equation} has residual {residual}")]
    NotAdmissible { equation: String, residual: String },
    #[error("sample point {0} hits a zero of f, f_y or f_u")]
    SingularSample(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown symbol {name}; valid names: {valid}")]
    UnknownSymbol { name: String, valid: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}
