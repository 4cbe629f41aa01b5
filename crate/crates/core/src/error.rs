use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the workbench. Variants that carry data name the
/// offending object so callers can print a witness without re-running.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: usize, right: usize },
    #[error("cannot tensor a linear with an antilinear operator")]
    MixedParity,
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("operation requires a linear operator")]
    AntilinearOperand,
    #[error("matrix has {rows} rows and {cols} columns, expected {expected}x{expected}")]
    BadMatrixShape { rows: usize, cols: usize, expected: usize },
    #[error("eigensolver did not converge")]
    NonConvergence,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("window must have N >= 1")]
    EmptyWindow,
    #[error("window N = {n} exceeds the cap {cap}")]
    WindowTooLarge { n: usize, cap: usize },
    #[error("margin {margin} exceeds window N = {n}")]
    MarginTooLarge { margin: usize, n: usize },
    #[error("invalid group table: {0}")]
    InvalidGroupTable(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("operation requires a windowed integer group")]
    NotWindowed,
    #[error("identity star convention requires an abelian group")]
    StarRequiresAbelian,
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("unknown group element {0}")]
    UnknownElement(String),

    #[error("invalid spectral triple: {0}")]
    InvalidTriple(String),
    #[error("triple has no real structure")]
    NoRealStructure,
    #[error("zeroth order condition fails on basis pair ({a}, {b}) with residual {residual:e}")]
    ZerothOrderViolation { a: usize, b: usize, residual: f64 },
    #[error("triple has no group unitaries")]
    MissingUnitaries,
    #[error("triple has no real structure J")]
    MissingJ,
    #[error("signs {0} do not occur in the KO table")]
    SignsNotInTable(String),

    #[error("Ad u_{g} does not preserve the algebra span (basis {basis}, residual {residual:e})")]
    ActionDoesNotPreserveAlgebra { g: String, basis: usize, residual: f64 },
    #[error("group is not finite")]
    GroupNotFinite,
    #[error("group is not abelian")]
    GroupNotAbelian,

    #[error("wrong star convention: {0}")]
    WrongStarConvention(String),
    #[error("base KO dimension is ambiguous: {0}")]
    AmbiguousBaseKO(String),
    #[error("no table row for {0}")]
    TableRowMismatch(String),
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("measured KO dimension {measured:?} differs from predicted {predicted}")]
    KoMismatch { predicted: u8, measured: Vec<u8> },

    #[error("product leaves the window: {0}")]
    WindowOverflow(String),
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("group element {0} has zero weight")]
    ZeroWeightElement(String),
    #[error("chain is not G-invariant (element {g}, residual {residual:e})")]
    NotGInvariant { g: String, residual: f64 },
    #[error("base chain is not an orientation cycle: {0}")]
    NotOrientation(String),

    #[error("schema error: {0}")]
    Schema(String),
}
