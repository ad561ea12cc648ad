use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma out of range (0,1): {0}")]
    GammaOutOfRange(f64),
    #[error("gamma1 + gamma2 = {0} <= 1 (subcritical pair)")]
    SubcriticalPair(f64),
    #[error("a must be positive, got {0}")]
    NonpositiveA(f64),
    #[error("lambda out of range (0,1): {0}")]
    LambdaOutOfRange(f64),
    #[error("b = {b} must exceed 17/delta = {min}")]
    BadB { b: f64, min: f64 },
    #[error("empty grid")]
    EmptyGrid,
    #[error("bad root spec: {0}")]
    BadRootSpec(String),
    #[error("window half-length must be positive, got {0}")]
    WindowTooSmall(f64),
    #[error("edge query between vertices of the same type")]
    SameTypePair,
    #[error("unknown vertex id {0}")]
    UnknownId(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("mark {h} outside band [{lo}, {hi}]")]
    BadBand { h: f64, lo: f64, hi: f64 },
    #[error("empty initial infected set")]
    EmptyInitialSet,
    #[error("event cap of {0} exceeded")]
    EventCapExceeded(u64),
    #[error("bad leaf count: m = {m}, n = {n}")]
    BadLeafCount { m: usize, n: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("path length {len} exceeds cap {cap}")]
    LengthTooLarge { len: usize, cap: usize },
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("threshold must lie in (0,1], got {0}")]
    BadThreshold(f64),
    #[error("distinguished leaf {0} is not a non-root leaf")]
    BadDistinguishedLeaf(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no reduction applies to a non-segment tree")]
    StuckTree,
    #[error("colouring does not apply to this path: {0}")]
    InvalidColouringForPath(String),
    #[error("need at least 2 usable points, got {0}")]
    TooFewPoints(usize),
    #[error("{0} rows with zero estimate")]
    ZeroTheta(usize),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
