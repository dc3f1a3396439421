use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario size K must be at least 1, got {0}")]
    InvalidScenario(usize),

    #[error("expected {expected} table entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("entry {index} is negative ({value:e})")]
    NegativeEntry { index: usize, value: f64 },

    #[error("block ({k},{k_prime}) sums to {sum:.17} instead of 1")]
    NotNormalized { k: usize, k_prime: usize, sum: f64 },

    #[error("setting {setting} out of range 0..={max}")]
    SettingOutOfRange { setting: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at x = {x}: denominator {denominator:e} is numerically zero")]
    Pole { x: f64, denominator: f64 },

    #[error("K = {k} exceeds the enumeration budget (max {max})")]
    BudgetExceeded { k: usize, max: usize },

    #[error("derivation failed: {0}")]
    DerivationFailed(String),

    #[error("shots per setting pair must be at least 1")]
    ZeroShots,

    #[error("count block ({k},{k_prime}) sums to {sum}, expected {shots}")]
    BadCounts {
        k: usize,
        k_prime: usize,
        sum: u64,
        shots: u64,
    },

    #[error("unsupported table order {0:?}")]
    UnsupportedOrder(String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name used in machine-readable error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidScenario(_) => "InvalidScenario",
            Error::WrongLength { .. } => "WrongLength",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::SettingOutOfRange { .. } => "SettingOutOfRange",
            Error::Domain(_) => "DomainError",
            Error::Pole { .. } => "PoleError",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::DerivationFailed(_) => "DerivationFailed",
            Error::ZeroShots => "ZeroShots",
            Error::BadCounts { .. } => "BadCounts",
            Error::UnsupportedOrder(_) => "UnsupportedOrder",
            Error::Solver(_) => "SolverError",
            Error::Json(_) => "JsonError",
        }
    }
}
