use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("path space has {count} paths, exceeding the enumeration cap of {cap}")]
    Size { count: u128, cap: u64 },

    #[error("{what} = {value} is out of range [{min}, {max}]")]
    Range {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("tables live on different path spaces")]
    SpaceMismatch,

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("incomplete market: singular system at step {step} (atom {atom})")]
    IncompleteMarket { step: usize, atom: String },

    #[error("arbitrage: martingale measure at step {step} has non-positive weights {q:?}")]
    Arbitrage { step: usize, q: Vec<f64> },

    #[error("state-dependent EMM unsupported: step {step} solutions disagree across atoms")]
    StateDependentEmm { step: usize },

    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl TryInto<i64>, min: i64, max: i64) -> Self {
        Error::Range {
            what,
            value: value.try_into().unwrap_or(i64::MAX),
            min,
            max,
        }
    }
}
