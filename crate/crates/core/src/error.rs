use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid noise set: {0}")]
    InvalidNoiseSet(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("state exploded at t = {t} (|x|_inf = {norm:e})")]
    Explosion { t: usize, norm: f64 },

    #[error("estimation needs at least one measurement pair")]
    NoPairs,

    #[error("estimator infeasible for arm {arm}")]
    Infeasible { arm: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("chart error: {0}")]
    Chart(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
