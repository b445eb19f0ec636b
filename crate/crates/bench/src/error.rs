use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] dpl_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad experiment spec: {0}")]
    Spec(String),

    #[error("cannot read experiment spec: {0}")]
    TomlRead(#[from] toml::de::Error),

    #[error("cannot write experiment spec: {0}")]
    TomlWrite(#[from] toml::ser::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot error: {0}")]
    Plot(String),
}
