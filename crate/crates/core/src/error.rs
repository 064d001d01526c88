use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {p}^{e} does not fit below 2^63")]
    ModulusTooLarge { p: u64, e: u32 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("group of order {order} exceeds the explicit-group cap {cap}")]
    GroupTooLarge { order: u128, cap: usize },
    #[error("enumeration budget exceeded ({needed} > {budget})")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
