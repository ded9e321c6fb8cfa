use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity exceeded: {what} needs {needed} entries, budget is {budget}")]
    Capacity {
        what: &'static str,
        needed: u128,
        budget: u128,
    },
    #[error("representation table covers m ≤ {limit}, but m = {needed} is required")]
    TableTooSmall { limit: u64, needed: u64 },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("enumeration budget of {budget} exceeded")]
    Range { budget: u64 },
    #[error("quadrature did not converge (value {value}, error estimate {error})")]
    Quadrature { value: f64, error: f64 },
    #[error("tail bound {achieved:e} cannot reach tolerance {tol:e} within the budget")]
    TolUnreachable { tol: f64, achieved: f64 },
    #[error("no qualifying X in [{x_min}, {x_cap}]")]
    NotFound { x_min: u64, x_cap: u64 },
    #[error("H-policy violation: {0}")]
    Policy(String),
    #[error("search cap exceeded: {0}")]
    SearchCap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
