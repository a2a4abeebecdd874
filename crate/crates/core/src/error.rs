use alloc::string::String;

/// Errors produced by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite values,
    /// single-class labels, zero vectors, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Two objects that must agree in size do not.
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A configuration value violates its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The numerical routine produced NaN/inf or an unbounded problem.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape {
            context,
            expected,
            found,
        })
    }
}
