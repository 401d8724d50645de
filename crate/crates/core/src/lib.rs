//! Uniform-recurrence dimension theory for hyperbolic automorphisms of the
//! 2-torus: exact eigen-geometry, Markov partitions and their symbolic
//! coding, the fixed-block combinatorics behind the lower bound, covering
//! analytics for the upper bound, closed-form dimension profiles, and small
//! exact counters with brute-force oracles.
//!
//! Parallel loops run on rayon when the `parallel` feature is enabled
//! (default). Every such loop also has a sequential path selected through
//! [`Execution`]; both produce identical results.

pub mod algebra;
pub mod coding;
pub mod dimension;
pub mod estimate;
mod exec;
pub mod layout;
pub mod partition;
pub mod shift;
pub mod verify;

pub use exec::Execution;

use thiserror::Error;

/// Union of all module errors, for callers that drive several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] algebra::AlgebraError),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
    #[error(transparent)]
    Shift(#[from] shift::ShiftError),
    #[error(transparent)]
    Coding(#[from] coding::CodingError),
    #[error(transparent)]
    Layout(#[from] layout::LayoutError),
    #[error(transparent)]
    Dimension(#[from] dimension::DimensionError),
    #[error(transparent)]
    Estimate(#[from] estimate::EstimateError),
}

impl Error {
    /// `Module::Variant` name of the underlying error, e.g.
    /// `PartitionError::UnknownCatalogEntry`.
    pub fn kind(&self) -> String {
        fn variant<T: std::fmt::Debug>(module: &str, e: &T) -> String {
            let dbg = format!("{e:?}");
            let end = dbg.find(['(', '{', ' ']).unwrap_or(dbg.len());
            format!("{module}::{}", &dbg[..end])
        }
        match self {
            Error::Algebra(e) => variant("AlgebraError", e),
            Error::Partition(e) => variant("PartitionError", e),
            Error::Shift(e) => variant("ShiftError", e),
            Error::Coding(e) => variant("CodingError", e),
            Error::Layout(e) => variant("LayoutError", e),
            Error::Dimension(e) => variant("DimensionError", e),
            Error::Estimate(e) => variant("EstimateError", e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_name_module_and_variant() {
        let e: Error = partition::PartitionError::UnknownCatalogEntry("x".into()).into();
        assert_eq!(e.kind(), "PartitionError::UnknownCatalogEntry");
        let e: Error = estimate::EstimateError::WindowTooSmall { m: 1, required: 2 }.into();
        assert_eq!(e.kind(), "EstimateError::WindowTooSmall");
    }
}
