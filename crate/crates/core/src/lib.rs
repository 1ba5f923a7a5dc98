//! Edge-centric signal processing on order-2 clique complexes.
//!
//! The crate lifts node time series to edge signals, splits them with the
//! Hodge decomposition of the edge Laplacian and feeds the result to two
//! decoding experiments: recurrence-matrix clustering scored with
//! element-centric similarity, and one-vs-one linear SVMs evaluated with
//! leave-one-subject-out cross-validation.

pub mod classify;
pub mod cluster;
pub mod complex;
mod error;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod signals;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};

pub use complex::{BoundaryOperators, SignedIncidence, SimplicialComplex2, WeightedGraph};
pub use signals::{EdgeTimeSeries, NodeTimeSeries, PhaseSeries};
pub use spectral::{EigenBasis, HodgeDecomposition, SymmetricOperator};
