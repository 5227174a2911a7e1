//! Continuous piecewise-linear (CPWL) approximation of a vector field on a
//! Kuhn-triangulated box, approximation bounds, and the error-bound
//! co-simulation.

mod bounds;
mod partition;
mod pieces;

use thiserror::Error;

use crate::system::SystemError;

pub use bounds::{
    block_matrix, block_spectrum_error, integrate_error_bounds, xi, BoundOptions, BoundSample,
    ErrorBoundRun,
};
pub use partition::{barycentric_lattice, build_partition, SimplicialPartition};
pub use pieces::{
    check_theorem1, cpwl_eval, error_samples, fit_pieces, frontier_distance, global_lambda,
    interpolate, pieces_csv, worst_case_planes, AffinePiece, Theorem1Failure, Theorem1Verdict,
    WorstCasePlanes, FRONTIER_TOL, LAMBDA_SAFETY_FACTOR, SAMPLE_DENOMINATOR,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpwlError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("simplex {0} has affinely dependent vertices")]
    SingularSimplex(usize),
    #[error("field evaluation failed on simplex {simplex}: {source}")]
    Field {
        simplex: usize,
        source: SystemError,
    },
}
