//! Matrix-free estimation of the diagonal of a square matrix.
//!
//! Estimators only touch the matrix through [`linop::LinearOperator`], and every
//! product is counted, so cost is reported in matrix-vector products.
//!
//! ```
//! use diagest::prelude::*;
//!
//! let a = DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
//! let mut probes = ProbeStream::gaussian(42, 2);
//! let est = bekas_estimate(&a, &mut probes, 200).unwrap();
//! assert_eq!(est.matvecs_used, a.matvec_count());
//! ```

pub mod adaptive;
pub mod bounds;
pub mod data;
pub mod error;
pub mod estimators;
pub mod linop;
pub mod probes;
pub mod specfun;
pub mod vecops;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::adaptive::{
        adaptive_estimate, prototype_estimate, AdaptiveReport, Limits, OrthonormalBasis, ProbeCount,
    };
    pub use crate::bounds::{g_query_count, ErrorBudget, Tolerance};
    pub use crate::estimators::{
        bekas_estimate, diagpp_estimate, generalized_estimate, projected_estimate, xdiag_estimate,
        EstimateResult, Method,
    };
    pub use crate::linop::{
        exact_diagonal, DenseMatrix, DiagonalOperator, LinearOperator, PowerOperator, SparseMatrix,
    };
    pub use crate::probes::{Distribution, ProbeStream};
    pub use crate::vecops::relative_error;
}
