//! L1-norm principal component analysis by iteratively reweighted least squares.
//!
//! The crate minimizes the entrywise L1 reconstruction error `Σ|A - AXX'|` over orthonormal
//! loadings `X` by solving a sequence of row-weighted L2-PCA problems:
//!
//! - [`irls::wpca`] solves every weighted subproblem exactly;
//! - [`irls::awpca`] replaces most solves with first-order eigenpair updates once the weights
//!   settle ([`perturbation`]).
//!
//! Around the solvers sit a seeded synthetic instance generator ([`instance_gen`]), matrix I/O
//! and standardization ([`dataio`]), a benchmark harness with the capped gap metric ([`bench`])
//! and the command-line front end ([`cli`]).
//!
//! ```
//! use l1pca::{irls, linalg::DataMatrix};
//!
//! let a = DataMatrix::from_rows(&[
//!     vec![1.0, 0.9],
//!     vec![-1.0, -1.1],
//!     vec![2.0, 2.1],
//!     vec![-2.0, -1.9],
//!     vec![0.0, 8.0],
//! ])?;
//! let fit = irls::wpca(&a, 1, &irls::IrlsConfig::default())?;
//! assert!(fit.best_objective <= fit.objective_trace[0]);
//! # Ok::<(), l1pca::Error>(())
//! ```

pub mod bench;
pub mod cli;
pub mod dataio;
mod error;
pub mod instance_gen;
pub mod irls;
pub mod linalg;
pub mod perturbation;
pub mod weights;

pub use error::{Error, Result};
pub use irls::{awpca, fit, wpca, IrlsConfig, IrlsResult, Mode, Termination, Trigger};
pub use linalg::{DataMatrix, EigenpairSet, PrincipalComponents};
