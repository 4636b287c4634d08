//! Spherical (HCIZ) integrals of large random matrices.
//!
//! The crate evaluates the rank-asymptotic functional `J`, the large deviation
//! rate functions built on it, spherical spin-glass free energies and spiked
//! matrix mutual information, and checks all of them against finite-N Monte
//! Carlo estimates over sampled random matrices.

pub mod applications;
pub mod asymptotics;
mod error;
pub mod linalg;
pub mod measures;
pub mod montecarlo;
pub mod optim;
pub mod randmat;
pub mod rng;
pub mod variational;

pub use applications::{DenoiseProblem, VectorSpinProblem};
pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use measures::Measure;
pub use montecarlo::{LogEstimate, Method};
pub use randmat::{Beta, DeformationSpec, EnsembleSpec, EntryLaw, Matrix, SpectrumSample};
pub use variational::{VariationalPoint, VariationalProblem};

/// Library version, echoed into every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
