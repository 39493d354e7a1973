pub mod error;
pub mod experiments;
pub mod liouville;
pub mod mc_frames;
pub mod lindblad;
pub mod linalg;
pub mod randgen;
pub mod real;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
pub use real::Real;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix = linalg::Matrix<f64>;
pub type CMatrix = linalg::CMatrix<f64>;
pub type OperatorBasis = liouville::OperatorBasis<f64>;
pub type MapMatrix = liouville::MapMatrix<f64>;
pub type UnitalDecomposition = liouville::UnitalDecomposition<f64>;
pub type Dissipator = lindblad::Dissipator<f64>;
pub type ZZModelParams = lindblad::ZZModelParams<f64>;
pub type StateSet = tomography::StateSet<f64>;
pub type ProbMatrix = tomography::ProbMatrix<f64>;
pub type Spam = tomography::Spam<f64>;
pub type SpamConfig = tomography::SpamConfig<f64>;
pub type GateTable = context_tests::GateTable<f64>;
pub type ToyModel = context_tests::ToyModel<f64>;
