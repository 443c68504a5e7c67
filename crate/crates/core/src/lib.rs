//! Joint routing and MIMO broadcast power allocation for wireless mesh
//! networks.
//!
//! Each node's outgoing links form a Gaussian vector broadcast channel,
//! handled through its dual multiple-access channel. Session rates,
//! multipath routes and per-link transmit covariances are chosen jointly to
//! maximize proportional fairness `Σ_f ln s_f` by Lagrangian decomposition.
//!
//! The matrix, link-layer and LP kernels are generic over [`scalar::Real`];
//! the aliases below fix the scalar for the common cases. The network model,
//! routing and dual solvers work in `f64`.

pub mod dual;
pub mod error;
pub mod hermitian;
pub mod lp;
pub mod mac;
pub mod network;
pub mod routing;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ComplexMatrix64 = hermitian::ComplexMatrix<f64>;
pub type ComplexMatrix32 = hermitian::ComplexMatrix<f32>;
pub type HermitianMatrix64 = hermitian::HermitianMatrix<f64>;
pub type HermitianMatrix32 = hermitian::HermitianMatrix<f32>;
pub type NodeMac64 = mac::NodeMac<f64>;
pub type NodeMac32 = mac::NodeMac<f32>;
pub type LinkAllocation64 = mac::LinkAllocation<f64>;
pub type CgpParams64 = mac::CgpParams<f64>;
pub type LinearProgram64 = lp::LinearProgram<f64>;
pub type LinearProgram32 = lp::LinearProgram<f32>;
pub type LpSolution64 = lp::LpSolution<f64>;
