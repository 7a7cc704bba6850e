//! Cost and benefit of covariate adjustment in two-arm randomized trials.
//!
//! The crate computes the observed variance inflation factor of a
//! covariate model by three equivalent routes ([`vif`]), evaluates its
//! closed-form moments and the related planning rules ([`theory`]), and
//! checks them against a deterministic parallel Monte Carlo engine
//! ([`sim`]). Numerical code is generic over [`Real`]; closed-form
//! rational formulas are generic over [`Field`] and also run exactly over
//! [`Exact`].

pub mod dataset;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod synthetic;
pub mod theory;
pub mod vif;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

/// Exact rational scalar for the closed-form formulas.
pub type Exact = num_rational::Ratio<i128>;

pub type Matrix = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type OlsFit = linalg::OlsFit<f64>;
pub type DesignMatrix = dataset::DesignMatrix<f64>;
pub type VifResult = vif::VifResult<f64>;
pub type ChiSquareResult = vif::ChiSquareResult<f64>;
pub type RaoBridge = vif::RaoBridge<f64>;
pub type TheoryMoments = theory::TheoryMoments<f64>;
pub type ExactMoments = theory::TheoryMoments<Exact>;
pub type ThreeFactorBudget = theory::ThreeFactorBudget<f64>;
