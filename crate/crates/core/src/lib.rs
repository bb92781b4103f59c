//! Decoherence channels as Schur maps.
//!
//! A channel that leaves every operator diagonal in a fixed basis untouched
//! acts as entrywise multiplication by a correlation matrix `ξ`. This crate
//! validates and manipulates such channels, decides whether their action can
//! be undone by measuring the environment and feeding the outcome back, and
//! computes the classical information such a recovery needs.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the CLI uses.

pub mod channel;
pub mod cli;
pub mod decompose;
pub mod dilation;
pub mod entropy;
pub mod error;
pub mod fixtures;
pub mod numerics;
pub mod optimize;
pub mod random;
pub mod scalar;
pub mod suite;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type ComplexMatrix64 = numerics::ComplexMatrix<f64>;
pub type Spectrum64 = numerics::Spectrum<f64>;
pub type CorrelationMatrix64 = channel::CorrelationMatrix<f64>;
pub type SchurChannel64 = channel::SchurChannel<f64>;
pub type DensityMatrix64 = channel::DensityMatrix<f64>;
pub type KrausSet64 = channel::KrausSet<f64>;
pub type RandomUnitaryDecomposition64 = decompose::RandomUnitaryDecomposition<f64>;
pub type ExtremalityCertificate64 = decompose::ExtremalityCertificate<f64>;
pub type DilationModel64 = dilation::DilationModel<f64>;
pub type RecoveryReport64 = dilation::RecoveryReport<f64>;
pub type InfoReport64 = entropy::InfoReport<f64>;
