//! Dissipative Rydberg-array simulation of a non-reciprocal SSH chain.
//!
//! The pipeline runs from laser and geometry parameters ([`model`]) through
//! six-atom dynamics ([`microscopic`]) and engineered decay with adiabatic
//! elimination ([`dissipation`]) to the non-Hermitian chain ([`chain`],
//! [`pipeline`]), its localization and topology ([`metrics`]) and disorder
//! ensembles ([`disorder`]). Dense kernels live in [`numerics`].

pub mod acceptance;
pub mod chain;
pub mod disorder;
pub mod dissipation;
pub mod error;
pub mod metrics;
pub mod microscopic;
pub mod model;
pub mod numerics;
pub mod output;
pub mod pipeline;

pub use chain::{ChainCouplings, ChainHamiltonian, ComplexSpectrum};
pub use disorder::{DisorderKind, DisorderSpec, EnsembleResult};
pub use dissipation::NhCouplings;
pub use error::{Error, Result};
pub use metrics::{LocalizationReport, WindingResult};
pub use model::{Boundary, Color, CouplingSet, PhysicalConfig, SiteId, Species};
pub use numerics::C64;
pub use pipeline::Pipeline;
