//! Spectral graph embedding toolkit built around locally weighted adjacency
//! spectral embedding: weight construction strategies, latent position model
//! simulation, evaluation harnesses, and local-to-global distance assembly.

pub mod error;
pub mod eval;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod latent;
pub mod local2global;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{Graph, GraphDistances};
pub use latent::{KernelSpec, LatentSample, ProbabilityMatrix, SupportSpec};
pub use spectral::{Embedding, SpectralModel};
pub use weights::{WeightStrategy, WeightVector};
