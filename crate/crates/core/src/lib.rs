//! Seed selection for influence maximization on multi-layer social networks.
//!
//! The pipeline samples an influence subgraph around every node by running a
//! short multiplex cascade from it, embeds each subgraph with an adaptive
//! damping message-passing network, adds community and embedding-distance
//! features, and fits a regressor to Monte-Carlo Multi-SIR spread labels.
//! The top-scoring nodes form the seed set.

pub mod config;
pub mod differentiation;
pub mod diffusion;
pub mod error;
pub mod evaluation;
pub mod glain;
pub mod matrix;
pub mod multiplex;
pub mod paths;
pub mod pipeline;
pub mod regressor;
pub mod sampler;
pub mod seeding;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
pub use multiplex::{LayerGraph, LayerStats, MultilayerNetwork, NodeId};
