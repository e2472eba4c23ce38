//! sparcon: anomaly detection on attributed networks that couples
//! similarity-threshold graph sparsification with dual-view node-subgraph
//! contrastive learning.
//!
//! The sparsified topology serves twice: as a second contrastive view and
//! as a direct anomaly signal (how many of a node's edges the threshold
//! deletes). Per-node scores fuse the contrastive discrimination gap with
//! that sparsification signal.

#![forbid(unsafe_code)]

pub mod error;
pub mod eval;
pub mod graph;
pub mod inject;
pub mod mat;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod sample;
pub mod sparsify;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{AnomalyLabels, AttributedGraph, NodeId, NodeLabel};
pub use inject::InjectionConfig;
pub use model::{ContrastModel, ModelConfig, SparTargetMode};
pub use pipeline::{PipelineOutput, ScoreTable, TrainConfig};
pub use sample::{SamplerConfig, SubgraphPair};
pub use sparsify::{SimilarityIndex, SparsifiedView};
