//! Clustering-constrained attention multiple-instance learning (CLAM) for
//! weakly supervised whole-slide image classification.
//!
//! A slide is a bag of patch feature vectors carrying one label. The model
//! pools instances with class-specific gated attention, classifies the pooled
//! representations, and regularizes the instance embedding with a clustering
//! objective on pseudo-labelled, strongly and weakly attended instances.

pub mod bag;
pub mod baselines;
pub mod checkpoint;
pub mod error;
pub mod heatmap;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod params;
pub mod synth;
pub mod training;
pub mod weak;
pub mod wsi;

pub use bag::FeatureBag;
pub use error::{ClamError, Result};
pub use model::ClamParams;
pub use numerics::{Matrix, SeededRng};
pub use params::ParamSet;
