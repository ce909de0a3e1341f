//! Graph layout engine built around a self-challenging relativistic GAN.
//!
//! The crate covers the whole pipeline: graph ingestion and hop distances,
//! layout canonicalization, aesthetic criteria, classical baseline layouts,
//! a small reverse-mode autodiff tape, the GNN generator/discriminator, the
//! adversarial trainer, the SPC evaluation harness and an SVG renderer.

pub mod autodiff;
pub mod baselines;
pub mod collection;
pub mod criteria;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod geometry;
pub mod graph;
pub mod neural;
pub mod render;
pub mod rng;
pub mod trainer;

pub use collection::{CollectionEntry, LayoutCollection};
pub use criteria::{CriterionId, CriterionSpec, CriterionValue};
pub use dataset::Sample;
pub use error::{Error, ErrorKind, Result};
pub use geometry::Layout;
pub use graph::{DistanceMatrix, Graph};
