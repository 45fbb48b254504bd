//! Core library: seeded classifier ensembles over labeled text corpora,
//! token-level explanations of their predictions, and the statistical
//! machinery to characterize how those explanations vary across seeds.

pub mod corpus;
pub mod enrich;
pub mod error;
pub mod explain;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
