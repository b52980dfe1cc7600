//! Real-time hand detection and gesture classification for thermal frames.
//!
//! The pipeline runs per frame:
//!
//! 1. [`background`]: single-Gaussian background model producing a hand mask.
//! 2. [`region`]: grid reduction, k-means with silhouette-selected `k`, box
//!    growth and IOU deduplication to find up to three hand regions.
//! 3. [`segmentation`]: reference point, palm centre by bubble growth, wrist
//!    points by bubble search, forearm removal and 100×100 normalization.
//! 4. [`classifier`]: a small LeNet-style CNN over the normalized mask.
//!
//! [`synthgen`] renders synthetic hands with exact ground truth and provides
//! brute-force oracles; [`pipeline`] ties the stages together with ingestion,
//! record output and benchmarking.

pub mod background;
pub mod classifier;
pub mod error;
pub mod imaging;
pub mod pipeline;
pub mod region;
pub mod segmentation;
pub mod synthgen;

pub use error::{Error, Result};
