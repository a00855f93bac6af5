//! Content-aware encoding time and energy models for SVT-AV1.
//!
//! The crate covers the whole workflow: reading raw Y4M video, computing
//! spatial and temporal complexity descriptors, fitting the parametric time
//! model and the linear energy model against measured encodes, evaluating
//! them with cross-validated MAPE, and turning power-meter traces into
//! idle-corrected encoding energy.

pub mod descriptors;
pub mod error;
pub mod estimation;
pub mod io;
pub mod models;
pub mod power;
pub mod synthetic;
pub mod y4m;

pub use error::{Error, Result};
