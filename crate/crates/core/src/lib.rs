//! Linear latent-space semantics for generative models.
//!
//! A binary attribute is modelled as a hyperplane in latent space with unit
//! normal `n`; the attribute score of a code `z` grows linearly with the
//! signed distance `nᵀz`. On top of that model this crate provides:
//!
//! - [`trainer`]: boundary discovery from scored samples (extreme-score
//!   candidates, train/validation split, linear max-margin classifier).
//! - [`geometry`]: editing along normals, conditional projection that keeps
//!   other attributes fixed, and the special codes used to probe separability.
//! - [`analysis`]: correlation, re-scoring, layer-wise and identity metrics.
//! - [`concentration`]: Monte-Carlo checks of how Gaussian latents concentrate
//!   around hyperplanes and the `√d` sphere.
//! - [`oracle`]: a synthetic ground-truth scorer realizing the linear model
//!   exactly, used to verify everything above.
//! - [`io`]: LSDF latent files, score CSVs and boundary JSON.

pub mod analysis;
pub mod concentration;
mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod trainer;
mod types;

pub use error::{Error, Result};
pub use types::{
    AccuracyReport, Boundary, LatentCode, ManipulationSpec, ScoredSample, ScoredSet, Space,
    UNIT_NORM_TOL,
};
