//! Feature-level differential privacy for split inference over fading
//! wireless channels.
//!
//! A device projects a clipped feature vector through a random Laplace
//! encoder, adds Gaussian noise calibrated to an `(epsilon, delta)` budget and
//! transmits over a scalar (or multi-antenna) fading link. The server decodes
//! with a pseudo-inverse; an eavesdropper sees its own noisy copy. The crate
//! provides the pipeline itself, closed-form MSE and accuracy bounds, and a
//! Monte Carlo harness that checks the bounds empirically.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod harness;
pub mod mimo;
pub mod pipeline;
pub mod privacy;
pub mod randmat;
pub mod rng;

pub use error::{Error, Result};
