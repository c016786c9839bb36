//! Population synthesis from incomplete categorical microsamples with a
//! masked Wasserstein GAN with gradient penalty.
//!
//! The crate is organised bottom-up:
//!
//! - [`schema`], [`dataset`], [`encoding`], [`corrupt`], [`stats`], [`toy`]:
//!   the categorical data model, one-hot encoding with a missing-value mask,
//!   the corruption protocol and a synthetic ground-truth generator.
//! - [`autodiff`]: a dense reverse-mode engine with the second-order path the
//!   gradient penalty needs.
//! - [`wgan`]: generator and critic networks, losses, regularizers, the masked
//!   training loop, generation and checkpoints.
//! - [`eval`]: attribute-level and joint-distribution quality metrics and the
//!   general / sampling-zero / structural-zero taxonomy.
//! - [`pipeline`]: the batch experiment behind the `popsynth` binary.

pub mod autodiff;
pub mod corrupt;
pub mod dataset;
pub mod encoding;
mod error;
pub mod eval;
pub mod pipeline;
pub mod schema;
pub mod seed;
pub mod stats;
pub mod toy;
pub mod wgan;

pub use error::DataError;
