//! Articulatory-feature probing of frame-level speech representations.
//!
//! The crate is organised along the analysis pipeline:
//!
//! * [`store`]: bit-exact feature files, phone alignments and manifests.
//! * [`mfcc`]: the 39-dimensional MFCC baseline frontend and context splicing.
//! * [`af`]: the articulatory-feature inventory, phone maps and frame labeling.
//! * [`probe`]: one-vs-rest linear SVM probes trained with SGD.
//! * [`metrics`]: macro-F1 reports, phone error rate and Pearson correlation.
//! * [`objectives`]: reference self-supervised and CTC objectives with
//!   analytic gradients.
//! * [`verify`]: the finite-difference and brute-force verification suite.

pub mod af;
mod error;
pub mod metrics;
pub mod mfcc;
pub mod objectives;
pub mod probe;
pub mod seed;
pub mod store;
pub mod verify;

pub use error::{Error, Result};
