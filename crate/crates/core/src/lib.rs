//! Label-efficient speech recognition laboratory.
//!
//! Trains a small attention encoder-decoder on a synthetic dual-tone corpus
//! and runs the active-learning pipeline on top of it: score the unlabeled
//! pool by length-normalized beam-search path probability, annotate the
//! most uncertain utterances within a duration budget, pseudo-label the rest,
//! and train with a supervised loss plus a consistency loss on augmented
//! inputs.

pub mod augment;
pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod dsp;
mod error;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
