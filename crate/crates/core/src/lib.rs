//! Sentence-level sign language recognition with a CTC classification layer.
//!
//! Two recognizers are provided: [`models::RSignC`], a recurrent-convolutional
//! network over rendered frames, and [`models::McSignC`], a multi-cue network
//! that fuses per-hand skeleton images, palm displacement, and head-relative
//! location. The crate also contains the synthetic corpus generator, CTC loss
//! and decoders, word-error-rate evaluation, and the `signrec` command line.

pub mod error;
pub mod nncore;

pub use error::{Error, Result};
pub mod ctc;
pub mod cues;
pub mod dataio;
pub mod synthgen;
pub mod evalkit;
pub mod models;
pub mod cli;
