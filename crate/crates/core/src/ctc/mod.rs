//! Connectionist temporal classification: loss and gradient, best-path and
//! prefix beam decoding, an exhaustive oracle, and beam-vs-network diagnosis.
//!
//! All probability arithmetic runs in f64 log space regardless of the logit
//! precision.

mod decode;
mod diagnose;
mod loss;
mod oracle;
mod vocab;

pub use decode::{beam_decode, greedy_decode};
pub use diagnose::{diagnose, FaultDiagnosis, Verdict};
pub use loss::{ctc_loss, labeling_log_prob, CtcLoss};
pub use oracle::{enumerate_oracle, enumerate_oracle_with_limits, ORACLE_MAX_FRAMES, ORACLE_MAX_GLOSSES};
pub use vocab::{GlossVocabulary, Labeling};

use crate::error::{Error, Result};
use crate::nncore::{Scalar, Tensor};

/// Per-frame unnormalized scores over `V` glosses plus the blank (last column).
#[derive(Clone, Debug, PartialEq)]
pub struct LogitSequence<T> {
    scores: Tensor<T>,
    input_length: usize,
}

impl<T: Scalar> LogitSequence<T> {
    /// `scores` is `[T_padded, V + 1]`; rows at or beyond `input_length` are
    /// padding and ignored everywhere.
    pub fn new(scores: Tensor<T>, input_length: usize) -> Result<Self> {
        let s = scores.shape();
        if s.len() != 2 || s[1] < 2 {
            return Err(Error::Dimension(format!(
                "logits must be [T, V + 1] with V >= 1, got {s:?}"
            )));
        }
        if input_length == 0 || input_length > s[0] {
            return Err(Error::Dimension(format!(
                "input length {input_length} outside 1..={}",
                s[0]
            )));
        }
        Ok(LogitSequence { scores, input_length })
    }

    pub fn scores(&self) -> &Tensor<T> {
        &self.scores
    }

    pub fn input_length(&self) -> usize {
        self.input_length
    }

    pub fn num_classes(&self) -> usize {
        self.scores.dim(1)
    }

    pub fn blank(&self) -> u32 {
        (self.num_classes() - 1) as u32
    }

    /// The valid rows only.
    pub fn trimmed(&self) -> LogitSequence<T> {
        LogitSequence {
            scores: self.scores.slice_rows(0, self.input_length),
            input_length: self.input_length,
        }
    }
}
