use serde::{Deserialize, Serialize};

use super::{beam_decode, labeling_log_prob, Labeling, LogitSequence};
use crate::error::Result;
use crate::nncore::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Correct,
    /// The reference is less likely than the decoded output: train more.
    NetworkAtFault,
    /// The reference is more likely than the decoded output: widen the beam.
    SearchAtFault,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Correct => "Correct",
            Verdict::NetworkAtFault => "NetworkAtFault",
            Verdict::SearchAtFault => "SearchAtFault",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaultDiagnosis {
    pub hypothesis: Labeling,
    pub log_p_reference: f64,
    pub log_p_hypothesis: f64,
    pub verdict: Verdict,
}

/// Attributes a decoding error to the network or to the search.
///
/// Equal probabilities count against the network since a wider beam cannot
/// prefer the reference.
pub fn diagnose<T: Scalar>(logits: &LogitSequence<T>, reference: &Labeling, beam_size: usize) -> Result<FaultDiagnosis> {
    let hypothesis = beam_decode(logits, beam_size)?
        .into_iter()
        .next()
        .map(|(l, _)| l)
        .unwrap_or_default();
    let log_p_reference = labeling_log_prob(logits, reference);
    let log_p_hypothesis = labeling_log_prob(logits, &hypothesis);
    let verdict = if &hypothesis == reference {
        Verdict::Correct
    } else if log_p_reference > log_p_hypothesis {
        Verdict::SearchAtFault
    } else {
        Verdict::NetworkAtFault
    };
    Ok(FaultDiagnosis {
        hypothesis,
        log_p_reference,
        log_p_hypothesis,
        verdict,
    })
}
