use serde::{Deserialize, Serialize};

use crate::ctc::Labeling;
use crate::error::{Error, Result};

/// Minimal edit counts from a reference to a hypothesis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditAlignment {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
}

impl EditAlignment {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Unit-cost Levenshtein alignment. Among alignments of equal cost the one with
/// fewer insertions, then fewer deletions, is reported.
pub fn edit_alignment(reference: &Labeling, hypothesis: &Labeling) -> EditAlignment {
    align_ids(reference.ids(), hypothesis.ids())
}

pub(crate) fn align_ids(r: &[u32], h: &[u32]) -> EditAlignment {
    // (cost, insertions, deletions) minimized lexicographically
    type Cell = (usize, usize, usize);
    let w = h.len() + 1;
    let mut dp: Vec<Cell> = vec![(0, 0, 0); (r.len() + 1) * w];
    for j in 1..w {
        dp[j] = (j, j, 0);
    }
    for i in 1..=r.len() {
        dp[i * w] = (i, 0, i);
        for j in 1..w {
            let (c, ins, del) = dp[(i - 1) * w + j - 1];
            let diag = if r[i - 1] == h[j - 1] { (c, ins, del) } else { (c + 1, ins, del) };
            let (c, ins, del) = dp[(i - 1) * w + j];
            let up = (c + 1, ins, del + 1);
            let (c, ins, del) = dp[i * w + j - 1];
            let left = (c + 1, ins + 1, del);
            dp[i * w + j] = diag.min(up).min(left);
        }
    }
    let (cost, insertions, deletions) = dp[r.len() * w + h.len()];
    EditAlignment {
        substitutions: cost - insertions - deletions,
        deletions,
        insertions,
        reference_len: r.len(),
    }
}

/// Aggregate word error rate in percent, rounded half-up to one decimal.
pub fn wer(alignments: &[EditAlignment]) -> Result<f64> {
    let errors: usize = alignments.iter().map(EditAlignment::errors).sum();
    let words: usize = alignments.iter().map(|a| a.reference_len).sum();
    percent_one_decimal(errors, words)
}

/// `100·num/den` rounded half-up to tenths, in exact integer arithmetic.
pub fn percent_one_decimal(num: usize, den: usize) -> Result<f64> {
    if den == 0 {
        return Err(Error::UndefinedMetric("word error rate over an empty reference set".into()));
    }
    let (num, den) = (num as u128, den as u128);
    let tenths = (2000 * num + den) / (2 * den);
    Ok(tenths as f64 / 10.0)
}
