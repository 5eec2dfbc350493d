use super::{Labeling, LogitSequence};
use crate::error::{Error, Result};
use crate::nncore::{log_softmax_row, Scalar, Tensor};

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Loss and gradient of one sequence.
#[derive(Clone, Debug)]
pub struct CtcLoss<T> {
    /// `-log p(target | logits)`.
    pub loss: f64,
    /// Gradient with respect to the raw scores; padded rows are zero.
    pub grad: Tensor<T>,
}

/// Log-softmax of every valid row, in f64.
pub(crate) fn log_probs<T: Scalar>(logits: &LogitSequence<T>) -> Vec<Vec<f64>> {
    (0..logits.input_length())
        .map(|t| {
            let row: Vec<f64> = logits.scores().row(t).iter().map(|v| v.as_f64()).collect();
            log_softmax_row(&row)
        })
        .collect()
}

/// Blank-augmented label sequence `[b, l1, b, l2, ..., lU, b]`.
fn extended(target: &Labeling, blank: u32) -> Vec<u32> {
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(blank);
    for &l in target.ids() {
        ext.push(l);
        ext.push(blank);
    }
    ext
}

/// Forward variables `alpha[t][s]` in log space (emission at `t` included).
fn forward_vars(lp: &[Vec<f64>], ext: &[u32], blank: u32) -> Vec<Vec<f64>> {
    let steps = lp.len();
    let s_len = ext.len();
    let mut alpha = vec![vec![f64::NEG_INFINITY; s_len]; steps];
    alpha[0][0] = lp[0][blank as usize];
    if s_len > 1 {
        alpha[0][1] = lp[0][ext[1] as usize];
    }
    for t in 1..steps {
        for s in 0..s_len {
            let mut a = alpha[t - 1][s];
            if s >= 1 {
                a = log_add(a, alpha[t - 1][s - 1]);
            }
            if s >= 2 && ext[s] != blank && ext[s] != ext[s - 2] {
                a = log_add(a, alpha[t - 1][s - 2]);
            }
            alpha[t][s] = a + lp[t][ext[s] as usize];
        }
    }
    alpha
}

/// Backward variables `beta[t][s]` in log space (emission at `t` included).
fn backward_vars(lp: &[Vec<f64>], ext: &[u32], blank: u32) -> Vec<Vec<f64>> {
    let steps = lp.len();
    let s_len = ext.len();
    let mut beta = vec![vec![f64::NEG_INFINITY; s_len]; steps];
    beta[steps - 1][s_len - 1] = lp[steps - 1][blank as usize];
    if s_len > 1 {
        beta[steps - 1][s_len - 2] = lp[steps - 1][ext[s_len - 2] as usize];
    }
    for t in (0..steps - 1).rev() {
        for s in 0..s_len {
            let mut b = beta[t + 1][s];
            if s + 1 < s_len {
                b = log_add(b, beta[t + 1][s + 1]);
            }
            if s + 2 < s_len && ext[s] != blank && ext[s] != ext[s + 2] {
                b = log_add(b, beta[t + 1][s + 2]);
            }
            beta[t][s] = b + lp[t][ext[s] as usize];
        }
    }
    beta
}

fn total_log_prob(alpha: &[Vec<f64>]) -> f64 {
    let last = &alpha[alpha.len() - 1];
    let s_len = last.len();
    if s_len > 1 {
        log_add(last[s_len - 1], last[s_len - 2])
    } else {
        last[0]
    }
}

/// CTC negative log-likelihood and its gradient with respect to the scores.
///
/// Returns [`Error::InfeasibleTarget`] when the valid frames cannot hold the
/// target (each label plus a blank between equal neighbours).
pub fn ctc_loss<T: Scalar>(logits: &LogitSequence<T>, target: &Labeling) -> Result<CtcLoss<T>> {
    let blank = logits.blank();
    target.check_against(blank)?;
    let required = target.min_frames();
    if logits.input_length() < required {
        return Err(Error::InfeasibleTarget {
            target_len: target.len(),
            required,
            available: logits.input_length(),
        });
    }
    let lp = log_probs(logits);
    let ext = extended(target, blank);
    let alpha = forward_vars(&lp, &ext, blank);
    let beta = backward_vars(&lp, &ext, blank);
    let log_p = total_log_prob(&alpha);

    let k = logits.num_classes();
    let mut grad = Tensor::zeros(logits.scores().shape());
    for t in 0..lp.len() {
        // Posterior occupancy per class: Σ_{s: ext[s]=k} α β / y.
        let mut occ = vec![f64::NEG_INFINITY; k];
        for s in 0..ext.len() {
            let c = ext[s] as usize;
            occ[c] = log_add(occ[c], alpha[t][s] + beta[t][s] - lp[t][c]);
        }
        let row = grad.row_mut(t);
        for c in 0..k {
            let g = lp[t][c].exp() - (occ[c] - log_p).exp();
            row[c] = T::from_f64(g);
        }
    }
    Ok(CtcLoss { loss: -log_p, grad })
}

/// `log p(labeling | logits)`; infeasible labelings have probability zero.
pub fn labeling_log_prob<T: Scalar>(logits: &LogitSequence<T>, labeling: &Labeling) -> f64 {
    let blank = logits.blank();
    if labeling.check_against(blank).is_err() || logits.input_length() < labeling.min_frames() {
        return f64::NEG_INFINITY;
    }
    let lp = log_probs(logits);
    let ext = extended(labeling, blank);
    total_log_prob(&forward_vars(&lp, &ext, blank))
}
