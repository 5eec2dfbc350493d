use std::collections::BTreeMap;

use super::loss::log_probs;
use super::{Labeling, LogitSequence};
use crate::error::{Error, Result};
use crate::nncore::Scalar;

pub const ORACLE_MAX_FRAMES: usize = 8;
pub const ORACLE_MAX_GLOSSES: usize = 4;

/// Exact labeling distribution from enumerating every frame-level path.
pub fn enumerate_oracle<T: Scalar>(logits: &LogitSequence<T>) -> Result<BTreeMap<Labeling, f64>> {
    enumerate_oracle_with_limits(logits, ORACLE_MAX_FRAMES, ORACLE_MAX_GLOSSES)
}

/// As [`enumerate_oracle`], refusing inputs beyond `max_frames` frames or
/// `max_glosses` glosses since the path count is `(V+1)^T`.
pub fn enumerate_oracle_with_limits<T: Scalar>(
    logits: &LogitSequence<T>,
    max_frames: usize,
    max_glosses: usize,
) -> Result<BTreeMap<Labeling, f64>> {
    let steps = logits.input_length();
    let glosses = logits.num_classes() - 1;
    if steps > max_frames || glosses > max_glosses {
        return Err(Error::Input(format!(
            "oracle enumeration limited to T <= {max_frames}, V <= {max_glosses}; got T = {steps}, V = {glosses}"
        )));
    }
    let probs: Vec<Vec<f64>> = log_probs(logits)
        .into_iter()
        .map(|row| row.into_iter().map(f64::exp).collect())
        .collect();
    let k = glosses + 1;
    let blank = logits.blank();
    let mut dist = BTreeMap::new();
    let mut path = vec![0u32; steps];
    let total = k.pow(steps as u32);
    for code in 0..total {
        let mut c = code;
        let mut p = 1.0;
        for (t, slot) in path.iter_mut().enumerate() {
            *slot = (c % k) as u32;
            c /= k;
            p *= probs[t][*slot as usize];
        }
        *dist.entry(Labeling::collapse(&path, blank)).or_insert(0.0) += p;
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::Tensor;

    #[test]
    fn two_frames_uniform() {
        let logits = LogitSequence::new(Tensor::<f64>::zeros(&[2, 2]), 2).unwrap();
        let dist = enumerate_oracle(&logits).unwrap();
        assert_eq!(dist.len(), 2);
        assert!((dist[&Labeling::empty()] - 0.25).abs() < 1e-15);
        assert!((dist[&Labeling::new(vec![0])] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one() {
        let scores = Tensor::from_vec(&[4, 3], (0..12).map(|v| (v as f64 * 0.37).sin()).collect()).unwrap();
        let dist = enumerate_oracle(&LogitSequence::new(scores, 4).unwrap()).unwrap();
        assert!((dist.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn refuses_large_inputs() {
        let logits = LogitSequence::new(Tensor::<f64>::zeros(&[9, 2]), 9).unwrap();
        assert!(enumerate_oracle(&logits).is_err());
        let logits = LogitSequence::new(Tensor::<f64>::zeros(&[2, 6]), 2).unwrap();
        assert!(enumerate_oracle(&logits).is_err());
    }
}
