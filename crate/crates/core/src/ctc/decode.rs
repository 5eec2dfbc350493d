use std::cmp::Ordering;
use std::collections::HashMap;

use super::loss::{log_add, log_probs};
use super::{Labeling, LogitSequence};
use crate::error::{Error, Result};
use crate::nncore::Scalar;

/// Best-path decoding: per-frame argmax (lowest id wins ties), then collapse.
pub fn greedy_decode<T: Scalar>(logits: &LogitSequence<T>) -> Labeling {
    let path: Vec<u32> = (0..logits.input_length())
        .map(|t| {
            let row = logits.scores().row(t);
            let mut best = 0;
            for (k, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = k;
                }
            }
            best as u32
        })
        .collect();
    Labeling::collapse(&path, logits.blank())
}

#[derive(Clone, Copy, Debug)]
struct PrefixMass {
    blank: f64,
    non_blank: f64,
}

impl PrefixMass {
    const ZERO: PrefixMass = PrefixMass {
        blank: f64::NEG_INFINITY,
        non_blank: f64::NEG_INFINITY,
    };

    fn total(&self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

fn rank(a: &(Vec<u32>, f64), b: &(Vec<u32>, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0))
}

/// CTC prefix beam search.
///
/// Each hypothesis is a collapsed labeling whose probability sums every
/// alignment that produces it, with blank-ending and label-ending mass kept
/// apart so that repeats are merged correctly. Returns at most `beam_size`
/// hypotheses sorted by descending log probability (ties by labeling order).
pub fn beam_decode<T: Scalar>(logits: &LogitSequence<T>, beam_size: usize) -> Result<Vec<(Labeling, f64)>> {
    if beam_size == 0 {
        return Err(Error::Config("beam size must be at least 1".into()));
    }
    let lp = log_probs(logits);
    let blank = logits.blank() as usize;
    let mut beams: Vec<(Vec<u32>, PrefixMass)> = vec![(
        Vec::new(),
        PrefixMass {
            blank: 0.0,
            non_blank: f64::NEG_INFINITY,
        },
    )];

    for row in &lp {
        let mut next: HashMap<Vec<u32>, PrefixMass> = HashMap::with_capacity(beams.len() * row.len());
        for (prefix, mass) in &beams {
            let total = mass.total();
            let stay = next.entry(prefix.clone()).or_insert(PrefixMass::ZERO);
            stay.blank = log_add(stay.blank, total + row[blank]);
            let last = prefix.last().copied();
            for (c, &p) in row.iter().enumerate() {
                if c == blank {
                    continue;
                }
                let c = c as u32;
                let mut extended = prefix.clone();
                extended.push(c);
                if last == Some(c) {
                    let stay = next.get_mut(prefix).expect("inserted above");
                    stay.non_blank = log_add(stay.non_blank, mass.non_blank + p);
                    let e = next.entry(extended).or_insert(PrefixMass::ZERO);
                    e.non_blank = log_add(e.non_blank, mass.blank + p);
                } else {
                    let e = next.entry(extended).or_insert(PrefixMass::ZERO);
                    e.non_blank = log_add(e.non_blank, total + p);
                }
            }
        }
        let mut ranked: Vec<(Vec<u32>, f64, PrefixMass)> =
            next.into_iter().map(|(k, m)| (k, m.total(), m)).collect();
        ranked.sort_by(|a, b| rank(&(a.0.clone(), a.1), &(b.0.clone(), b.1)));
        ranked.truncate(beam_size);
        beams = ranked.into_iter().map(|(k, _, m)| (k, m)).collect();
    }

    Ok(beams
        .into_iter()
        .map(|(k, m)| (Labeling::new(k), m.total()))
        .collect())
}
