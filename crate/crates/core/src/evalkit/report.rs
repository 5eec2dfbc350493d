use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::{edit_alignment, wer, EditAlignment};
use crate::ctc::{diagnose, GlossVocabulary, Labeling, LogitSequence, Verdict};
use crate::dataio::{make_batch, LoadedSample};
use crate::error::{Error, Result};
use crate::models::Network;
use crate::nncore::{Mode, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub id: String,
    #[serde(rename = "ref")]
    pub reference: Vec<String>,
    #[serde(rename = "hyp")]
    pub hypothesis: Vec<String>,
    #[serde(rename = "S")]
    pub substitutions: usize,
    #[serde(rename = "D")]
    pub deletions: usize,
    #[serde(rename = "I")]
    pub insertions: usize,
    #[serde(rename = "N")]
    pub reference_len: usize,
    pub verdict: Verdict,
}

impl SentenceReport {
    pub fn alignment(&self) -> EditAlignment {
        EditAlignment {
            substitutions: self.substitutions,
            deletions: self.deletions,
            insertions: self.insertions,
            reference_len: self.reference_len,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub split: String,
    pub wer_percent: f64,
    pub sentences: Vec<SentenceReport>,
    pub beam_size: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictTally {
    pub correct: usize,
    pub network_at_fault: usize,
    pub search_at_fault: usize,
}

impl EvalReport {
    pub fn tally(&self) -> VerdictTally {
        let mut t = VerdictTally::default();
        for s in &self.sentences {
            match s.verdict {
                Verdict::Correct => t.correct += 1,
                Verdict::NetworkAtFault => t.network_at_fault += 1,
                Verdict::SearchAtFault => t.search_at_fault += 1,
            }
        }
        t
    }

    /// WER recomputed from the stored per-sentence counts.
    pub fn recomputed_wer(&self) -> Result<f64> {
        let a: Vec<EditAlignment> = self.sentences.iter().map(SentenceReport::alignment).collect();
        wer(&a)
    }
}

/// Beam-decodes and diagnoses precomputed logits. `items` holds
/// `(id, logits, reference)`; decoding is spread over `workers` threads.
pub fn evaluate_logits<T: Scalar>(
    split: &str,
    items: &[(String, LogitSequence<T>, Labeling)],
    vocab: &GlossVocabulary,
    beam_size: usize,
    workers: usize,
) -> Result<EvalReport> {
    if let Some((_, logits, _)) = items.first() {
        if logits.num_classes() != vocab.num_classes() {
            return Err(Error::VocabularyMismatch(format!(
                "logits have {} classes, vocabulary needs {}",
                logits.num_classes(),
                vocab.num_classes()
            )));
        }
    }
    let chunk = items.len().div_ceil(workers.max(1)).max(1);
    let verdicts: Vec<Result<(Labeling, Verdict)>> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|(_, logits, reference)| {
                            let d = diagnose(logits, reference, beam_size)?;
                            Ok((d.hypothesis, d.verdict))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("decode worker panicked"))
            .collect()
    });
    let mut sentences = Vec::with_capacity(items.len());
    for ((id, _, reference), v) in items.iter().zip(verdicts) {
        let (hypothesis, verdict) = v?;
        let a = edit_alignment(reference, &hypothesis);
        sentences.push(SentenceReport {
            id: id.clone(),
            reference: vocab.decode(reference)?,
            hypothesis: vocab.decode(&hypothesis)?,
            substitutions: a.substitutions,
            deletions: a.deletions,
            insertions: a.insertions,
            reference_len: a.reference_len,
            verdict,
        });
    }
    let mut report = EvalReport {
        split: split.to_string(),
        wer_percent: 0.0,
        sentences,
        beam_size,
    };
    report.wer_percent = report.recomputed_wer()?;
    Ok(report)
}

/// Infer-mode logits for every sample, in order, trimmed to valid rows.
pub fn infer_logits(
    model: &mut dyn Network<f32>,
    samples: &[LoadedSample],
    batch_size: usize,
) -> Result<Vec<LogitSequence<f32>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(samples.len());
    for part in samples.chunks(batch_size.max(1)) {
        let refs: Vec<&LoadedSample> = part.iter().collect();
        let batch = make_batch(&refs, 0)?;
        out.extend(model.forward(&batch, Mode::Infer, &mut rng)?.iter().map(LogitSequence::trimmed));
    }
    Ok(out)
}

pub fn evaluate_model(
    model: &mut dyn Network<f32>,
    samples: &[LoadedSample],
    vocab: &GlossVocabulary,
    split: &str,
    beam_size: usize,
    workers: usize,
) -> Result<EvalReport> {
    if model.config().vocab_size != vocab.len() {
        return Err(Error::VocabularyMismatch(format!(
            "model predicts {} glosses, dataset vocabulary has {}",
            model.config().vocab_size,
            vocab.len()
        )));
    }
    let logits = infer_logits(model, samples, 16)?;
    let items: Vec<_> = samples
        .iter()
        .zip(logits)
        .map(|(s, l)| (s.id.clone(), l, s.target.clone()))
        .collect();
    evaluate_logits(split, &items, vocab, beam_size, workers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?} (expected text or json)"))),
        }
    }
}

fn column(reports: &[EvalReport], split: &str) -> String {
    reports
        .iter()
        .find(|r| r.split.eq_ignore_ascii_case(split))
        .map_or_else(|| "-".to_string(), |r| format!("{:.1}", r.wer_percent))
}

/// Text: a Dev/Test WER table followed by per-split verdict tallies.
/// JSON: one report object per line.
pub fn render_report(reports: &[EvalReport], format: ReportFormat, model_name: &str) -> String {
    match format {
        ReportFormat::Json => reports
            .iter()
            .map(|r| serde_json::to_string(r).expect("reports serialize") + "\n")
            .collect(),
        ReportFormat::Text => {
            let mut out = String::new();
            let name_width = model_name.len().max(5);
            let _ = writeln!(out, "{:<name_width$}  {:>9}  {:>9}", "Model", "Dev(WER)", "Test(WER)");
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>9}  {:>9}",
                model_name,
                column(reports, "dev"),
                column(reports, "test")
            );
            for r in reports {
                let t = r.tally();
                let _ = writeln!(
                    out,
                    "\n[{}] {} sentences, beam {}, WER {:.1}%\n  correct {}  network-at-fault {}  search-at-fault {}",
                    r.split,
                    r.sentences.len(),
                    r.beam_size,
                    r.wer_percent,
                    t.correct,
                    t.network_at_fault,
                    t.search_at_fault
                );
            }
            out
        }
    }
}
