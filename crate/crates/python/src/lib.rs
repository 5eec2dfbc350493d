//! Python bindings: CTC loss and decoding, WER, cue extraction, corpus
//! generation, and checkpoint inference.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use signrec::cues::{self, HandLandmarks, Point};
use signrec::ctc::{self, GlossVocabulary, Labeling, LogitSequence};
use signrec::evalkit;
use signrec::models::{load_checkpoint, Architecture};
use signrec::nncore::Tensor;
use signrec::synthgen::{generate_dataset_with_workers, CorpusSpec};

fn py_err(e: signrec::Error) -> PyErr {
    if e.is_data_error() || matches!(e, signrec::Error::Dimension(_)) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn logits(rows: Vec<Vec<f64>>) -> PyResult<LogitSequence<f64>> {
    let t = rows.len();
    let scores = Tensor::from_rows(&rows).map_err(py_err)?;
    LogitSequence::new(scores, t).map_err(py_err)
}

/// `(loss, gradient)` of `-log p(target | logits)` for one `[T][V+1]` sequence.
#[pyfunction]
fn ctc_loss(scores: Vec<Vec<f64>>, target: Vec<u32>) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let l = logits(scores)?;
    let r = ctc::ctc_loss(&l, &Labeling::new(target)).map_err(py_err)?;
    let k = l.num_classes();
    Ok((r.loss, r.grad.data().chunks(k).map(<[f64]>::to_vec).collect()))
}

#[pyfunction]
fn greedy_decode(scores: Vec<Vec<f64>>) -> PyResult<Vec<u32>> {
    Ok(ctc::greedy_decode(&logits(scores)?).0)
}

/// Prefix beam search; hypotheses with their log probabilities, best first.
#[pyfunction]
#[pyo3(signature = (scores, beam_size = 8))]
fn beam_decode(scores: Vec<Vec<f64>>, beam_size: usize) -> PyResult<Vec<(Vec<u32>, f64)>> {
    let beams = ctc::beam_decode(&logits(scores)?, beam_size).map_err(py_err)?;
    Ok(beams.into_iter().map(|(l, p)| (l.0, p)).collect())
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone, Debug)]
struct Diagnosis {
    hypothesis: Vec<u32>,
    log_p_reference: f64,
    log_p_hypothesis: f64,
    verdict: String,
}

#[pyfunction]
#[pyo3(signature = (scores, reference, beam_size = 8))]
fn diagnose(scores: Vec<Vec<f64>>, reference: Vec<u32>, beam_size: usize) -> PyResult<Diagnosis> {
    let d = ctc::diagnose(&logits(scores)?, &Labeling::new(reference), beam_size).map_err(py_err)?;
    Ok(Diagnosis {
        hypothesis: d.hypothesis.0,
        log_p_reference: d.log_p_reference,
        log_p_hypothesis: d.log_p_hypothesis,
        verdict: d.verdict.as_str().to_string(),
    })
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone, Copy, Debug)]
struct Alignment {
    substitutions: usize,
    deletions: usize,
    insertions: usize,
    reference_len: usize,
}

#[pyfunction]
fn edit_alignment(reference: Vec<u32>, hypothesis: Vec<u32>) -> Alignment {
    let a = evalkit::edit_alignment(&Labeling::new(reference), &Labeling::new(hypothesis));
    Alignment {
        substitutions: a.substitutions,
        deletions: a.deletions,
        insertions: a.insertions,
        reference_len: a.reference_len,
    }
}

/// Corpus WER in percent over `(reference, hypothesis)` pairs.
#[pyfunction]
fn wer(pairs: Vec<(Vec<u32>, Vec<u32>)>) -> PyResult<f64> {
    let a: Vec<_> = pairs
        .into_iter()
        .map(|(r, h)| evalkit::edit_alignment(&Labeling::new(r), &Labeling::new(h)))
        .collect();
    evalkit::wer(&a).map_err(py_err)
}

/// Skeleton image of 21 `(x, y)` hand landmarks as rows of 0/1.
#[pyfunction]
#[pyo3(signature = (points, side = 32))]
fn rasterize_hand(points: Vec<(f64, f64)>, side: usize) -> PyResult<Vec<Vec<u8>>> {
    let points: Vec<Point> = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
    let hand: HandLandmarks = points
        .try_into()
        .map_err(|p: Vec<Point>| PyValueError::new_err(format!("expected {} points, got {}", cues::HAND_POINTS, p.len())))?;
    let img = cues::rasterize_hand(&hand, side).map_err(py_err)?;
    Ok(img.bits().chunks(side).map(<[u8]>::to_vec).collect())
}

type HandCueLists = (Vec<Vec<Vec<u8>>>, Vec<Vec<f32>>, Vec<Vec<f32>>);

/// Per-hand `(images, displacement, location)` for a landmark JSONL file,
/// left hand first.
#[pyfunction]
#[pyo3(signature = (landmarks, side = 32))]
fn extract_cues(landmarks: PathBuf, side: usize) -> PyResult<(HandCueLists, HandCueLists)> {
    let frames = cues::load_landmarks(&landmarks).map_err(py_err)?;
    let c = cues::build_cue_sequences(&frames, side).map_err(py_err)?;
    let hand = |h: &cues::HandCues| -> HandCueLists {
        (
            h.images.iter().map(|i| i.bits().chunks(side).map(<[u8]>::to_vec).collect()).collect(),
            h.displacement.data().chunks(2).map(<[f32]>::to_vec).collect(),
            h.location.data().chunks(3).map(<[f32]>::to_vec).collect(),
        )
    };
    Ok((hand(&c.left), hand(&c.right)))
}

/// Writes a synthetic corpus; `spec_json` overrides default fields. Returns
/// the gloss vocabulary.
#[pyfunction]
#[pyo3(signature = (out, spec_json = None, workers = 1))]
fn generate_corpus(out: PathBuf, spec_json: Option<&str>, workers: usize) -> PyResult<Vec<String>> {
    let spec: CorpusSpec = match spec_json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("corpus spec: {e}")))?,
        None => CorpusSpec::default(),
    };
    let vocab = generate_dataset_with_workers(&spec, &out, workers).map_err(py_err)?;
    Ok(vocab.glosses().to_vec())
}

#[pyclass(name = "Vocabulary", frozen)]
struct PyVocabulary(GlossVocabulary);

#[pymethods]
impl PyVocabulary {
    #[new]
    fn new(glosses: Vec<String>) -> PyResult<Self> {
        GlossVocabulary::new(glosses).map(PyVocabulary).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        GlossVocabulary::load(&path).map(PyVocabulary).map_err(py_err)
    }

    #[getter]
    fn glosses(&self) -> Vec<String> {
        self.0.glosses().to_vec()
    }

    #[getter]
    fn blank(&self) -> u32 {
        self.0.blank()
    }

    fn encode(&self, glosses: Vec<String>) -> PyResult<Vec<u32>> {
        Ok(self.0.encode(&glosses).map_err(py_err)?.0)
    }

    fn decode(&self, ids: Vec<u32>) -> PyResult<Vec<String>> {
        self.0.decode(&Labeling::new(ids)).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// A trained checkpoint on disk.
#[pyclass(frozen)]
struct Model {
    path: PathBuf,
    architecture: Architecture,
    glosses: Vec<String>,
    step: u64,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ckpt = load_checkpoint(&path).map_err(py_err)?;
        Ok(Model {
            architecture: ckpt.model.config().architecture,
            glosses: ckpt.vocabulary.glosses().to_vec(),
            step: ckpt.step,
            path,
        })
    }

    #[getter]
    fn architecture(&self) -> &'static str {
        match self.architecture {
            Architecture::RSignC => "RSignC",
            Architecture::MCSignC => "MCSignC",
        }
    }

    #[getter]
    fn glosses(&self) -> Vec<String> {
        self.glosses.clone()
    }

    #[getter]
    fn step(&self) -> u64 {
        self.step
    }

    /// Gloss sequence for one landmark JSONL file.
    #[pyo3(signature = (landmarks, beam_size = 8))]
    fn decode(&self, landmarks: PathBuf, beam_size: usize) -> PyResult<Vec<String>> {
        signrec::cli::decode_landmarks(&self.path, &landmarks, beam_size).map_err(py_err)
    }

    /// `(split, WER percent)` for each manifest.
    #[pyo3(signature = (manifests, beam_size = 8, workers = 1))]
    fn evaluate(&self, manifests: Vec<PathBuf>, beam_size: usize, workers: usize) -> PyResult<Vec<(String, f64)>> {
        let (_, reports) =
            signrec::cli::evaluate_checkpoint(&self.path, &manifests, beam_size, workers).map_err(py_err)?;
        Ok(reports.into_iter().map(|r| (r.split, r.wer_percent)).collect())
    }
}

#[pymodule]
fn signrec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ctc_loss, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_decode, m)?)?;
    m.add_function(wrap_pyfunction!(beam_decode, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(edit_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(wer, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize_hand, m)?)?;
    m.add_function(wrap_pyfunction!(extract_cues, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_class::<PyVocabulary>()?;
    m.add_class::<Model>()?;
    m.add_class::<Diagnosis>()?;
    m.add_class::<Alignment>()?;
    Ok(())
}
