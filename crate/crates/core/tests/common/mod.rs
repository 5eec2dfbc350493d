//! Shared fixtures and independent oracles for the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signrec::cues::{load_landmarks, write_landmark_stream, LandmarkFrame};
use signrec::ctc::{ctc_loss, GlossVocabulary, Labeling, LogitSequence};
use signrec::dataio::{write_manifest, Batch, BatchInput, ManifestRecord};
use signrec::models::{build_model, save_checkpoint, Architecture, ConvSpec, ModelConfig};
use signrec::nncore::{
    finite_diff_check, BatchNorm, BiLstm, Conv2d, Dense, Dropout, Layer, Lstm, MaxPool2d, Mode, Padding, Param, Relu,
    Tensor,
};
use signrec::synthgen::{build_gloss_library, synthesize_sentence, CorpusSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

// ---------------------------------------------------------------- CTC oracles

/// Random `[T, V+1]` logits with entries in `[-scale, scale]`.
pub fn random_logits(rng: &mut ChaCha8Rng, frames: usize, glosses: usize, scale: f64) -> LogitSequence<f64> {
    let data = (0..frames * (glosses + 1)).map(|_| rng.random_range(-scale..scale)).collect();
    LogitSequence::new(Tensor::from_vec(&[frames, glosses + 1], data).unwrap(), frames).unwrap()
}

/// A random target that fits in `frames` frames.
pub fn random_target(rng: &mut ChaCha8Rng, frames: usize, glosses: usize, max_len: usize) -> Labeling {
    loop {
        let len = rng.random_range(0..=max_len);
        let ids: Vec<u32> = (0..len).map(|_| rng.random_range(0..glosses as u32)).collect();
        let l = Labeling::new(ids);
        if l.min_frames() <= frames {
            return l;
        }
    }
}

fn softmax_rows(logits: &LogitSequence<f64>) -> Vec<Vec<f64>> {
    (0..logits.input_length())
        .map(|t| {
            let row = logits.scores().row(t);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|v| v / z).collect()
        })
        .collect()
}

/// Labeling distribution by enumerating all `(V+1)^T` paths.
pub fn path_enumeration(logits: &LogitSequence<f64>) -> BTreeMap<Vec<u32>, f64> {
    let p = softmax_rows(logits);
    let k = logits.num_classes();
    let blank = (k - 1) as u32;
    let mut dist = BTreeMap::new();
    let mut path = vec![0usize; p.len()];
    loop {
        let prob: f64 = path.iter().enumerate().map(|(t, &c)| p[t][c]).product();
        let mut out = Vec::new();
        let mut prev = None;
        for &c in &path {
            let c = c as u32;
            if c != blank && prev != Some(c) {
                out.push(c);
            }
            prev = Some(c);
        }
        *dist.entry(out).or_insert(0.0) += prob;
        // odometer increment
        let mut i = 0;
        while i < path.len() {
            path[i] += 1;
            if path[i] < k {
                break;
            }
            path[i] = 0;
            i += 1;
        }
        if i == path.len() {
            return dist;
        }
    }
}

/// Analytic-vs-numeric CTC gradient error on one instance.
pub fn ctc_gradcheck(logits: &LogitSequence<f64>, target: &Labeling, step: f64) -> f64 {
    let shape = logits.scores().shape().to_vec();
    let len = logits.input_length();
    finite_diff_check(
        |x| {
            let l = LogitSequence::new(Tensor::from_vec(&shape, x.to_vec()).unwrap(), len).unwrap();
            let r = ctc_loss(&l, target).unwrap();
            (r.loss, r.grad.into_data())
        },
        logits.scores().data(),
        step,
    )
}

// ---------------------------------------------------------------- WER oracle

/// Minimum `(cost, insertions, deletions)` over every alignment, by exhaustive
/// recursion without memoization.
pub fn exhaustive_alignment(r: &[u32], h: &[u32]) -> (usize, usize, usize) {
    match (r.split_first(), h.split_first()) {
        (None, None) => (0, 0, 0),
        (Some(_), None) => (r.len(), 0, r.len()),
        (None, Some(_)) => (h.len(), h.len(), 0),
        (Some((a, rr)), Some((b, hh))) => {
            let (c, i, d) = exhaustive_alignment(rr, hh);
            let diag = (c + usize::from(a != b), i, d);
            let (c, i, d) = exhaustive_alignment(rr, h);
            let del = (c + 1, i, d + 1);
            let (c, i, d) = exhaustive_alignment(r, hh);
            let ins = (c + 1, i + 1, d);
            diag.min(del).min(ins)
        }
    }
}

// ---------------------------------------------------------------- layer gradients

pub const LAYERS: [&str; 11] = [
    "dense",
    "conv_same",
    "conv_valid_stride2",
    "batch_norm_train",
    "batch_norm_infer",
    "relu",
    "max_pool",
    "dropout",
    "lstm",
    "bilstm",
    "lstm_stacked",
];

type Params<L> = for<'a> fn(&'a mut L) -> Vec<&'a mut Param<f64>>;

fn trainable<L: Layer<f64>>(l: &mut L) -> Vec<&mut Param<f64>> {
    l.params_mut().into_iter().filter(|p| p.trainable).collect()
}

fn no_params<L>(_: &mut L) -> Vec<&mut Param<f64>> {
    Vec::new()
}

/// Checks `d(Σ w·f(x))` with respect to the input and every trainable
/// parameter, for a fixed random projection `w`.
fn check_layer<L>(
    mut layer: L,
    x: Tensor<f64>,
    fwd: impl Fn(&mut L, &Tensor<f64>) -> Tensor<f64>,
    bwd: impl Fn(&mut L, &Tensor<f64>) -> Tensor<f64>,
    params: Params<L>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let probe = fwd(&mut layer, &x);
    bwd(&mut layer, &Tensor::zeros(probe.shape()));
    let w = Tensor::from_vec(
        probe.shape(),
        (0..probe.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let mut theta = x.data().to_vec();
    for p in params(&mut layer) {
        theta.extend_from_slice(p.value.data());
    }
    let n = x.len();
    let shape = x.shape().to_vec();
    finite_diff_check(
        |v| {
            let mut k = n;
            for p in params(&mut layer) {
                let m = p.value.len();
                p.value.data_mut().copy_from_slice(&v[k..k + m]);
                p.zero_grad();
                k += m;
            }
            let input = Tensor::from_vec(&shape, v[..n].to_vec()).unwrap();
            let y = fwd(&mut layer, &input);
            let loss = y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum();
            let mut grad = bwd(&mut layer, &w).into_data();
            for p in params(&mut layer) {
                grad.extend_from_slice(p.grad.data());
            }
            (loss, grad)
        },
        &theta,
        1e-5,
    )
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Worst relative gradient error of one layer kind at one seed.
pub fn layer_gradcheck(layer: &str, seed: u64) -> f64 {
    let mut r = rng(seed);
    match layer {
        "dense" => {
            let l = Dense::<f64>::new("d", 5, 3, &mut r);
            let x = uniform(&mut r, &[4, 5]);
            check_layer(l, x, |l, x| l.forward(x).unwrap(), |l, d| l.backward(d).unwrap(), trainable, &mut r)
        }
        "conv_same" | "conv_valid_stride2" => {
            let (stride, pad) = if layer == "conv_same" { (1, Padding::Same) } else { (2, Padding::Valid) };
            let l = Conv2d::<f64>::new("c", 2, 3, 3, stride, pad, &mut r);
            let x = uniform(&mut r, &[2, 2, 5, 5]);
            check_layer(l, x, |l, x| l.forward(x).unwrap(), |l, d| l.backward(d).unwrap(), trainable, &mut r)
        }
        "batch_norm_train" | "batch_norm_infer" => {
            let mode = if layer == "batch_norm_train" { Mode::Train } else { Mode::Infer };
            let mut l = BatchNorm::<f64>::new("bn", 2);
            for p in l.params_mut() {
                let n = p.value.len();
                let v = uniform(&mut r, &[n]);
                p.value.data_mut().iter_mut().zip(v.data()).for_each(|(a, b)| *a += 0.5 * b.abs());
            }
            let x = uniform(&mut r, &[3, 2, 3, 3]);
            let fwd = move |l: &mut BatchNorm<f64>, x: &Tensor<f64>| l.forward(x, mode).unwrap();
            check_layer(l, x, fwd, |l, d| l.backward(d).unwrap(), trainable, &mut r)
        }
        "relu" => {
            // keep inputs off the kink
            let x = uniform(&mut r, &[3, 7]).map(|v| if v.abs() < 0.01 { v + 0.02f64.copysign(v) } else { v });
            check_layer(Relu::new(), x, |l, x| l.forward(x), |l, d| l.backward(d).unwrap(), no_params, &mut r)
        }
        "max_pool" => {
            let x = uniform(&mut r, &[2, 2, 4, 6]);
            let fwd = |l: &mut MaxPool2d, x: &Tensor<f64>| l.forward(x).unwrap();
            check_layer(MaxPool2d::new(2, 2), x, fwd, |l, d| l.backward(d).unwrap(), no_params, &mut r)
        }
        "dropout" => {
            let x = uniform(&mut r, &[4, 6]);
            let fwd = move |l: &mut Dropout, x: &Tensor<f64>| l.forward(x, Mode::Train, &mut rng(seed + 1000));
            check_layer(Dropout::new(0.3).unwrap(), x, fwd, |l, d| l.backward(d).unwrap(), no_params, &mut r)
        }
        "lstm" => {
            let l = Lstm::<f64>::new("l", 3, 4, &mut r);
            let x = uniform(&mut r, &[5, 3]);
            check_layer(l, x, |l, x| l.forward(x).unwrap(), |l, d| l.backward(d).unwrap(), trainable, &mut r)
        }
        "bilstm" => {
            let l = BiLstm::<f64>::new("b", 3, 4, &mut r);
            let x = uniform(&mut r, &[5, 3]);
            check_layer(l, x, |l, x| l.forward(x).unwrap(), |l, d| l.backward(d).unwrap(), trainable, &mut r)
        }
        "lstm_stacked" => {
            // two sequences through one layer: caches must unwind in reverse order
            let l = Lstm::<f64>::new("l", 3, 4, &mut r);
            let x = uniform(&mut r, &[7, 3]);
            let fwd = |l: &mut Lstm<f64>, x: &Tensor<f64>| {
                let a = l.forward(&x.slice_rows(0, 4)).unwrap();
                let b = l.forward(&x.slice_rows(4, 7)).unwrap();
                Tensor::concat_rows(&[a, b]).unwrap()
            };
            let bwd = |l: &mut Lstm<f64>, d: &Tensor<f64>| {
                let db = l.backward(&d.slice_rows(4, 7)).unwrap();
                let da = l.backward(&d.slice_rows(0, 4)).unwrap();
                Tensor::concat_rows(&[da, db]).unwrap()
            };
            check_layer(l, x, fwd, bwd, trainable, &mut r)
        }
        other => panic!("unknown layer {other}"),
    }
}

// ---------------------------------------------------------------- tiny models

pub fn tiny_config(architecture: Architecture) -> ModelConfig {
    let conv = vec![ConvSpec::new(4, 3, 2), ConvSpec::new(8, 3, 2)];
    match architecture {
        Architecture::MCSignC => ModelConfig {
            skeleton_side: 8,
            conv,
            image_lstm: 8,
            movement_lstm: 4,
            location_lstm: 3,
            hand_blstm: 5,
            cross_blstm: 6,
            dropout: 0.0,
            l2: 0.01,
            ..ModelConfig::mcsign_c_mini(3)
        },
        Architecture::RSignC => ModelConfig {
            scene_side: 8,
            conv,
            dense: vec![8, 6],
            frame_lstm: 7,
            dropout: 0.0,
            l2: 0.01,
            ..ModelConfig::rsign_c_mini(3)
        },
    }
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng, binary: bool) -> Tensor<f32> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| if binary { f32::from(rng.random_bool(0.3)) } else { rng.random_range(-1.0..1.0) })
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Random batch whose padding beyond each length is zero.
pub fn random_batch(config: &ModelConfig, lengths: &[usize], targets: &[&[u32]], seed: u64) -> Batch {
    let mut rng = rng(seed);
    let (b, t, s) = (lengths.len(), *lengths.iter().max().unwrap(), config.input_side());
    let mask = |x: &mut Tensor<f32>| {
        let row = x.len() / (b * t);
        for (i, &len) in lengths.iter().enumerate() {
            x.data_mut()[(i * t + len) * row..(i + 1) * t * row].iter_mut().for_each(|v| *v = 0.0);
        }
    };
    let input = match config.architecture {
        Architecture::MCSignC => {
            let mut images = [0, 1].map(|_| random_tensor(&[b, t, s, s], &mut rng, true));
            let mut displacement = [0, 1].map(|_| random_tensor(&[b, t, 2], &mut rng, false));
            let mut location = [0, 1].map(|_| random_tensor(&[b, t, 3], &mut rng, false));
            for x in images.iter_mut().chain(&mut displacement).chain(&mut location) {
                mask(x);
            }
            BatchInput::Cues {
                side: s,
                images,
                displacement,
                location,
            }
        }
        Architecture::RSignC => {
            let mut frames = random_tensor(&[b, t, s, s], &mut rng, true);
            mask(&mut frames);
            BatchInput::Frames { side: s, frames }
        }
    };
    let u = targets.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut padded = vec![0; b * u];
    for (i, t) in targets.iter().enumerate() {
        padded[i * u..i * u + t.len()].copy_from_slice(t);
    }
    Batch {
        input,
        input_lengths: lengths.to_vec(),
        targets: padded,
        target_lengths: targets.iter().map(|t| t.len()).collect(),
        ids: (0..b).map(|i| format!("s{i}")).collect(),
    }
}

/// Full-model gradient check: mean CTC over a two-sentence batch plus L2.
pub fn end_to_end_gradcheck(architecture: Architecture, seed: u64) -> f64 {
    let config = tiny_config(architecture);
    let mut model = build_model::<f64>(&config, seed).unwrap();
    let targets: [&[u32]; 2] = [&[0, 2], &[1]];
    let batch = random_batch(&config, &[4, 3], &targets, seed + 1);
    let theta: Vec<f64> = model
        .params()
        .iter()
        .filter(|p| p.trainable)
        .flat_map(|p| p.value.data().to_vec())
        .collect();
    finite_diff_check(
        |values| {
            let mut k = 0;
            for p in model.params_mut().into_iter().filter(|p| p.trainable) {
                let n = p.value.len();
                p.value.data_mut().copy_from_slice(&values[k..k + n]);
                k += n;
            }
            model.zero_grad();
            let logits = model.forward(&batch, Mode::Train, &mut rng(0)).unwrap();
            let mut loss = 0.0;
            let mut grads = Vec::new();
            for (i, l) in logits.iter().enumerate() {
                let r = ctc_loss(l, &Labeling::new(targets[i].to_vec())).unwrap();
                loss += r.loss / 2.0;
                grads.push(r.grad.map(|g| g / 2.0));
            }
            model.backward(&grads).unwrap();
            loss += model.weight_decay_penalty(config.l2);
            model.add_weight_decay(config.l2);
            let grad = model
                .params()
                .iter()
                .filter(|p| p.trainable)
                .flat_map(|p| p.grad.data().to_vec())
                .collect();
            (loss, grad)
        },
        &theta,
        1e-6,
    )
}

// ---------------------------------------------------------------- CLI fixtures

pub const FIXTURE_GLOSS: &str = "RAIN";

/// A one-gloss corpus whose sentences all read `RAIN`, with landmark streams
/// truncated to `lengths`. Returns the manifest path.
pub fn write_fixture_corpus(dir: &Path, split: &str, lengths: &[usize]) -> PathBuf {
    fs::create_dir_all(dir.join("landmarks")).unwrap();
    let vocab = GlossVocabulary::new(vec![FIXTURE_GLOSS.to_string()]).unwrap();
    fs::write(dir.join("vocab.txt"), vocab.to_lines()).unwrap();
    let library = build_gloss_library(1, 3);
    let spec = CorpusSpec {
        vocab_size: 1,
        ..CorpusSpec::default()
    };
    let mut records = Vec::new();
    for (i, &len) in lengths.iter().enumerate() {
        let (frames, _) = synthesize_sentence(&[0, 0, 0], &library, &spec, i as u64).unwrap();
        assert!(len <= frames.len(), "fixture stream shorter than {len}");
        let id = format!("{split}-{i:04}");
        let rel = format!("landmarks/{id}.jsonl");
        fs::write(dir.join(&rel), write_landmark_stream(&frames[..len])).unwrap();
        records.push(ManifestRecord {
            id: id.clone(),
            landmarks: rel,
            frames: format!("frames/{id}"),
            gloss: vec![FIXTURE_GLOSS.to_string()],
        });
    }
    let manifest = dir.join(format!("{split}.jsonl"));
    fs::write(&manifest, write_manifest(&records)).unwrap();
    manifest
}

/// An MCSign-C mini checkpoint over the fixture vocabulary whose logits are
/// `[gloss, blank]` at every frame regardless of input.
pub fn write_constant_checkpoint(path: &Path, logits: [f32; 2]) {
    let vocab = GlossVocabulary::new(vec![FIXTURE_GLOSS.to_string()]).unwrap();
    let config = ModelConfig::mcsign_c_mini(1);
    let mut model = build_model::<f32>(&config, 0).unwrap();
    for p in model.params_mut() {
        match p.name.as_str() {
            "output.weight" => p.value.fill(0.0),
            "output.bias" => p.value.data_mut().copy_from_slice(&logits),
            _ => {}
        }
    }
    save_checkpoint(path, model.as_ref(), &vocab, 0, &rng(0)).unwrap();
}

/// Runs the CLI in-process and returns its exit code.
pub fn cli<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv = std::iter::once("signrec".to_string()).chain(args.iter().map(|a| a.as_ref().to_string()));
    signrec::cli::run(argv)
}

pub fn path_str(p: &Path) -> String {
    p.to_str().expect("utf-8 path").to_string()
}

/// `search_at_fault` from `diagnose --format json` at the given beam.
pub fn diagnose_search_faults(checkpoint: &Path, manifest: &Path, beam: usize, out: &Path) -> serde_json::Value {
    let code = cli(&[
        "diagnose",
        "--checkpoint",
        &path_str(checkpoint),
        "--manifest",
        &path_str(manifest),
        "--beam",
        &beam.to_string(),
        "--format",
        "json",
        "--out",
        &path_str(out),
    ]);
    assert_eq!(code, 0, "diagnose exited with {code}");
    serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap()
}

// ---------------------------------------------------------------- golden stream

pub const GOLDEN_CUE_SIDE: usize = 32;
pub const GOLDEN_SCENE_SIDE: usize = 96;
pub const GOLDEN_FRAME: usize = 2;

pub fn golden_stream() -> Vec<LandmarkFrame> {
    load_landmarks(&golden_dir().join("stream.jsonl")).unwrap()
}
