use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{Dataset, Sample};
use crate::ctc::Labeling;
use crate::cues::{build_cue_sequences, load_landmarks, read_cues, read_pgm, write_cues, BinaryImage, CueSequences, Hand};
use crate::error::{Error, Result};
use crate::nncore::Tensor;

/// What a recognizer consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InputKind {
    /// Per-hand skeleton images, palm displacement, and location one-hots.
    Cues,
    /// Rendered full-scene frames.
    Frames,
}

/// In-memory payload of one sentence.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleInput {
    Cues(CueSequences),
    Frames(Vec<BinaryImage>),
}

impl SampleInput {
    pub fn len(&self) -> usize {
        match self {
            SampleInput::Cues(c) => c.len(),
            SampleInput::Frames(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> InputKind {
        match self {
            SampleInput::Cues(_) => InputKind::Cues,
            SampleInput::Frames(_) => InputKind::Frames,
        }
    }

    pub fn side(&self) -> usize {
        match self {
            SampleInput::Cues(c) => c.side,
            SampleInput::Frames(f) => f.first().map_or(0, BinaryImage::side),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSample {
    pub id: String,
    pub input: SampleInput,
    pub target: Labeling,
}

/// Reads the scene frames `<dir>/0000.pgm, 0001.pgm, ...` in order.
pub fn load_frames(dir: &Path, side: usize) -> Result<Vec<BinaryImage>> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|x| x.to_str()) == Some("pgm"))
        .collect();
    names.sort();
    let mut frames = Vec::with_capacity(names.len());
    for p in names {
        let img = read_pgm(&p)?;
        if img.side() != side {
            return Err(Error::Input(format!(
                "{} is {}x{}, expected {side}x{side}",
                p.display(),
                img.side(),
                img.side()
            )));
        }
        frames.push(img);
    }
    if frames.is_empty() {
        return Err(Error::Input(format!("no frames in {}", dir.display())));
    }
    Ok(frames)
}

/// Cue tensors for `sample`, read from `cache_dir` when present there and
/// extracted from landmarks (then cached) otherwise.
pub fn load_cues(sample: &Sample, side: usize, cache_dir: Option<&Path>) -> Result<CueSequences> {
    if let Some(dir) = cache_dir {
        let path = sample.cue_path(dir);
        if path.is_file() {
            let cues = read_cues(&path)?;
            if cues.side == side {
                return Ok(cues);
            }
        }
    }
    let cues = build_cue_sequences(&load_landmarks(&sample.landmarks)?, side)?;
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_cues(&sample.cue_path(dir), &cues)?;
    }
    Ok(cues)
}

/// Loads every sample's payload into memory.
pub fn load_samples(dataset: &Dataset, kind: InputKind, side: usize, cache_dir: Option<&Path>) -> Result<Vec<LoadedSample>> {
    dataset
        .samples
        .iter()
        .map(|s| {
            let input = match kind {
                InputKind::Cues => SampleInput::Cues(load_cues(s, side, cache_dir)?),
                InputKind::Frames => SampleInput::Frames(load_frames(&s.frames, side)?),
            };
            Ok(LoadedSample {
                id: s.id.clone(),
                input,
                target: s.target.clone(),
            })
        })
        .collect()
}

/// Padded inputs of one batch. Padding is zero.
#[derive(Clone, Debug, PartialEq)]
pub enum BatchInput {
    Cues {
        side: usize,
        /// Per hand (left, right): `[B, T, S, S]`.
        images: [Tensor<f32>; 2],
        /// Per hand: `[B, T, 2]`.
        displacement: [Tensor<f32>; 2],
        /// Per hand: `[B, T, 3]`.
        location: [Tensor<f32>; 2],
    },
    Frames {
        side: usize,
        /// `[B, T, S, S]`.
        frames: Tensor<f32>,
    },
}

impl BatchInput {
    pub fn kind(&self) -> InputKind {
        match self {
            BatchInput::Cues { .. } => InputKind::Cues,
            BatchInput::Frames { .. } => InputKind::Frames,
        }
    }

    pub fn side(&self) -> usize {
        match self {
            BatchInput::Cues { side, .. } | BatchInput::Frames { side, .. } => *side,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub input: BatchInput,
    pub input_lengths: Vec<usize>,
    /// `[B, U]` row-major, padded with the value 0.
    pub targets: Vec<u32>,
    pub target_lengths: Vec<usize>,
    pub ids: Vec<String>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Padded time extent.
    pub fn max_frames(&self) -> usize {
        match &self.input {
            BatchInput::Cues { images, .. } => images[0].dim(1),
            BatchInput::Frames { frames, .. } => frames.dim(1),
        }
    }

    pub fn max_target(&self) -> usize {
        self.target_lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn target(&self, i: usize) -> Labeling {
        let u = self.max_target();
        Labeling::new(self.targets[i * u..i * u + self.target_lengths[i]].to_vec())
    }
}

fn write_image(dst: &mut [f32], img: &BinaryImage) {
    for (d, &b) in dst.iter_mut().zip(img.bits()) {
        *d = b as f32;
    }
}

/// Pads `samples` to their own maximum length. `extra_padding` appends that many
/// additional zero frames (used to check padding neutrality).
pub fn make_batch(samples: &[&LoadedSample], extra_padding: usize) -> Result<Batch> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Input("cannot build an empty batch".into()))?;
    let kind = first.input.kind();
    let side = first.input.side();
    let mut ids = std::collections::HashSet::new();
    for s in samples {
        if s.input.kind() != kind || s.input.side() != side {
            return Err(Error::Input(format!("sample {} does not match the batch input format", s.id)));
        }
        if !ids.insert(&s.id) {
            return Err(Error::DuplicateId(s.id.clone()));
        }
    }
    let b = samples.len();
    let t = samples.iter().map(|s| s.input.len()).max().unwrap_or(0) + extra_padding;
    let u = samples.iter().map(|s| s.target.len()).max().unwrap_or(0);
    let px = side * side;
    let input = match kind {
        InputKind::Cues => {
            let mut images = [Tensor::zeros(&[b, t, side, side]), Tensor::zeros(&[b, t, side, side])];
            let mut displacement = [Tensor::zeros(&[b, t, 2]), Tensor::zeros(&[b, t, 2])];
            let mut location = [Tensor::zeros(&[b, t, 3]), Tensor::zeros(&[b, t, 3])];
            for (i, s) in samples.iter().enumerate() {
                let SampleInput::Cues(c) = &s.input else { unreachable!() };
                for (h, hand) in Hand::BOTH.iter().enumerate() {
                    let cues = c.hand(*hand);
                    let img = &mut images[h].data_mut()[i * t * px..];
                    for (k, frame) in cues.images.iter().enumerate() {
                        write_image(&mut img[k * px..(k + 1) * px], frame);
                    }
                    let n = cues.displacement.len();
                    displacement[h].data_mut()[i * t * 2..][..n].copy_from_slice(cues.displacement.data());
                    let n = cues.location.len();
                    location[h].data_mut()[i * t * 3..][..n].copy_from_slice(cues.location.data());
                }
            }
            BatchInput::Cues {
                side,
                images,
                displacement,
                location,
            }
        }
        InputKind::Frames => {
            let mut frames = Tensor::zeros(&[b, t, side, side]);
            for (i, s) in samples.iter().enumerate() {
                let SampleInput::Frames(f) = &s.input else { unreachable!() };
                let dst = &mut frames.data_mut()[i * t * px..];
                for (k, img) in f.iter().enumerate() {
                    write_image(&mut dst[k * px..(k + 1) * px], img);
                }
            }
            BatchInput::Frames { side, frames }
        }
    };
    let mut targets = vec![0; b * u];
    for (i, s) in samples.iter().enumerate() {
        targets[i * u..i * u + s.target.len()].copy_from_slice(s.target.ids());
    }
    Ok(Batch {
        input,
        input_lengths: samples.iter().map(|s| s.input.len()).collect(),
        targets,
        target_lengths: samples.iter().map(|s| s.target.len()).collect(),
        ids: samples.iter().map(|s| s.id.clone()).collect(),
    })
}

/// Sample indices grouped into batches; shuffled by a seeded permutation when
/// `shuffle_seed` is given. The last batch may be partial.
pub fn batch_order(len: usize, batch_size: usize, shuffle_seed: Option<u64>) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Lazily assembled batches over `samples`.
pub fn batch_iter<'a>(
    samples: &'a [LoadedSample],
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<impl Iterator<Item = Result<Batch>> + 'a> {
    let order = batch_order(samples.len(), batch_size, shuffle_seed)?;
    Ok(order.into_iter().map(move |idx| {
        let refs: Vec<&LoadedSample> = idx.iter().map(|&i| &samples[i]).collect();
        make_batch(&refs, 0)
    }))
}
