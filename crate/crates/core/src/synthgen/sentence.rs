use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::library::GlossTemplate;
use crate::ctc::Labeling;
use crate::cues::{HandLandmarks, LandmarkFrame, Point, DEFAULT_SCENE_SIDE};
use crate::error::{Error, Result};

/// Corpus shape and noise model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub vocab_size: usize,
    pub min_glosses: usize,
    pub max_glosses: usize,
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub test_sentences: usize,
    /// Gaussian landmark jitter σ in normalized units.
    pub noise: f64,
    /// Interpolated frames inserted between consecutive glosses.
    pub blend_frames: usize,
    pub seed: u64,
    /// Side of the rendered PGM scene frames.
    pub scene_side: usize,
    pub write_frames: bool,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            vocab_size: 12,
            min_glosses: 2,
            max_glosses: 4,
            train_sentences: 600,
            dev_sentences: 60,
            test_sentences: 60,
            noise: 0.01,
            blend_frames: 3,
            seed: 7,
            scene_side: DEFAULT_SCENE_SIDE,
            write_frames: true,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Config("vocab_size must be >= 1".into()));
        }
        if self.min_glosses == 0 || self.min_glosses > self.max_glosses {
            return Err(Error::Config(format!(
                "sentence length range [{}, {}] is invalid",
                self.min_glosses, self.max_glosses
            )));
        }
        if self.train_sentences == 0 || self.dev_sentences == 0 || self.test_sentences == 0 {
            return Err(Error::Config("every split needs at least one sentence".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("noise {} must be >= 0", self.noise)));
        }
        if self.scene_side == 0 {
            return Err(Error::Config("scene_side must be >= 1".into()));
        }
        Ok(())
    }
}

fn lerp_frame(a: &LandmarkFrame, b: &LandmarkFrame, w: f64) -> LandmarkFrame {
    let mix = |p: Point, q: Point| Point::new(p.x + (q.x - p.x) * w, p.y + (q.y - p.y) * w);
    let mix_hand = |p: &Option<HandLandmarks>, q: &Option<HandLandmarks>| match (p, q) {
        (Some(p), Some(q)) => Some(std::array::from_fn(|i| mix(p[i], q[i]))),
        _ => None,
    };
    let (pa, pb) = (&a.pose, &b.pose);
    LandmarkFrame {
        index: 0,
        left: mix_hand(&a.left, &b.left),
        right: mix_hand(&a.right, &b.right),
        pose: crate::cues::Pose {
            left_eye: mix(pa.left_eye, pb.left_eye),
            right_eye: mix(pa.right_eye, pb.right_eye),
            mouth_left: mix(pa.mouth_left, pb.mouth_left),
            mouth_right: mix(pa.mouth_right, pb.mouth_right),
            left_shoulder: mix(pa.left_shoulder, pb.left_shoulder),
            right_shoulder: mix(pa.right_shoulder, pb.right_shoulder),
        },
    }
}

/// Concatenates gloss trajectories with linear coarticulation blends and
/// adds landmark jitter. Returns the frames and the reference labeling.
pub fn synthesize_sentence(
    gloss_ids: &[u32],
    library: &[GlossTemplate],
    spec: &CorpusSpec,
    seed: u64,
) -> Result<(Vec<LandmarkFrame>, Labeling)> {
    let mut frames: Vec<LandmarkFrame> = Vec::new();
    for (k, &id) in gloss_ids.iter().enumerate() {
        let template = library
            .get(id as usize)
            .ok_or_else(|| Error::Input(format!("gloss id {id} is not in the library")))?;
        let traj = template.trajectory();
        if k > 0 {
            let prev = frames.last().expect("previous gloss emitted frames").clone();
            for j in 1..=spec.blend_frames {
                let w = j as f64 / (spec.blend_frames + 1) as f64;
                frames.push(lerp_frame(&prev, &traj[0], w));
            }
        }
        frames.extend(traj);
    }
    if spec.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(e.to_string()))?;
        let mut jitter = |p: Point| Point::new(p.x + normal.sample(&mut rng), p.y + normal.sample(&mut rng));
        for f in frames.iter_mut() {
            for hand in [&mut f.left, &mut f.right].into_iter().flatten() {
                for p in hand.iter_mut() {
                    *p = jitter(*p);
                }
            }
            let pose = &mut f.pose;
            for p in [
                &mut pose.left_eye,
                &mut pose.right_eye,
                &mut pose.mouth_left,
                &mut pose.mouth_right,
                &mut pose.left_shoulder,
                &mut pose.right_shoulder,
            ] {
                *p = jitter(*p);
            }
        }
    }
    for (t, f) in frames.iter_mut().enumerate() {
        f.index = t as u64;
    }
    Ok((frames, Labeling::new(gloss_ids.to_vec())))
}
