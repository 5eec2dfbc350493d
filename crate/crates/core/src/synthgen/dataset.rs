use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::library::{build_gloss_library, GlossTemplate};
use super::sentence::{synthesize_sentence, CorpusSpec};
use crate::ctc::{GlossVocabulary, Labeling};
use crate::cues::{encode_pgm, render_scene_frame, write_landmark_stream, LandmarkFrame};
use crate::dataio::{write_manifest, ManifestRecord};
use crate::error::{Error, Result};

pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

const NAMES: [&str; 24] = [
    "RAIN", "SUN", "CLOUD", "WIND", "SNOW", "STORM", "NORTH", "SOUTH", "TOMORROW", "MORNING", "WARM", "COLD",
    "FOG", "EAST", "WEST", "NIGHT", "TODAY", "FROST", "HOT", "MILD", "SHOWER", "THUNDER", "ICE", "WEEKEND",
];

/// Gloss strings for a vocabulary of `size`, line order = id.
pub fn gloss_names(size: usize) -> Vec<String> {
    (0..size)
        .map(|i| match NAMES.get(i) {
            Some(n) => n.to_string(),
            None => format!("G{i:03}"),
        })
        .collect()
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gloss-id sequences for one split, a pure function of (spec, split index).
pub fn sample_sentences(spec: &CorpusSpec, split: usize, count: usize) -> Vec<Labeling> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, 1 + split as u64, 0));
    (0..count)
        .map(|_| {
            let len = rng.random_range(spec.min_glosses..=spec.max_glosses);
            Labeling::new((0..len).map(|_| rng.random_range(0..spec.vocab_size as u32)).collect())
        })
        .collect()
}

struct Rendered {
    frames: Vec<LandmarkFrame>,
    pgms: Vec<Vec<u8>>,
}

fn render_one(
    ids: &Labeling,
    library: &[GlossTemplate],
    spec: &CorpusSpec,
    seed: u64,
) -> Result<Rendered> {
    let (frames, _) = synthesize_sentence(ids.ids(), library, spec, seed)?;
    let mut pgms = Vec::new();
    if spec.write_frames {
        for f in &frames {
            pgms.push(encode_pgm(&render_scene_frame(f, spec.scene_side)?));
        }
    }
    Ok(Rendered { frames, pgms })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Materializes the corpus under `out_dir`: `vocab.txt`, `spec.json`,
/// `landmarks/<id>.jsonl`, `frames/<id>/<t>.pgm` and one manifest per split.
pub fn generate_dataset(spec: &CorpusSpec, out_dir: &Path) -> Result<GlossVocabulary> {
    generate_dataset_with_workers(spec, out_dir, 1)
}

/// As [`generate_dataset`], synthesizing sentences on up to `workers` threads.
/// Output does not depend on the worker count.
pub fn generate_dataset_with_workers(spec: &CorpusSpec, out_dir: &Path, workers: usize) -> Result<GlossVocabulary> {
    spec.validate()?;
    let library = build_gloss_library(spec.vocab_size, spec.seed);
    let vocab = GlossVocabulary::new(gloss_names(spec.vocab_size))?;
    create_dir(&out_dir.join("landmarks"))?;
    write_file(&out_dir.join("vocab.txt"), vocab.to_lines().as_bytes())?;
    let spec_json = serde_json::to_string_pretty(spec).expect("spec serializes") + "\n";
    write_file(&out_dir.join("spec.json"), spec_json.as_bytes())?;

    let counts = [spec.train_sentences, spec.dev_sentences, spec.test_sentences];
    for (split, (&name, &count)) in SPLITS.iter().zip(&counts).enumerate() {
        let sentences = sample_sentences(spec, split, count);
        let workers = workers.clamp(1, count.max(1));
        let chunk = count.div_ceil(workers);
        let rendered: Vec<Result<Rendered>> = std::thread::scope(|s| {
            let handles: Vec<_> = sentences
                .chunks(chunk.max(1))
                .enumerate()
                .map(|(c, part)| {
                    let library = &library;
                    s.spawn(move || {
                        part.iter()
                            .enumerate()
                            .map(|(k, ids)| {
                                let index = (c * chunk + k) as u64;
                                render_one(ids, library, spec, mix(spec.seed, 1 + split as u64, 1 + index))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("synthesis worker panicked"))
                .collect()
        });

        let mut records = Vec::with_capacity(count);
        for (i, (ids, r)) in sentences.iter().zip(rendered).enumerate() {
            let r = r?;
            let id = format!("{name}-{i:04}");
            let landmarks = format!("landmarks/{id}.jsonl");
            let frames = format!("frames/{id}");
            write_file(&out_dir.join(&landmarks), write_landmark_stream(&r.frames).as_bytes())?;
            if spec.write_frames {
                let dir = out_dir.join(&frames);
                create_dir(&dir)?;
                for (t, pgm) in r.pgms.iter().enumerate() {
                    write_file(&dir.join(format!("{t:04}.pgm")), pgm)?;
                }
            }
            records.push(ManifestRecord {
                id,
                landmarks,
                frames,
                gloss: vocab.decode(ids)?,
            });
        }
        write_file(&out_dir.join(format!("{name}.jsonl")), write_manifest(&records).as_bytes())?;
    }
    Ok(vocab)
}
