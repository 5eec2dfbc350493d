use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ctc::{GlossVocabulary, Labeling};
use crate::error::{Error, Result};

/// One line of a split manifest. Paths are relative to the manifest's directory
/// unless absolute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub landmarks: String,
    pub frames: String,
    pub gloss: Vec<String>,
}

/// A manifest record with resolved paths and encoded targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub landmarks: PathBuf,
    pub frames: PathBuf,
    pub target: Labeling,
}

impl Sample {
    /// Cue cache location for this sample under `cache_dir`.
    pub fn cue_path(&self, cache_dir: &Path) -> PathBuf {
        cache_dir.join(format!("{}.cues", self.id))
    }
}

/// A loaded split. Sample payloads are read on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub root: PathBuf,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn encode_targets<S: AsRef<str>>(glosses: &[S], vocab: &GlossVocabulary) -> Result<Labeling> {
    vocab.encode(glosses)
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_manifest(records: &[ManifestRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("manifest records serialize"));
        out.push('\n');
    }
    out
}

fn resolve(root: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

/// Loads a split manifest, checking that every referenced landmark file exists
/// and every gloss is in `vocab`.
pub fn load_manifest(path: &Path, vocab: &GlossVocabulary) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for record in parse_manifest(&text)? {
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let landmarks = resolve(&root, &record.landmarks);
        if !landmarks.is_file() {
            return Err(Error::io(&landmarks, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        samples.push(Sample {
            target: encode_targets(&record.gloss, vocab)?,
            id: record.id,
            frames: resolve(&root, &record.frames),
            landmarks,
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset { name, root, samples })
}
