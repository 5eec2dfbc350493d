//! Split manifests, target encoding, and variable-length batching.

mod batch;
mod manifest;

pub use batch::{
    batch_iter, batch_order, load_cues, load_frames, load_samples, make_batch, Batch, BatchInput, InputKind,
    LoadedSample, SampleInput,
};
pub use manifest::{encode_targets, load_manifest, parse_manifest, write_manifest, Dataset, ManifestRecord, Sample};
