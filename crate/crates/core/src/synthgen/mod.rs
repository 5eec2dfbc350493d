//! Seeded synthetic corpus: a gloss library of landmark trajectories,
//! sentence synthesis with inter-gloss blending, and on-disk materialization.

mod dataset;
mod library;
mod sentence;

pub use dataset::{gloss_names, generate_dataset, generate_dataset_with_workers, sample_sentences, SPLITS};
pub use library::{
    build_gloss_library, home_position, reference_pose, GlossTemplate, HAND_SCALE, MAX_DURATION,
    MIN_DURATION, MIN_TEMPLATE_DISTANCE, MOVE_AMPLITUDE,
};
pub use sentence::{synthesize_sentence, CorpusSpec};
