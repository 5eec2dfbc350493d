//! Landmark ingestion and the three per-hand sign characteristics: skeleton
//! images (hand shape), palm displacement (movement), and nearest body region
//! (location). Also renders full-scene frames for the raw-frame recognizer.

mod cuefile;
mod features;
mod landmarks;
mod pgm;
mod raster;

pub use cuefile::{decode_cues, encode_cues, read_cues, write_cues};
pub use features::{
    build_cue_sequences, location_onehot_seq, nearest_region, palm_center, palm_displacement_seq,
    CueSequences, HandCues, Region, MIN_SHOULDER_WIDTH, PALM_POINTS,
};
pub use landmarks::{
    load_landmarks, parse_landmark_stream, write_landmark_stream, Hand, HandLandmarks, LandmarkFrame, Point,
    Pose, HAND_POINTS,
};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use raster::{bresenham, rasterize_hand, render_scene_frame, BinaryImage, HAND_EDGES};

/// Default skeleton image side.
pub const DEFAULT_SKELETON_SIDE: usize = 32;
/// Default rendered scene frame side.
pub const DEFAULT_SCENE_SIDE: usize = 96;
