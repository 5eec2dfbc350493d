//! Frozen feature-pipeline outputs. Run with `SIGNREC_BLESS=1` to rewrite the
//! references after an intentional change.

mod common;

use std::fs;
use std::sync::Once;

use common::{golden_dir, golden_stream, GOLDEN_CUE_SIDE, GOLDEN_FRAME, GOLDEN_SCENE_SIDE};
use signrec::cues::{build_cue_sequences, encode_cues, encode_pgm, render_scene_frame, write_landmark_stream, LandmarkFrame};
use signrec::synthgen::{build_gloss_library, synthesize_sentence, CorpusSpec};

fn bless() -> bool {
    std::env::var_os("SIGNREC_BLESS").is_some()
}

fn check(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if bless() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the frozen reference");
}

/// The frozen 5-frame stream; the fourth frame has no left hand.
fn stream() -> Vec<LandmarkFrame> {
    static WRITE: Once = Once::new();
    if bless() {
        WRITE.call_once(|| {
            let library = build_gloss_library(3, 11);
            let (mut frames, _) = synthesize_sentence(&[0, 1], &library, &CorpusSpec::default(), 5).unwrap();
            frames.truncate(5);
            frames[3].left = None;
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(golden_dir().join("stream.jsonl"), write_landmark_stream(&frames)).unwrap();
        });
    }
    golden_stream()
}

#[test]
fn stream_is_frozen() {
    let frames = stream();
    assert_eq!(frames.len(), 5);
    assert!(frames[3].left.is_none());
}

#[test]
fn cue_file_matches_reference() {
    let cues = build_cue_sequences(&stream(), GOLDEN_CUE_SIDE).unwrap();
    check("stream.cues", &encode_cues(&cues));
}

#[test]
fn scene_frame_matches_reference() {
    let img = render_scene_frame(&stream()[GOLDEN_FRAME], GOLDEN_SCENE_SIDE).unwrap();
    check("frame_0002.pgm", &encode_pgm(&img));
}
