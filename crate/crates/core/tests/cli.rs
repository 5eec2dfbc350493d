mod common;

use std::fs;

use common::*;
use signrec::cli::{EXIT_DATA, EXIT_OK, EXIT_USAGE};
use signrec::evalkit::EvalReport;

#[test]
fn evaluate_constant_oracle_model() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture_corpus(dir.path(), "test", &[6, 7, 9]);
    let ckpt = dir.path().join("model.ckpt");
    write_constant_checkpoint(&ckpt, [0.9f32.ln(), 0.1f32.ln()]);
    let out = dir.path().join("report.json");
    let code = cli(&[
        "evaluate",
        "--checkpoint",
        &path_str(&ckpt),
        "--manifest",
        &path_str(&manifest),
        "--format",
        "json",
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let report: EvalReport = serde_json::from_str(fs::read_to_string(&out).unwrap().trim()).unwrap();
    assert_eq!(report.wer_percent, 0.0);
    assert_eq!(report.sentences.len(), 3);
    assert_eq!(report.sentences[0].hypothesis, vec![FIXTURE_GLOSS.to_string()]);
}

#[test]
fn diagnose_search_faults_drop_with_wider_beam() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture_corpus(dir.path(), "dev", &[3, 3]);
    let ckpt = dir.path().join("model.ckpt");
    write_constant_checkpoint(&ckpt, [0.4f32.ln(), 0.6f32.ln()]);
    let narrow = diagnose_search_faults(&ckpt, &manifest, 1, &dir.path().join("b1.json"));
    let wide = diagnose_search_faults(&ckpt, &manifest, 8, &dir.path().join("b8.json"));
    assert_eq!(narrow["search_at_fault"], 2);
    assert_eq!(wide["search_at_fault"], 0);
    assert_eq!(wide["correct"], 2);
}

#[test]
fn text_report_has_wer_table() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture_corpus(dir.path(), "test", &[6]);
    let ckpt = dir.path().join("model.ckpt");
    write_constant_checkpoint(&ckpt, [0.9f32.ln(), 0.1f32.ln()]);
    let out = dir.path().join("report.txt");
    let code = cli(&["evaluate", "--checkpoint", &path_str(&ckpt), "--manifest", &path_str(&manifest), "--out", &path_str(&out)]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("Model"), "{text}");
    assert!(text.lines().nth(1).unwrap().trim_end().ends_with("0.0"), "{text}");
}

#[test]
fn generate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"vocab_size": 4, "train_sentences": 6, "dev_sentences": 2, "test_sentences": 2, "scene_side": 32}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let code = cli(&["generate", "--spec", &path_str(&spec), "--out", &path_str(out), "--seed", "9", "--workers", workers]);
        assert_eq!(code, EXIT_OK);
    }
    for rel in ["vocab.txt", "spec.json", "train.jsonl", "dev.jsonl", "test.jsonl", "landmarks/train-0003.jsonl", "frames/dev-0001/0000.pgm"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(cli(&["evaluate"]), EXIT_USAGE);
    assert_eq!(cli(&["--help"]), EXIT_OK);
    let missing = dir.path().join("nope.ckpt");
    let manifest = write_fixture_corpus(dir.path(), "test", &[6]);
    assert_eq!(cli(&["evaluate", "--checkpoint", &path_str(&missing), "--manifest", &path_str(&manifest)]), EXIT_DATA);
    let bad_spec = dir.path().join("bad.json");
    fs::write(&bad_spec, r#"{"vocab_size": 0}"#).unwrap();
    assert_eq!(cli(&["generate", "--spec", &path_str(&bad_spec), "--out", &path_str(&dir.path().join("c"))]), EXIT_DATA);
}

#[test]
fn decode_prints_glosses() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_corpus(dir.path(), "test", &[6]);
    let ckpt = dir.path().join("model.ckpt");
    write_constant_checkpoint(&ckpt, [0.9f32.ln(), 0.1f32.ln()]);
    let glosses = signrec::cli::decode_landmarks(&ckpt, &dir.path().join("landmarks/test-0000.jsonl"), 4).unwrap();
    assert_eq!(glosses, vec![FIXTURE_GLOSS.to_string()]);
}
