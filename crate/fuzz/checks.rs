//! Fuzz target bodies, shared by the libFuzzer binaries and the stable
//! seed-replay test in the core crate. Each accepts arbitrary input and
//! panics only on a broken invariant.

#![allow(dead_code)]

use capstage_core::audiofe::{decode_wav, encode_wav};
use capstage_core::corpus::{decode_matrix, detokenize, encode_matrix, parse_manifest, tokenize, SynthConfig, Track};
use capstage_core::model::Checkpoint;
use capstage_core::training::TrainConfig;

pub fn manifest(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_manifest(text) {
        // whatever parses survives a write/parse round trip
        let again: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        assert_eq!(parse_manifest(&again).unwrap(), records);
    }
}

/// First two bytes give the shape, the rest is the payload.
pub fn feature_matrix(data: &[u8]) {
    if data.len() < 2 {
        return;
    }
    let (rows, cols) = (data[0] as usize, data[1] as usize);
    if let Ok(m) = decode_matrix(&data[2..], rows, cols, "fuzz") {
        assert_eq!(m.dim(), (rows, cols));
        assert_eq!(encode_matrix(&m), &data[2..]);
    }
}

pub fn wav(data: &[u8]) {
    if let Ok(w) = decode_wav(data) {
        let again = decode_wav(&encode_wav(&w).unwrap()).unwrap();
        assert_eq!(again.samples(), w.samples());
    }
}

pub fn checkpoint(data: &[u8]) {
    if let Ok(ckpt) = Checkpoint::decode(data) {
        let bytes = ckpt.encode().unwrap();
        assert_eq!(Checkpoint::decode(&bytes).unwrap().encode().unwrap(), bytes);
    }
}

pub fn synth_config(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SynthConfig::from_json(text) {
        let again = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SynthConfig::from_json(&again).unwrap(), cfg);
    }
}

pub fn tokenize_text(data: &[u8]) {
    let text = String::from_utf8_lossy(data);
    for track in [Track::English, Track::Chinese] {
        let tokens = tokenize(&text, track);
        assert!(tokens.iter().all(|t| !t.is_empty()));
        assert_eq!(tokenize(&detokenize(&tokens, track), track), tokens);
    }
}

pub fn train_config(data: &[u8]) {
    if let Ok(cfg) = serde_json::from_slice::<TrainConfig>(data) {
        let _ = cfg.validate();
    }
}

pub type Body = fn(&[u8]);

/// Target name to body, matching the `corpus/` directory names.
pub const TARGETS: [(&str, Body); 7] = [
    ("manifest", manifest),
    ("feature_matrix", feature_matrix),
    ("wav", wav),
    ("checkpoint", checkpoint),
    ("synth_config", synth_config),
    ("tokenize", tokenize_text),
    ("train_config", train_config),
];
