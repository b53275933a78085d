use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"{
  "synth": {"n_train": 6, "n_val": 2, "n_test": 2, "captions_per_video": 3,
            "dims": {"frames": 28, "appearance": 6, "motion": 4, "audio": 3}},
  "model": {"e_app": 8, "e_mot": 8, "e_aud": 4, "h_vis": 8, "h_aud": 8, "e_word": 8,
            "e_topic": 4, "h_att": 8, "h_lang": 8, "d_attn": 8},
  "train": {"xe": {"epochs": 2, "learning_rate": 0.01, "batch_size": 2},
            "oracle": {"epochs": 2, "learning_rate": 0.001, "batch_size": 2},
            "scst": {"epochs": 1, "learning_rate": 0.0001, "batch_size": 3}}
}"#;

fn capstage(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_capstage"));
    cmd.args(args);
    for var in ["CAPSTAGE_CONFIG", "CAPSTAGE_SEED", "CAPSTAGE_OUT", "CAPSTAGE_FORCE", "CAPSTAGE_TRACK", "CAPSTAGE_DATA"] {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied());
    cmd.output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn path(&self, rel: &str) -> std::path::PathBuf {
        self.dir.path().join(rel)
    }

    fn config(&self) -> String {
        self.path("config.json").to_str().unwrap().to_string()
    }
}

/// Config written, dataset synthesized, three-stage run trained.
fn trained() -> Run {
    let run = Run {
        dir: tempfile::tempdir().unwrap(),
    };
    std::fs::write(run.path("config.json"), TINY).unwrap();
    let cfg = run.config();
    ok(&capstage(&["--config", &cfg, "--seed", "4", "--out", s(&run.path("data")), "synth"], &[]));
    ok(&capstage(
        &["--config", &cfg, "--seed", "4", "--out", s(&run.path("run")), "train", "--data", s(&run.path("data"))],
        &[],
    ));
    run
}

#[test]
fn synth_refuses_nonempty_dir_without_force() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), TINY).unwrap();
    let cfg = dir.path().join("config.json");
    let data = dir.path().join("data");
    ok(&capstage(&["--config", s(&cfg), "--out", s(&data), "synth"], &[]));
    let again = capstage(&["--config", s(&cfg), "--out", s(&data), "synth"], &[]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("not empty"));
    ok(&capstage(&["--config", s(&cfg), "--out", s(&data), "--force", "synth"], &[]));
}

#[test]
fn synth_videos_flag_and_same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, TINY).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let summary = ok(&capstage(&["--config", s(&cfg), "--seed", "9", "--out", s(&a), "synth", "--videos", "5"], &[]));
    assert!(summary.contains("5 train / 2 val / 2 test"), "{summary}");
    ok(&capstage(&["--config", s(&cfg), "--seed", "9", "--out", s(&b), "synth", "--videos", "5"], &[]));
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["train.jsonl", "val.jsonl", "test.jsonl", "synth_config.json"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    assert_eq!(std::fs::read_to_string(a.join("train.jsonl")).unwrap().lines().count(), 5);
}

#[test]
fn env_overrides_file_and_flags_override_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, TINY.replacen('{', r#"{"seed": 1,"#, 1)).unwrap();
    let (env_dir, flag_dir, file_dir) = (dir.path().join("env"), dir.path().join("flag"), dir.path().join("file"));
    ok(&capstage(&["--config", s(&cfg), "--out", s(&file_dir), "synth"], &[]));
    ok(&capstage(&["--out", s(&env_dir), "synth"], &[("CAPSTAGE_CONFIG", s(&cfg)), ("CAPSTAGE_SEED", "2")]));
    ok(&capstage(
        &["--seed", "3", "--out", s(&flag_dir), "synth"],
        &[("CAPSTAGE_CONFIG", s(&cfg)), ("CAPSTAGE_SEED", "2")],
    ));
    let seed = |d: &Path| -> u64 {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("synth_config.json")).unwrap()).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!((seed(&file_dir), seed(&env_dir), seed(&flag_dir)), (1, 2, 3));
}

#[test]
fn train_reports_stages_and_best() {
    let run = trained();
    let log = std::fs::read_to_string(run.path("run/train_log.jsonl")).unwrap();
    let stages: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages, ["XE", "XE", "ORACLE", "ORACLE", "SCST"]);
    for f in ["best.ckpt", "last.ckpt", "run_config.json"] {
        assert!(run.path("run").join(f).exists(), "{f}");
    }
    // a finished run resumes straight to the final line
    let out = ok(&capstage(
        &["--config", &run.config(), "--out", s(&run.path("run")), "train", "--data", s(&run.path("data")), "--resume"],
        &[],
    ));
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("best val CIDEr"), "{out}");
    assert!(out.starts_with("resuming at epoch 5"), "{out}");
}

#[test]
fn train_without_dataset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = capstage(&["--out", s(&dir.path().join("run")), "train", "--data", s(&dir.path().join("missing"))], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dataset not found"));
}

#[test]
fn train_refuses_to_clobber_a_run() {
    let run = trained();
    let out = capstage(
        &["--config", &run.config(), "--out", s(&run.path("run")), "train", "--data", s(&run.path("data"))],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_training_exits_3_naming_the_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, TINY.replace("\"learning_rate\": 0.01", "\"learning_rate\": 1e300")).unwrap();
    let data = dir.path().join("data");
    ok(&capstage(&["--config", s(&cfg), "--out", s(&data), "synth"], &[]));
    let out = capstage(&["--config", s(&cfg), "--out", s(&dir.path().join("run")), "train", "--data", s(&data)], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at epoch"));
}

#[test]
fn eval_is_deterministic_json() {
    let run = trained();
    let (ckpt, data) = (run.path("run/last.ckpt"), run.path("data"));
    let args = ["eval", "--checkpoint", s(&ckpt), "--data", s(&data), "--split", "val"];
    let a = ok(&capstage(&args, &[]));
    assert_eq!(a, ok(&capstage(&args, &[])));
    let v: serde_json::Value = serde_json::from_str(a.trim()).unwrap();
    for k in ["bleu4", "cider", "rouge_l", "meteor_lite"] {
        assert!(v[k].is_f64(), "{k} in {a}");
    }
}

#[test]
fn eval_against_mismatched_data_exits_2() {
    let run = trained();
    let other = run.path("wide");
    let cfg = run.path("wide.json");
    std::fs::write(&cfg, TINY.replace("\"appearance\": 6", "\"appearance\": 7")).unwrap();
    ok(&capstage(&["--config", s(&cfg), "--out", s(&other), "synth"], &[]));
    let out = capstage(&["eval", "--checkpoint", s(&run.path("run/last.ckpt")), "--data", s(&other)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feature widths"));
}

#[test]
fn infer_from_files_and_from_manifest_agree() {
    let run = trained();
    let manifest = std::fs::read_to_string(run.path("data/train.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(manifest.lines().next().unwrap()).unwrap();
    let id = rec["video_id"].as_str().unwrap();
    let topic = rec["topic_id"].as_u64().unwrap().to_string();
    let feat = |k: &str| run.path("data").join(rec["features"][k].as_str().unwrap());
    let ckpt = run.path("run/last.ckpt");
    let by_id = ok(&capstage(&["infer", "--checkpoint", s(&ckpt), "--video", id, "--data", s(&run.path("data"))], &[]));
    let (app, mot, aud) = (feat("appearance"), feat("motion"), feat("audio"));
    let by_files = ok(&capstage(
        &["infer", "--checkpoint", s(&ckpt), "--features", s(&app), s(&mot), s(&aud), "--topic", &topic],
        &[],
    ));
    assert_eq!(by_id, by_files);
    assert_eq!(by_id.lines().count(), 1);

    let short = ok(&capstage(&["infer", "--checkpoint", s(&ckpt), "--video", id, "--data", s(&run.path("data")), "--max-len", "5"], &[]));
    assert!(short.split_whitespace().count() <= 5, "{short}");

    let sampled = ok(&capstage(
        &["--seed", "8", "infer", "--checkpoint", s(&ckpt), "--video", id, "--data", s(&run.path("data")), "--sample", "3"],
        &[],
    ));
    let seeds: Vec<&str> = sampled.lines().map(|l| l.split(':').next().unwrap()).collect();
    assert_eq!(seeds, ["seed 8", "seed 9", "seed 10"]);
}

#[test]
fn infer_rejects_wrong_width_features() {
    let run = trained();
    let bad = run.path("bad.f32");
    // 5 floats cannot be rows of width 6
    std::fs::write(&bad, [0u8; 20]).unwrap();
    let ckpt = run.path("run/last.ckpt");
    let out = capstage(&["infer", "--checkpoint", s(&ckpt), "--features", s(&bad), s(&bad), s(&bad), "--topic", "0"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audio_subcommand_writes_28_rows() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tone.wav");
    let samples: Vec<f64> = (0..32_000).map(|i| 0.3 * (i as f64 * 0.2).sin()).collect();
    let w = capstage_core::audiofe::Waveform::new(samples).unwrap();
    std::fs::write(&wav, capstage_core::audiofe::encode_wav(&w).unwrap()).unwrap();
    let out = dir.path().join("tone.f32");
    let msg = ok(&capstage(&["--out", s(&out), "audio", "--wav", s(&wav)], &[]));
    assert!(msg.contains("28x128"), "{msg}");
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 28 * 128 * 4);
}
