use std::path::Path;

use capstage_core::corpus::{synth_dataset, write_dataset, Dataset, FeatureDims, SplitName, SynthConfig, Track};
use capstage_core::model::{Checkpoint, ModelConfig};
use capstage_core::training::{
    load_examples, oracle_select, teacher_force_prob, vocabulary_for, Stage, TrainConfig, Trainer, BEST_CHECKPOINT,
    LAST_CHECKPOINT, TRAIN_LOG,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny_synth() -> SynthConfig {
    SynthConfig {
        n_train: 6,
        n_val: 2,
        n_test: 2,
        n_topics: 3,
        symbols_per_topic: 3,
        captions_per_video: 3,
        dims: FeatureDims {
            frames: 6,
            appearance: 12,
            motion: 8,
            audio: 6,
        },
        ..SynthConfig::default()
    }
}

fn fast_config() -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.xe.epochs = 2;
    cfg.oracle.epochs = 2;
    cfg.scst.epochs = 2;
    cfg.xe.batch_size = 2;
    cfg.oracle.batch_size = 2;
    cfg.scst.batch_size = 3;
    cfg
}

fn trainer(root: &Path, cfg: TrainConfig) -> Trainer {
    let ds = Dataset::open(root).unwrap();
    let vocab = vocabulary_for(&ds.split.train, Track::English, 1).unwrap();
    let model = ModelConfig::uniform(8, vocab.len(), ds.config.n_topics, 12).with_input_dims(&ds.config.dims);
    let train = load_examples(&ds, SplitName::Train, Track::English, &vocab, &model).unwrap();
    let val = load_examples(&ds, SplitName::Val, Track::English, &vocab, &model).unwrap();
    Trainer::new(model, cfg, Track::English, vocab, train, val).unwrap()
}

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny_synth();
    write_dataset(dir.path(), &sc, &synth_dataset(&sc, sc.seed).unwrap()).unwrap();
    dir
}

#[test]
fn oracle_at_p_one_matches_teacher_forcing() {
    let dir = dataset();
    let mut xe = trainer(dir.path(), fast_config());
    let mut cfg = fast_config();
    cfg.xe.epochs = 0;
    cfg.oracle.learning_rate = cfg.xe.learning_rate;
    cfg.oracle.lr_decay = cfg.xe.lr_decay;
    cfg.oracle.batch_size = cfg.xe.batch_size;
    cfg.teacher_force_override = Some(1.0);
    let mut oracle = trainer(dir.path(), cfg);
    for _ in 0..3 {
        let a = xe.run_epoch(Stage::Xe).unwrap();
        let b = oracle.run_epoch(Stage::Oracle).unwrap();
        assert_eq!(a.loss, b.loss);
        assert_eq!(b.p, Some(1.0));
    }
    assert_eq!(xe.params, oracle.params);
}

#[test]
fn decay_trace_follows_schedule() {
    let dir = dataset();
    let mut cfg = fast_config();
    cfg.xe.epochs = 1;
    cfg.oracle.epochs = 5;
    let mut t = trainer(dir.path(), cfg.clone());
    t.run_epoch(Stage::Xe).unwrap();
    for k in 0..4 {
        let s = t.run_epoch(Stage::Oracle).unwrap();
        let want = cfg.mu / (cfg.mu + (k as f64 / cfg.mu).exp());
        assert!((s.p.unwrap() - want).abs() <= 1e-12);
        assert_eq!(s.p.unwrap(), teacher_force_prob(k, cfg.mu));
    }
}

#[test]
fn same_seed_same_bytes() {
    let dir = dataset();
    let run = || {
        let mut t = trainer(dir.path(), fast_config());
        t.run(None, |_| {}).unwrap();
        t.checkpoint().encode().unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn resume_continues_at_saved_epoch() {
    let dir = dataset();
    let mut straight = trainer(dir.path(), fast_config());
    for stage in [Stage::Xe, Stage::Xe, Stage::Oracle] {
        straight.run_epoch(stage).unwrap();
    }

    let mut first = trainer(dir.path(), fast_config());
    first.run_epoch(Stage::Xe).unwrap();
    first.run_epoch(Stage::Xe).unwrap();
    let bytes = first.checkpoint().encode().unwrap();
    let ckpt = Checkpoint::decode(&bytes).unwrap();
    let fresh = trainer(dir.path(), fast_config());
    let mut resumed =
        Trainer::resume(ckpt, fresh.train_examples().to_vec(), fresh.val_examples().to_vec()).unwrap();
    assert_eq!(resumed.state.epoch(), 2);
    assert_eq!(resumed.next_stage(), Some(Stage::Oracle));
    resumed.run_epoch(Stage::Oracle).unwrap();
    assert_eq!(resumed.state, straight.state);
    assert_eq!(resumed.adam, straight.adam);
    assert!(resumed.params == straight.params, "params differ");
    assert_eq!(resumed.checkpoint().encode().unwrap(), straight.checkpoint().encode().unwrap());
}

#[test]
fn full_run_visits_stages_in_order() {
    let dir = dataset();
    let out = tempfile::tempdir().unwrap();
    let mut t = trainer(dir.path(), fast_config());
    let mut stages = Vec::new();
    t.run(Some(out.path()), |s| stages.push(s.stage)).unwrap();
    assert_eq!(stages.first(), Some(&Stage::Xe));
    assert!(stages.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(stages.iter().filter(|&&s| s == Stage::Scst).count(), 2);
    assert!(stages.contains(&Stage::Oracle));
    assert_eq!(t.next_stage(), None);
    for f in [LAST_CHECKPOINT, BEST_CHECKPOINT, TRAIN_LOG] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(out.path().join(TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), stages.len());
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["epoch", "stage", "loss", "val", "p", "lr", "wall_time"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
    let last = Checkpoint::load(&out.path().join(LAST_CHECKPOINT)).unwrap();
    assert_eq!(last.params, t.params);
}

#[test]
fn stages_cannot_regress() {
    let dir = dataset();
    let mut t = trainer(dir.path(), fast_config());
    t.run_epoch(Stage::Oracle).unwrap();
    assert!(t.run_epoch(Stage::Xe).is_err());
}

#[test]
fn evaluation_is_deterministic_and_in_range() {
    let dir = dataset();
    let mut t = trainer(dir.path(), fast_config());
    t.run_epoch(Stage::Xe).unwrap();
    let a = t.evaluate(t.val_examples()).unwrap();
    let b = t.evaluate(t.val_examples()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    for v in [a.bleu4, a.rouge_l, a.meteor_lite] {
        assert!((0.0..=1.0).contains(&v));
    }
    assert!((0.0..=10.0).contains(&a.cider));
    assert!(t.evaluate(&[]).is_err());
}

#[test]
fn gumbel_max_matches_softmax() {
    let logits = ndarray::arr1(&[0.5, 1.0, 1.5]);
    let z: f64 = logits.iter().map(|v: &f64| v.exp()).sum();
    let probs: Vec<f64> = logits.iter().map(|v| v.exp() / z).collect();
    for (p, want) in probs.iter().zip([0.1863, 0.3072, 0.5065]) {
        assert!((p - want).abs() < 1e-4);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[oracle_select(logits.view(), 1.0, &mut rng) as usize] += 1;
    }
    let tv: f64 = counts.iter().zip(&probs).map(|(&c, p)| (c as f64 / n as f64 - p).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.01, "total variation {tv}");
    // chi-square with 2 degrees of freedom; p > 0.001 means statistic < 13.8155
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, p)| (c as f64 - n as f64 * p).powi(2) / (n as f64 * p))
        .sum();
    assert!(chi2 < 13.8155, "chi-square {chi2}");
}
