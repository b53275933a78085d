use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use capstage_core::audiofe::{audio_features, read_wav, AudioEmbedding, EMBED_DIM};
use capstage_core::corpus::{
    decode_matrix, detokenize, encode_matrix, synth_dataset, write_dataset, Dataset, FeatureBundle, FeatureDims,
    SplitName, Track, Vocabulary,
};
use capstage_core::model::{
    encode_input, greedy_decode_len, sample_decode, Checkpoint, EncodedVideo, ModelConfig, VideoInput,
};
use capstage_core::training::{
    evaluate, load_examples, vocabulary_for, Trainer, BEST_CHECKPOINT, LAST_CHECKPOINT, TRAIN_LOG,
};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::{Cli, Command, Global};

pub const RUN_CONFIG: &str = "run_config.json";
pub const DEFAULT_RUN_DIR: &str = "run";

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::User(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<capstage_core::Error> for CliError {
    fn from(e: capstage_core::Error) -> Self {
        match e {
            capstage_core::Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            other => CliError::User(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn user(msg: impl Into<String>) -> CliError {
    CliError::User(msg.into())
}

/// File config with env and flag overrides applied. A top-level seed, from
/// any layer, replaces both the synth and the training seed.
fn resolve(g: &Global) -> Result<RunConfig> {
    let mut rc = RunConfig::load(g.config.as_deref()).map_err(CliError::User)?;
    if let Some(s) = g.seed {
        rc.seed = Some(s);
    }
    if let Some(s) = rc.seed {
        rc.synth.seed = s;
        rc.train.seed = s;
    }
    if let Some(o) = &g.out {
        rc.out = Some(o.clone());
    }
    if let Some(t) = g.track {
        rc.track = t;
    }
    rc.synth.validate()?;
    rc.train.validate()?;
    Ok(rc)
}

fn is_nonempty_dir(p: &Path) -> bool {
    fs::read_dir(p).map(|mut d| d.next().is_some()).unwrap_or(false)
}

fn open_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(user(format!("dataset not found at {}", dir.display())));
    }
    Dataset::open(dir).map_err(|e| user(format!("cannot open dataset at {}: {e}", dir.display())))
}

pub fn run(cli: Cli) -> Result<()> {
    let rc = resolve(&cli.global)?;
    match cli.command {
        Command::Synth { videos } => synth(rc, cli.global.force, videos),
        Command::Train { data, resume } => train(rc, &cli.global, data, resume),
        Command::Eval { checkpoint, data, split } => {
            let data = data.unwrap_or_else(|| rc.data.clone());
            let report = eval(&checkpoint, &data, split, cli.global.track)?;
            println!("{}", report);
            Ok(())
        }
        Command::Infer {
            checkpoint,
            features,
            topic,
            video,
            data,
            sample,
            max_len,
        } => {
            let source = match (features, video) {
                (Some(f), None) => Source::Files {
                    paths: [f[0].clone(), f[1].clone(), f[2].clone()],
                    topic: topic.ok_or_else(|| user("--features needs --topic"))?,
                },
                (None, Some(id)) => Source::Video {
                    id,
                    data: data.unwrap_or_else(|| rc.data.clone()),
                },
                _ => return Err(user("give either --features with --topic, or --video")),
            };
            let seed = rc.seed.unwrap_or(rc.train.seed);
            for line in infer(&checkpoint, &source, cli.global.track, sample, max_len, seed)? {
                println!("{line}");
            }
            Ok(())
        }
        Command::Audio { wav } => {
            let out = rc.out.clone();
            audio(&wav, out.as_deref(), rc.seed.unwrap_or(rc.train.seed))
        }
    }
}

fn synth(mut rc: RunConfig, force: bool, videos: Option<usize>) -> Result<()> {
    if let Some(n) = videos {
        rc.synth.n_train = n;
    }
    rc.synth.validate()?;
    let dir = rc.out.clone().unwrap_or_else(|| rc.data.clone());
    if is_nonempty_dir(&dir) && !force {
        return Err(user(format!("{} is not empty (use --force to overwrite)", dir.display())));
    }
    let out = synth_dataset(&rc.synth, rc.synth.seed)?;
    write_dataset(&dir, &rc.synth, &out)?;
    let tracks: Vec<&str> = rc.synth.tracks.iter().map(|t| t.as_str()).collect();
    println!(
        "wrote {} train / {} val / {} test videos, {} topics, {} captions each ({}) to {}",
        out.split.train.len(),
        out.split.val.len(),
        out.split.test.len(),
        rc.synth.n_topics,
        rc.synth.captions_per_video,
        tracks.join(", "),
        dir.display()
    );
    Ok(())
}

fn train(mut rc: RunConfig, g: &Global, data: Option<PathBuf>, resume: bool) -> Result<()> {
    if let Some(d) = data {
        rc.data = d;
    }
    let out = rc.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_RUN_DIR));
    let ds = open_dataset(&rc.data)?;

    let mut trainer = if resume {
        let ckpt_path = out.join(LAST_CHECKPOINT);
        let ckpt = Checkpoint::load(&ckpt_path)
            .map_err(|e| user(format!("cannot resume from {}: {e}", ckpt_path.display())))?;
        let track = checkpoint_track(&ckpt).unwrap_or(rc.track);
        check_dims(&ckpt.config, &ds.config.dims)?;
        let tr = load_examples(&ds, SplitName::Train, track, &ckpt.vocab, &ckpt.config)?;
        let va = load_examples(&ds, SplitName::Val, track, &ckpt.vocab, &ckpt.config)?;
        let t = Trainer::resume(ckpt, tr, va)?;
        println!("resuming at epoch {}", t.state.epoch());
        t
    } else {
        if is_nonempty_dir(&out) {
            if !g.force {
                return Err(user(format!(
                    "{} is not empty (use --force to overwrite or --resume to continue)",
                    out.display()
                )));
            }
            for f in [LAST_CHECKPOINT, BEST_CHECKPOINT, TRAIN_LOG] {
                let p = out.join(f);
                if p.exists() {
                    fs::remove_file(&p).map_err(|e| user(format!("cannot remove {}: {e}", p.display())))?;
                }
            }
        }
        let vocab = vocabulary_for(&ds.split.train, rc.track, rc.train.min_count)?;
        let model_cfg = rc.model.resolve(vocab.len(), ds.config.n_topics, &ds.config.dims);
        model_cfg.validate()?;
        let tr = load_examples(&ds, SplitName::Train, rc.track, &vocab, &model_cfg)?;
        let va = load_examples(&ds, SplitName::Val, rc.track, &vocab, &model_cfg)?;
        Trainer::new(model_cfg, rc.train.clone(), rc.track, vocab, tr, va)?
    };

    fs::create_dir_all(&out).map_err(|e| user(format!("cannot create {}: {e}", out.display())))?;
    if !resume {
        let rc_path = out.join(RUN_CONFIG);
        let text = serde_json::to_string_pretty(&rc).expect("config serializes") + "\n";
        fs::write(&rc_path, text).map_err(|e| user(format!("cannot write {}: {e}", rc_path.display())))?;
    }

    let result = trainer.run(Some(&out), |s| {
        let mut line = format!("epoch {:>3} {:<6} loss {:.4} lr {:.2e}", s.epoch, s.stage.as_str(), s.loss, s.lr);
        if let Some(v) = &s.val {
            line += &format!(" val_cider {:.4} val_bleu4 {:.4}", v.cider, v.bleu4);
        }
        if let Some(p) = s.p {
            line += &format!(" p {p:.4}");
        }
        if let Some(a) = s.train_accuracy {
            line += &format!(" acc {a:.4}");
        }
        if let Some(r) = s.sample_reward {
            line += &format!(" sample_reward {r:.4}");
        }
        println!("{line}");
    });
    if let Err(e) = result {
        return Err(match e {
            capstage_core::Error::NonFinite(what) => {
                CliError::Numeric(format!("non-finite value at epoch {}: {what}", trainer.state.epoch()))
            }
            other => other.into(),
        });
    }
    let st = &trainer.state;
    match (st.best_val_cider, st.best_epoch, st.best_stage()) {
        (Some(c), Some(e), Some(s)) => println!("best val CIDEr {c:.4} at epoch {e} ({s})"),
        _ => println!("best val CIDEr n/a (no validation videos)"),
    }
    Ok(())
}

fn checkpoint_track(ckpt: &Checkpoint) -> Option<Track> {
    ckpt.state.get("track").and_then(|v| serde_json::from_value(v.clone()).ok())
}

fn check_dims(cfg: &ModelConfig, dims: &FeatureDims) -> Result<()> {
    if cfg.input_dims_match(dims) {
        Ok(())
    } else {
        Err(user(format!(
            "checkpoint expects feature widths {}/{}/{}, data has {}/{}/{}",
            cfg.d_app, cfg.d_mot, cfg.d_aud, dims.appearance, dims.motion, dims.audio
        )))
    }
}

/// Metric report JSON for `split`.
pub fn eval(checkpoint: &Path, data: &Path, split: SplitName, track: Option<Track>) -> Result<String> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let ds = open_dataset(data)?;
    check_dims(&ckpt.config, &ds.config.dims)?;
    if ds.config.n_topics > ckpt.config.n_topics {
        return Err(user(format!(
            "dataset has {} topics, checkpoint knows {}",
            ds.config.n_topics, ckpt.config.n_topics
        )));
    }
    let track = track.or_else(|| checkpoint_track(&ckpt)).unwrap_or(Track::English);
    let examples = load_examples(&ds, split, track, &ckpt.vocab, &ckpt.config)?;
    Ok(evaluate(&ckpt.params, &ckpt.config, &ckpt.vocab, &examples)?.to_json())
}

pub enum Source {
    Files { paths: [PathBuf; 3], topic: usize },
    Video { id: String, data: PathBuf },
}

/// Reads a headerless f32 matrix whose width is known; rows follow from
/// the file size.
fn read_features(path: &Path, cols: usize, what: &str) -> Result<Array2<f32>> {
    let bytes = fs::read(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))?;
    let row_bytes = cols * 4;
    if bytes.is_empty() || bytes.len() % row_bytes != 0 {
        return Err(user(format!(
            "{}: {} bytes is not a whole number of {cols}-wide {what} rows",
            path.display(),
            bytes.len()
        )));
    }
    Ok(decode_matrix(&bytes, bytes.len() / row_bytes, cols, what)?)
}

fn load_input(source: &Source, cfg: &ModelConfig) -> Result<VideoInput> {
    match source {
        Source::Files { paths, topic } => {
            let app = read_features(&paths[0], cfg.d_app, "appearance")?;
            let mot = read_features(&paths[1], cfg.d_mot, "motion")?;
            let aud = read_features(&paths[2], cfg.d_aud, "audio")?;
            if *topic >= cfg.n_topics {
                return Err(user(format!("topic {topic} out of range (model has {})", cfg.n_topics)));
            }
            let bundle = FeatureBundle::new(app, mot, aud)?;
            Ok(VideoInput::new(&bundle, *topic))
        }
        Source::Video { id, data } => {
            let ds = open_dataset(data)?;
            check_dims(cfg, &ds.config.dims)?;
            let rec = SplitName::ALL
                .into_iter()
                .flat_map(|s| ds.split.get(s).iter())
                .find(|r| &r.video_id == id)
                .ok_or_else(|| user(format!("no video `{id}` in {}", data.display())))?;
            let bundle = rec.load_features(&ds.root)?;
            Ok(VideoInput::new(&bundle, rec.topic_id))
        }
    }
}

fn caption(vocab: &Vocabulary, ids: &[u32], track: Track) -> String {
    detokenize(&vocab.decode(ids), track)
}

/// Greedy caption, or `sample` stochastic ones prefixed by their seeds.
pub fn infer(
    checkpoint: &Path,
    source: &Source,
    track: Option<Track>,
    sample: Option<usize>,
    max_len: Option<usize>,
    seed: u64,
) -> Result<Vec<String>> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let mut cfg = ckpt.config;
    if let Some(n) = max_len {
        if n == 0 {
            return Err(user("--max-len must be positive"));
        }
        cfg.max_len = n;
    }
    let input = load_input(source, &cfg)?;
    let track = track.or_else(|| checkpoint_track(&ckpt)).unwrap_or(Track::English);
    let enc: EncodedVideo = encode_input(&input, &ckpt.params, &cfg)?;
    match sample {
        None => Ok(vec![caption(&ckpt.vocab, &greedy_decode_len(&enc, &ckpt.params, &cfg, cfg.max_len), track)]),
        Some(n) => Ok((0..n as u64)
            .map(|i| {
                let s = seed.wrapping_add(i);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let c = sample_decode(&enc, &ckpt.params, &cfg, &mut rng);
                format!("seed {s}: {}", caption(&ckpt.vocab, c.tokens(), track))
            })
            .collect()),
    }
}

fn audio(wav: &Path, out: Option<&Path>, seed: u64) -> Result<()> {
    let w = read_wav(wav)?;
    let feats = audio_features(&w, &AudioEmbedding::init(EMBED_DIM, seed))?;
    let (rows, cols) = feats.dim();
    match out {
        Some(path) => {
            let bytes = encode_matrix(&feats.mapv(|v| v as f32));
            fs::write(path, bytes).map_err(|e| user(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {rows}x{cols} audio features to {}", path.display());
        }
        None => println!("{rows}x{cols} audio features, mean {:.6}", feats.mean().unwrap_or(0.0)),
    }
    Ok(())
}
