//! File-based pipeline commands.
//!
//! Every command reads one `key=value` config, writes its artifacts under the
//! output directory and returns a short human-readable summary. Relative
//! paths in configs resolve against the working directory.

use std::fmt::Write as _;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::audio::{
    detect_beats, extract_audio_frames, load_audio_codebook, read_wav, save_audio_codebook,
    AudioClip, AudioCodebook, AudioTokenConfig, FrameConfig,
};
use crate::config::KeyValues;
use crate::dataset::{
    generate_synthetic_dataset, ClipEntry, DatasetManifest, LoadedClip, Split, SyntheticDatasetSpec,
};
use crate::error::{Error, Result};
use crate::generation::{
    generate_group, load_ngram, save_ngram, GenerationConfig, GroupGeneration, NGramPredictor,
};
use crate::metrics::{evaluate, root_paths, EvalClip, EvalConfig};
use crate::motion::{write_motion, MotionSequence, SkeletonSpec};
use crate::pipeline::{
    load_grid, load_vocabulary, pretrain_words, save_grid, save_vocabulary, segment_examples,
    tokenize_clip, train_tokenizer, TokenizerSpec,
};
use crate::plot::trajectory_svg;
use crate::position::PositionGrid;
use crate::rvq::{load_tokenizer, save_tokenizer};
use crate::sequence::{read_examples, render_words, write_examples, TrainingExample, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SynthData,
    TrainTokenizer,
    Tokenize,
    TrainAudioCodebook,
    TrainPredictor,
    Generate,
    Evaluate,
    Plot,
}

/// Flags shared by every command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    pub config: Option<PathBuf>,
    /// Overrides the config's `seed`.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const TOKENIZER_FILE: &str = "tokenizer.rvq";
pub const AUDIO_CODEBOOK_FILE: &str = "audio.aud";
pub const PREDICTOR_FILE: &str = "predictor.ngr";
pub const GRID_FILE: &str = "grid.cfg";
pub const VOCAB_FILE: &str = "vocab.cfg";

pub fn run(command: Command, opts: &Options) -> Result<String> {
    let mut kv = match &opts.config {
        Some(path) => KeyValues::load(path, "config")?,
        None => KeyValues::parse("", "config")?,
    };
    if let Some(seed) = opts.seed {
        kv.set("seed", seed);
    }
    std::fs::create_dir_all(&opts.out)?;
    let out = opts.out.as_path();
    match command {
        Command::SynthData => synth_data(&kv, out),
        Command::TrainTokenizer => train_tokenizer_cmd(&kv, out),
        Command::Tokenize => tokenize(&kv, out),
        Command::TrainAudioCodebook => train_audio_codebook(&kv, out),
        Command::TrainPredictor => train_predictor(&kv, out),
        Command::Generate => generate(&kv, out),
        Command::Evaluate => evaluate_cmd(&kv, out),
        Command::Plot => plot(&kv, out),
    }
}

fn required_path(kv: &KeyValues, key: &str) -> Result<PathBuf> {
    kv.raw(key)
        .map(PathBuf::from)
        .ok_or_else(|| Error::invalid(format!("config needs `{key}`")))
}

fn split_key(kv: &KeyValues, key: &str, default: &str) -> Result<Option<Split>> {
    match kv.raw(key).unwrap_or(default) {
        "all" => Ok(None),
        s => s.parse().map(Some),
    }
}

fn entries(manifest: &DatasetManifest, split: Option<Split>) -> Result<Vec<&ClipEntry>> {
    let e: Vec<&ClipEntry> = manifest
        .entries()
        .iter()
        .filter(|e| split.is_none_or(|s| e.split == s))
        .collect();
    if e.is_empty() {
        return Err(Error::invalid(format!(
            "manifest has no clips in split `{}`",
            split.map_or("all", |s| s.name())
        )));
    }
    Ok(e)
}

fn load_clips(manifest: &DatasetManifest, entries: &[&ClipEntry]) -> Result<Vec<LoadedClip>> {
    entries.par_iter().map(|e| manifest.load_clip(e)).collect()
}

fn synth_data(kv: &KeyValues, out: &Path) -> Result<String> {
    let spec = SyntheticDatasetSpec::from_key_values(kv)?;
    let m = generate_synthetic_dataset(&spec, out)?;
    let dancers: usize = m.entries().iter().map(|e| e.motions.len()).sum();
    Ok(format!(
        "wrote {} clips ({dancers} dancers) and {}",
        m.entries().len(),
        out.join(MANIFEST_FILE).display()
    ))
}

fn train_tokenizer_cmd(kv: &KeyValues, out: &Path) -> Result<String> {
    let mut known = TokenizerSpec::KEYS.to_vec();
    known.push("manifest");
    kv.reject_unknown(&known)?;
    let spec = TokenizerSpec::from_key_values(kv)?;
    let manifest = DatasetManifest::load(&required_path(kv, "manifest")?)?;
    let clips = load_clips(&manifest, &entries(&manifest, Some(Split::Train))?)?;
    let sequences: Vec<MotionSequence> = clips.into_iter().flat_map(|c| c.dancers).collect();
    let run = train_tokenizer(&sequences, &spec)?;
    save_tokenizer(&run.tokenizer, &out.join(TOKENIZER_FILE))?;

    let mut log = String::from("step\trec\tcommit\tortho\ttotal\n");
    for (i, l) in run.history.iter().enumerate() {
        let _ = writeln!(
            log,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            i + 1,
            l.rec,
            l.commit,
            l.ortho,
            l.total
        );
    }
    std::fs::write(out.join("tokenizer_log.tsv"), log)?;
    let report = format!(
        "sequences={}\ninitial_rec={:.6}\nfinal_rec={:.6}\nutilization={:.6}\n",
        sequences.len(),
        run.initial.rec,
        run.last.rec,
        run.utilization
    );
    std::fs::write(out.join("tokenizer_report.txt"), &report)?;
    Ok(format!(
        "trained on {} sequences: reconstruction {:.5} -> {:.5}, codebook use {:.1}%",
        sequences.len(),
        run.initial.rec,
        run.last.rec,
        100.0 * run.utilization
    ))
}

fn train_audio_codebook(kv: &KeyValues, out: &Path) -> Result<String> {
    kv.reject_unknown(&[
        "manifest",
        "tokenizer",
        "downsample",
        "fps",
        "bands",
        "size",
        "iters",
        "seed",
    ])?;
    let downsample = match kv.raw("tokenizer") {
        Some(p) => load_tokenizer(Path::new(p))?.downsample(),
        None => kv.get_or("downsample", 4usize)?,
    };
    let manifest = DatasetManifest::load(&required_path(kv, "manifest")?)?;
    let train = entries(&manifest, Some(Split::Train))?;
    let audio: Vec<AudioClip> = train
        .par_iter()
        .map(|e| read_wav(&manifest.root().join(&e.audio)))
        .collect::<Result<_>>()?;
    let config = AudioTokenConfig::matched(
        audio[0].sample_rate(),
        kv.get_or("fps", 30.0)?,
        downsample,
        kv.get_or("bands", 32usize)?,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(kv.get_or("seed", 0u64)?);
    let book = AudioCodebook::fit(
        config,
        &audio,
        kv.get_or("size", 64usize)?,
        kv.get_or("iters", 20usize)?,
        &mut rng,
    )?;
    save_audio_codebook(&book, &out.join(AUDIO_CODEBOOK_FILE))?;
    Ok(format!(
        "fitted {} audio tokens on {} clips (hop {} samples)",
        book.size(),
        audio.len(),
        config.frames.hop
    ))
}

fn corpus_paths(out: &Path, name: &str, split: Split) -> (PathBuf, PathBuf) {
    let base = format!("{name}_{}", split.name());
    (
        out.join(format!("{base}.txt")),
        out.join(format!("{base}.mask")),
    )
}

fn write_corpus(out: &Path, name: &str, split: Split, examples: &[TrainingExample]) -> Result<()> {
    let (text, mask) = corpus_paths(out, name, split);
    let mut t = BufWriter::new(std::fs::File::create(text)?);
    let mut m = BufWriter::new(std::fs::File::create(mask)?);
    write_examples(examples, &mut t, &mut m)?;
    t.flush()?;
    m.flush()?;
    Ok(())
}

fn tokenize(kv: &KeyValues, out: &Path) -> Result<String> {
    kv.reject_unknown(&[
        "manifest",
        "tokenizer",
        "audio_codebook",
        "grid_order",
        "grid_min",
        "grid_max",
        "segment_seconds",
        "max_dancers",
    ])?;
    let tok = load_tokenizer(&required_path(kv, "tokenizer")?)?;
    let audio_book = load_audio_codebook(&required_path(kv, "audio_codebook")?)?;
    let d = PositionGrid::default();
    let (dmin, dmax) = d.extent();
    let grid = PositionGrid::new(
        kv.get_or("grid_order", d.order())?,
        kv.get_or("grid_min", dmin)?,
        kv.get_or("grid_max", dmax)?,
    )?;
    let manifest = DatasetManifest::load(&required_path(kv, "manifest")?)?;
    let max_dancers: u32 = kv.get_or("max_dancers", 5)?;
    if let Some(e) = manifest
        .entries()
        .iter()
        .find(|e| e.motions.len() > max_dancers as usize)
    {
        return Err(Error::OutOfRange(format!(
            "clip `{}` has {} dancers, max_dancers is {max_dancers}",
            e.id,
            e.motions.len()
        )));
    }
    let levels = tok.quantizer.levels();
    let k = tok.quantizer.codebook_size();
    let vocab = Vocabulary::new(
        (levels * k) as u32,
        audio_book.size() as u32,
        grid.token_count(),
        max_dancers,
    )?;
    let segment_seconds: f64 = kv.get_or(
        "segment_seconds",
        GenerationConfig::default().segment_seconds,
    )?;

    let mut summary = String::new();
    for split in [Split::Train, Split::Test] {
        let chosen: Vec<&ClipEntry> = manifest.split(split).collect();
        if chosen.is_empty() {
            continue;
        }
        let clips = load_clips(&manifest, &chosen)?;
        let tokens = clips
            .par_iter()
            .map(|c| tokenize_clip(&tok, &audio_book, c, split))
            .collect::<Result<Vec<_>>>()?;
        let fps = clips[0].dancers[0].fps;
        let per_segment = GenerationConfig {
            segment_seconds,
            fps,
            ..GenerationConfig::default()
        }
        .tokens_per_segment(tok.downsample());

        let mut pretrain = String::new();
        for c in &tokens {
            pretrain.push_str(&render_words(&pretrain_words(c, k)?));
            pretrain.push('\n');
        }
        std::fs::write(out.join(format!("pretrain_{}.txt", split.name())), pretrain)?;
        for (name, with_position) in [("sft_pos", true), ("sft_count", false)] {
            let examples: Vec<TrainingExample> = tokens
                .iter()
                .map(|c| segment_examples(c, &grid, k, per_segment, with_position))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            write_corpus(out, name, split, &examples)?;
            if with_position {
                let _ = write!(
                    summary,
                    "{}: {} clips, {} examples; ",
                    split.name(),
                    tokens.len(),
                    examples.len()
                );
            }
        }
    }
    save_vocabulary(&vocab, &out.join(VOCAB_FILE))?;
    save_grid(&grid, &out.join(GRID_FILE))?;
    let _ = write!(summary, "vocabulary of {} ids", vocab.size());
    Ok(summary)
}

fn train_predictor(kv: &KeyValues, out: &Path) -> Result<String> {
    kv.reject_unknown(&[
        "examples",
        "mask",
        "pretrain",
        "vocab",
        "order",
        "smoothing",
        "anchor_headers",
        "seed",
    ])?;
    let vocab = load_vocabulary(&required_path(kv, "vocab")?)?;
    let text_path = required_path(kv, "examples")?;
    let mask_path = kv
        .raw("mask")
        .map_or_else(|| text_path.with_extension("mask"), PathBuf::from);
    let open = |p: &Path, what: &str| -> Result<BufReader<std::fs::File>> {
        std::fs::File::open(p)
            .map(BufReader::new)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingFile {
                    context: what.to_string(),
                    path: p.to_path_buf(),
                },
                _ => e.into(),
            })
    };
    let examples = read_examples(
        open(&text_path, "examples")?,
        open(&mask_path, "example masks")?,
    )?;
    let mut corpus: Vec<Vec<usize>> = examples
        .iter()
        .map(|e| vocab.encode(&e.words))
        .collect::<Result<_>>()?;
    if let Some(p) = kv.raw("pretrain") {
        let text = std::fs::read_to_string(p).map_err(|_| Error::MissingFile {
            context: "pretrain corpus".into(),
            path: p.into(),
        })?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            corpus.push(vocab.encode(&crate::sequence::parse_words(line)?)?);
        }
    }
    let (order, smoothing) = (kv.get_or("order", 4usize)?, kv.get_or("smoothing", 0.01)?);
    let pred = if kv.get_or("anchor_headers", true)? {
        NGramPredictor::train_prompt_anchored(&corpus, vocab, order, smoothing)?
    } else {
        NGramPredictor::train(&corpus, vocab, order, smoothing)?
    };
    save_ngram(&pred, &out.join(PREDICTOR_FILE))?;
    Ok(format!(
        "order-{} model over {} sequences, {} contexts",
        pred.model.order(),
        corpus.len(),
        pred.model.context_count()
    ))
}

const GENERATE_KEYS: [&str; 7] = [
    "tokenizer",
    "audio_codebook",
    "predictor",
    "grid",
    "audio",
    "manifest",
    "split",
];

fn generate(kv: &KeyValues, out: &Path) -> Result<String> {
    let mut known = GENERATE_KEYS.to_vec();
    known.extend(GenerationConfig::KEYS);
    kv.reject_unknown(&known)?;
    let config = GenerationConfig::from_key_values(&kv.without(&GENERATE_KEYS))?;
    let tok = load_tokenizer(&required_path(kv, "tokenizer")?)?;
    let audio_book = load_audio_codebook(&required_path(kv, "audio_codebook")?)?;
    let pred = load_ngram(&required_path(kv, "predictor")?)?;
    let grid = load_grid(&required_path(kv, "grid")?)?;

    // (id, absolute audio path)
    let jobs: Vec<(String, PathBuf)> = match (kv.raw("audio"), kv.raw("manifest")) {
        (Some(a), None) => vec![("clip".into(), absolute(Path::new(a), "audio")?)],
        (None, Some(m)) => {
            let manifest = DatasetManifest::load(Path::new(m))?;
            entries(&manifest, split_key(kv, "split", "test")?)?
                .into_iter()
                .map(|e| {
                    Ok((
                        e.id.clone(),
                        absolute(&manifest.root().join(&e.audio), "audio")?,
                    ))
                })
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::invalid(
                "config needs exactly one of `audio` and `manifest`",
            ))
        }
    };
    let results: Vec<(ClipEntry, GroupGeneration)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (id, audio_path))| {
            let audio = read_wav(audio_path)?;
            let tokens: Vec<u32> = audio_book
                .tokenize(&audio)?
                .into_iter()
                .map(|a| a as u32)
                .collect();
            let cfg = GenerationConfig {
                seed: config.seed.wrapping_add(i as u64),
                ..config.clone()
            };
            let g = generate_group(&pred, &tok, &grid, &tokens, &cfg)?;
            let dir = out.join(id);
            std::fs::create_dir_all(&dir)?;
            let mut motions = Vec::with_capacity(g.dancers.len());
            for (k, seq) in g.dancers.iter().enumerate() {
                let rel = PathBuf::from(format!("{id}/dancer_{k}.motion"));
                write_motion(&out.join(&rel), seq)?;
                motions.push(rel);
            }
            std::fs::write(dir.join("trace.tsv"), render_trace(&g))?;
            std::fs::write(dir.join("codes.txt"), render_codes(&g))?;
            let entry = ClipEntry {
                id: id.clone(),
                split: Split::Test,
                audio: audio_path.clone(),
                motions,
                positions: g.initial_positions.clone(),
            };
            Ok((entry, g))
        })
        .collect::<Result<_>>()?;
    let frames: usize = results.iter().map(|(_, g)| g.dancers[0].len()).sum();
    let manifest = DatasetManifest::new(
        out.to_path_buf(),
        results.into_iter().map(|(e, _)| e).collect(),
    )?;
    manifest.save(&out.join(MANIFEST_FILE))?;
    std::fs::write(out.join("generation.cfg"), config.render())?;
    Ok(format!(
        "generated {} clips of {} dancers ({frames} frames per dancer in total)",
        manifest.entries().len(),
        config.dancer_count
    ))
}

fn absolute(p: &Path, what: &str) -> Result<PathBuf> {
    std::fs::canonicalize(p).map_err(|_| Error::MissingFile {
        context: what.to_string(),
        path: p.to_path_buf(),
    })
}

fn render_trace(g: &GroupGeneration) -> String {
    let mut s = String::from(
        "segment\tdancer\tcontext_len\tprompt\tstart_x\tstart_z\tstart_heading\tend_x\tend_z\tend_heading\n",
    );
    for t in &g.trace {
        let prompt = t
            .prompt
            .map_or_else(|| "-".to_string(), |p| p.0.to_string());
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{prompt}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.segment,
            t.dancer,
            t.context_len,
            t.start.position[0],
            t.start.position[1],
            t.start.heading,
            t.end.position[0],
            t.end.position[1],
            t.end.heading
        );
    }
    s
}

fn render_codes(g: &GroupGeneration) -> String {
    let mut s = String::new();
    for (d, levels) in g.codes.iter().enumerate() {
        for (l, row) in levels.iter().enumerate() {
            let codes: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{d}\t{l}\t{}", codes.join(" "));
        }
    }
    s
}

/// Beat times of a clip from the default analysis frames.
pub fn audio_beats(clip: &AudioClip) -> Result<Vec<f64>> {
    Ok(detect_beats(&extract_audio_frames(
        clip,
        FrameConfig::default(),
    )?))
}

fn evaluate_cmd(kv: &KeyValues, out: &Path) -> Result<String> {
    let mut known = vec!["real", "real_split", "generated"];
    known.extend(EvalConfig::KEYS);
    kv.reject_unknown(&known)?;
    let config = EvalConfig::from_key_values(&kv.subset(EvalConfig::KEYS))?;
    let real_m = DatasetManifest::load(&required_path(kv, "real")?)?;
    let gen_m = DatasetManifest::load(&required_path(kv, "generated")?)?;
    let real: Vec<Vec<MotionSequence>> = load_clips(
        &real_m,
        &entries(&real_m, split_key(kv, "real_split", "test")?)?,
    )?
    .into_iter()
    .map(|c| c.dancers)
    .collect();
    let generated: Vec<EvalClip> = load_clips(&gen_m, &entries(&gen_m, None)?)?
        .into_iter()
        .map(|c| {
            Ok(EvalClip {
                audio_beats: audio_beats(&c.audio)?,
                dancers: c.dancers,
            })
        })
        .collect::<Result<_>>()?;
    let report = evaluate(&SkeletonSpec::default_24(), &real, &generated, &config)?;
    std::fs::write(out.join("report.txt"), report.render_key_values())?;
    let table = report.render_table();
    std::fs::write(out.join("metrics.tsv"), &table)?;
    Ok(table.trim_end().to_string())
}

fn plot(kv: &KeyValues, out: &Path) -> Result<String> {
    kv.reject_unknown(&["generated", "grid", "width", "seed"])?;
    let grid = kv
        .raw("grid")
        .map(|p| load_grid(Path::new(p)))
        .transpose()?;
    let width: u32 = kv.get_or("width", 800)?;
    let m = DatasetManifest::load(&required_path(kv, "generated")?)?;
    let clips = load_clips(&m, &entries(&m, None)?)?;
    for c in &clips {
        let svg = trajectory_svg(&root_paths(&c.dancers)?, grid.as_ref(), width)?;
        std::fs::write(out.join(format!("{}.svg", c.id)), svg)?;
    }
    Ok(format!("wrote {} plots", clips.len()))
}
