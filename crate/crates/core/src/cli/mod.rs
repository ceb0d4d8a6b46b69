//! The `match` command-line tool.

mod config;
mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    filter_pair, read_corpus, split_corpus, write_corpus, Corpus, CorpusError, FilterVerdict, SplitSpec, SplitTag,
};
use crate::decoding::{
    build_pruned_matrix, decode_global, decode_global_sparse, decode_local_depth, Pruning, DEFAULT_BLOCK_ROWS,
};
use crate::encoders::{build_vocab, read_model, write_model, DfTable, EncoderKind, ModelState, TfIdfScorer};
use crate::evalharness::{
    assignment_distribution, level_label, run_grid, score_corpus, AssignHistogram, GridConfig, MetricReport,
};
use crate::symbols::{replace_corpus, ProtectedSet};
use crate::training::{train_observed, write_checkpoint, EvalRecord, TrainObserver};

pub use config::{ConfigError, DecodeMode, RunConfig};
pub use manifest::{sha256_file, Manifest, VERSION};

/// Exit code for `ingest --strict` when records were rejected.
pub const EXIT_REJECTED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "match", version = VERSION, about = "Match mathematical proofs to their statements")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Token channel kept before encoding: both, text or math.
    #[arg(long, global = true)]
    channel: Option<String>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate, linearize and length-filter a raw record file.
    Ingest {
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Exit with status 2 if any record is rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Split a corpus into train, dev and test files.
    Split {
        corpus: Option<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        /// Train, dev and test fractions, e.g. 0.8,0.1,0.1.
        #[arg(long)]
        ratios: Option<String>,
    },
    /// Apply a symbol replacement level to every proof.
    Replace {
        corpus: Option<PathBuf>,
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        /// File listing protected symbols.
        #[arg(long)]
        protected: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build and write a vocabulary.
    Vocab {
        corpus: Option<PathBuf>,
        #[arg(long)]
        min_freq: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train an encoder and bilinear head.
    Train {
        #[arg(long)]
        train: Option<String>,
        #[arg(long)]
        dev: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Decode a corpus locally or globally and report metrics.
    Eval {
        /// Corpus to evaluate.
        #[arg(long = "corpus", value_name = "CORPUS")]
        corpus: Option<String>,
        #[arg(value_name = "CORPUS", conflicts_with = "corpus")]
        corpus_pos: Option<String>,
        /// Trained model file; omit with `--encoder tfidf`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        encoder: Option<String>,
        #[arg(long)]
        decode: Option<String>,
        /// Candidates kept per statement for global decoding, or `all`.
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        block_rows: Option<String>,
    },
    /// Cross-replacement experiment grid.
    Grid {
        #[arg(long)]
        train: Option<String>,
        #[arg(long)]
        dev: Option<String>,
        #[arg(long)]
        test: Option<String>,
        /// Comma-separated replacement levels.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        protected: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    heads: Option<String>,
    #[arg(long)]
    d_k: Option<String>,
    #[arg(long)]
    pooling: Option<String>,
    #[arg(long)]
    positional: Option<String>,
    #[arg(long)]
    min_freq: Option<String>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    lr_decay: Option<String>,
    #[arg(long)]
    eval_every: Option<String>,
    #[arg(long)]
    clip_norm: Option<String>,
}

impl ModelArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![
            ("encoder", self.encoder.as_ref()),
            ("d", self.d.as_ref()),
            ("layers", self.layers.as_ref()),
            ("heads", self.heads.as_ref()),
            ("d_k", self.d_k.as_ref()),
            ("pooling", self.pooling.as_ref()),
            ("positional", self.positional.as_ref()),
            ("min_freq", self.min_freq.as_ref()),
            ("objective", self.objective.as_ref()),
            ("batch_size", self.batch_size.as_ref()),
            ("epochs", self.epochs.as_ref()),
            ("lr", self.lr.as_ref()),
            ("optimizer", self.optimizer.as_ref()),
            ("lr_decay", self.lr_decay.as_ref()),
            ("eval_every", self.eval_every.as_ref()),
            ("clip_norm", self.clip_norm.as_ref()),
        ]
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Split { .. } => "split",
            Command::Replace { .. } => "replace",
            Command::Vocab { .. } => "vocab",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Grid { .. } => "grid",
        }
    }

    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        let own = |v: Vec<(&'static str, Option<&String>)>| v.into_iter().map(|(k, v)| (k, v.cloned())).collect();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        match self {
            Command::Ingest { input, output, strict } => {
                vec![("corpus", path(input)), ("output", path(output)), ("strict", strict.then(|| "true".to_owned()))]
            }
            Command::Split { corpus, mode, ratios } => {
                vec![("corpus", path(corpus)), ("split_mode", mode.clone()), ("ratios", ratios.clone())]
            }
            Command::Replace { corpus, level, alpha, protected, output } => vec![
                ("corpus", path(corpus)),
                ("output", path(output)),
                ("level", level.clone()),
                ("alpha", alpha.clone()),
                ("protected", protected.clone()),
            ],
            Command::Vocab { corpus, min_freq, output } => {
                vec![("corpus", path(corpus)), ("min_freq", min_freq.clone()), ("output", path(output))]
            }
            Command::Train { train, dev, model } => {
                let mut v: Vec<(&'static str, Option<String>)> = own(model.overrides());
                v.push(("train", train.clone()));
                v.push(("dev", dev.clone()));
                v
            }
            Command::Eval { corpus, corpus_pos, model, encoder, decode, k, block_rows } => vec![
                ("corpus", corpus.clone().or_else(|| corpus_pos.clone())),
                ("model", model.clone()),
                ("encoder", encoder.clone()),
                ("decode", decode.clone()),
                ("k", k.clone()),
                ("block_rows", block_rows.clone()),
            ],
            Command::Grid { train, dev, test, levels, alpha, protected, model } => {
                let mut v: Vec<(&'static str, Option<String>)> = own(model.overrides());
                v.extend([
                    ("train", train.clone()),
                    ("dev", dev.clone()),
                    ("test", test.clone()),
                    ("levels", levels.clone()),
                    ("alpha", alpha.clone()),
                    ("protected", protected.clone()),
                ]);
                v
            }
        }
    }
}

/// Files read and written by one command, plus its exit code.
#[derive(Default)]
struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    code: i32,
}

/// Entry point shared by the binary and tests. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match resolve_config(&cli) {
        Ok(cfg) => execute(cli.command, cfg, argv),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(file) = &cli.global.config {
        cfg.load_file(file)?;
    }
    let g = &cli.global;
    let mut overrides: Vec<(&str, Option<String>)> = vec![
        ("seed", g.seed.clone()),
        ("out_dir", g.out_dir.clone()),
        ("channel", g.channel.clone()),
        ("quiet", g.quiet.then(|| "true".to_owned())),
    ];
    overrides.extend(cli.command.overrides());
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() {
    if let Some(n) = std::env::var("MATCH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn execute(command: Command, cfg: RunConfig, argv: Vec<String>) -> i32 {
    configure_threads();
    let started = SystemTime::now();
    let clock = Instant::now();
    let name = command.name();
    let result = fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .and_then(|_| dispatch(command, &cfg));
    let (outcome, status) = match result {
        Ok(o) => {
            let status = if o.code == 0 { "ok".to_owned() } else { format!("exit {}", o.code) };
            (o, status)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            (Outcome { code: 1, ..Outcome::default() }, format!("error: {e:#}"))
        }
    };
    let manifest = Manifest {
        command: name.to_owned(),
        argv,
        started,
        elapsed: clock.elapsed(),
        status,
        inputs: outcome.inputs,
        outputs: outcome.outputs,
    };
    if let Err(e) = manifest.write(&cfg) {
        eprintln!("error: writing manifest: {e}");
        return 1;
    }
    outcome.code
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Ingest { .. } => cmd_ingest(cfg),
        Command::Split { .. } => cmd_split(cfg),
        Command::Replace { .. } => cmd_replace(cfg),
        Command::Vocab { .. } => cmd_vocab(cfg),
        Command::Train { .. } => cmd_train(cfg),
        Command::Eval { .. } => cmd_eval(cfg),
        Command::Grid { .. } => cmd_grid(cfg),
    }
}

fn say(cfg: &RunConfig, msg: impl AsRef<str>) {
    if !cfg.quiet {
        println!("{}", msg.as_ref());
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| anyhow!("missing required input '{key}'"))
}

fn load(path: &Path, cfg: &RunConfig) -> Result<Corpus> {
    let corpus = read_corpus(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(cfg.channel.apply(&corpus))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("corpus".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_ingest(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.corpus_path, "corpus")?;
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut kept = Vec::new();
    let (mut short, mut long) = (0usize, 0usize);
    let mut tag = SplitTag::Unsplit;
    for (i, line) in text.lines().enumerate() {
        if let Some(t) = line.strip_prefix("#!split=") {
            tag = SplitTag::parse(t.trim()).ok_or_else(|| anyhow!("line {}: unknown split tag '{t}'", i + 1))?;
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let record =
            crate::corpus::parse_raw_record_line(line, i + 1).with_context(|| format!("in {}", input.display()))?;
        match filter_pair(&record) {
            FilterVerdict::Keep => kept.push(record),
            FilterVerdict::RejectTooShort => short += 1,
            FilterVerdict::RejectTooLong => long += 1,
        }
    }
    let n_kept = kept.len();
    let corpus = match Corpus::new(kept, tag) {
        Ok(c) => c,
        Err(CorpusError::EmptyCorpus) => Corpus::default(),
        Err(e) => return Err(e.into()),
    };
    let output = cfg.output_path.clone().unwrap_or_else(|| cfg.out_dir.join(format!("{}.tsv", stem(input))));
    write_corpus(&corpus, &output)?;
    let rejected = short + long;
    let reasons = match (short, long) {
        (0, 0) => String::new(),
        (_, 0) => " (too short)".into(),
        (0, _) => " (too long)".into(),
        _ => format!(" ({short} too short, {long} too long)"),
    };
    say(cfg, format!("kept {n_kept}, rejected {rejected}{reasons}"));
    let code = if cfg.strict && rejected > 0 { EXIT_REJECTED } else { 0 };
    Ok(Outcome { inputs: vec![input.clone()], outputs: vec![output], code })
}

fn cmd_split(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.corpus_path, "corpus")?;
    let corpus = read_corpus(input)?;
    let spec = SplitSpec { mode: cfg.split_mode, ratios: cfg.ratios, seed: cfg.seed };
    let (train, dev, test) = split_corpus(&corpus, &spec)?;
    let mut outputs = Vec::new();
    for (name, part) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let path = cfg.out_dir.join(format!("{name}.tsv"));
        write_corpus(part, &path)?;
        outputs.push(path);
    }
    say(cfg, format!("train {}, dev {}, test {}", train.len(), dev.len(), test.len()));
    Ok(Outcome { inputs: vec![input.clone()], outputs, code: 0 })
}

fn protected_set(cfg: &RunConfig) -> Result<ProtectedSet> {
    Ok(match &cfg.protected {
        Some(p) => ProtectedSet::read(p).with_context(|| format!("reading {}", p.display()))?,
        None => ProtectedSet::default(),
    })
}

fn cmd_replace(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.corpus_path, "corpus")?;
    let corpus = read_corpus(input)?;
    let level = cfg.replacement_level(&cfg.level)?;
    let replaced = replace_corpus(&corpus, level, &protected_set(cfg)?, cfg.seed)?;
    let output = cfg
        .output_path
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join(format!("{}.{}.tsv", stem(input), level_label(&level))));
    write_corpus(&replaced, &output)?;
    say(cfg, format!("replaced {} proofs ({})", replaced.len(), level.name()));
    let mut inputs = vec![input.clone()];
    inputs.extend(cfg.protected.clone());
    Ok(Outcome { inputs, outputs: vec![output], code: 0 })
}

fn cmd_vocab(cfg: &RunConfig) -> Result<Outcome> {
    let input = required(&cfg.corpus_path, "corpus")?;
    let vocab = build_vocab(&load(input, cfg)?, cfg.min_freq)?;
    let mut s = String::from("id\tcount\ttoken\n");
    for (id, token, count) in vocab.entries() {
        let _ = writeln!(s, "{id}\t{count}\t{token}");
    }
    let output = cfg.output_path.clone().unwrap_or_else(|| cfg.out_dir.join("vocab.tsv"));
    fs::write(&output, s)?;
    say(cfg, format!("vocabulary: {} entries including <unk>", vocab.len()));
    Ok(Outcome { inputs: vec![input.clone()], outputs: vec![output], code: 0 })
}

struct Progress {
    quiet: bool,
}

impl TrainObserver for Progress {
    fn on_eval(&mut self, r: &EvalRecord) {
        if !self.quiet {
            eprintln!("epoch {:>4}  dev accuracy {:.4}  mrr {:.4}", r.epoch, r.accuracy, r.mrr);
        }
    }
}

fn cmd_train(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.encoder.kind == EncoderKind::TfIdf {
        bail!("config key 'encoder': tfidf has no trainable parameters");
    }
    let train_path = required(&cfg.train_path, "train")?;
    let dev_path = required(&cfg.dev_path, "dev")?;
    let train = load(train_path, cfg)?;
    let dev = load(dev_path, cfg)?;
    let vocab = build_vocab(&train, cfg.min_freq)?;
    let state = ModelState::init(vocab, cfg.encoder, cfg.seed)?;
    say(cfg, format!("training {} parameters on {} pairs", state.parameter_count(), train.len()));
    let out = train_observed(&train, &dev, state, &cfg.train, &mut Progress { quiet: cfg.quiet })?;

    let model = cfg.out_dir.join("model.pmm");
    write_model(&out.best, &model)?;
    let ckpt = cfg.out_dir.join("last.ckpt");
    write_checkpoint(&ckpt, &out.last, &out.optimizer)?;
    let history = cfg.out_dir.join("history.tsv");
    fs::write(&history, out.history_log())?;
    let evals = cfg.out_dir.join("evals.tsv");
    let mut s = String::from("epoch\taccuracy\tmrr\n");
    for e in &out.evals {
        let _ = writeln!(s, "{}\t{}\t{}", e.epoch, e.accuracy, e.mrr);
    }
    fs::write(&evals, s)?;
    let best = out.evals.iter().find(|e| e.epoch == out.best_epoch).expect("best epoch was evaluated");
    say(cfg, format!("best epoch {}: dev accuracy {:.4}, mrr {:.4}", best.epoch, best.accuracy, best.mrr));
    Ok(Outcome {
        inputs: vec![train_path.clone(), dev_path.clone()],
        outputs: vec![model, ckpt, history, evals],
        code: 0,
    })
}

fn cmd_eval(cfg: &RunConfig) -> Result<Outcome> {
    let corpus_path = required(&cfg.corpus_path, "corpus")?;
    let corpus = load(corpus_path, cfg)?;
    let mut inputs = vec![corpus_path.clone()];
    if let Pruning::TopK(k) = cfg.k {
        if cfg.decode == DecodeMode::Global && k > corpus.len() {
            bail!("config key 'k': {k} exceeds the corpus size {}", corpus.len());
        }
    }
    let (report, histogram, padded) = match &cfg.model_path {
        Some(p) => {
            inputs.push(p.clone());
            let model = read_model(p).with_context(|| format!("reading {}", p.display()))?;
            evaluate_with(&model, &corpus, cfg)?
        }
        None if cfg.encoder.kind == EncoderKind::TfIdf => {
            evaluate_with(&TfIdfScorer { stats: DfTable::from_corpus(&corpus) }, &corpus, cfg)?
        }
        None => bail!("missing required input 'model' (or use --encoder tfidf)"),
    };

    let mut tsv = format!("decode\t{}\n", cfg.decode.as_str());
    if cfg.decode == DecodeMode::Global {
        let _ = writeln!(tsv, "k\t{}", cfg.k);
        let _ = writeln!(tsv, "padded\t{padded}");
    }
    let _ = writeln!(tsv, "n\t{}", report.n);
    let _ = writeln!(tsv, "mrr\t{}", report.mrr.map_or("NA".to_owned(), |m| m.to_string()));
    let _ = writeln!(tsv, "accuracy\t{}", report.accuracy);

    let mut text = match cfg.decode {
        DecodeMode::Local => "local decoding\n".to_owned(),
        DecodeMode::Global => format!("global decoding, k={}\n", cfg.k),
    };
    let _ = writeln!(text, "pairs     {}", report.n);
    if let Some(m) = report.mrr {
        let _ = writeln!(text, "MRR       {:.1}", 100.0 * m);
    }
    let correct = (report.accuracy * report.n as f64).round() as usize;
    let _ = writeln!(text, "accuracy  {:.1} ({correct}/{})", 100.0 * report.accuracy, report.n);
    if padded {
        text.push_str("warning: pruned candidates admitted no perfect matching; sentinel edges were used\n");
    }
    if let Some(h) = histogram {
        text.push_str("\nproofs by number of statements ranking them first\n");
        text.push_str(&h.render());
    }

    let report_txt = cfg.out_dir.join("eval.txt");
    let report_tsv = cfg.out_dir.join("eval.tsv");
    fs::write(&report_txt, &text)?;
    fs::write(&report_tsv, tsv)?;
    if !cfg.quiet {
        print!("{text}");
    }
    Ok(Outcome { inputs, outputs: vec![report_txt, report_tsv], code: 0 })
}

fn evaluate_with<S: crate::encoders::PairScorer>(
    scorer: &S,
    corpus: &Corpus,
    cfg: &RunConfig,
) -> Result<(MetricReport, Option<AssignHistogram>, bool)> {
    match (cfg.decode, cfg.k) {
        (DecodeMode::Local, _) => {
            let m = score_corpus_blocked(scorer, corpus, cfg.block_rows)?;
            let r = decode_local_depth(&m, 1);
            Ok((MetricReport::local(&r)?, Some(assignment_distribution(&r)), false))
        }
        (DecodeMode::Global, Pruning::All) => {
            let m = score_corpus_blocked(scorer, corpus, cfg.block_rows)?;
            let r = decode_global(&m, Pruning::All)?;
            Ok((MetricReport::global(&r), None, r.padded))
        }
        (DecodeMode::Global, Pruning::TopK(k)) => {
            let statements: Vec<_> = corpus.statements().collect();
            let proofs: Vec<_> = corpus.proofs().collect();
            let r = decode_global_sparse(&build_pruned_matrix(scorer, &statements, &proofs, k)?);
            Ok((MetricReport::global(&r), None, r.padded))
        }
    }
}

fn score_corpus_blocked<S: crate::encoders::PairScorer>(
    scorer: &S,
    corpus: &Corpus,
    block_rows: usize,
) -> Result<crate::assignment::ScoreMatrix> {
    if block_rows == DEFAULT_BLOCK_ROWS {
        return Ok(score_corpus(scorer, corpus)?);
    }
    let statements: Vec<_> = corpus.statements().collect();
    let proofs: Vec<_> = corpus.proofs().collect();
    Ok(crate::decoding::build_score_matrix(scorer, &statements, &proofs, block_rows)?)
}

fn cmd_grid(cfg: &RunConfig) -> Result<Outcome> {
    let paths =
        [required(&cfg.train_path, "train")?, required(&cfg.dev_path, "dev")?, required(&cfg.test_path, "test")?];
    let train = load(paths[0], cfg)?;
    let dev = load(paths[1], cfg)?;
    let test = load(paths[2], cfg)?;
    let levels = cfg.levels.iter().map(|l| cfg.replacement_level(l)).collect::<Result<Vec<_>, _>>()?;
    let grid = GridConfig {
        levels,
        encoder: cfg.encoder,
        train: cfg.train.clone(),
        min_freq: cfg.min_freq,
        protected: protected_set(cfg)?,
        seed: cfg.seed,
    };
    let report = run_grid(&train, &dev, &test, &grid)?;
    let table = cfg.out_dir.join("grid.txt");
    let tsv = cfg.out_dir.join("grid.tsv");
    fs::write(&table, report.render_table())?;
    fs::write(&tsv, report.render_tsv())?;
    if !cfg.quiet {
        print!("{}", report.render_table());
    }
    let mut inputs: Vec<PathBuf> = paths.iter().map(|p| p.to_path_buf()).collect();
    inputs.extend(cfg.protected.clone());
    Ok(Outcome { inputs, outputs: vec![table, tsv], code: 0 })
}
