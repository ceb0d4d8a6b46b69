use crate::corpus::Corpus;
use crate::encoders::{build_vocab, DfTable, EncoderConfig, EncoderKind, ModelState, TfIdfScorer};
use crate::seed;
use crate::symbols::{replace_corpus, ProtectedSet, ReplacementLevel};
use crate::training::{train, TrainConfig};

use super::metrics::{evaluate_local, MetricReport};
use super::EvalError;

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub levels: Vec<ReplacementLevel>,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub min_freq: u32,
    pub protected: ProtectedSet,
    /// Seed for the replacement draws; each (split, level) gets its own sub-seed.
    pub seed: u64,
}

/// Rows are training (source) levels, columns test (target) levels.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<MetricReport>>,
}

pub fn level_label(level: &ReplacementLevel) -> String {
    match level {
        ReplacementLevel::Partial(a) => format!("partial-{a}"),
        other => other.name().to_owned(),
    }
}

impl GridReport {
    /// Aligned table of `MRR / accuracy` percentages, one decimal.
    pub fn render_table(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(13) + 2;
        let mut s = format!("{:<width$}", "train \\ test");
        for l in &self.labels {
            s.push_str(&format!("{l:>width$}"));
        }
        s.push('\n');
        for (label, row) in self.labels.iter().zip(&self.cells) {
            s.push_str(&format!("{label:<width$}"));
            for c in row {
                let mrr = c.mrr.map_or("-".to_owned(), |m| format!("{:.1}", 100.0 * m));
                s.push_str(&format!("{:>width$}", format!("{mrr} / {:.1}", 100.0 * c.accuracy)));
            }
            s.push('\n');
        }
        s
    }

    /// `source<TAB>target<TAB>mrr<TAB>accuracy<TAB>n` per cell.
    pub fn render_tsv(&self) -> String {
        let mut s = String::new();
        for (src, row) in self.labels.iter().zip(&self.cells) {
            for (tgt, c) in self.labels.iter().zip(row) {
                let mrr = c.mrr.map_or("NA".to_owned(), |m| m.to_string());
                s.push_str(&format!("{src}\t{tgt}\t{mrr}\t{}\t{}\n", c.accuracy, c.n));
            }
        }
        s
    }
}

fn replaced(corpus: &Corpus, level: ReplacementLevel, cfg: &GridConfig, split: &str) -> Result<Corpus, EvalError> {
    let sub = seed::derive(cfg.seed, &format!("{split}/{}", level_label(&level)));
    Ok(replace_corpus(corpus, level, &cfg.protected, sub)?)
}

/// Trains one model per source level (on the source-replaced train split,
/// selected on the source-replaced dev split) and evaluates it locally on
/// every target-replaced test split.
pub fn run_grid(train_split: &Corpus, dev: &Corpus, test: &Corpus, cfg: &GridConfig) -> Result<GridReport, EvalError> {
    let targets: Vec<Corpus> = cfg.levels.iter().map(|&l| replaced(test, l, cfg, "test")).collect::<Result<_, _>>()?;
    let mut cells = Vec::with_capacity(cfg.levels.len());
    for &source in &cfg.levels {
        let row = if cfg.encoder.kind == EncoderKind::TfIdf {
            // nothing to train: statistics come from each evaluation corpus
            targets
                .iter()
                .map(|t| evaluate_local(&TfIdfScorer { stats: DfTable::from_corpus(t) }, t))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let train_src = replaced(train_split, source, cfg, "train")?;
            let dev_src = replaced(dev, source, cfg, "dev")?;
            let vocab = build_vocab(&train_src, cfg.min_freq)?;
            let state = ModelState::init(vocab, cfg.encoder, cfg.train.seed)?;
            let model = train(&train_src, &dev_src, state, &cfg.train)?.best;
            targets.iter().map(|t| evaluate_local(&model, t)).collect::<Result<Vec<_>, _>>()?
        };
        cells.push(row);
    }
    Ok(GridReport { labels: cfg.levels.iter().map(level_label).collect(), cells })
}
