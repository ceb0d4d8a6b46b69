//! Local and global training objectives and the optimization loop.

mod checkpoint;
mod losses;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assignment::AssignmentError;
use crate::corpus::{Corpus, Token};
use crate::decoding::{build_score_matrix, decode_local_depth, DecodingError, DEFAULT_BLOCK_ROWS};
use crate::encoders::{round_to_f32, EncoderError, Gradients, GroupNorms, ModelState};
use crate::evalharness::{accuracy_local, mrr};
use crate::seed;

pub use checkpoint::{checkpoint_from_bytes, checkpoint_to_bytes, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use losses::{global_loss, local_loss, structured_cost};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch of size {0} is too small")]
    DegenerateBatch(usize),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("non-finite loss or gradient on batch [{}]", .batch.join(", "))]
    NonFiniteLoss { batch: Vec<String> },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Decoding(#[from] DecodingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Local,
    /// Alternates one local step and one global step.
    Hybrid,
}

impl Objective {
    pub fn parse(s: &str) -> Option<Objective> {
        match s {
            "local" => Some(Objective::Local),
            "hybrid" => Some(Objective::Hybrid),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Local => "local",
            Objective::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    /// SGD whose evaluated and returned parameters are the running mean of
    /// the iterates from the second half of the epoch budget onward.
    AveragedSgd,
}

impl Optimizer {
    pub fn parse(s: &str) -> Option<Optimizer> {
        match s {
            "sgd" => Some(Optimizer::Sgd),
            "asgd" => Some(Optimizer::AveragedSgd),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::AveragedSgd => "asgd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Local,
    Global,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Local => "local",
            StepKind::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub objective: Objective,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    /// Per-epoch learning-rate multiplier.
    pub lr_decay: f64,
    /// Epochs between dev evaluations; the last epoch is always evaluated.
    pub eval_every: usize,
    pub seed: u64,
    /// Gradients are rescaled to this global L2 norm when they exceed it.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            objective: Objective::Local,
            batch_size: 60,
            epochs: 10,
            lr: 5e-3,
            optimizer: Optimizer::Sgd,
            lr_decay: 0.996,
            eval_every: 1,
            seed: 0,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::BadConfig(m.to_owned()));
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }

    /// Learning rate in effect during epoch `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let mut lr = self.lr;
        for _ in 0..epoch {
            lr *= self.lr_decay;
        }
        lr
    }
}

/// One optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// 1-based.
    pub epoch: usize,
    /// 1-based, counted across epochs.
    pub step: usize,
    pub kind: StepKind,
    pub loss: f64,
    pub lr: f64,
    /// Gradient norms before clipping.
    pub norms: GroupNorms,
    pub batch: Vec<String>,
}

impl LossReport {
    /// `epoch<TAB>step<TAB>objective<TAB>loss<TAB>lr`
    pub fn log_line(&self) -> String {
        format!("{}\t{}\t{}\t{}\t{}", self.epoch, self.step, self.kind.as_str(), self.loss, self.lr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub epoch: usize,
    pub accuracy: f64,
    pub mrr: f64,
}

/// Optimizer bookkeeping stored alongside checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub epochs_done: u64,
    pub steps_done: u64,
    /// Learning rate for the next epoch.
    pub lr: f64,
    pub average_count: u64,
    /// Running parameter mean, in [`ModelState::tensors`] order.
    pub average: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best dev accuracy (averaged for AveragedSgd).
    pub best: ModelState,
    pub best_epoch: usize,
    pub history: Vec<LossReport>,
    pub evals: Vec<EvalRecord>,
    /// Raw iterate after the last step.
    pub last: ModelState,
    pub optimizer: OptimizerState,
}

impl TrainOutcome {
    pub fn history_log(&self) -> String {
        self.history.iter().map(|r| r.log_line() + "\n").collect()
    }

    /// Mean loss per epoch, in epoch order.
    pub fn epoch_losses(&self) -> Vec<f64> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for r in &self.history {
            if out.len() < r.epoch {
                out.resize(r.epoch, (0.0, 0));
            }
            out[r.epoch - 1].0 += r.loss;
            out[r.epoch - 1].1 += 1;
        }
        out.into_iter().map(|(s, c)| s / c.max(1) as f64).collect()
    }
}

/// Progress callbacks; the default ignores everything.
pub trait TrainObserver {
    fn on_eval(&mut self, _record: &EvalRecord) {}
}

impl TrainObserver for () {}

/// Trains `state` on `train` and selects the checkpoint with the best local
/// accuracy on `dev`.
pub fn train(
    train_corpus: &Corpus,
    dev: &Corpus,
    state: ModelState,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    train_observed(train_corpus, dev, state, config, &mut ())
}

pub fn train_observed(
    train_corpus: &Corpus,
    dev: &Corpus,
    mut state: ModelState,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_corpus.len() < 2 || dev.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let n = train_corpus.len();
    let b = config.batch_size.min(n);
    let steps_per_epoch = n.div_ceil(b);
    let average_from = config.epochs / 2;
    let pairs = train_corpus.pairs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, "batches"));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut lr = config.lr;
    let mut step = 0usize;
    let mut history = Vec::with_capacity(config.epochs * steps_per_epoch);
    let mut evals = Vec::new();
    let mut best: Option<(f64, usize, ModelState)> = None;
    let mut average: Option<Vec<Vec<f64>>> = None;
    let mut average_count = 0u64;

    for epoch in 0..config.epochs {
        perm.shuffle(&mut rng);
        for t in 0..steps_per_epoch {
            let mut idx: Vec<usize> = perm[t * b..((t + 1) * b).min(n)].to_vec();
            for &p in &perm {
                if idx.len() >= 2 {
                    break;
                }
                if !idx.contains(&p) {
                    idx.push(p);
                }
            }
            let kind = match config.objective {
                Objective::Hybrid if step % 2 == 1 => StepKind::Global,
                _ => StepKind::Local,
            };
            let statements: Vec<&[Token]> = idx.iter().map(|&i| pairs[i].statement.as_slice()).collect();
            let proofs: Vec<&[Token]> = idx.iter().map(|&i| pairs[i].proof.as_slice()).collect();
            let batch_ids = || idx.iter().map(|&i| pairs[i].pair_id.clone()).collect::<Vec<_>>();

            let fwd = state.forward_batch(&statements, &proofs)?;
            let (loss, d_scores) = match kind {
                StepKind::Local => local_loss(&fwd.scores)?,
                StepKind::Global => {
                    let (l, g, _) = global_loss(&fwd.scores)?;
                    (l, g)
                }
            };
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { batch: batch_ids() });
            }
            let mut grads = state.backward(&fwd, &d_scores)?;
            if !grads.is_finite() {
                return Err(TrainError::NonFiniteLoss { batch: batch_ids() });
            }
            let norms = grads.norms();
            let total = norms.total();
            if total > config.clip_norm {
                grads.scale(config.clip_norm / total);
            }
            sgd_step(&mut state, &grads, lr);
            step += 1;

            if config.optimizer == Optimizer::AveragedSgd && epoch >= average_from {
                average_count += 1;
                let avg = average.get_or_insert_with(|| state.tensors().iter().map(|t| t.to_vec()).collect());
                if average_count > 1 {
                    let w = 1.0 / average_count as f64;
                    for (a, t) in avg.iter_mut().zip(state.tensors()) {
                        for (x, y) in a.iter_mut().zip(t) {
                            *x += (y - *x) * w;
                        }
                    }
                }
            }
            history.push(LossReport { epoch: epoch + 1, step, kind, loss, lr, norms, batch: batch_ids() });
        }
        lr *= config.lr_decay;

        let done = epoch + 1;
        if done % config.eval_every == 0 || done == config.epochs {
            let candidate = match &average {
                Some(avg) => with_parameters(&state, avg),
                None => state.clone(),
            };
            let (accuracy, mrr_value) = evaluate(&candidate, dev)?;
            let record = EvalRecord { epoch: done, accuracy, mrr: mrr_value };
            observer.on_eval(&record);
            evals.push(record);
            if best.as_ref().is_none_or(|(a, _, _)| accuracy > *a) {
                best = Some((accuracy, done, candidate));
            }
        }
    }

    let (_, best_epoch, best_state) = best.expect("last epoch is always evaluated");
    Ok(TrainOutcome {
        best: best_state,
        best_epoch,
        history,
        evals,
        last: state,
        optimizer: OptimizerState {
            epochs_done: config.epochs as u64,
            steps_done: step as u64,
            lr,
            average_count,
            average,
        },
    })
}

/// Plain SGD update; parameters stay at f32 precision.
fn sgd_step(state: &mut ModelState, g: &Gradients, lr: f64) {
    let update = |x: &mut f64, gx: f64| *x = round_to_f32(*x - lr * gx);
    let emb = state.embeddings_mut();
    for (&row, gr) in &g.embeddings {
        for (x, &gx) in emb.row_mut(row).iter_mut().zip(gr) {
            update(x, gx);
        }
    }
    for (layer, gl) in state.layers_mut().iter_mut().zip(&g.layers) {
        for (t, gt) in layer.tensors_mut().zip(gl.tensors()) {
            for (x, &gx) in t.data_mut().iter_mut().zip(gt.data()) {
                update(x, gx);
            }
        }
    }
    let head = state.head_mut();
    for (x, &gx) in head.w.data_mut().iter_mut().zip(g.w.data()) {
        update(x, gx);
    }
    update(&mut head.b, g.b);
}

/// Copy of `state` with its parameters replaced (rounded to f32).
fn with_parameters(state: &ModelState, params: &[Vec<f64>]) -> ModelState {
    let mut out = state.clone();
    for (t, p) in out.tensors_mut().into_iter().zip(params) {
        for (x, &y) in t.iter_mut().zip(p) {
            *x = round_to_f32(y);
        }
    }
    out
}

/// Local dev accuracy and MRR.
fn evaluate(state: &ModelState, dev: &Corpus) -> Result<(f64, f64), TrainError> {
    let statements: Vec<&[Token]> = dev.statements().collect();
    let proofs: Vec<&[Token]> = dev.proofs().collect();
    let m = build_score_matrix(state, &statements, &proofs, DEFAULT_BLOCK_ROWS)?;
    let r = decode_local_depth(&m, 1);
    Ok((accuracy_local(&r), mrr(&r.gold_rank).unwrap_or(0.0)))
}
