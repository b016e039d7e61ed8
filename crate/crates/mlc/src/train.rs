//! Episode-batched training with AdamW and a warmup-then-decay schedule.

use gridcomp_core::episodes::{Episode, Setup};
use gridcomp_core::metrics::{aggregate, EvalReport, FormatPolicy, PairScore, PredictionRecord, Scored};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::Float;
use crate::model::{target_weights, Model};
use crate::tape::{Grads, Params};
use crate::vocab::{apply_noise, encode_source, encode_target, Item, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Episodes per batch.
    pub batch_episodes: usize,
    pub peak_lr: f64,
    /// Learning rate at the first step; reaches `peak_lr` at the end of epoch 1.
    pub warmup_start_lr: f64,
    /// Learning rate at the last step.
    pub final_lr: f64,
    pub weight_decay: f64,
    /// Batches per optimizer step.
    pub grad_accum: usize,
    /// Per-cell recoloring probability for query targets.
    pub noise: f64,
    /// Loss weight of all-background target patches.
    pub blank_weight: f64,
    pub copy_task: bool,
    /// Items per forward pass; only bounds memory.
    pub micro_batch: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_episodes: 200,
            peak_lr: 0.01,
            warmup_start_lr: 1e-4,
            final_lr: 5e-4,
            weight_decay: 0.01,
            grad_accum: 2,
            noise: 0.001,
            blank_weight: 0.2,
            copy_task: true,
            micro_batch: 32,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn for_setup(setup: Setup) -> Self {
        let epochs = match setup {
            Setup::ThreeShot => 200,
            Setup::Systematicity => 300,
        };
        TrainConfig { epochs, ..TrainConfig::default() }
    }

    /// Optimizer steps in one epoch over `n_episodes`.
    pub fn steps_per_epoch(&self, n_episodes: usize) -> usize {
        n_episodes.div_ceil(self.batch_episodes).div_ceil(self.grad_accum).max(1)
    }
}

/// Learning rate for optimizer step `step` (0-based). Linear warmup from
/// `warmup_start_lr` to `peak_lr` over the first epoch, then linear decay so
/// the last step uses `final_lr`.
pub fn learning_rate(cfg: &TrainConfig, step: usize, steps_per_epoch: usize) -> f64 {
    let total = cfg.epochs * steps_per_epoch;
    if step < steps_per_epoch {
        let frac = (step + 1) as f64 / steps_per_epoch as f64;
        return cfg.warmup_start_lr + (cfg.peak_lr - cfg.warmup_start_lr) * frac;
    }
    let span = total.saturating_sub(steps_per_epoch);
    if span == 0 {
        return cfg.final_lr;
    }
    let frac = ((step + 1 - steps_per_epoch) as f64 / span as f64).min(1.0);
    cfg.peak_lr + (cfg.final_lr - cfg.peak_lr) * frac
}

/// AdamW with decoupled weight decay on every parameter.
#[derive(Clone, Debug)]
pub struct AdamW<T> {
    pub m: Grads<T>,
    pub v: Grads<T>,
    pub t: u64,
}

impl<T: Float> AdamW<T> {
    pub fn new(params: &Params<T>) -> Self {
        AdamW { m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, params: &mut Params<T>, grads: &Grads<T>, lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::of(1.0 - cfg.beta1.powi(self.t as i32));
        let c2 = T::of(1.0 - cfg.beta2.powi(self.t as i32));
        let (lr_t, eps) = (T::of(lr), T::of(cfg.adam_eps));
        let decay = T::one() - T::of(lr * cfg.weight_decay);
        for (i, p) in params.list.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[i].data, &mut self.v[i].data, &grads[i].data);
            for (j, w) in p.value.data.iter_mut().enumerate() {
                m[j] = b1 * m[j] + (T::one() - b1) * g[j];
                v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                *w = *w * decay - lr_t * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss {loss} at epoch {epoch}, step {step} (episodes {episodes:?})")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64, episodes: Vec<String> },
    #[error("no training episodes")]
    EmptyDataset,
    #[error("episodes mix study-set sizes; batches need equal source lengths")]
    MixedSetups,
}

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub lr: f64,
    pub val_exact: Option<f64>,
    pub val_color: Option<f64>,
    pub val_shape: Option<f64>,
}

/// Training items of one episode: every query with a noised target, and
/// with the copy task every study pair.
pub fn training_items<R: rand::Rng + ?Sized>(ep: &Episode, cfg: &TrainConfig, rng: &mut R) -> Vec<Item> {
    let mut items: Vec<Item> = ep
        .queries
        .iter()
        .map(|q| Item {
            source: encode_source(&ep.study, &q.input),
            target: encode_target(&apply_noise(&q.output, rng, cfg.noise)),
        })
        .collect();
    if cfg.copy_task {
        items.extend(
            ep.study
                .iter()
                .map(|s| Item { source: encode_source(&ep.study, &s.input), target: encode_target(&s.output) }),
        );
    }
    items
}

pub struct Trainer<T> {
    pub model: Model<T>,
    pub cfg: TrainConfig,
    pub opt: AdamW<T>,
    pub rng: ChaCha8Rng,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub step: usize,
    pub log: Vec<EpochLog>,
}

impl<T: Float> Trainer<T> {
    pub fn new(model: Model<T>, cfg: TrainConfig) -> Self {
        let opt = AdamW::new(&model.params);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Trainer { model, cfg, opt, rng, epoch: 0, step: 0, log: Vec::new() }
    }

    /// One pass over `train`; returns the mean batch loss.
    pub fn run_epoch(&mut self, train: &[Episode]) -> Result<f64, TrainError> {
        if train.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        if train.iter().any(|e| e.study.len() != train[0].study.len()) {
            return Err(TrainError::MixedSetups);
        }
        let spe = self.cfg.steps_per_epoch(train.len());
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let batches: Vec<&[usize]> = order.chunks(self.cfg.batch_episodes).collect();
        let mut grads = self.model.params.zeros_like();
        let mut total = 0.0;
        for group in batches.chunks(self.cfg.grad_accum) {
            for batch in group {
                let mut items = Vec::new();
                for &i in batch.iter() {
                    items.extend(training_items(&train[i], &self.cfg, &mut self.rng));
                }
                let loss = self.accumulate(&items, group.len(), &mut grads);
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch: self.epoch + 1,
                        step: self.step,
                        loss,
                        episodes: batch.iter().map(|&i| train[i].id.clone()).collect(),
                    });
                }
                total += loss;
            }
            let lr = learning_rate(&self.cfg, self.step, spe);
            self.opt.step(&mut self.model.params, &grads, lr, &self.cfg);
            self.step += 1;
            for g in grads.iter_mut() {
                g.data.fill(T::zero());
            }
        }
        self.epoch += 1;
        Ok(total / batches.len() as f64)
    }

    /// Adds the gradient of `loss / accum` for one batch and returns its loss.
    fn accumulate(&self, items: &[Item], accum: usize, grads: &mut Grads<T>) -> f64 {
        let bw = self.cfg.blank_weight;
        let weight = |chunk: &[Item]| -> f64 {
            chunk.iter().map(|it| target_weights::<T>(&it.target[1..], bw).iter().map(|w| w.f64()).sum::<f64>()).sum()
        };
        let total_w = weight(items);
        let mut loss = 0.0;
        for chunk in items.chunks(self.cfg.micro_batch.max(1)) {
            let share = weight(chunk) / total_w;
            let refs: Vec<&Item> = chunk.iter().collect();
            let l = self.model.loss_and_grads(&refs, bw, T::of(share / accum as f64), grads);
            loss += share * l.f64();
        }
        loss
    }

    /// Trains until `cfg.epochs` epochs are complete, evaluating on `val`
    /// after each epoch. `on_epoch` sees every log line, e.g. to checkpoint.
    pub fn train<F>(&mut self, train: &[Episode], val: &[Episode], mut on_epoch: F) -> Result<(), TrainError>
    where
        F: FnMut(&Trainer<T>, &EpochLog),
    {
        let spe = self.cfg.steps_per_epoch(train.len());
        while self.epoch < self.cfg.epochs {
            let train_loss = self.run_epoch(train)?;
            let lr = learning_rate(&self.cfg, self.step.saturating_sub(1), spe);
            let report = (!val.is_empty()).then(|| evaluate(&self.model, val).0);
            let line = EpochLog {
                epoch: self.epoch,
                train_loss,
                lr,
                val_exact: report.as_ref().and_then(|r| r.exact_match),
                val_color: report.as_ref().and_then(|r| r.color_acc),
                val_shape: report.as_ref().and_then(|r| r.shape_acc),
            };
            self.log.push(line.clone());
            on_epoch(self, &line);
        }
        Ok(())
    }
}

/// Greedy predictions for every query; decodes that stop early are format
/// failures.
pub fn predict<T: Float>(model: &Model<T>, episodes: &[Episode]) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for ep in episodes {
        let sources: Vec<Source> = ep.queries.iter().map(|q| encode_source(&ep.study, &q.input)).collect();
        let refs: Vec<&Source> = sources.iter().collect();
        for (qi, d) in model.greedy_decode(&refs).into_iter().enumerate() {
            out.push(PredictionRecord { episode_id: ep.id.clone(), query_index: qi, prediction: d.grid, raw: None });
        }
    }
    out
}

/// Exact, color and shape accuracy of greedy predictions.
pub fn evaluate<T: Float>(model: &Model<T>, episodes: &[Episode]) -> (EvalReport, Vec<PredictionRecord>) {
    let preds = predict(model, episodes);
    let scored: Vec<Scored> = preds
        .iter()
        .zip(episodes.iter().flat_map(|e| e.queries.iter()))
        .map(|(p, q)| Scored { episode_id: p.episode_id.clone(), score: p.prediction.as_ref().map(|g| PairScore::of(g, &q.output)) })
        .collect();
    (aggregate(&scored, FormatPolicy::CountAsZero), preds)
}
