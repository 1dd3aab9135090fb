//! Gradients, optimizers, the training loop and ranking metrics.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{instance_seed, ConstraintPolicy, LinkDataset, LinkInstance};
use crate::error::{NetError, Result};
use crate::model::{add_assign, SpectralModel};

impl SpectralModel {
    pub fn forward(&self, inst: &LinkInstance) -> Result<f64> {
        self.forward_parts(&inst.basis.vectors, &inst.basis.values, &inst.x0)
    }

    pub fn predict(&self, instances: &[LinkInstance]) -> Result<Vec<f64>> {
        instances.par_iter().map(|i| self.forward(i)).collect()
    }
}

/// Mean loss and its exact gradient over `batch`, with the eigenbases held
/// constant. Per-instance terms are computed in parallel and summed in batch order.
pub fn gradients(model: &SpectralModel, batch: &[&LinkInstance]) -> Result<(f64, SpectralModel)> {
    if batch.is_empty() {
        return Err(NetError::InvalidArgument("empty batch".into()));
    }
    let parts: Vec<(f64, SpectralModel)> = batch
        .par_iter()
        .map(|inst| {
            let mut g = model.zeros_like();
            let loss = model.backward_into(&inst.basis.vectors, &inst.basis.values, &inst.x0, inst.label, &mut g)?;
            Ok((loss, g))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut grad = model.zeros_like();
    for (loss, g) in &parts {
        total += loss;
        add_assign(&mut grad, g);
    }
    let scale = 1.0 / batch.len() as f64;
    grad.tensors_mut().into_iter().for_each(|(_, t)| *t *= scale);
    Ok((total * scale, grad))
}

pub fn mean_loss(model: &SpectralModel, instances: &[LinkInstance]) -> Result<f64> {
    let probs = model.predict(instances)?;
    Ok(probs
        .iter()
        .zip(instances)
        .map(|(&p, i)| crate::model::bce_loss(p, i.label))
        .sum::<f64>()
        / instances.len().max(1) as f64)
}

fn split_labels(scores: &[f64], labels: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(NetError::InvalidArgument("scores and labels differ in length".into()));
    }
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1.0)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y != 1.0)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(NetError::UndefinedMetric(format!(
            "{} positives and {} negatives",
            pos.len(),
            neg.len()
        )));
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative; ties count ½.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, mut neg) = split_labels(scores, labels)?;
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for p in &pos {
        let below = neg.partition_point(|n| n < p);
        let not_above = neg.partition_point(|n| n <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Fraction of positives scoring strictly above the `k`-th best negative
/// (1 when there are fewer than `k` negatives).
pub fn hits_at_k(scores: &[f64], labels: &[f64], k: usize) -> Result<f64> {
    let (pos, mut neg) = split_labels(scores, labels)?;
    if k == 0 {
        return Err(NetError::InvalidArgument("k must be positive".into()));
    }
    if neg.len() < k {
        return Ok(1.0);
    }
    neg.sort_by(|a, b| b.total_cmp(a));
    let threshold = neg[k - 1];
    Ok(pos.iter().filter(|&&p| p > threshold).count() as f64 / pos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Auc,
    HitsAtK(usize),
}

pub fn evaluate(model: &SpectralModel, instances: &[LinkInstance], metric: Metric) -> Result<f64> {
    let scores = model.predict(instances)?;
    let labels: Vec<f64> = instances.iter().map(|i| i.label).collect();
    match metric {
        Metric::Auc => auc(&scores, &labels),
        Metric::HitsAtK(k) => hits_at_k(&scores, &labels, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            _ => Err(NetError::InvalidArgument(format!("unknown optimizer {s:?}"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        Self {
            kind,
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
                    self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub kappa: usize,
    pub seed: u64,
    pub policy: ConstraintPolicy,
    pub optimizer: OptimizerKind,
    /// Minibatch size; 0 means full batch.
    pub batch_size: usize,
    pub hits_k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            epochs: 20,
            kappa: 10,
            seed: 0,
            policy: ConstraintPolicy::Neumann,
            optimizer: OptimizerKind::Sgd,
            batch_size: 0,
            hits_k: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(NetError::InvalidArgument(format!(
                "learning rate {} must be finite and nonnegative",
                self.lr
            )));
        }
        if self.epochs == 0 || self.kappa == 0 || self.hits_k == 0 {
            return Err(NetError::InvalidArgument(
                "epochs, kappa and hits_k must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `key=value` lines, one per field.
    pub fn to_header(&self) -> String {
        format!(
            "lr={}\nepochs={}\nkappa={}\nseed={}\npolicy={}\noptimizer={}\nbatch_size={}\nhits_k={}\n",
            self.lr, self.epochs, self.kappa, self.seed, self.policy, self.optimizer, self.batch_size, self.hits_k
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch, each batch taken before its update.
    pub loss: f64,
    pub auc: f64,
    pub hits_at_k: f64,
}

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,loss,auc,hits_at_k\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.10},{:.10},{:.10}", r.epoch, r.loss, r.auc, r.hits_at_k);
    }
    out
}

/// Trains in place. Under the vertex-deleted policy the training eigenbases
/// are recomputed at the start of every epoch from an epoch-derived seed.
pub fn train(model: &mut SpectralModel, data: &mut LinkDataset, cfg: &TrainConfig) -> Result<Vec<EpochMetrics>> {
    cfg.validate()?;
    let labels: Vec<f64> = data.train.iter().map(|i| i.label).collect();
    if !labels.contains(&1.0) || !labels.iter().any(|&y| y != 1.0) {
        return Err(NetError::UndefinedMetric("training set needs both labels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, model.param_count());
    let mut params = model.to_flat();
    let batch = if cfg.batch_size == 0 {
        data.train.len()
    } else {
        cfg.batch_size
    };
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        if cfg.policy.is_stochastic() && epoch > 1 {
            data.train.par_iter_mut().enumerate().try_for_each(|(i, inst)| {
                inst.resample(cfg.policy, cfg.kappa, instance_seed(cfg.seed, epoch as u64, i))
            })?;
        }
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            let refs: Vec<&LinkInstance> = chunk.iter().map(|&i| &data.train[i]).collect();
            let (loss, grad) = gradients(model, &refs)?;
            if !loss.is_finite() {
                return Err(NetError::NonFinite {
                    epoch,
                    detail: format!("batch loss {loss}"),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            opt.step(&mut params, &grad.to_flat());
            model.set_flat(&params)?;
        }
        let scores = model.predict(&data.test)?;
        let test_labels: Vec<f64> = data.test.iter().map(|i| i.label).collect();
        metrics.push(EpochMetrics {
            epoch,
            loss: loss_sum / data.train.len() as f64,
            auc: auc(&scores, &test_labels)?,
            hits_at_k: hits_at_k(&scores, &test_labels, cfg.hits_k)?,
        });
    }
    Ok(metrics)
}
