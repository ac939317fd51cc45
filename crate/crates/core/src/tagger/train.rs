//! Two-stage training: silver corpus with negative sampling, then gold corpus.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::crf::{loss_and_gradient, CrfModel, EncodedSentence};
use super::features::{FeatureExtractor, FEATURE_TEMPLATE_ID};
use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Linear,
    Exponential,
}

impl FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(DecayKind::Linear),
            "exponential" => Ok(DecayKind::Exponential),
            other => Err(Error::Config(format!("unknown decay kind `{other}`"))),
        }
    }
}

impl DecayKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayKind::Linear => "linear",
            DecayKind::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub lr_decay: (DecayKind, f64),
    pub feature_dropout: f64,
    pub positive_class_weight_boost: f64,
    pub epochs: usize,
    pub seed: u64,
    pub negative_sampling_ratio: f64,
}

impl TrainingConfig {
    /// Silver-corpus stage defaults.
    pub fn ssc_default() -> Self {
        TrainingConfig {
            learning_rate: 0.002,
            lr_decay: (DecayKind::Linear, 0.0001),
            feature_dropout: 0.5,
            positive_class_weight_boost: 0.1,
            epochs: 2,
            seed: 42,
            negative_sampling_ratio: 1.0,
        }
    }

    /// Gold-corpus stage defaults.
    pub fn gsc_default() -> Self {
        TrainingConfig {
            learning_rate: 0.0015,
            lr_decay: (DecayKind::Exponential, 0.0007),
            feature_dropout: 0.4,
            positive_class_weight_boost: 0.1,
            epochs: 22,
            seed: 42,
            negative_sampling_ratio: 1.0,
        }
    }

    /// Learning rate for a zero-based epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let (kind, rate) = self.lr_decay;
        let e = epoch as f64;
        match kind {
            DecayKind::Linear => self.learning_rate * (1.0 - rate * e).max(0.0),
            DecayKind::Exponential => self.learning_rate * (-rate * e).exp(),
        }
    }

    /// `allow_zero_epochs` admits the identity fine-tune.
    pub fn validate(&self, allow_zero_epochs: bool) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.feature_dropout) {
            return fail("feature_dropout must be in [0, 1)");
        }
        if self.epochs == 0 && !allow_zero_epochs {
            return fail("epochs must be >= 1");
        }
        if !(self.lr_decay.1 >= 0.0 && self.lr_decay.1.is_finite()) {
            return fail("decay rate must be >= 0");
        }
        if !(self.positive_class_weight_boost >= 0.0) {
            return fail("positive_class_weight_boost must be >= 0");
        }
        if !(self.negative_sampling_ratio >= 0.0 && self.negative_sampling_ratio.is_finite()) {
            return fail("negative_sampling_ratio must be >= 0");
        }
        Ok(())
    }
}

/// Draws negatives without replacement, reshuffling once the pool is used up.
#[derive(Debug)]
pub struct NegativeSampler {
    pool: Vec<usize>,
    queue: Vec<usize>,
}

impl NegativeSampler {
    pub fn new(negatives: Vec<usize>) -> Self {
        NegativeSampler {
            pool: negatives,
            queue: Vec::new(),
        }
    }

    pub fn draw(&mut self, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        if self.pool.is_empty() {
            return out;
        }
        while out.len() < k {
            if self.queue.is_empty() {
                self.queue = self.pool.clone();
                self.queue.shuffle(rng);
            }
            out.push(self.queue.pop().expect("non-empty queue"));
        }
        out
    }
}

/// Per-epoch sentence indices for the silver stage: every positive plus
/// `ratio × positives` sampled negatives, shuffled.
pub fn ssc_epoch_plan(corpus: &[TaggedSentence], cfg: &TrainingConfig) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..corpus.len()).partition(|&i| corpus[i].is_positive());
    let k = (cfg.negative_sampling_ratio * pos.len() as f64).round() as usize;
    let mut sampler = NegativeSampler::new(neg);
    (0..cfg.epochs)
        .map(|_| {
            let mut epoch = pos.clone();
            epoch.extend(sampler.draw(k, &mut rng));
            epoch.shuffle(&mut rng);
            epoch
        })
        .collect()
}

struct RmsProp {
    cache: Vec<f64>,
    rho: f64,
    eps: f64,
}

impl RmsProp {
    fn new(n: usize) -> Self {
        RmsProp {
            cache: vec![0.0; n],
            rho: 0.9,
            eps: 1e-8,
        }
    }

    fn step(&mut self, weights: &mut [f64], grad: &[(usize, f64)], lr: f64) {
        for &(i, g) in grad {
            self.cache[i] = self.rho * self.cache[i] + (1.0 - self.rho) * g * g;
            weights[i] -= lr * g / (self.cache[i].sqrt() + self.eps);
        }
    }
}

/// Inverted feature dropout: each activation is zeroed with probability `p`
/// and the survivors scaled by `1 / (1 - p)`.
fn dropout(x: &EncodedSentence, p: f64, rng: &mut ChaCha8Rng) -> EncodedSentence {
    if p == 0.0 {
        return x.clone();
    }
    let keep = 1.0 / (1.0 - p);
    x.iter()
        .map(|tok| {
            tok.iter()
                .filter(|_| rng.random::<f64>() >= p)
                .map(|&(f, a)| (f, a * keep))
                .collect()
        })
        .collect()
}

/// Summary of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub stage: &'static str,
    pub epoch: usize,
    pub sentences: usize,
    pub mean_loss: f64,
    pub learning_rate: f64,
}

/// Runs one stage of SGD with RMSprop scaling over the given epoch plan.
pub fn train_stage(
    model: &mut CrfModel,
    data: &[(EncodedSentence, &TaggedSentence)],
    plan: &[Vec<usize>],
    cfg: &TrainingConfig,
    stage: &'static str,
) -> Result<Vec<EpochStats>> {
    let mut opt = RmsProp::new(model.weights.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut stats = Vec::new();
    for (epoch, order) in plan.iter().enumerate() {
        let lr = cfg.learning_rate_at(epoch);
        let mut total = 0.0;
        for &i in order {
            let (x, ts) = &data[i];
            let x = dropout(x, cfg.feature_dropout, &mut rng);
            let (loss, grad) =
                loss_and_gradient(model, &x, &ts.tags, cfg.positive_class_weight_boost)?;
            total += loss;
            opt.step(&mut model.weights, &grad, lr);
        }
        if !model.is_finite() {
            return Err(Error::Numerical("CRF weights"));
        }
        stats.push(EpochStats {
            stage,
            epoch,
            sentences: order.len(),
            mean_loss: if order.is_empty() {
                0.0
            } else {
                total / order.len() as f64
            },
            learning_rate: lr,
        });
    }
    Ok(stats)
}

/// Feature vocabulary of a set of corpora.
pub fn vocabulary<'a, I>(corpora: I, fx: &FeatureExtractor) -> Vec<String>
where
    I: IntoIterator<Item = &'a [TaggedSentence]>,
{
    let mut vocab = BTreeSet::new();
    for corpus in corpora {
        let feats: Vec<Vec<Vec<String>>> = corpus
            .par_iter()
            .map(|ts| fx.sentence_features(&ts.sentence))
            .collect();
        for s in feats {
            for tok in s {
                vocab.extend(tok);
            }
        }
    }
    vocab.into_iter().collect()
}

pub fn encode_corpus<'a>(
    model: &CrfModel,
    corpus: &'a [TaggedSentence],
    fx: &FeatureExtractor,
) -> Vec<(EncodedSentence, &'a TaggedSentence)> {
    corpus
        .par_iter()
        .map(|ts| (model.encode(&fx.sentence_features(&ts.sentence)), ts))
        .collect()
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: CrfModel,
    pub epochs: Vec<EpochStats>,
}

/// Pretrains on the silver corpus, then fine-tunes on the gold corpus.
///
/// An empty silver corpus skips the first stage; an empty gold corpus is an
/// error. `gsc_cfg.epochs == 0` returns the first-stage model.
pub fn train(
    ssc: &[TaggedSentence],
    gsc: &[TaggedSentence],
    ssc_cfg: &TrainingConfig,
    gsc_cfg: &TrainingConfig,
    fx: &FeatureExtractor,
) -> Result<TrainOutput> {
    if gsc.is_empty() {
        return Err(Error::EmptyGoldCorpus);
    }
    ssc_cfg.validate(true)?;
    gsc_cfg.validate(true)?;
    let mut model = CrfModel::new(FEATURE_TEMPLATE_ID, vocabulary([ssc, gsc], fx));
    let mut epochs = Vec::new();

    if !ssc.is_empty() {
        let data = encode_corpus(&model, ssc, fx);
        let plan = ssc_epoch_plan(ssc, ssc_cfg);
        epochs.extend(train_stage(&mut model, &data, &plan, ssc_cfg, "ssc")?);
    }

    let data = encode_corpus(&model, gsc, fx);
    let mut rng = ChaCha8Rng::seed_from_u64(gsc_cfg.seed);
    let plan: Vec<Vec<usize>> = (0..gsc_cfg.epochs)
        .map(|_| {
            let mut order: Vec<usize> = (0..gsc.len()).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    epochs.extend(train_stage(&mut model, &data, &plan, gsc_cfg, "gsc")?);
    Ok(TrainOutput { model, epochs })
}
