//! Linear-chain CRF over the labels O, B-software, I-software.
//!
//! Parameters live in one flat vector: 3 start weights, 3×3 transition
//! weights (from, to), then 3 weights per feature. Training uses the
//! unconstrained lattice; decoding forbids O→I and start→I.

use std::collections::HashMap;

use crate::corpus::BioTag;
use crate::error::{Error, Result};

pub const N_LABELS: usize = 3;
const START: usize = 0;
const TRANS: usize = START + N_LABELS;
const FEATS: usize = TRANS + N_LABELS * N_LABELS;

/// Per-token active features as `(feature id, activation)`.
pub type EncodedSentence = Vec<Vec<(u32, f64)>>;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub template: String,
    features: Vec<String>,
    index: HashMap<String, u32>,
    pub weights: Vec<f64>,
}

impl CrfModel {
    /// Zero model over the given feature names (sorted and deduplicated).
    pub fn new(template: &str, mut features: Vec<String>) -> Self {
        features.sort();
        features.dedup();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let weights = vec![0.0; FEATS + N_LABELS * features.len()];
        CrfModel {
            template: template.to_string(),
            features,
            index,
            weights,
        }
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn start_index(y: usize) -> usize {
        START + y
    }

    pub fn trans_index(from: usize, to: usize) -> usize {
        TRANS + from * N_LABELS + to
    }

    pub fn feat_index(f: u32, y: usize) -> usize {
        FEATS + f as usize * N_LABELS + y
    }

    pub fn start(&self, y: usize) -> f64 {
        self.weights[Self::start_index(y)]
    }

    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.weights[Self::trans_index(from, to)]
    }

    pub fn feat(&self, f: u32, y: usize) -> f64 {
        self.weights[Self::feat_index(f, y)]
    }

    pub fn set_feature_weight(&mut self, name: &str, tag: BioTag, w: f64) -> bool {
        match self.feature_id(name) {
            Some(f) => {
                self.weights[Self::feat_index(f, tag.index())] = w;
                true
            }
            None => false,
        }
    }

    /// Maps feature names to ids with activation 1, dropping unknown names.
    pub fn encode(&self, feats: &[Vec<String>]) -> EncodedSentence {
        feats
            .iter()
            .map(|tok| {
                tok.iter()
                    .filter_map(|f| self.feature_id(f))
                    .map(|id| (id, 1.0))
                    .collect()
            })
            .collect()
    }

    pub fn emissions(&self, x: &EncodedSentence) -> Vec<[f64; N_LABELS]> {
        x.iter()
            .map(|tok| {
                let mut e = [0.0; N_LABELS];
                for &(f, a) in tok {
                    for (y, ey) in e.iter_mut().enumerate() {
                        *ey += a * self.feat(f, y);
                    }
                }
                e
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Forward scores in log space. `scale[t]` multiplies every potential of
/// position `t` (start/transition into `t` plus emission at `t`).
fn forward(m: &CrfModel, e: &[[f64; N_LABELS]], scale: &[f64]) -> Vec<[f64; N_LABELS]> {
    let n = e.len();
    let mut alpha = vec![[0.0; N_LABELS]; n];
    for y in 0..N_LABELS {
        alpha[0][y] = scale[0] * (m.start(y) + e[0][y]);
    }
    for t in 1..n {
        for y in 0..N_LABELS {
            let terms: Vec<f64> = (0..N_LABELS)
                .map(|p| alpha[t - 1][p] + scale[t] * (m.trans(p, y) + e[t][y]))
                .collect();
            alpha[t][y] = log_sum_exp(&terms);
        }
    }
    alpha
}

fn backward(m: &CrfModel, e: &[[f64; N_LABELS]], scale: &[f64]) -> Vec<[f64; N_LABELS]> {
    let n = e.len();
    let mut beta = vec![[0.0; N_LABELS]; n];
    for t in (0..n.saturating_sub(1)).rev() {
        for y in 0..N_LABELS {
            let terms: Vec<f64> = (0..N_LABELS)
                .map(|q| scale[t + 1] * (m.trans(y, q) + e[t + 1][q]) + beta[t + 1][q])
                .collect();
            beta[t][y] = log_sum_exp(&terms);
        }
    }
    beta
}

/// `log Z` of the unconstrained lattice; 0 for an empty sentence.
pub fn log_partition(m: &CrfModel, x: &EncodedSentence) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let e = m.emissions(x);
    let alpha = forward(m, &e, &vec![1.0; x.len()]);
    log_sum_exp(&alpha[x.len() - 1])
}

/// Unnormalized score of a tag sequence.
pub fn sequence_score(m: &CrfModel, x: &EncodedSentence, tags: &[usize]) -> f64 {
    let e = m.emissions(x);
    let mut s = 0.0;
    for (t, &y) in tags.iter().enumerate() {
        s += e[t][y]
            + if t == 0 {
                m.start(y)
            } else {
                m.trans(tags[t - 1], y)
            };
    }
    s
}

/// Sparse gradient as sorted `(parameter index, value)` pairs.
pub type Gradient = Vec<(usize, f64)>;

/// Weighted negative log-likelihood of `gold` and its gradient.
///
/// Tokens whose gold tag is not O get weight `1 + boost`; the weight scales
/// every potential at that position in both the gold score and the
/// partition function, so `boost` has no effect on all-O sentences.
pub fn loss_and_gradient(
    m: &CrfModel,
    x: &EncodedSentence,
    gold: &[BioTag],
    boost: f64,
) -> Result<(f64, Gradient)> {
    if x.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: gold.len(),
        });
    }
    let n = x.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let scale: Vec<f64> = gold
        .iter()
        .map(|&g| if g == BioTag::O { 1.0 } else { 1.0 + boost })
        .collect();
    let e = m.emissions(x);
    let alpha = forward(m, &e, &scale);
    let beta = backward(m, &e, &scale);
    let log_z = log_sum_exp(&alpha[n - 1]);

    let y: Vec<usize> = gold.iter().map(|g| g.index()).collect();
    let mut gold_score = 0.0;
    for t in 0..n {
        let edge = if t == 0 {
            m.start(y[0])
        } else {
            m.trans(y[t - 1], y[t])
        };
        gold_score += scale[t] * (edge + e[t][y[t]]);
    }
    let loss = log_z - gold_score;
    if !loss.is_finite() || !log_z.is_finite() {
        return Err(Error::Numerical("CRF forward pass"));
    }

    let mut grad: HashMap<usize, f64> = HashMap::new();
    let mut add = |i: usize, v: f64| *grad.entry(i).or_insert(0.0) += v;
    for t in 0..n {
        let node: Vec<f64> = (0..N_LABELS)
            .map(|k| (alpha[t][k] + beta[t][k] - log_z).exp())
            .collect();
        // expected minus observed, per position
        let mut coef = [0.0; N_LABELS];
        for k in 0..N_LABELS {
            coef[k] = scale[t] * node[k];
        }
        coef[y[t]] -= scale[t];
        for &(f, a) in &x[t] {
            for (k, c) in coef.iter().enumerate() {
                if *c != 0.0 {
                    add(CrfModel::feat_index(f, k), a * c);
                }
            }
        }
        if t == 0 {
            for (k, c) in coef.iter().enumerate() {
                add(CrfModel::start_index(k), *c);
            }
        } else {
            for p in 0..N_LABELS {
                for k in 0..N_LABELS {
                    let pair =
                        (alpha[t - 1][p] + scale[t] * (m.trans(p, k) + e[t][k]) + beta[t][k]
                            - log_z)
                            .exp();
                    add(CrfModel::trans_index(p, k), scale[t] * pair);
                }
            }
            add(CrfModel::trans_index(y[t - 1], y[t]), -scale[t]);
        }
    }
    let mut grad: Gradient = grad.into_iter().collect();
    grad.sort_by_key(|g| g.0);
    if grad.iter().any(|g| !g.1.is_finite()) {
        return Err(Error::Numerical("CRF gradient"));
    }
    Ok((loss, grad))
}

fn allowed(from: Option<usize>, to: usize) -> bool {
    to != BioTag::I.index() || from.is_some_and(|f| f != BioTag::O.index())
}

/// Best tag sequence under the BIO constraints. Among equally scored
/// sequences the lexicographically smallest (O < B < I) is returned.
pub fn viterbi(m: &CrfModel, x: &EncodedSentence) -> Vec<BioTag> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let e = m.emissions(x);
    // best[t][y]: best score of positions t.. given tag y at t
    let mut best = vec![[f64::NEG_INFINITY; N_LABELS]; n];
    best[n - 1] = e[n - 1];
    for t in (0..n - 1).rev() {
        for y in 0..N_LABELS {
            let tail = (0..N_LABELS)
                .filter(|&q| allowed(Some(y), q))
                .map(|q| m.trans(y, q) + best[t + 1][q])
                .fold(f64::NEG_INFINITY, f64::max);
            best[t][y] = e[t][y] + tail;
        }
    }
    let mut tags = Vec::with_capacity(n);
    let mut prev: Option<usize> = None;
    for t in 0..n {
        let mut pick = 0;
        let mut pick_score = f64::NEG_INFINITY;
        for y in 0..N_LABELS {
            if !allowed(prev, y) {
                continue;
            }
            let edge = match prev {
                None => m.start(y),
                Some(p) => m.trans(p, y),
            };
            let s = edge + best[t][y];
            if s > pick_score {
                pick = y;
                pick_score = s;
            }
        }
        tags.push(BioTag::from_index(pick));
        prev = Some(pick);
    }
    tags
}
