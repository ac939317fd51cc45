//! Generative label model: a two-class latent model with conditionally
//! independent labeling functions, fit by EM.
//!
//! Each LF group has a class-conditional distribution over its three
//! outputs (positive, negative, abstain), so an LF that only ever votes one
//! way is still informative through how often it fires on each class. EM
//! runs over all candidates, including uncovered ones, starting from the
//! majority vote, with a small symmetric pseudo-count on every probability.
//! LFs whose vote columns are identical are fit as one group, so duplicated
//! evidence is counted once.
//!
//! Prediction combines only the votes that fired, so a row with no votes
//! gets the class prior exactly. The reported accuracy of an LF is the
//! probability that a fired vote equals the latent label, and its propensity
//! is the probability that it fires.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::lf::{LabelingFunctionVote, Vote};
use crate::error::{read_to_string, Error, Result};

const CLAMP: f64 = 1e-6;
/// Pseudo-count added to every outcome in the M-step.
const SMOOTHING: f64 = 0.01;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct EmConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }
}

/// One row per candidate, one column per LF.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    pub lf_ids: Vec<String>,
    pub rows: Vec<Vec<Vote>>,
}

impl VoteMatrix {
    pub fn new(lf_ids: Vec<String>) -> Self {
        VoteMatrix {
            lf_ids,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Vote>) {
        debug_assert_eq!(row.len(), self.lf_ids.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelModel {
    pub lf_ids: Vec<String>,
    pub lf_accuracies: BTreeMap<String, f64>,
    pub lf_propensities: BTreeMap<String, f64>,
    /// Log-likelihood ratio, positive class over negative, of a positive and
    /// of a negative vote from each LF.
    pub vote_weights: BTreeMap<String, [f64; 2]>,
    pub class_prior: f64,
    pub threshold: f64,
    /// Group index per LF (in `lf_ids` order).
    pub groups: Vec<usize>,
    pub iterations: usize,
    /// Penalized log-likelihood after each EM iteration.
    pub log_likelihood: Vec<f64>,
}

fn clamp(p: f64) -> f64 {
    p.clamp(CLAMP, 1.0 - CLAMP)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Outcome index: positive, negative, abstain.
fn outcome(v: i8) -> usize {
    match v {
        1 => 0,
        -1 => 1,
        _ => 2,
    }
}

/// Fits the model by EM, stopping when the log-likelihood gain drops below
/// the tolerance or after the iteration cap.
pub fn fit_label_model(votes: &VoteMatrix, cfg: &EmConfig) -> Result<LabelModel> {
    let n_lf = votes.lf_ids.len();
    if n_lf == 0 || votes.rows.is_empty() {
        return Err(Error::NoSignal);
    }
    if let Some(bad) = votes.rows.iter().find(|r| r.len() != n_lf) {
        return Err(Error::LengthMismatch {
            left: bad.len(),
            right: n_lf,
        });
    }

    // group identical columns
    let mut groups = vec![0usize; n_lf];
    let mut reps: Vec<usize> = Vec::new();
    for j in 0..n_lf {
        match reps
            .iter()
            .position(|&r| votes.rows.iter().all(|row| row[r] == row[j]))
        {
            Some(g) => groups[j] = g,
            None => {
                groups[j] = reps.len();
                reps.push(j);
            }
        }
    }
    let n_groups = reps.len();

    // compress to distinct vote patterns over groups
    let mut counts: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
    for row in &votes.rows {
        let p: Vec<i8> = reps.iter().map(|&r| row[r].as_i8()).collect();
        *counts.entry(p).or_insert(0.0) += 1.0;
    }
    let total = votes.rows.len() as f64;
    let patterns: Vec<(Vec<usize>, f64)> = counts
        .iter()
        .map(|(p, &c)| (p.iter().map(|&v| outcome(v)).collect(), c))
        .collect();
    if patterns.iter().all(|(p, _)| p.iter().all(|&k| k == 2)) {
        return Err(Error::NoSignal);
    }

    // initialization from the majority vote; uncovered rows start negative
    let mut resp: Vec<f64> = counts
        .keys()
        .map(|p| {
            let s: i32 = p.iter().map(|&v| v as i32).sum();
            match s.signum() {
                1 => 1.0,
                -1 => 0.0,
                _ if p.iter().any(|&v| v != 0) => 0.5,
                _ => 0.0,
            }
        })
        .collect();
    let mut prior = 0.0;
    // cond[g][y][k] = P(group g outputs k | class y)
    let mut cond = vec![[[0.0f64; 3]; 2]; n_groups];
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        // M-step
        let n1: f64 = patterns.iter().zip(&resp).map(|((_, c), r)| c * r).sum();
        prior = (n1 + SMOOTHING) / (total + 2.0 * SMOOTHING);
        for (g, table) in cond.iter_mut().enumerate() {
            let mut n = [[SMOOTHING; 3]; 2];
            for ((p, c), r) in patterns.iter().zip(&resp) {
                n[1][p[g]] += c * r;
                n[0][p[g]] += c * (1.0 - r);
            }
            for y in 0..2 {
                let s: f64 = n[y].iter().sum();
                for k in 0..3 {
                    table[y][k] = n[y][k] / s;
                }
            }
        }
        // E-step and penalized likelihood
        let mut ll = SMOOTHING * (prior.ln() + (1.0 - prior).ln())
            + SMOOTHING * cond.iter().flatten().flatten().map(|t| t.ln()).sum::<f64>();
        for ((p, c), r) in patterns.iter().zip(resp.iter_mut()) {
            let (mut l1, mut l0) = (prior.ln(), (1.0 - prior).ln());
            for (g, &k) in p.iter().enumerate() {
                l1 += cond[g][1][k].ln();
                l0 += cond[g][0][k].ln();
            }
            let m = l1.max(l0);
            let lse = m + ((l1 - m).exp() + (l0 - m).exp()).ln();
            ll += c * lse;
            *r = (l1 - lse).exp();
        }
        if !ll.is_finite() {
            return Err(Error::Numerical("label model likelihood"));
        }
        iterations += 1;
        let prev = trace.last().copied();
        trace.push(ll);
        if let Some(prev) = prev {
            if ll < prev - 1e-9 * prev.abs().max(1.0) {
                return Err(Error::Numerical("EM log-likelihood decreased"));
            }
            if ll - prev < cfg.tolerance {
                break;
            }
        }
    }

    let summary: Vec<(f64, f64, [f64; 2])> = cond
        .iter()
        .map(|t| {
            let prop = prior * (1.0 - t[1][2]) + (1.0 - prior) * (1.0 - t[0][2]);
            let acc = (prior * t[1][0] + (1.0 - prior) * t[0][1]) / prop;
            let weights = [t[1][0].ln() - t[0][0].ln(), t[1][1].ln() - t[0][1].ln()];
            (clamp(acc), clamp(prop), weights)
        })
        .collect();
    let per_lf = |f: &dyn Fn(&(f64, f64, [f64; 2])) -> f64| -> BTreeMap<String, f64> {
        votes
            .lf_ids
            .iter()
            .zip(&groups)
            .map(|(id, &g)| (id.clone(), f(&summary[g])))
            .collect()
    };
    let lf_accuracies = per_lf(&|s| s.0);
    let lf_propensities = per_lf(&|s| s.1);
    let vote_weights = votes
        .lf_ids
        .iter()
        .zip(&groups)
        .map(|(id, &g)| (id.clone(), summary[g].2))
        .collect();
    Ok(LabelModel {
        lf_ids: votes.lf_ids.clone(),
        lf_accuracies,
        lf_propensities,
        vote_weights,
        class_prior: prior,
        threshold: DEFAULT_THRESHOLD,
        groups,
        iterations,
        log_likelihood: trace,
    })
}

impl LabelModel {
    /// Model with given `(id, accuracy, propensity)` per LF, each LF its own
    /// group, firing independently of the class.
    pub fn new(class_prior: f64, lfs: &[(&str, f64, f64)]) -> Self {
        LabelModel {
            lf_ids: lfs.iter().map(|l| l.0.to_string()).collect(),
            lf_accuracies: lfs.iter().map(|l| (l.0.to_string(), l.1)).collect(),
            lf_propensities: lfs.iter().map(|l| (l.0.to_string(), l.2)).collect(),
            vote_weights: lfs
                .iter()
                .map(|l| (l.0.to_string(), [logit(l.1), -logit(l.1)]))
                .collect(),
            class_prior,
            threshold: DEFAULT_THRESHOLD,
            groups: (0..lfs.len()).collect(),
            iterations: 0,
            log_likelihood: Vec::new(),
        }
    }

    /// Log-odds evidence of a vote row in `lf_ids` order, or `None` when
    /// nothing fired. Members of a group share one vote: the mean of their
    /// non-abstaining votes.
    pub fn evidence(&self, row: &[Vote]) -> Option<f64> {
        let n = self.groups.iter().max().map_or(0, |g| g + 1);
        let mut sums = vec![(0.0f64, 0.0f64); n];
        for (j, v) in row.iter().enumerate() {
            let w = &self.vote_weights[&self.lf_ids[j]];
            let e = match v {
                Vote::Positive => w[0],
                Vote::Negative => w[1],
                Vote::Abstain => continue,
            };
            let g = &mut sums[self.groups[j]];
            g.0 += e;
            g.1 += 1.0;
        }
        let fired: Vec<_> = sums.iter().filter(|g| g.1 > 0.0).collect();
        (!fired.is_empty()).then(|| fired.iter().map(|g| g.0 / g.1).sum())
    }

    /// Posterior log-odds of the positive class.
    pub fn log_odds_row(&self, row: &[Vote]) -> f64 {
        logit(self.class_prior) + self.evidence(row).unwrap_or(0.0)
    }

    /// Posterior probability of the positive class for a vote row in
    /// `lf_ids` order. Returns the prior exactly when no LF fired.
    pub fn predict_row(&self, row: &[Vote]) -> f64 {
        match self.evidence(row) {
            None => self.class_prior,
            Some(0.0) => self.class_prior,
            Some(e) => sigmoid(logit(self.class_prior) + e),
        }
    }

    pub fn predict_marginal(&self, votes: &[LabelingFunctionVote]) -> Result<f64> {
        let mut row = vec![Vote::Abstain; self.lf_ids.len()];
        for v in votes {
            let j = self
                .lf_ids
                .iter()
                .position(|id| *id == v.lf_id)
                .ok_or_else(|| Error::UnknownLabelingFunction(v.lf_id.clone()))?;
            row[j] = v.value;
        }
        Ok(self.predict_row(&row))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "prior\t{}", self.class_prior);
        let _ = writeln!(out, "threshold\t{}", self.threshold);
        let _ = writeln!(out, "iterations\t{}", self.iterations);
        for (j, id) in self.lf_ids.iter().enumerate() {
            let w = self.vote_weights[id];
            let _ = writeln!(
                out,
                "lf\t{id}\t{}\t{}\t{}\t{}\t{}",
                self.lf_accuracies[id], self.lf_propensities[id], self.groups[j], w[0], w[1]
            );
        }
        out
    }

    pub fn from_tsv(text: &str, source: &str) -> Result<Self> {
        let mut model = LabelModel::new(0.5, &[]);
        let num = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::format(source, line, format!("bad number `{s}`")))
        };
        for (n, line) in text.lines().enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["prior", v] => model.class_prior = num(v, n + 1)?,
                ["threshold", v] => model.threshold = num(v, n + 1)?,
                ["iterations", v] => model.iterations = num(v, n + 1)? as usize,
                ["lf", id, a, p, g, wp, wn] => {
                    model.lf_ids.push(id.to_string());
                    model
                        .vote_weights
                        .insert(id.to_string(), [num(wp, n + 1)?, num(wn, n + 1)?]);
                    model.lf_accuracies.insert(id.to_string(), num(a, n + 1)?);
                    model.lf_propensities.insert(id.to_string(), num(p, n + 1)?);
                    model.groups.push(num(g, n + 1)? as usize);
                }
                [""] => {}
                _ => {
                    return Err(Error::format(
                        source,
                        n + 1,
                        "unrecognized label model line",
                    ))
                }
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&read_to_string(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("lf{i}")).collect()
    }

    fn vote(lf: &str, v: Vote) -> LabelingFunctionVote {
        LabelingFunctionVote {
            lf_id: lf.into(),
            value: v,
        }
    }

    #[test]
    fn bayes_rule_marginal() {
        let m = LabelModel::new(0.3, &[("a", 0.9, 1.0)]);
        let p = m.predict_marginal(&[vote("a", Vote::Positive)]).unwrap();
        assert!((p - 0.3 * 0.9 / (0.3 * 0.9 + 0.7 * 0.1)).abs() < 1e-12);
        assert!((p - 0.794).abs() < 1e-3);
        assert_eq!(m.predict_marginal(&[]).unwrap(), 0.3);
        assert_eq!(
            m.predict_marginal(&[vote("a", Vote::Abstain)]).unwrap(),
            0.3
        );
        assert!(matches!(
            m.predict_marginal(&[vote("zzz", Vote::Positive)]),
            Err(Error::UnknownLabelingFunction(_))
        ));
    }

    #[test]
    fn cancelling_votes_return_prior() {
        let m = LabelModel::new(0.3, &[("a", 0.8, 1.0), ("b", 0.8, 1.0)]);
        let p = m
            .predict_marginal(&[vote("a", Vote::Positive), vote("b", Vote::Negative)])
            .unwrap();
        assert_eq!(p, 0.3);
    }

    #[test]
    fn monotone_in_positive_votes() {
        let m = LabelModel::new(0.2, &[("a", 0.7, 0.5), ("b", 0.6, 0.5), ("c", 0.9, 0.5)]);
        let one = m.predict_marginal(&[vote("a", Vote::Positive)]).unwrap();
        let two = m
            .predict_marginal(&[vote("a", Vote::Positive), vote("b", Vote::Positive)])
            .unwrap();
        assert!(two > one && one > 0.2);
    }

    #[test]
    fn all_abstain_matrix_has_no_signal() {
        let mut m = VoteMatrix::new(ids(2));
        m.push(vec![Vote::Abstain, Vote::Abstain]);
        assert!(matches!(
            fit_label_model(&m, &EmConfig::default()),
            Err(Error::NoSignal)
        ));
        assert!(matches!(
            fit_label_model(&VoteMatrix::new(ids(2)), &EmConfig::default()),
            Err(Error::NoSignal)
        ));
    }

    #[test]
    fn single_lf_on_true_positives_converges_to_perfect_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = VoteMatrix::new(ids(1));
        for _ in 0..1000 {
            let y = rng.random::<f64>() < 0.3;
            m.push(vec![if y { Vote::Positive } else { Vote::Abstain }]);
        }
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        assert!((model.lf_accuracies["lf0"] - 1.0).abs() <= 0.02);
    }

    #[test]
    fn correlated_lfs_do_not_double_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = VoteMatrix::new(ids(3));
        for _ in 0..2000 {
            let y = rng.random::<f64>() < 0.4;
            let mut lf = |acc: f64| {
                if rng.random::<f64>() < 0.7 {
                    let correct = rng.random::<f64>() < acc;
                    if correct == y {
                        Vote::Positive
                    } else {
                        Vote::Negative
                    }
                } else {
                    Vote::Abstain
                }
            };
            let a = lf(0.85);
            let c = lf(0.75);
            m.push(vec![a, a, c]);
        }
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        assert_eq!(model.groups, [0, 0, 1]);
        let both = model.predict_row(&[Vote::Positive, Vote::Positive, Vote::Abstain]);
        let acc = model.lf_accuracies["lf0"];
        let independent = LabelModel::new(model.class_prior, &[("x", acc, 1.0), ("y", acc, 1.0)])
            .predict_marginal(&[vote("x", Vote::Positive), vote("y", Vote::Positive)])
            .unwrap();
        assert!(both <= independent);
        let single = model.predict_row(&[Vote::Positive, Vote::Abstain, Vote::Abstain]);
        assert!((both - single).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = VoteMatrix::new(ids(3));
        let accs = [0.9, 0.65, 0.55];
        for _ in 0..3000 {
            let y = rng.random::<f64>() < 0.25;
            let row = accs
                .iter()
                .map(|&a| {
                    if rng.random::<f64>() < 0.5 {
                        if (rng.random::<f64>() < a) == y {
                            Vote::Positive
                        } else {
                            Vote::Negative
                        }
                    } else {
                        Vote::Abstain
                    }
                })
                .collect();
            m.push(row);
        }
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        assert!(model
            .log_likelihood
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
        assert!(model.iterations <= 500);
    }

    /// Class-independent propensity 0.6, prior 0.3.
    fn planted(seed: u64, accs: &[f64], n: usize) -> (VoteMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = VoteMatrix::new(ids(accs.len()));
        let mut truth = Vec::new();
        for _ in 0..n {
            let y = rng.random::<f64>() < 0.3;
            let row = accs
                .iter()
                .map(|&a| {
                    if rng.random::<f64>() >= 0.6 {
                        Vote::Abstain
                    } else if (rng.random::<f64>() < a) == y {
                        Vote::Positive
                    } else {
                        Vote::Negative
                    }
                })
                .collect();
            m.push(row);
            truth.push(y);
        }
        (m, truth)
    }

    #[test]
    fn recovers_planted_accuracies() {
        let (m, _) = planted(42, &[0.9, 0.8, 0.7], 10_000);
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        for (id, want) in ids(3).iter().zip([0.9, 0.8, 0.7]) {
            assert!((model.lf_accuracies[id] - want).abs() < 0.05, "{model:?}");
            assert!((model.lf_propensities[id] - 0.6).abs() < 0.05);
        }
        assert!((model.class_prior - 0.3).abs() < 0.05);
    }

    #[test]
    fn combined_recall_dominates_each_lf() {
        let (m, truth) = planted(7, &[0.9, 0.8, 0.7], 10_000);
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        let positives = truth.iter().filter(|&&y| y).count() as f64;
        let recall = |pred: &dyn Fn(&[Vote]) -> bool| {
            m.rows
                .iter()
                .zip(&truth)
                .filter(|(r, &y)| y && pred(r))
                .count() as f64
                / positives
        };
        let combined = recall(&|r| model.predict_row(r) > model.threshold);
        for j in 0..3 {
            assert!(combined >= recall(&|r| r[j] == Vote::Positive));
        }
    }

    #[test]
    fn one_sided_lfs_keep_their_polarity() {
        // three positive-only LFs and one negative-only LF over mostly
        // uncovered candidates
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = VoteMatrix::new(ids(4));
        for _ in 0..5000 {
            let y = rng.random::<f64>() < 0.1;
            let mut fire = |p: f64, v: Vote| {
                if rng.random::<f64>() < p {
                    v
                } else {
                    Vote::Abstain
                }
            };
            let row = if y {
                vec![
                    fire(0.8, Vote::Positive),
                    fire(0.5, Vote::Positive),
                    fire(0.3, Vote::Positive),
                    fire(0.01, Vote::Negative),
                ]
            } else {
                vec![
                    fire(0.02, Vote::Positive),
                    fire(0.05, Vote::Positive),
                    fire(0.01, Vote::Positive),
                    fire(0.03, Vote::Negative),
                ]
            };
            m.push(row);
        }
        let model = fit_label_model(&m, &EmConfig::default()).unwrap();
        assert!(model.class_prior < 0.2);
        let only = |j: usize, v: Vote| {
            let mut r = vec![Vote::Abstain; 4];
            r[j] = v;
            model.predict_row(&r)
        };
        assert!(only(3, Vote::Negative) < model.class_prior);
        assert!(only(0, Vote::Positive) > model.threshold);
        assert_eq!(model.predict_row(&[Vote::Abstain; 4]), model.class_prior);
    }

    #[test]
    fn tsv_round_trip() {
        let m = LabelModel::new(0.3, &[("a", 0.9, 0.25), ("b", 0.123456789, 1.0)]);
        let back = LabelModel::from_tsv(&m.to_tsv(), "m").unwrap();
        assert_eq!(back.lf_accuracies, m.lf_accuracies);
        assert_eq!(back.vote_weights, m.vote_weights);
        assert_eq!(back.class_prior, m.class_prior);
        assert_eq!(back.groups, m.groups);
    }
}
