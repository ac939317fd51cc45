//! Acceptance suite. Runs without the default harness so that every
//! criterion prints one PASS/FAIL line; any failure makes the binary exit 1.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use swkg_core::corpus::{is_valid_bio, spans_to_tags, BioTag, TaggedSentence};
use swkg_core::disambig::{
    disambiguate, make_abbreviation, representative_name, Kb, MentionString, Normalizer,
};
use swkg_core::eval::{corpus_spans, evaluate, MatchMode, Span};
use swkg_core::ingest::Sentence;
use swkg_core::kg::{parse_ntriples, serialize_ntriples, Iri, Term, Triple, TripleGraph};
use swkg_core::query::{
    execute, parse_query, CmpOp, Count, Having, OrderExpr, OrderKey, PatternTerm, QueryAst,
    SelectItem, TriplePattern, SOFTWARE_PER_YEAR,
};
use swkg_core::tagger::{
    log_partition, loss_and_gradient, train, viterbi, viterbi_decode, CrfModel, EncodedSentence,
    FeatureExtractor, TrainingConfig, N_LABELS,
};
use swkg_core::weaksup::{
    apply_lfs, emit_ssc, english_words, fit_label_model, vote_matrix, EmConfig, ExactRules,
    KbAliasDictionary, LabelingFunctions, Vote, VoteMatrix, MAX_CANDIDATE_TOKENS,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("viterbi matches exhaustive argmax", viterbi_oracle),
        ("gradient matches finite differences", gradient_check),
        ("partition function matches exhaustive sum", partition_check),
        (
            "label model recovers planted accuracies",
            label_model_recovery,
        ),
        (
            "silver pretraining improves a small gold corpus",
            learnability,
        ),
        ("evaluation modes match hand counts", evaluation_fixture),
        (
            "spelling variants collapse to one cluster",
            disambiguation_fixture,
        ),
        ("graph serializations round-trip", graph_round_trip),
        ("query engine matches nested-loop evaluator", query_oracle),
        ("pipeline output is byte-identical across runs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail}; {secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} ({why}; {secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------------------
// CRF oracles

const WORDS: [&str; 10] = [
    "We", "used", "SPSS", "version", "23", "(", "Inc.", ")", "data", "Stata",
];

/// Random model over the features of random sentences of 1..=8 tokens.
fn random_crf(rng: &mut ChaCha8Rng, n_sentences: usize) -> (CrfModel, Vec<EncodedSentence>) {
    let fx = FeatureExtractor::new(KbAliasDictionary::default());
    let sentences: Vec<Sentence> = (0..n_sentences)
        .map(|k| {
            let n = rng.random_range(1..=8);
            let words: Vec<&str> = (0..n)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                .collect();
            Sentence::from_surfaces("d", k, &words)
        })
        .collect();
    let feats: Vec<Vec<Vec<String>>> = sentences.iter().map(|s| fx.sentence_features(s)).collect();
    let names: Vec<String> = feats.iter().flatten().flatten().cloned().collect();
    let mut m = CrfModel::new("test", names);
    for w in m.weights.iter_mut() {
        *w = rng.random_range(-2.0..2.0);
    }
    let xs = feats.iter().map(|f| m.encode(f)).collect();
    (m, xs)
}

/// Score of a tag sequence computed directly from the flat weight vector.
fn oracle_score(m: &CrfModel, x: &EncodedSentence, tags: &[usize]) -> f64 {
    let mut s = 0.0;
    for (t, &y) in tags.iter().enumerate() {
        s += if t == 0 {
            m.weights[CrfModel::start_index(y)]
        } else {
            m.weights[CrfModel::trans_index(tags[t - 1], y)]
        };
        for &(f, a) in &x[t] {
            s += a * m.weights[CrfModel::feat_index(f, y)];
        }
    }
    s
}

fn all_sequences(n: usize) -> Vec<Vec<usize>> {
    (0..N_LABELS.pow(n as u32))
        .map(|mut code| {
            let mut seq = vec![0; n];
            for slot in seq.iter_mut().rev() {
                *slot = code % N_LABELS;
                code /= N_LABELS;
            }
            seq
        })
        .collect()
}

fn bio_valid(seq: &[usize]) -> bool {
    let (o, i) = (BioTag::O.index(), BioTag::I.index());
    seq.iter()
        .enumerate()
        .all(|(t, &y)| y != i || (t > 0 && seq[t - 1] != o))
}

fn viterbi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fx = FeatureExtractor::new(KbAliasDictionary::default());
    let mut checked = 0;
    for model_no in 0..200 {
        let (m, xs) = random_crf(&mut rng, 3);
        for x in &xs {
            let best = all_sequences(x.len())
                .into_iter()
                .filter(|s| bio_valid(s))
                .map(|s| (oracle_score(&m, x, &s), s))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("at least the all-O sequence");
            let got: Vec<usize> = viterbi(&m, x).iter().map(|t| t.index()).collect();
            ensure!(
                got == best.1,
                "model {model_no}: viterbi {got:?} vs exhaustive {:?}",
                best.1
            );
            checked += 1;
        }
        // the decoding entry point on a real sentence agrees with the core
        let words: Vec<&str> = (0..rng.random_range(1..=8))
            .map(|_| WORDS[rng.random_range(0..WORDS.len())])
            .collect();
        let s = Sentence::from_surfaces("d", 0, &words);
        let x = m.encode(&fx.sentence_features(&s));
        ensure!(
            viterbi_decode(&m, &fx, &s).tags == viterbi(&m, &x),
            "viterbi_decode disagrees with viterbi"
        );
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "took {elapsed:?}, limit 30 s"
    );
    Ok(format!("{checked} sentences over 200 models agree"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for pair in 0..50 {
        let (mut m, xs) = random_crf(&mut rng, 1);
        for w in m.weights.iter_mut() {
            *w *= 0.5;
        }
        let x = &xs[0];
        let gold: Vec<BioTag> = (0..x.len())
            .map(|_| BioTag::from_index(rng.random_range(0..N_LABELS)))
            .collect();
        let boost = if pair % 2 == 0 {
            0.0
        } else {
            rng.random_range(0.0..2.0)
        };
        let (_, grad) = loss_and_gradient(&m, x, &gold, boost).map_err(|e| e.to_string())?;
        let analytic: HashMap<usize, f64> = grad.into_iter().collect();
        let h = 1e-5;
        let (mut diff, mut norm_a, mut norm_n) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..m.weights.len() {
            let w = m.weights[i];
            m.weights[i] = w + h;
            let up = loss_and_gradient(&m, x, &gold, boost).unwrap().0;
            m.weights[i] = w - h;
            let down = loss_and_gradient(&m, x, &gold, boost).unwrap().0;
            m.weights[i] = w;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.get(&i).copied().unwrap_or(0.0);
            diff += (a - numeric).powi(2);
            norm_a += a * a;
            norm_n += numeric * numeric;
        }
        let rel = diff.sqrt() / norm_a.sqrt().max(norm_n.sqrt()).max(1e-12);
        ensure!(rel < 1e-4, "pair {pair}: relative error {rel:.3e}");
        worst = worst.max(rel);
    }
    Ok(format!("50 pairs, worst relative error {worst:.2e}"))
}

fn partition_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..50 {
        let (m, xs) = random_crf(&mut rng, 4);
        for x in &xs {
            let scores: Vec<f64> = all_sequences(x.len())
                .iter()
                .map(|s| oracle_score(&m, x, s))
                .collect();
            let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exhaustive = top + scores.iter().map(|s| (s - top).exp()).sum::<f64>().ln();
            let err = (log_partition(&m, x) - exhaustive).abs();
            ensure!(err <= 1e-8, "log Z off by {err:.3e} at n={}", x.len());
            worst = worst.max(err);
            checked += 1;
        }
    }
    Ok(format!("{checked} sentences, worst abs error {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Label model

fn label_model_recovery() -> Outcome {
    let planted = [0.9, 0.8, 0.7];
    let ids: Vec<String> = (0..3).map(|i| format!("lf{i}")).collect();
    let mut sums = [0.0; 3];
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut m = VoteMatrix::new(ids.clone());
        for _ in 0..10_000 {
            let y = rng.random::<f64>() < 0.3;
            let row = planted
                .iter()
                .map(|&a| {
                    if rng.random::<f64>() >= 0.5 {
                        Vote::Abstain
                    } else if (rng.random::<f64>() < a) == y {
                        Vote::Positive
                    } else {
                        Vote::Negative
                    }
                })
                .collect();
            m.push(row);
        }
        let model = fit_label_model(&m, &EmConfig::default()).map_err(|e| e.to_string())?;
        for (j, id) in ids.iter().enumerate() {
            sums[j] += model.lf_accuracies[id];
        }
        let abstain = model.predict_row(&[Vote::Abstain; 3]);
        ensure!(
            abstain == model.class_prior,
            "all-abstain marginal {abstain} != prior {}",
            model.class_prior
        );
        ensure!(
            model.predict_marginal(&[]).unwrap() == model.class_prior,
            "empty vote list does not return the prior"
        );
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 5.0).collect();
    for (got, want) in means.iter().zip(planted) {
        ensure!(
            (got - want).abs() <= 0.05,
            "recovered {means:.3?}, planted {planted:?}"
        );
    }
    Ok(format!("mean recovered accuracies {means:.3?}"))
}

// ---------------------------------------------------------------------------
// End-to-end learnability on a synthetic corpus

const NAMES: [&str; 30] = [
    "SPSS",
    "Stata",
    "MATLAB",
    "ImageJ",
    "NVivo",
    "SAS",
    "WinBUGS",
    "OpenBUGS",
    "Mplus",
    "JASP",
    "EpiData",
    "SigmaPlot",
    "LabVIEW",
    "FlowJo",
    "Mathematica",
    "Minitab",
    "Statistica",
    "Praat",
    "FreeSurfer",
    "MAXQDA",
    "Excel",
    "Origin",
    "IBM SPSS Statistics",
    "GraphPad Prism",
    "Microsoft Excel",
    "Adobe Photoshop",
    "Image Pro Plus",
    "BD FACSDiva",
    "SPM",
    "REDCap",
];
const NOT_NAMES: [&str; 8] = [
    "excel", "origin", "prism", "package", "software", "data", "section", "analysis",
];
const DEVELOPERS: [&str; 6] = [
    "SPSS Inc.",
    "StataCorp",
    "The MathWorks Inc.",
    "Acme Software Ltd.",
    "GraphPad Software Inc.",
    "Adobe Systems Inc.",
];
const CITIES: [&str; 5] = [
    "Chicago",
    "Natick",
    "Armonk",
    "San Diego",
    "College Station",
];
const PURPOSES: [&str; 4] = [
    "non-image-based statistical analyses",
    "image analysis",
    "data management",
    "the regression models",
];
const REAGENTS: [&str; 4] = [
    "ELISA kits",
    "Trizol reagent",
    "Western blot",
    "PCR primers",
];

/// One sentence as tokens plus gold name spans.
fn synthetic_sentence(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut toks: Vec<String> = Vec::new();
    let mut spans = Vec::new();
    let push = |toks: &mut Vec<String>, text: &str| {
        toks.extend(text.split_whitespace().map(str::to_string));
    };
    let name = |toks: &mut Vec<String>, spans: &mut Vec<(usize, usize)>, n: &str| {
        let s = toks.len();
        toks.extend(n.split_whitespace().map(str::to_string));
        spans.push((s, toks.len()));
    };
    let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| xs[rng.random_range(0..xs.len())];
    let n = pick(rng, &NAMES);
    let version = format!("{}.{}", rng.random_range(1..30), rng.random_range(0..10));
    let dev = pick(rng, &DEVELOPERS);
    let city = pick(rng, &CITIES);
    let purpose = pick(rng, &PURPOSES);
    match rng.random_range(0..7) {
        0 => {
            push(&mut toks, "We used");
            name(&mut toks, &mut spans, n);
            push(
                &mut toks,
                &format!("software version {version} ( {dev} , {city} , USA ) for {purpose} ."),
            );
        }
        1 => {
            push(&mut toks, "All statistical procedures were performed using");
            name(&mut toks, &mut spans, n);
            push(&mut toks, &format!("software version {version} ."));
        }
        2 => {
            push(
                &mut toks,
                "Task accuracy and response times were analyzed using the",
            );
            name(&mut toks, &mut spans, n);
            push(&mut toks, "software package (");
            name(&mut toks, &mut spans, n);
            push(
                &mut toks,
                &format!("v{version} , {city} , Illinois , USA ) ."),
            );
        }
        3 => {
            push(&mut toks, "Data were analysed with");
            name(&mut toks, &mut spans, n);
            push(&mut toks, &format!("( {dev} , {city} , USA ) ."));
        }
        4 => {
            name(&mut toks, &mut spans, n);
            push(
                &mut toks,
                &format!("version {version} was used for {purpose} ."),
            );
        }
        5 => {
            let r = pick(rng, &REAGENTS);
            push(
                &mut toks,
                &format!("We used {r} ( {dev} , {city} , USA ) for {purpose} ."),
            );
        }
        _ => {
            let k = rng.random_range(2..6);
            push(
                &mut toks,
                &format!("Samples were processed as described in Section {k} of the protocol ."),
            );
        }
    }
    (toks, spans)
}

fn exact_f(model: &CrfModel, fx: &FeatureExtractor, test: &[TaggedSentence]) -> f64 {
    let pred: Vec<TaggedSentence> = test
        .iter()
        .map(|t| viterbi_decode(model, fx, &t.sentence))
        .collect();
    evaluate(&corpus_spans(&pred), &corpus_spans(test), MatchMode::Exact)
        .expect("decoded spans are disjoint")
        .f_score
}

/// Silver+gold and gold-only exact F on the held-out split of one corpus.
fn learnability_run(seed: u64) -> Result<(f64, f64, f64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<TaggedSentence> = (0..200)
        .map(|i| {
            let (toks, spans) = synthetic_sentence(&mut rng);
            let s = Sentence::from_surfaces("synthetic", i, &toks);
            TaggedSentence::new(s, spans_to_tags(toks.len(), &spans)).unwrap()
        })
        .collect();
    let (pool, test) = corpus.split_at(150);
    let gsc = &pool[..GSC_SIZE];

    let english = english_words(NOT_NAMES);
    let dictionary =
        KbAliasDictionary::from_entries(NAMES.iter().map(|n| (*n, *n, "en")), &english);
    let lfs = LabelingFunctions {
        dictionary: dictionary.clone(),
        exact_rules: ExactRules::default(),
        negative_list: LabelingFunctions::default_negative_list(),
    };
    // silver labels come from the labeling functions only
    let sentences: Vec<Sentence> = pool.iter().map(|t| t.sentence.clone()).collect();
    let labeled = apply_lfs(&sentences, &lfs, MAX_CANDIDATE_TOKENS);
    let label_model = fit_label_model(&vote_matrix(&labeled, lfs.ids()), &EmConfig::default())
        .map_err(|e| e.to_string())?;
    let ssc = emit_ssc(&labeled, &label_model);
    if !ssc.iter().all(|t| is_valid_bio(&t.tags)) {
        return Err("invalid silver BIO".into());
    }
    let silver_f = evaluate(&corpus_spans(&ssc), &corpus_spans(pool), MatchMode::Exact)
        .map_err(|e| e.to_string())?
        .f_score;

    let fx = FeatureExtractor::new(dictionary);
    let ssc_cfg = TrainingConfig {
        epochs: SSC_EPOCHS,
        ..TrainingConfig::ssc_default()
    };
    let gsc_cfg = TrainingConfig::gsc_default();
    let both = train(&ssc, gsc, &ssc_cfg, &gsc_cfg, &fx).map_err(|e| e.to_string())?;
    let gold_only = train(&[], gsc, &ssc_cfg, &gsc_cfg, &fx).map_err(|e| e.to_string())?;
    Ok((
        silver_f,
        exact_f(&both.model, &fx, test),
        exact_f(&gold_only.model, &fx, test),
    ))
}

/// Gold sentences available for fine-tuning; the rest of the 150-sentence
/// pool is only seen through the labeling functions.
const GSC_SIZE: usize = 20;
/// Silver pretraining epochs. The library default of 2 leaves the sparse
/// CRF underfit at the default learning rate; 5 to 25 epochs behave alike.
const SSC_EPOCHS: usize = 10;

fn learnability() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for seed in 1..=5u64 {
        let (silver, both, gold) = learnability_run(seed)?;
        let detail =
            format!("seed {seed}: silver {silver:.3}, silver+gold {both:.3}, gold-only {gold:.3}");
        ensure!(both >= 0.9, "{detail}: below 0.9");
        ensure!(both > gold, "{detail}: no improvement over gold-only");
        parts.push(format!("{both:.3} vs {gold:.3}"));
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(120),
        "took {elapsed:?}, limit 2 min"
    );
    Ok(format!(
        "exact F silver+gold vs gold-only over 5 corpora, {GSC_SIZE} gold sentences each: {}",
        parts.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// Evaluation fixture

fn evaluation_fixture() -> Outcome {
    let sp = |s: usize, a: usize, b: usize| Span::new("doc", s, a, b);
    let gold = vec![
        sp(0, 2, 5), // IBM SPSS Statistics
        sp(1, 0, 1),
        sp(2, 5, 7),
        sp(4, 1, 2),
        sp(4, 4, 6),
        sp(5, 0, 1),
        sp(5, 1, 2),
    ];
    let pred = vec![
        sp(0, 2, 4), // IBM SPSS
        sp(1, 0, 1),
        sp(3, 3, 4),
        sp(4, 0, 2),
        sp(5, 0, 2),
    ];
    // (tp, fp, fn) counted by hand per mode
    let expected = [
        (MatchMode::B, (3, 2, 4)),
        (MatchMode::I, (1, 2, 3)),
        (MatchMode::Partial, (4, 1, 3)),
        (MatchMode::Exact, (1, 4, 6)),
    ];
    for (mode, (tp, fp, fn_)) in expected {
        let m = evaluate(&pred, &gold, mode).map_err(|e| e.to_string())?;
        ensure!(
            (m.tp, m.fp, m.fn_) == (tp, fp, fn_),
            "{mode:?}: counts {:?}, expected {:?}",
            (m.tp, m.fp, m.fn_),
            (tp, fp, fn_)
        );
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        let f = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        ensure!(
            (m.precision - p).abs() < 1e-12
                && (m.recall - r).abs() < 1e-12
                && (m.f_score - f).abs() < 1e-12,
            "{mode:?}: P/R/F {:.4}/{:.4}/{:.4}, expected {p:.4}/{r:.4}/{f:.4}",
            m.precision,
            m.recall,
            m.f_score
        );
    }
    // the single-sentence case: a truncated multi-word name
    let g = [sp(0, 2, 5)];
    let p = [sp(0, 2, 4)];
    let score = |mode| evaluate(&p, &g, mode).unwrap();
    ensure!(score(MatchMode::Exact).f_score == 0.0, "exact should be 0");
    ensure!(
        score(MatchMode::Partial).precision == 1.0 && score(MatchMode::Partial).recall == 1.0,
        "partial should be perfect"
    );
    ensure!(
        score(MatchMode::B).precision == 1.0 && score(MatchMode::B).recall == 1.0,
        "B should be perfect"
    );
    let i = score(MatchMode::I);
    ensure!(
        (i.tp, i.fn_, i.recall) == (1, 1, 0.5),
        "I should have tp=1 fn=1 R=.5"
    );
    Ok("4 modes over 6 sentences plus the truncated-name case".into())
}

// ---------------------------------------------------------------------------
// Disambiguation fixture

fn disambiguation_fixture() -> Outcome {
    let kb = Kb::parse(
        "SPSS\tlabel\tSPSS\n\
         SPSS\tredirect\tIBM SPSS Statistics\n\
         SPSS\talias\tStatistical Package for the Social Sciences\ten\n\
         SPSS\talias\tPASW Statistics\tde\n\
         SPSS\talias\tPASW\tde\n\
         SPSS\talias\tSPSS Inc.\tfr\n\
         SPSS\talias\tPASW\tfr\n\
         SPSS\tdeveloper\tIBM\n\
         Stata\tlabel\tStata\n",
        "kb",
    )
    .map_err(|e| e.to_string())?;
    let forms = [
        ("SPSS", 40),
        ("Statistical Package for the Social Sciences", 9),
        ("IBM SPSS Statistics", 7),
        ("Statistical Package for Social Sciences", 3),
        ("IBM SPSS", 2),
    ];
    let mentions: Vec<MentionString> = forms
        .iter()
        .map(|(s, f)| MentionString {
            surface: s.to_string(),
            frequency: *f,
            doc_refs: Vec::new(),
        })
        .collect();
    let clusters = disambiguate(&mentions, &kb, &Normalizer::default());
    ensure!(
        clusters.len() == 1,
        "{} clusters: {:?}",
        clusters.len(),
        clusters
            .iter()
            .map(|c| c
                .members
                .iter()
                .map(|m| m.surface.as_str())
                .collect::<Vec<_>>())
            .collect::<Vec<_>>()
    );
    let rep = representative_name(&clusters[0]);
    ensure!(rep == "SPSS", "representative `{rep}`");
    ensure!(
        clusters[0].kb_id.as_deref() == Some("SPSS"),
        "kb_id {:?}",
        clusters[0].kb_id
    );
    let abbr = make_abbreviation("Statistical Package for the Social Sciences");
    ensure!(abbr == "SPSS", "abbreviation `{abbr}`");
    Ok("5 forms -> 1 cluster `SPSS`".into())
}

// ---------------------------------------------------------------------------
// Fixture pipeline runs

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run_pipeline(out: &Path) -> Result<(), String> {
    let _ = std::fs::remove_dir_all(out);
    let o = Command::new(env!("CARGO_BIN_EXE_swkg"))
        .arg("-c")
        .arg(fixtures().join("pipeline.conf"))
        .arg("-o")
        .arg(out)
        .arg("pipeline")
        .env_remove("SWKG_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!(
            "pipeline failed: {}",
            String::from_utf8_lossy(&o.stderr)
        ))
    }
}

/// Output directory of one fixture pipeline run shared by several criteria.
fn fixture_run() -> Result<&'static Path, String> {
    static RUN: OnceLock<Result<PathBuf, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-run-a");
        run_pipeline(&out).map(|_| out)
    })
    .as_ref()
    .map(|p| p.as_path())
    .map_err(|e| e.clone())
}

fn fixture_graph() -> Result<TripleGraph, String> {
    let text =
        std::fs::read_to_string(fixture_run()?.join("graph.nt")).map_err(|e| e.to_string())?;
    parse_ntriples(&text).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Graph serializations

const LITERAL_CHARS: [char; 16] = [
    'a', 'Z', '7', ' ', '"', '\\', '\n', '\r', '\t', 'é', 'ß', '日', '😀', '<', '>', '\u{7f}',
];
const DATATYPES: [&str; 4] = [
    "http://www.w3.org/2001/XMLSchema#string",
    "http://www.w3.org/2001/XMLSchema#integer",
    "http://www.w3.org/2001/XMLSchema#gYear",
    "http://example.org/dt#custom",
];

fn random_iri(rng: &mut ChaCha8Rng) -> Iri {
    let v = match rng.random_range(0..4) {
        0 => format!("http://example.org/r/{}", rng.random_range(0..200)),
        1 => format!(
            "https://example.org/caf\u{e9}/{}#x",
            rng.random_range(0..50)
        ),
        2 => format!("urn:x-test:{}", rng.random_range(0..50)),
        _ => format!("http://schema.org/p{}", rng.random_range(0..20)),
    };
    Iri::new(v).expect("generated IRI is valid")
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> TripleGraph {
    let mut g = TripleGraph::new();
    while g.len() < n {
        let object = if rng.random::<bool>() {
            Term::Iri(random_iri(rng))
        } else {
            let len = rng.random_range(0..12);
            let value: String = (0..len)
                .map(|_| LITERAL_CHARS[rng.random_range(0..LITERAL_CHARS.len())])
                .collect();
            Term::Literal {
                value,
                datatype: Iri::new(DATATYPES[rng.random_range(0..DATATYPES.len())]).unwrap(),
            }
        };
        g.insert(Triple::new(random_iri(rng), random_iri(rng), object));
    }
    g
}

/// `(subject, predicate, object)` with objects tagged as IRI or typed literal.
type FlatTriple = (String, String, String);

fn flatten(g: &TripleGraph) -> BTreeSet<FlatTriple> {
    g.iter()
        .map(|t| {
            let o = match &t.object {
                Term::Iri(i) => format!("<{}>", i.as_str()),
                Term::Literal { value, datatype } => format!("{value:?}^^{}", datatype.as_str()),
            };
            (
                t.subject.as_str().to_string(),
                t.predicate.as_str().to_string(),
                o,
            )
        })
        .collect()
}

/// Minimal JSON-LD expansion covering compact IRIs, `@id`, `@type`, plain
/// string values and `@value`/`@type` objects.
fn expand_jsonld(doc: &Value) -> Result<BTreeSet<FlatTriple>, String> {
    const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    let ctx: HashMap<&str, &str> = doc["@context"]
        .as_object()
        .ok_or("missing @context")?
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str().unwrap_or_default()))
        .collect();
    let expand = |s: &str| -> String {
        match s.split_once(':') {
            Some((p, rest)) if !rest.starts_with("//") && ctx.contains_key(p) => {
                format!("{}{rest}", ctx[p])
            }
            _ => s.to_string(),
        }
    };
    let as_list = |v: &Value| -> Vec<Value> {
        match v {
            Value::Array(a) => a.clone(),
            other => vec![other.clone()],
        }
    };
    let mut out = BTreeSet::new();
    for node in doc["@graph"].as_array().ok_or("missing @graph")? {
        let node = node.as_object().ok_or("node is not an object")?;
        let s = expand(node["@id"].as_str().ok_or("node without @id")?);
        for (key, values) in node {
            match key.as_str() {
                "@id" => {}
                "@type" => {
                    for t in as_list(values) {
                        let t = t.as_str().ok_or("non-string @type")?;
                        out.insert((s.clone(), RDF_TYPE.into(), format!("<{}>", expand(t))));
                    }
                }
                p => {
                    let p = expand(p);
                    for v in as_list(values) {
                        let o = match &v {
                            Value::String(lit) => format!("{lit:?}^^{XSD_STRING}"),
                            Value::Object(o) if o.contains_key("@id") => {
                                format!("<{}>", expand(o["@id"].as_str().ok_or("bad @id")?))
                            }
                            Value::Object(o) if o.contains_key("@value") => {
                                let lit = o["@value"].as_str().ok_or("non-string @value")?;
                                let dt = o
                                    .get("@type")
                                    .and_then(Value::as_str)
                                    .map(&expand)
                                    .unwrap_or_else(|| XSD_STRING.into());
                                format!("{lit:?}^^{dt}")
                            }
                            other => return Err(format!("unsupported value {other}")),
                        };
                        out.insert((s.clone(), p.clone(), o));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn graph_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..5 {
        let g = random_graph(&mut rng, 1000);
        let back =
            parse_ntriples(&serialize_ntriples(&g)).map_err(|e| format!("round {round}: {e}"))?;
        ensure!(back == g, "round {round}: graph changed after a round-trip");
        ensure!(
            flatten(&back) == flatten(&g),
            "round {round}: triple sets differ"
        );
    }
    let out = fixture_run()?;
    let nt = fixture_graph()?;
    let doc: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("graph.jsonld")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let from_jsonld = expand_jsonld(&doc)?;
    let from_nt = flatten(&nt);
    ensure!(
        from_jsonld == from_nt,
        "JSON-LD has {} triples, N-Triples {}; {} only in JSON-LD, {} only in N-Triples",
        from_jsonld.len(),
        from_nt.len(),
        from_jsonld.difference(&from_nt).count(),
        from_nt.difference(&from_jsonld).count()
    );
    Ok(format!(
        "5 random graphs of 1000 triples; fixture graph of {} triples agrees",
        from_nt.len()
    ))
}

// ---------------------------------------------------------------------------
// Query oracle

fn per_year_ast() -> QueryAst {
    let schema = "http://schema.org/";
    let var = |v: &str| PatternTerm::Var(v.into());
    let iri = |s: &str| PatternTerm::Const(Term::Iri(Iri::new(s).unwrap()));
    let pat = |s, p, o| TriplePattern {
        subject: s,
        predicate: p,
        object: o,
    };
    let count_n = Count {
        var: Some("n".into()),
    };
    QueryAst {
        prefixes: BTreeMap::from([("schema".to_string(), schema.to_string())]),
        select: vec![
            SelectItem::Var("n".into()),
            SelectItem::Var("y".into()),
            SelectItem::Count {
                count: count_n.clone(),
                alias: "count".into(),
            },
        ],
        patterns: vec![
            pat(
                var("s"),
                iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"),
                iri("http://schema.org/SoftwareApplication"),
            ),
            pat(var("s"), iri("http://schema.org/name"), var("n")),
            pat(
                var("m"),
                iri("http://data.gesis.org/softwarekg/software"),
                var("s"),
            ),
            pat(var("p"), iri("http://schema.org/mentions"), var("m")),
            pat(
                var("p"),
                iri("http://purl.org/dc/elements/1.1/date"),
                var("y"),
            ),
        ],
        group_by: vec!["n".into(), "y".into()],
        having: Some(Having {
            count: count_n,
            op: CmpOp::Gt,
            value: 1,
        }),
        order_by: vec![OrderKey {
            expr: OrderExpr::Var("count".into()),
            descending: true,
        }],
    }
}

type Row = Vec<Term>;

/// Nested loops over every triple for every pattern, then grouping, HAVING
/// and projection. No indexes, no join reordering.
fn naive_execute(ast: &QueryAst, g: &TripleGraph) -> Vec<Row> {
    let triples: Vec<&Triple> = g.iter().collect();
    let mut solutions: Vec<HashMap<String, Term>> = vec![HashMap::new()];
    for pat in &ast.patterns {
        let mut next = Vec::new();
        for sol in &solutions {
            for t in &triples {
                let values = [
                    Term::Iri(t.subject.clone()),
                    Term::Iri(t.predicate.clone()),
                    t.object.clone(),
                ];
                let mut ext = sol.clone();
                let ok = pat.terms().iter().zip(values).all(|(pt, val)| match pt {
                    PatternTerm::Const(c) => *c == val,
                    PatternTerm::Var(v) => match ext.get(v) {
                        Some(bound) => *bound == val,
                        None => {
                            ext.insert(v.clone(), val);
                            true
                        }
                    },
                });
                if ok {
                    next.push(ext);
                }
            }
        }
        solutions = next;
    }
    let integer = |n: usize| Term::typed(n.to_string(), "http://www.w3.org/2001/XMLSchema#integer");
    let count = |c: &Count, members: &[&HashMap<String, Term>]| match &c.var {
        None => members.len(),
        Some(v) => members.iter().filter(|m| m.contains_key(v)).count(),
    };
    let aggregated = !ast.group_by.is_empty()
        || ast
            .select
            .iter()
            .any(|s| matches!(s, SelectItem::Count { .. }));
    if !aggregated {
        return solutions
            .iter()
            .map(|sol| ast.select.iter().map(|s| sol[s.column()].clone()).collect())
            .collect();
    }
    let mut groups: BTreeMap<Vec<Term>, Vec<&HashMap<String, Term>>> = BTreeMap::new();
    for sol in &solutions {
        let key = ast.group_by.iter().map(|v| sol[v].clone()).collect();
        groups.entry(key).or_default().push(sol);
    }
    if ast.group_by.is_empty() && groups.is_empty() {
        groups.insert(Vec::new(), Vec::new());
    }
    let mut rows = Vec::new();
    for (key, members) in &groups {
        if let Some(h) = &ast.having {
            if !h.op.holds(count(&h.count, members) as i64, h.value) {
                continue;
            }
        }
        rows.push(
            ast.select
                .iter()
                .map(|s| match s {
                    SelectItem::Var(v) => {
                        key[ast.group_by.iter().position(|g| g == v).unwrap()].clone()
                    }
                    SelectItem::Count { count: c, .. } => integer(count(c, members)),
                })
                .collect(),
        );
    }
    rows
}

const PRELUDE: &str = "PREFIX schema: <http://schema.org/>
PREFIX skg: <http://data.gesis.org/softwarekg/>
PREFIX dc: <http://purl.org/dc/elements/1.1/>
PREFIX nif: <http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#>
";

const QUERIES: [&str; 19] = [
    "SELECT ?s ?n WHERE { ?s a schema:SoftwareApplication . ?s schema:name ?n . }",
    "SELECT ?p ?d WHERE { ?p a schema:ScholarlyArticle . ?p dc:date ?d . }",
    "SELECT ?n (COUNT(?m) AS ?c) WHERE { ?m skg:software ?s . ?s schema:name ?n . } GROUP BY ?n ORDER BY DESC(?c) ?n",
    "SELECT ?p ?m WHERE { ?p schema:mentions ?m . }",
    "SELECT (COUNT(*) AS ?c) WHERE { ?s ?p ?o . }",
    "SELECT ?t (COUNT(?s) AS ?c) WHERE { ?s a ?t . } GROUP BY ?t",
    "SELECT ?p (COUNT(*) AS ?c) WHERE { ?s ?p ?o . } GROUP BY ?p HAVING (COUNT(*) >= 10)",
    "SELECT ?a ?n WHERE { ?p schema:author ?a . ?a schema:name ?n . } ORDER BY ?n",
    "SELECT ?a ?o WHERE { ?a schema:affiliation ?o . }",
    "SELECT ?n ?d WHERE { ?p schema:mentions ?m . ?m skg:software ?s . ?s schema:name ?n . ?p dc:date ?d . } ORDER BY ?d ?n",
    "SELECT ?s ?x WHERE { ?s schema:sameAs ?x . }",
    "SELECT ?d (COUNT(?p) AS ?c) WHERE { ?p dc:date ?d . } GROUP BY ?d HAVING (COUNT(?p) > 1) ORDER BY ?d",
    "SELECT ?s WHERE { ?s a schema:Nothing . }",
    "SELECT (COUNT(?s) AS ?c) WHERE { ?s a schema:Nothing . }",
    "SELECT ?m ?v WHERE { ?m skg:version ?v . }",
    "SELECT ?n (COUNT(?p) AS ?c) WHERE { ?p schema:mentions ?m . ?m skg:software ?s . ?s schema:name ?n . } GROUP BY ?n HAVING (COUNT(?p) < 5)",
    "SELECT ?s ?o WHERE { ?s schema:name ?o . ?s schema:name ?o . }",
    "SELECT ?m ?x WHERE { ?m a nif:String . ?m nif:anchorOf ?x . }",
    "SELECT ?p ?t WHERE { ?p a schema:ScholarlyArticle . ?p schema:name ?t . } ORDER BY DESC(?t)",
];

fn multiset(rows: &[Row]) -> BTreeMap<&Row, usize> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(r).or_insert(0) += 1;
    }
    m
}

fn query_oracle() -> Outcome {
    let parsed = parse_query(SOFTWARE_PER_YEAR).map_err(|e| e.to_string())?;
    ensure!(
        parsed == per_year_ast(),
        "per-year query AST differs: {parsed:#?}"
    );
    let g = fixture_graph()?;
    let mut queries: Vec<String> = vec![SOFTWARE_PER_YEAR.to_string()];
    queries.extend(QUERIES.iter().map(|q| format!("{PRELUDE}{q}")));
    let mut non_empty = 0;
    for (i, q) in queries.iter().enumerate() {
        let ast = parse_query(q).map_err(|e| format!("query {i}: {e}"))?;
        let got = execute(&ast, &g);
        ensure!(
            got.columns == ast.columns(),
            "query {i}: columns {:?}",
            got.columns
        );
        let want = naive_execute(&ast, &g);
        ensure!(
            multiset(&got.rows) == multiset(&want),
            "query {i}: {} rows vs {} from the nested-loop evaluator",
            got.rows.len(),
            want.len()
        );
        if !want.is_empty() {
            non_empty += 1;
        }
    }
    ensure!(non_empty >= 15, "only {non_empty} queries return rows");
    Ok(format!(
        "{} queries agree, {non_empty} with rows",
        queries.len()
    ))
}

// ---------------------------------------------------------------------------
// Determinism

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable output dir") {
            let p = entry.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let a = fixture_run()?;
    let b = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-run-b");
    run_pipeline(&b)?;
    let fa = files_under(a);
    let fb = files_under(&b);
    let names_a: HashSet<_> = fa.keys().collect();
    let names_b: HashSet<_> = fb.keys().collect();
    ensure!(names_a == names_b, "file sets differ");
    let differing: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    ensure!(differing.is_empty(), "differing files: {differing:?}");
    Ok(format!("{} files identical", fa.len()))
}
