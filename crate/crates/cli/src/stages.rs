//! Pipeline stages. Each reads its predecessors' artifacts from the output
//! directory and writes its own, plus a manifest.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use swkg_core::corpus::{parse_conll, write_conll, TaggedSentence};
use swkg_core::disambig::{
    cluster_report, disambiguate, mention_strings, Enrichment, Kb, MentionCluster, Normalizer,
};
use swkg_core::eval::{corpus_spans, evaluate_all, report_json, report_table};
use swkg_core::ingest::{load_corpus_dir, load_manifest, Document, HeadingSet, StopWords};
use swkg_core::kg::{
    build_graph, parse_ntriples, serialize_jsonld, serialize_ntriples, KgConfig, TripleGraph,
};
use swkg_core::query::{
    availability_trend, execute, mentions_per_year, parse_query, successor_analysis, ResultTable,
};
use swkg_core::tagger::{
    model_from_str, model_to_string, tag_corpus, train, viterbi_decode, CrfModel, FeatureExtractor,
    Mention,
};
use swkg_core::weaksup::{
    apply_lfs, emit_ssc, false_positive_ngrams, fit_label_model, load_negative_list, load_wordlist,
    vote_matrix, EmConfig, ExactRules, KbAliasDictionary, LabelModel, LabelingFunctions,
};

use crate::config::PipelineConfig;
use crate::manifest::Manifest;

/// An artifact file and its format tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Artifact {
    pub file: &'static str,
    pub format: &'static str,
    pub producer: &'static str,
}

macro_rules! artifacts {
    ($($name:ident = $file:literal, $format:literal, $producer:literal;)*) => {
        $(pub const $name: Artifact = Artifact { file: $file, format: $format, producer: $producer };)*
    };
}

artifacts! {
    DOCUMENTS = "documents.jsonl", "swkg-documents-1", "ingest";
    SSC = "ssc.conll", "swkg-bio-1", "weaklabel";
    LABEL_MODEL = "label_model.tsv", "swkg-label-model-1", "weaklabel";
    MODEL = "model.crf", "swkg-crf-1", "train";
    TRAINING_LOG = "training_log.tsv", "swkg-training-log-1", "train";
    MENTIONS = "mentions.jsonl", "swkg-mentions-1", "tag";
    TAGGING_SUMMARY = "tagging_summary.tsv", "swkg-tagging-summary-1", "tag";
    EVALUATION = "evaluation.tsv", "swkg-evaluation-1", "evaluate";
    EVALUATION_JSON = "evaluation.json", "swkg-evaluation-1", "evaluate";
    CLUSTERS = "clusters.json", "swkg-clusters-1", "disambiguate";
    CLUSTER_REPORT = "clusters.tsv", "swkg-cluster-report-1", "disambiguate";
    GRAPH_NT = "graph.nt", "n-triples", "build-kg";
    GRAPH_JSONLD = "graph.jsonld", "json-ld", "build-kg";
}

/// A stage was started before its inputs were produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingArtifacts {
    pub stage: String,
    pub dir: PathBuf,
    pub missing: Vec<Artifact>,
}

impl fmt::Display for MissingArtifacts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage `{}` needs artifacts missing from {}:",
            self.stage,
            self.dir.display()
        )?;
        for a in &self.missing {
            write!(f, " {} (run `{}` first);", a.file, a.producer)?;
        }
        Ok(())
    }
}

impl std::error::Error for MissingArtifacts {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisKind {
    MentionsPerYear,
    Availability,
    Successor,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 3] = [
        AnalysisKind::MentionsPerYear,
        AnalysisKind::Availability,
        AnalysisKind::Successor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::MentionsPerYear => "mentions-per-year",
            AnalysisKind::Availability => "availability",
            AnalysisKind::Successor => "successor",
        }
    }

    /// File written by `pipeline`.
    pub fn csv_file(self) -> &'static str {
        match self {
            AnalysisKind::MentionsPerYear => "mentions_per_year.csv",
            AnalysisKind::Availability => "availability.csv",
            AnalysisKind::Successor => "successor.csv",
        }
    }
}

/// Shared state of one invocation.
pub struct Context {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    config_hash: String,
}

struct StageRun<'a> {
    ctx: &'a Context,
    manifest: Manifest,
}

impl StageRun<'_> {
    fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.manifest.input(role, path)
    }

    fn read(&mut self, a: Artifact) -> Result<String> {
        let path = self.ctx.artifact_path(a);
        self.manifest.input(a.file, &path)?;
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    }

    fn write(&mut self, a: Artifact, contents: &str) -> Result<()> {
        self.write_to(&self.ctx.artifact_path(a), a.file, a.format, contents)
    }

    fn write_to(&mut self, path: &Path, name: &str, format: &str, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.output(name, format, contents.as_bytes());
        Ok(())
    }

    fn finish(self) -> Result<()> {
        self.manifest.write(&self.ctx.out)
    }
}

fn jsonl<T: serde::Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

fn from_jsonl<T: serde::de::DeserializeOwned>(text: &str, name: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{name} line {}", i + 1)))
        .collect()
}

impl Context {
    pub fn new(cfg: PipelineConfig, out: PathBuf) -> Self {
        let config_hash = cfg.hash();
        Context {
            cfg,
            out,
            config_hash,
        }
    }

    pub fn artifact_path(&self, a: Artifact) -> PathBuf {
        self.out.join(a.file)
    }

    fn begin(&self, stage: &str, needs: &[Artifact]) -> Result<StageRun<'_>> {
        let missing: Vec<Artifact> = needs
            .iter()
            .copied()
            .filter(|a| !self.artifact_path(*a).is_file())
            .collect();
        if !missing.is_empty() {
            return Err(MissingArtifacts {
                stage: stage.to_string(),
                dir: self.out.clone(),
                missing,
            }
            .into());
        }
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(StageRun {
            ctx: self,
            manifest: Manifest::new(stage, &self.config_hash),
        })
    }

    fn stopwords(&self, run: &mut StageRun) -> Result<StopWords> {
        match self.cfg.path("stopwords") {
            Some(p) => {
                run.input("stopwords", &p)?;
                Ok(StopWords::from_file(&p)?)
            }
            None => Ok(StopWords::english()),
        }
    }

    fn headings(&self, run: &mut StageRun) -> Result<HeadingSet> {
        match self.cfg.path("mm_headings_file") {
            Some(p) => {
                run.input("mm_headings_file", &p)?;
                let text = std::fs::read_to_string(&p)
                    .with_context(|| format!("reading {}", p.display()))?;
                let lines: Vec<&str> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .collect();
                Ok(HeadingSet::new(&lines))
            }
            None => Ok(HeadingSet::default()),
        }
    }

    fn dictionary(&self, run: &mut StageRun) -> Result<KbAliasDictionary> {
        let english = match self.cfg.path("english_wordlist") {
            Some(p) => {
                run.input("english_wordlist", &p)?;
                load_wordlist(&p)?
            }
            None => HashSet::new(),
        };
        let p = self.cfg.require_path("kb_dictionary")?;
        run.input("kb_dictionary", &p)?;
        Ok(KbAliasDictionary::load(&p, &english)?)
    }

    fn labeling_functions(&self, run: &mut StageRun) -> Result<LabelingFunctions> {
        let dictionary = self.dictionary(run)?;
        let exact_rules = match self.cfg.path("exact_rules") {
            Some(p) => {
                run.input("exact_rules", &p)?;
                ExactRules::load(&p)?
            }
            None => ExactRules::default(),
        };
        let negative_list = match self.cfg.path("negative_list") {
            Some(p) => {
                run.input("negative_list", &p)?;
                load_negative_list(&p)?
            }
            None => LabelingFunctions::default_negative_list(),
        };
        Ok(LabelingFunctions {
            dictionary,
            exact_rules,
            negative_list,
        })
    }

    fn conll(
        &self,
        run: &mut StageRun,
        key: &str,
        stopwords: &StopWords,
    ) -> Result<Vec<TaggedSentence>> {
        let p = self.cfg.require_path(key)?;
        run.input(key, &p)?;
        let text =
            std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        Ok(parse_conll(&text, &p.display().to_string(), stopwords)?)
    }

    fn kb(&self, run: &mut StageRun) -> Result<Kb> {
        match self.cfg.path("kb_export") {
            Some(p) => {
                run.input("kb_export", &p)?;
                Ok(Kb::load(&p)?)
            }
            None => Ok(Kb::default()),
        }
    }

    fn enrichment(&self, run: &mut StageRun) -> Result<Option<Enrichment>> {
        self.cfg
            .path("enrichment")
            .map(|p| {
                run.input("enrichment", &p)?;
                Ok(Enrichment::load(&p)?)
            })
            .transpose()
    }

    fn kg_config(&self) -> KgConfig {
        let mut k = KgConfig::default();
        for (key, slot) in [
            ("resource_base", &mut k.resource_base),
            ("kb_base", &mut k.kb_base),
            ("same_as_base", &mut k.same_as_base),
        ] {
            if let Some(v) = self.cfg.get(key) {
                *slot = v.to_string();
            }
        }
        k
    }

    fn documents(run: &mut StageRun) -> Result<Vec<Document>> {
        from_jsonl(&run.read(DOCUMENTS)?, DOCUMENTS.file)
    }

    fn model(run: &mut StageRun) -> Result<CrfModel> {
        Ok(model_from_str(&run.read(MODEL)?, MODEL.file)?)
    }

    pub fn ingest(&self) -> Result<()> {
        let mut run = self.begin("ingest", &[])?;
        let headings = self.headings(&mut run)?;
        let (root, mut docs) = match self.cfg.path("corpus_manifest") {
            Some(m) => {
                run.input("corpus_manifest", &m)?;
                let root = m.parent().map(Path::to_path_buf).unwrap_or_default();
                run.input("corpus", &root)?;
                (root, load_manifest(&m)?)
            }
            None => {
                let dir = self.cfg.require_path("corpus_dir")?;
                run.input("corpus", &dir)?;
                let docs = load_corpus_dir(&dir)?;
                (dir, docs)
            }
        };
        let mut with_mm = 0;
        for d in &mut docs {
            with_mm += usize::from(d.mark_mm(&headings).is_some());
            if let Ok(rel) = Path::new(&d.source_path).strip_prefix(&root) {
                d.source_path = rel.to_string_lossy().into_owned();
            }
        }
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        run.write(DOCUMENTS, &jsonl(&docs)?)?;
        eprintln!(
            "ingest: {} documents, {with_mm} with a methods section",
            docs.len()
        );
        run.finish()
    }

    /// `error_report` receives the labeling model's false-positive n-grams on
    /// the gold training corpus, candidates for the negative list.
    pub fn weaklabel(&self, error_report: Option<&Path>) -> Result<()> {
        let mut run = self.begin("weaklabel", &[DOCUMENTS])?;
        let docs = Self::documents(&mut run)?;
        let stopwords = self.stopwords(&mut run)?;
        let lfs = self.labeling_functions(&mut run)?;
        let max_n = self.cfg.max_ngram()?;
        let sentences: Vec<_> = docs
            .iter()
            .flat_map(|d| d.mm_sentences(&stopwords))
            .collect();
        let labeled = apply_lfs(&sentences, &lfs, max_n);
        let model = fit_label_model(&vote_matrix(&labeled, lfs.ids()), &EmConfig::default())?;
        let ssc = emit_ssc(&labeled, &model);
        let positives = ssc.iter().filter(|s| s.is_positive()).count();
        run.write(SSC, &write_conll(&ssc))?;
        run.write(LABEL_MODEL, &label_model_report(&model))?;
        if let Some(path) = error_report {
            let gold = self.conll(&mut run, "gsc_train", &stopwords)?;
            let mut text = String::from("ngram\tfalse_positives\n");
            for (ngram, n) in false_positive_ngrams(&gold, &lfs, &model, max_n) {
                text.push_str(&format!("{ngram}\t{n}\n"));
            }
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            run.write_to(path, &name, "swkg-error-report-1", &text)?;
        }
        eprintln!(
            "weaklabel: {} sentences, {positives} with software spans, class prior {:.3}",
            ssc.len(),
            model.class_prior
        );
        run.finish()
    }

    /// `use_ssc = false` trains on the gold corpus alone.
    pub fn train(&self, use_ssc: bool) -> Result<()> {
        let needs: &[Artifact] = if use_ssc { &[SSC] } else { &[] };
        let mut run = self.begin("train", needs)?;
        let stopwords = self.stopwords(&mut run)?;
        let ssc = if use_ssc {
            parse_conll(&run.read(SSC)?, SSC.file, &stopwords)?
        } else {
            Vec::new()
        };
        let gsc = self.conll(&mut run, "gsc_train", &stopwords)?;
        let fx = FeatureExtractor::new(self.dictionary(&mut run)?);
        let (ssc_cfg, gsc_cfg) = (self.cfg.training("ssc")?, self.cfg.training("gsc")?);
        let out = train(&ssc, &gsc, &ssc_cfg, &gsc_cfg, &fx)?;
        let mut log = String::from("stage\tepoch\tsentences\tmean_loss\tlearning_rate\n");
        for e in &out.epochs {
            log.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.stage, e.epoch, e.sentences, e.mean_loss, e.learning_rate
            ));
        }
        run.write(MODEL, &model_to_string(&out.model))?;
        run.write(TRAINING_LOG, &log)?;
        eprintln!(
            "train: {} features, {} ssc + {} gsc sentences, {} epochs",
            out.model.num_features(),
            ssc.len(),
            gsc.len(),
            out.epochs.len()
        );
        run.finish()
    }

    pub fn tag(&self) -> Result<()> {
        let mut run = self.begin("tag", &[MODEL, DOCUMENTS])?;
        let model = Self::model(&mut run)?;
        let docs = Self::documents(&mut run)?;
        let stopwords = self.stopwords(&mut run)?;
        let fx = FeatureExtractor::new(self.dictionary(&mut run)?);
        let result = tag_corpus(&model, &fx, &docs, &stopwords);
        run.write(MENTIONS, &jsonl(&result.mentions)?)?;
        let summary = format!(
            "tagged_documents\t{}\nskipped_documents\t{}\nmentions\t{}\nmentions_per_article\t{:.4}\n",
            result.tagged_docs,
            result.skipped_docs.len(),
            result.mentions.len(),
            result.mentions_per_article()
        );
        run.write(TAGGING_SUMMARY, &summary)?;
        eprintln!(
            "tag: {} mentions in {} documents ({:.2} per article), {} skipped",
            result.mentions.len(),
            result.tagged_docs,
            result.mentions_per_article(),
            result.skipped_docs.len()
        );
        run.finish()
    }

    /// Returns the four-mode report table.
    pub fn evaluate(&self) -> Result<String> {
        let mut run = self.begin("evaluate", &[MODEL])?;
        let model = Self::model(&mut run)?;
        let stopwords = self.stopwords(&mut run)?;
        let gold = self.conll(&mut run, "gsc_test", &stopwords)?;
        let fx = FeatureExtractor::new(self.dictionary(&mut run)?);
        let pred: Vec<TaggedSentence> = gold
            .iter()
            .map(|g| viterbi_decode(&model, &fx, &g.sentence))
            .collect();
        let results = evaluate_all(&corpus_spans(&pred), &corpus_spans(&gold))?;
        let table = report_table(&results);
        run.write(EVALUATION, &table)?;
        run.write(EVALUATION_JSON, &report_json(&results))?;
        run.finish()?;
        Ok(table)
    }

    pub fn disambiguate(&self) -> Result<()> {
        let mut run = self.begin("disambiguate", &[MENTIONS])?;
        let mentions: Vec<Mention> = from_jsonl(&run.read(MENTIONS)?, MENTIONS.file)?;
        let kb = self.kb(&mut run)?;
        let clusters = disambiguate(&mention_strings(&mentions), &kb, &Normalizer::default());
        let mut json = serde_json::to_string_pretty(&clusters)?;
        json.push('\n');
        run.write(CLUSTERS, &json)?;
        run.write(CLUSTER_REPORT, &cluster_report(&clusters))?;
        let linked = clusters.iter().filter(|c| c.kb_id.is_some()).count();
        eprintln!(
            "disambiguate: {} clusters, {linked} linked to the KB",
            clusters.len()
        );
        run.finish()
    }

    pub fn build_kg(&self) -> Result<()> {
        let mut run = self.begin("build-kg", &[DOCUMENTS, MENTIONS, CLUSTERS])?;
        let docs = Self::documents(&mut run)?;
        let mentions: Vec<Mention> = from_jsonl(&run.read(MENTIONS)?, MENTIONS.file)?;
        let clusters: Vec<MentionCluster> = serde_json::from_str(&run.read(CLUSTERS)?)?;
        let enrichment = self.enrichment(&mut run)?;
        let g = build_graph(
            &docs,
            &mentions,
            &clusters,
            enrichment.as_ref(),
            &self.kg_config(),
        )?;
        run.write(GRAPH_NT, &serialize_ntriples(&g))?;
        run.write(GRAPH_JSONLD, &serialize_jsonld(&g))?;
        eprintln!("build-kg: {} triples", g.len());
        run.finish()
    }

    fn graph(&self, run: &mut StageRun, stage: &str, path: Option<&Path>) -> Result<TripleGraph> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None => {
                let p = self.artifact_path(GRAPH_NT);
                if !p.is_file() {
                    return Err(MissingArtifacts {
                        stage: stage.to_string(),
                        dir: self.out.clone(),
                        missing: vec![GRAPH_NT],
                    }
                    .into());
                }
                p
            }
        };
        run.input("graph", &path)?;
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(parse_ntriples(&text)?)
    }

    /// Runs a query; with `csv` the table goes to that file, else it is returned as TSV.
    pub fn query(&self, text: &str, graph: Option<&Path>, csv: Option<&Path>) -> Result<String> {
        let mut run = self.begin("query", &[])?;
        let ast = parse_query(text)?;
        let g = self.graph(&mut run, "query", graph)?;
        let table = execute(&ast, &g);
        self.emit(run, table, csv)
    }

    pub fn analyze(
        &self,
        kind: AnalysisKind,
        graph: Option<&Path>,
        csv: Option<&Path>,
    ) -> Result<String> {
        let mut run = self.begin(&format!("analyze-{}", kind.name()), &[])?;
        let g = self.graph(&mut run, "analyze", graph)?;
        let table = match kind {
            AnalysisKind::MentionsPerYear => mentions_per_year(&g, self.cfg.top_k()?),
            AnalysisKind::Availability => {
                availability_trend(&g, self.enrichment(&mut run)?.as_ref())?
            }
            AnalysisKind::Successor => {
                let kb = self.kb(&mut run)?;
                successor_analysis(&g, &kb.replaced_by_pairs(), &self.kg_config().kb_base)
            }
        };
        self.emit(run, table, csv)
    }

    fn emit(&self, mut run: StageRun, table: ResultTable, csv: Option<&Path>) -> Result<String> {
        let shown = match csv {
            Some(path) => {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                run.write_to(path, &name, "csv", &table.to_csv()?)?;
                format!("{} rows written to {}\n", table.rows.len(), path.display())
            }
            None => table.to_tsv(),
        };
        run.finish()?;
        Ok(shown)
    }

    /// All stages in order, then the three analyses as CSV files. Returns the
    /// evaluation table when a test corpus is configured.
    pub fn pipeline(&self, use_ssc: bool) -> Result<Option<String>> {
        self.cfg.validate()?;
        let stage = |name: &str, r: Result<()>| r.with_context(|| format!("stage `{name}` failed"));
        stage("ingest", self.ingest())?;
        if use_ssc {
            stage("weaklabel", self.weaklabel(None))?;
        }
        stage("train", self.train(use_ssc))?;
        stage("tag", self.tag())?;
        let table = match self.cfg.path("gsc_test") {
            Some(_) => Some(self.evaluate().context("stage `evaluate` failed")?),
            None => None,
        };
        stage("disambiguate", self.disambiguate())?;
        stage("build-kg", self.build_kg())?;
        for kind in AnalysisKind::ALL {
            if kind == AnalysisKind::Availability && self.cfg.get("enrichment").is_none() {
                eprintln!("analyze: skipping availability, no enrichment file configured");
                continue;
            }
            let path = self.out.join(kind.csv_file());
            stage("analyze", self.analyze(kind, None, Some(&path)).map(drop))?;
        }
        Ok(table)
    }
}

fn label_model_report(m: &LabelModel) -> String {
    let mut s = String::from("lf_id\taccuracy\tpropensity\n");
    for id in &m.lf_ids {
        s.push_str(&format!(
            "{id}\t{:.6}\t{:.6}\n",
            m.lf_accuracies[id], m.lf_propensities[id]
        ));
    }
    s.push_str(&format!(
        "# class_prior\t{:.6}\n# threshold\t{}\n# iterations\t{}\n",
        m.class_prior, m.threshold, m.iterations
    ));
    s
}
