use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::io::{sha256_file, write_atomic};
use crate::corpus::{
    build_vocabulary, encode, filter_records, load_lemma_lexicon, load_stopwords, preprocess, read_archive,
    slice_epochs_with, Document, Epoch, EpochLayout, Vocabulary,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, classify_events, events_to_csv, to_dot, GraphExport};
use crate::hdp::{fit_epoch, Topic, TopicRecord};
use crate::stats::derive_seed;
use crate::synth::{
    generate_corpus, match_epoch, score_events, synthetic_terms, to_documents, GenerativeSpec, GroundTruth, Matching,
};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Corpus,
    Epochs,
    Graph,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Corpus, Stage::Epochs, Stage::Graph];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Epochs => "epochs",
            Stage::Graph => "graph",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub fingerprint: String,
    /// Output path relative to the run directory -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    pub config: RunConfig,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(run_dir: &Path) -> Result<Option<Manifest>> {
        let path = run_dir.join(MANIFEST);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| Error::Parse {
                record: path.display().to_string(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn save(&self, run_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&run_dir.join(MANIFEST), text.as_bytes())
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.get(stage.name())
    }
}

/// What happened to each stage in one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub skipped: bool,
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("serializable")
}

fn file_digest(config: &RunConfig, path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => sha256_file(&config.resolve(p)),
        None => Ok(String::new()),
    }
}

fn fingerprint(config: &RunConfig, stage: Stage, upstream: &str) -> Result<String> {
    let fp = match stage {
        Stage::Corpus => {
            let inputs = [
                file_digest(config, &config.archive)?,
                file_digest(config, &config.stopwords)?,
                file_digest(config, &config.lemma_lexicon)?,
                file_digest(config, &config.synthetic_spec)?,
            ];
            let settings = (
                &config.language,
                config.min_token_len,
                config.energy_fraction,
                config.window_years,
                config.lag_years,
                config.first_start_year,
                config.last_year,
            );
            hash_parts(&[b"corpus", &json(&inputs), &json(&settings)])
        }
        Stage::Epochs => hash_parts(&[
            b"epochs",
            upstream.as_bytes(),
            &json(&config.fit_config()),
            &config.master_seed.to_le_bytes(),
        ]),
        Stage::Graph => hash_parts(&[
            b"graph",
            upstream.as_bytes(),
            config.measure.name().as_bytes(),
            &config.threshold.to_le_bytes(),
            &config.master_seed.to_le_bytes(),
        ]),
    };
    Ok(fp)
}

fn stage_error(stage: Stage) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: stage.name().into(),
            source: Box::new(other),
        },
    }
}

/// Writes outputs atomically and records their checksums.
struct StageWriter<'a> {
    run_dir: &'a Path,
    outputs: BTreeMap<String, String>,
}

impl<'a> StageWriter<'a> {
    fn new(run_dir: &'a Path) -> Self {
        Self {
            run_dir,
            outputs: BTreeMap::new(),
        }
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.run_dir.join(rel), bytes)?;
        self.outputs.insert(rel.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        let digest = sha256_file(&self.run_dir.join(rel))?;
        self.outputs.insert(rel.to_string(), digest);
        Ok(())
    }
}

fn outputs_intact(run_dir: &Path, record: &StageRecord) -> bool {
    record
        .outputs
        .iter()
        .all(|(rel, digest)| sha256_file(&run_dir.join(rel)).map(|d| &d == digest).unwrap_or(false))
}

/// Run directory paths.
pub mod layout {
    pub const DOCUMENTS: &str = "corpus/documents.jsonl";
    pub const VOCABULARY: &str = "corpus/vocabulary.txt";
    pub const EPOCHS: &str = "corpus/epochs.json";
    pub const REPORT: &str = "corpus/report.json";
    pub const GROUND_TRUTH: &str = "corpus/ground_truth.json";
    pub const GRAPH: &str = "graph/graph.json";
    pub const DOT: &str = "graph/graph.dot";
    pub const EVENTS: &str = "graph/events.csv";
    pub const EVALUATION: &str = "graph/evaluation.json";

    pub fn topics(epoch: usize) -> String {
        format!("epochs/epoch_{epoch:03}/topics.jsonl")
    }

    pub fn diagnostics(epoch: usize) -> String {
        format!("epochs/epoch_{epoch:03}/diagnostics.tsv")
    }

    pub fn epoch_done(epoch: usize) -> String {
        format!("epochs/epoch_{epoch:03}/.done")
    }
}

/// Run every stage up to and including `until`, skipping stages whose
/// fingerprint and outputs are unchanged. `jobs` bounds concurrent epoch
/// fits; 0 uses all cores.
pub fn run_pipeline(config: &RunConfig, until: Stage, jobs: usize) -> Result<Vec<StageOutcome>> {
    config.validate()?;
    let run_dir = config.output_path();
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
    let mut manifest = match Manifest::load(&run_dir)? {
        Some(m) => m,
        None => Manifest {
            engine_version: crate::VERSION.into(),
            config: config.clone(),
            stages: BTreeMap::new(),
        },
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;

    let mut outcomes = Vec::new();
    let mut upstream = String::new();
    for stage in Stage::ALL.into_iter().filter(|s| *s <= until) {
        let fp = fingerprint(config, stage, &upstream).map_err(stage_error(stage))?;
        let done = manifest
            .stage(stage)
            .is_some_and(|r| r.fingerprint == fp && outputs_intact(&run_dir, r));
        if done {
            log::info!("stage {}: up to date", stage.name());
        } else {
            log::info!("stage {}: running", stage.name());
            let start = Instant::now();
            let mut writer = StageWriter::new(&run_dir);
            let result = match stage {
                Stage::Corpus => corpus_stage(config, &mut writer),
                Stage::Epochs => pool.install(|| epochs_stage(config, &run_dir, &fp, &mut writer)),
                Stage::Graph => graph_stage(config, &run_dir, &mut writer),
            };
            result.map_err(stage_error(stage))?;
            // Downstream records are stale once an upstream stage reruns.
            for later in Stage::ALL.iter().filter(|s| **s > stage) {
                manifest.stages.remove(later.name());
            }
            manifest.stages.insert(
                stage.name().into(),
                StageRecord {
                    fingerprint: fp.clone(),
                    outputs: writer.outputs,
                    wall_time_ms: start.elapsed().as_millis() as u64,
                },
            );
            manifest.engine_version = crate::VERSION.into();
            manifest.config = config.clone();
            manifest.save(&run_dir).map_err(stage_error(stage))?;
        }
        outcomes.push(StageOutcome { stage, skipped: done });
        upstream = fp;
    }
    Ok(outcomes)
}

#[derive(Debug, Default, Serialize)]
struct CorpusReport {
    records: usize,
    kept: usize,
    dropped_missing_abstract: usize,
    dropped_wrong_language: usize,
    empty_after_preprocessing: usize,
    excluded_after_encoding: usize,
    vocabulary_size: usize,
    energy: f64,
    epochs: usize,
    empty_epochs: usize,
}

fn load_source(
    config: &RunConfig,
    report: &mut CorpusReport,
) -> Result<(Vec<Document>, Option<GroundTruth>, EpochLayout)> {
    if let Some(spec_path) = &config.synthetic_spec {
        let path = config.resolve(spec_path);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let spec = GenerativeSpec::from_toml(&text)?;
        let (docs, truth) = generate_corpus(&spec)?;
        report.records = docs.len();
        report.kept = docs.len();
        // One synthetic epoch per year.
        return Ok((
            to_documents(&docs, spec.vocab_size),
            Some(truth),
            EpochLayout::new(1, 1),
        ));
    }
    let archive = config.resolve(config.archive.as_ref().expect("validated"));
    let records = read_archive(&archive)?;
    report.records = records.len();
    let (kept, filter) = filter_records(records, &config.language);
    report.kept = kept.len();
    for (_, reason) in &filter.dropped {
        match reason {
            crate::corpus::DropReason::MissingAbstract => report.dropped_missing_abstract += 1,
            crate::corpus::DropReason::WrongLanguage => report.dropped_wrong_language += 1,
        }
    }
    let stopwords = match &config.stopwords {
        Some(p) => load_stopwords(&config.resolve(p))?,
        None => Default::default(),
    };
    let lexicon = match &config.lemma_lexicon {
        Some(p) => load_lemma_lexicon(&config.resolve(p))?,
        None => Default::default(),
    };
    let options = config.preprocess_options();
    let mut docs = Vec::with_capacity(kept.len());
    for record in &kept {
        match preprocess(record, &stopwords, &lexicon, &options) {
            Ok(d) => docs.push(d),
            Err(Error::EmptyAfterPreprocessing { .. }) => report.empty_after_preprocessing += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((docs, None, config.epoch_layout()))
}

fn corpus_stage(config: &RunConfig, w: &mut StageWriter) -> Result<()> {
    let mut report = CorpusReport::default();
    let (docs, truth, layout) = load_source(config, &mut report)?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("no document survived filtering".into()));
    }
    let vocab = build_vocabulary(&docs, config.energy_fraction)?;
    let docs: Vec<Document> = docs.into_iter().map(|d| encode(d, &vocab)).collect();
    report.excluded_after_encoding = docs.iter().filter(|d| d.is_excluded()).count();
    let docs: Vec<Document> = docs.into_iter().filter(|d| !d.is_excluded()).collect();
    let epochs = slice_epochs_with(&docs, &layout)?;
    report.vocabulary_size = vocab.len();
    report.energy = vocab.energy();
    report.epochs = epochs.len();
    report.empty_epochs = epochs.iter().filter(|e| e.is_empty()).count();

    let mut lines = String::new();
    for d in &docs {
        lines.push_str(&serde_json::to_string(d).expect("document serializes"));
        lines.push('\n');
    }
    w.write(layout::DOCUMENTS, lines.as_bytes())?;
    w.write(layout::VOCABULARY, vocab.to_text().as_bytes())?;
    w.write(
        layout::EPOCHS,
        &serde_json::to_vec_pretty(&epochs).expect("epochs serialize"),
    )?;
    w.write(
        layout::REPORT,
        &serde_json::to_vec_pretty(&report).expect("report serializes"),
    )?;
    if let Some(truth) = truth {
        w.write(
            layout::GROUND_TRUTH,
            &serde_json::to_vec(&truth).expect("truth serializes"),
        )?;
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_documents(run_dir: &Path) -> Result<Vec<Document>> {
    let path = run_dir.join(layout::DOCUMENTS);
    read_text(&path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                record: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_vocabulary(run_dir: &Path) -> Result<Vocabulary> {
    Vocabulary::from_text(&read_text(&run_dir.join(layout::VOCABULARY))?)
}

pub fn load_epochs(run_dir: &Path) -> Result<Vec<Epoch>> {
    let path = run_dir.join(layout::EPOCHS);
    serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Parse {
        record: path.display().to_string(),
        message: e.to_string(),
    })
}

fn topics_to_jsonl(topics: &[Topic]) -> String {
    let mut out = String::new();
    for t in topics {
        out.push_str(&serde_json::to_string(&t.to_record()).expect("topic serializes"));
        out.push('\n');
    }
    out
}

pub fn load_topics(run_dir: &Path, epoch: usize) -> Result<Vec<Topic>> {
    let path = run_dir.join(layout::topics(epoch));
    read_text(&path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let rec: TopicRecord = serde_json::from_str(l).map_err(|e| Error::Parse {
                record: path.display().to_string(),
                message: e.to_string(),
            })?;
            rec.into_topic()
        })
        .collect()
}

fn epochs_stage(config: &RunConfig, run_dir: &Path, fp: &str, w: &mut StageWriter) -> Result<()> {
    let docs = load_documents(run_dir)?;
    let vocab = load_vocabulary(run_dir)?;
    let epochs = load_epochs(run_dir)?;
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let fit = config.fit_config();
    let terms = vocab.terms();

    // Each epoch leaves a marker holding the stage fingerprint, so an
    // interrupted stage resumes at the first unfinished epoch.
    epochs
        .par_iter()
        .map(|epoch| {
            let marker = run_dir.join(layout::epoch_done(epoch.index));
            let topics_path = run_dir.join(layout::topics(epoch.index));
            if std::fs::read_to_string(&marker).is_ok_and(|m| m == fp) && topics_path.exists() {
                log::info!("epoch {}: reusing finished fit", epoch.index);
                return Ok(());
            }
            let epoch_docs: Vec<Vec<u32>> = epoch
                .doc_ids
                .iter()
                .filter_map(|id| by_id.get(id.as_str()))
                .filter_map(|d| d.encoded.clone())
                .filter(|e| !e.is_empty())
                .collect();
            let (topics, diag_text) = if epoch_docs.is_empty() {
                (Vec::new(), String::new())
            } else {
                let seed = derive_seed(config.master_seed, epoch.index as u64);
                let (topics, diag) = fit_epoch(&epoch_docs, terms, vocab.len(), &fit, seed, epoch.index)?;
                log::info!("epoch {} ({}): K = {}", epoch.index, epoch.label(), topics.len());
                (topics, diag.to_text())
            };
            write_atomic(&topics_path, topics_to_jsonl(&topics).as_bytes())?;
            write_atomic(&run_dir.join(layout::diagnostics(epoch.index)), diag_text.as_bytes())?;
            write_atomic(&marker, fp.as_bytes())
        })
        .collect::<Result<()>>()?;

    for epoch in &epochs {
        w.record(&layout::topics(epoch.index))?;
        w.record(&layout::diagnostics(epoch.index))?;
    }
    Ok(())
}

/// Planted distributions restated over the run vocabulary.
fn project_truth(truth: &GroundTruth, vocab: &Vocabulary) -> GroundTruth {
    let v_synth = truth.planted.first().map_or(0, |t| t.phi_true.len());
    let terms = synthetic_terms(v_synth);
    let map: Vec<Option<usize>> = terms.iter().map(|t| vocab.index_of(t)).collect();
    let project = |phi: &[f64]| -> Option<Vec<f64>> {
        let mut out = vec![0.0; vocab.len()];
        for (w, &p) in phi.iter().enumerate() {
            if let Some(i) = map[w] {
                out[i] += p;
            }
        }
        let total: f64 = out.iter().sum();
        (total > 0.0).then(|| out.into_iter().map(|p| p / total).collect())
    };
    GroundTruth {
        planted: truth.planted.clone(),
        events: truth.events.clone(),
        epoch_phi: truth
            .epoch_phi
            .iter()
            .map(|live| live.iter().filter_map(|(id, phi)| Some((*id, project(phi)?))).collect())
            .collect(),
    }
}

pub fn load_run_topics(run_dir: &Path) -> Result<Vec<(usize, Vec<Topic>)>> {
    load_epochs(run_dir)?
        .iter()
        .map(|e| Ok((e.index, load_topics(run_dir, e.index)?)))
        .collect()
}

fn graph_stage(config: &RunConfig, run_dir: &Path, w: &mut StageWriter) -> Result<()> {
    let epoch_topics = load_run_topics(run_dir)?;
    let graph = build_graph(&epoch_topics, config.measure, config.threshold)?;
    let events = classify_events(&graph);
    w.write(
        layout::GRAPH,
        GraphExport::from_graph(&graph, Some(config.master_seed))
            .to_json()
            .as_bytes(),
    )?;
    w.write(layout::DOT, to_dot(&graph).as_bytes())?;
    w.write(layout::EVENTS, events_to_csv(&events).as_bytes())?;

    let truth_path = run_dir.join(layout::GROUND_TRUTH);
    if truth_path.exists() {
        let truth: GroundTruth = serde_json::from_str(&read_text(&truth_path)?).map_err(|e| Error::Parse {
            record: truth_path.display().to_string(),
            message: e.to_string(),
        })?;
        let truth = project_truth(&truth, &load_vocabulary(run_dir)?);
        let mut pairs = Vec::new();
        for (e, topics) in &epoch_topics {
            let live = truth.epoch_phi.get(*e).map_or(0, Vec::len);
            if !topics.is_empty() && live > 0 {
                pairs.extend(match_epoch(*e, topics, &truth, config.measure)?.pairs);
            }
        }
        let score = if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().map(|p| p.similarity).sum::<f64>() / pairs.len() as f64
        };
        let matching = Matching { pairs, score };
        let scores = score_events(&events, &truth.events, &matching);
        let eval = serde_json::json!({
            "matching": matching,
            "planted_events": truth.events,
            "scores": scores,
        });
        w.write(
            layout::EVALUATION,
            &serde_json::to_vec_pretty(&eval).expect("evaluation serializes"),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_archive, RawRecord};

    fn record(id: usize, year: i32, text: &str) -> RawRecord {
        RawRecord {
            id: format!("p{id}"),
            title: String::new(),
            abstract_text: text.into(),
            year,
            language: "eng".into(),
        }
    }

    fn small_run(dir: &Path) -> RunConfig {
        let texts = [
            "gene genetic mutation variant gene heritability",
            "vaccine measles vaccination vaccine exposure",
            "school children classroom teacher school",
        ];
        let records: Vec<RawRecord> = (0..36)
            .map(|i| record(i, 2000 + (i as i32 % 6), texts[i % 3]))
            .collect();
        let archive = dir.join("records.jsonl");
        write_archive(&archive, &records).unwrap();
        RunConfig {
            archive: Some(archive),
            output_dir: dir.join("run"),
            window_years: 2,
            lag_years: 1,
            burn_in: 10,
            sweeps: 5,
            energy_fraction: 1.0,
            ..RunConfig::default()
        }
    }

    #[test]
    fn stages_persist_and_skip() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_run(dir.path());
        let first = run_pipeline(&config, Stage::Graph, 2).unwrap();
        assert!(first.iter().all(|o| !o.skipped));
        let run = config.output_path();
        for rel in [
            layout::DOCUMENTS,
            layout::VOCABULARY,
            layout::GRAPH,
            layout::DOT,
            layout::EVENTS,
        ] {
            assert!(run.join(rel).exists(), "{rel}");
        }
        assert_eq!(load_epochs(&run).unwrap().len(), 5);
        let before = std::fs::read(run.join(MANIFEST)).unwrap();
        let second = run_pipeline(&config, Stage::Graph, 1).unwrap();
        assert!(second.iter().all(|o| o.skipped));
        assert_eq!(std::fs::read(run.join(MANIFEST)).unwrap(), before);

        // Only the graph depends on the threshold.
        let retuned = RunConfig {
            threshold: 0.3,
            ..config.clone()
        };
        let third = run_pipeline(&retuned, Stage::Graph, 1).unwrap();
        assert_eq!(
            third.iter().map(|o| o.skipped).collect::<Vec<_>>(),
            vec![true, true, false]
        );
    }

    #[test]
    fn tampered_output_reruns_stage() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_run(dir.path());
        run_pipeline(&config, Stage::Corpus, 1).unwrap();
        let vocab = config.output_path().join(layout::VOCABULARY);
        std::fs::write(&vocab, "garbage").unwrap();
        let again = run_pipeline(&config, Stage::Corpus, 1).unwrap();
        assert!(!again[0].skipped);
        assert!(load_vocabulary(&config.output_path()).is_ok());
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_run(dir.path());
        config.archive = Some(dir.path().join("missing.jsonl"));
        let err = run_pipeline(&config, Stage::Graph, 1).unwrap_err();
        assert!(err.to_string().contains("corpus"), "{err}");
        assert_eq!(err.exit_code(), 3);
        config.archive = Some(dir.path().join("records.jsonl"));
        config.lag_years = 5;
        assert_eq!(run_pipeline(&config, Stage::Graph, 1).unwrap_err().exit_code(), 1);
    }
}
