use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pipeline::{layout, load_epochs, load_run_topics, load_topics, load_vocabulary, Manifest, Stage};
use crate::error::{Error, Result};
use crate::graph::{
    build_graph, events_from_csv, events_to_csv, find_topic, trace_lineage, Direction, EventKind, GraphExport,
    SimilarityGraph, TopicNode,
};
use crate::hdp::Topic;

/// A run directory opened for queries.
pub struct Run {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Run {
    pub fn open(dir: &Path) -> Result<Run> {
        let manifest = Manifest::load(dir)?
            .ok_or_else(|| Error::invalid(format!("{} is not a run directory (no manifest)", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn require(&self, stage: Stage) -> Result<()> {
        if self.manifest.stage(stage).is_some() {
            Ok(())
        } else {
            Err(Error::Stage {
                stage: stage.name().into(),
                source: Box::new(Error::invalid(format!(
                    "stage `{}` has not completed in {}",
                    stage.name(),
                    self.dir.display()
                ))),
            })
        }
    }

    /// Rebuild the similarity graph from the epoch exports with the run's settings.
    pub fn graph(&self) -> Result<SimilarityGraph> {
        self.require(Stage::Epochs)?;
        let cfg = &self.manifest.config;
        build_graph(&load_run_topics(&self.dir)?, cfg.measure, cfg.threshold)
    }

    fn epoch_topics(&self, epoch: usize) -> Result<Vec<Topic>> {
        self.require(Stage::Epochs)?;
        if !load_epochs(&self.dir)?.iter().any(|e| e.index == epoch) {
            return Err(Error::invalid(format!("run has no epoch {epoch}")));
        }
        load_topics(&self.dir, epoch)
    }
}

fn describe(out: &mut String, t: &Topic, n_terms: usize) {
    let terms: Vec<String> = t
        .top_terms
        .iter()
        .take(n_terms)
        .map(|p| format!("{}:{:.4}", p.term, p.prob))
        .collect();
    let _ = writeln!(out, "{}:{}\tmass={}\t{}", t.epoch, t.topic_id, t.mass, terms.join(" "));
}

/// Best-matching topic for the query terms, within one epoch or across all.
pub fn find_topic_report(run: &Run, terms: &[String], epoch: Option<usize>) -> Result<String> {
    let vocab = load_vocabulary(&run.dir)?;
    let topics: Vec<Topic> = match epoch {
        Some(e) => run.epoch_topics(e)?,
        None => {
            run.require(Stage::Epochs)?;
            load_run_topics(&run.dir)?.into_iter().flat_map(|(_, t)| t).collect()
        }
    };
    let best = find_topic(&topics, terms, &vocab)?;
    let mut out = String::new();
    describe(&mut out, best, 10);
    Ok(out)
}

pub fn topics_report(run: &Run, epoch: usize) -> Result<String> {
    let mut out = String::new();
    for t in run.epoch_topics(epoch)? {
        describe(&mut out, &t, 10);
    }
    Ok(out)
}

/// Lineage sub-graph as a graph export document.
pub fn trace_export(run: &Run, node: TopicNode, direction: Direction, depth: usize) -> Result<String> {
    let graph = run.graph()?;
    let sub = trace_lineage(&graph, node, direction, depth)?;
    Ok(GraphExport::from_graph(&sub, Some(run.manifest.config.master_seed)).to_json())
}

pub fn events_report(run: &Run, kind: Option<EventKind>) -> Result<String> {
    run.require(Stage::Graph)?;
    let path = run.dir.join(layout::EVENTS);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let events: Vec<_> = events_from_csv(&text)?
        .into_iter()
        .filter(|e| kind.is_none_or(|k| e.kind == k))
        .collect();
    Ok(events_to_csv(&events))
}

/// Plain-text summary of a completed run.
pub fn run_report(run: &Run) -> Result<String> {
    run.require(Stage::Graph)?;
    let cfg = &run.manifest.config;
    let epochs = load_epochs(&run.dir)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "engine {}  master_seed {}",
        run.manifest.engine_version, cfg.master_seed
    );
    let _ = writeln!(out, "measure {}  threshold {}", cfg.measure, cfg.threshold);
    let _ = writeln!(out, "\nepoch\tyears\tdocs\ttopics");
    for e in &epochs {
        let k = load_topics(&run.dir, e.index)?.len();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", e.index, e.label(), e.doc_ids.len(), k);
    }
    let events = events_from_csv(
        &std::fs::read_to_string(run.dir.join(layout::EVENTS))
            .map_err(|e| Error::io(run.dir.join(layout::EVENTS), e))?,
    )?;
    let mut counts: BTreeMap<EventKind, usize> = EventKind::ALL.iter().map(|k| (*k, 0)).collect();
    for e in &events {
        *counts.entry(e.kind).or_default() += 1;
    }
    let _ = writeln!(out, "\nevents");
    for (k, n) in counts {
        let _ = writeln!(out, "{k}\t{n}");
    }
    let _ = writeln!(out, "({})", crate::graph::BOUNDARY_CONVENTION);
    let eval_path = run.dir.join(layout::EVALUATION);
    if let Ok(text) = std::fs::read_to_string(&eval_path) {
        let eval: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            record: eval_path.display().to_string(),
            message: e.to_string(),
        })?;
        let _ = writeln!(out, "\nplanted-structure recovery");
        if let Some(score) = eval["matching"]["score"].as_f64() {
            let _ = writeln!(out, "mean matched similarity\t{score:.4}");
        }
        let _ = writeln!(out, "kind\ttp\tfp\tfn\tprecision\trecall");
        for k in eval["scores"]["kinds"].as_array().into_iter().flatten() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.3}\t{:.3}",
                k["kind"].as_str().unwrap_or("?"),
                k["true_positives"],
                k["false_positives"],
                k["false_negatives"],
                k["precision"].as_f64().unwrap_or(f64::NAN),
                k["recall"].as_f64().unwrap_or(f64::NAN)
            );
        }
        if let Some(c) = eval["scores"]["convention"].as_str() {
            let _ = writeln!(out, "({c})");
        }
    }
    Ok(out)
}
