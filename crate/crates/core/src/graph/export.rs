use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{classify_events, EventKind, SimilarityGraph, TopicEvent, TopicNode, BOUNDARY_CONVENTION};
use crate::error::{Error, Result};
use crate::hdp::TermProb;

/// Top terms carried on each exported node.
pub const NODE_TOP_TERMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub measure: String,
    pub threshold: f64,
    pub engine_version: String,
    pub master_seed: Option<u64>,
    pub boundary_convention: String,
    pub epochs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub epoch: usize,
    pub topic_id: usize,
    pub mass: u64,
    pub top_terms: Vec<TermProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeExport {
    /// `[epoch, topic_id]`
    pub from: [usize; 2],
    pub to: [usize; 2],
    /// Rounded to six decimals.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub meta: GraphMeta,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<EdgeExport>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl GraphExport {
    pub fn from_graph(graph: &SimilarityGraph, master_seed: Option<u64>) -> Self {
        let nodes = graph
            .topics()
            .iter()
            .map(|t| NodeExport {
                epoch: t.epoch,
                topic_id: t.topic_id,
                mass: t.mass,
                top_terms: t.top_terms.iter().take(NODE_TOP_TERMS).cloned().collect(),
            })
            .collect();
        let edges = graph
            .edges()
            .iter()
            .map(|e| EdgeExport {
                from: [e.from.epoch, e.from.topic_id],
                to: [e.to.epoch, e.to.topic_id],
                weight: round6(e.weight),
            })
            .collect();
        GraphExport {
            meta: GraphMeta {
                measure: graph.measure().name(),
                threshold: graph.threshold(),
                engine_version: crate::VERSION.to_string(),
                master_seed,
                boundary_convention: BOUNDARY_CONVENTION.to_string(),
                epochs: graph.epochs().to_vec(),
            },
            nodes,
            edges,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph export serializes")
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: one rank per epoch, pen width proportional to edge
/// weight, emerging topics green, disappearing topics red, and split/merge
/// fan-outs noted in the node label.
pub fn to_dot(graph: &SimilarityGraph) -> String {
    let mut flags: BTreeMap<TopicNode, Vec<&TopicEvent>> = BTreeMap::new();
    let events = classify_events(graph);
    for ev in &events {
        flags.entry(ev.node).or_default().push(ev);
    }
    let mut out = String::new();
    out.push_str("digraph topics {\n  rankdir=LR;\n  node [shape=box, style=filled, fillcolor=white];\n");
    let _ = writeln!(out, "  // {BOUNDARY_CONVENTION}");
    for &epoch in graph.epochs() {
        let _ = writeln!(out, "  subgraph epoch_{epoch} {{\n    rank=same;");
        for t in graph.epoch_topics(epoch) {
            let node = TopicNode::from(t);
            let terms: Vec<&str> = t.top_terms.iter().take(3).map(|p| p.term.as_str()).collect();
            let mut label = format!("{node}\\n{}", dot_escape(&terms.join(" ")));
            let mut colors = Vec::new();
            for ev in flags.get(&node).into_iter().flatten() {
                match ev.kind {
                    EventKind::Emergence => colors.push("palegreen"),
                    EventKind::Disappearance => colors.push("lightcoral"),
                    EventKind::Split => {
                        let _ = write!(label, "\\nsplit -> {}", ev.related.len());
                    }
                    EventKind::Merge => {
                        let _ = write!(label, "\\nmerge <- {}", ev.related.len());
                    }
                }
            }
            let fill = match colors.as_slice() {
                [] => String::new(),
                [c] => format!(", fillcolor={c}"),
                _ => format!(", fillcolor=\"{}\", style=\"wedged\"", colors.join(":")),
            };
            let _ = writeln!(out, "    \"{node}\" [label=\"{label}\"{fill}];");
        }
        out.push_str("  }\n");
    }
    for e in graph.edges() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [penwidth={:.3}, label=\"{:.2}\"];",
            e.from,
            e.to,
            5.0 * e.weight,
            e.weight
        );
    }
    out.push_str("}\n");
    out
}

pub const EVENTS_CSV_HEADER: &str = "kind,epoch,topic_id,related";

/// `kind,epoch,topic_id,related` with related nodes as `epoch:id` joined by `;`.
pub fn events_to_csv(events: &[TopicEvent]) -> String {
    let mut out = String::from(EVENTS_CSV_HEADER);
    out.push('\n');
    for ev in events {
        let related: Vec<String> = ev.related.iter().map(ToString::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            ev.kind,
            ev.node.epoch,
            ev.node.topic_id,
            related.join(";")
        );
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<TopicEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVENTS_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                record: "events header".into(),
                message: format!("expected `{EVENTS_CSV_HEADER}`"),
            })
        }
    }
    let mut events = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            record: format!("events line {}", n + 1),
            message,
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("expected 4 columns, got {}", cols.len())));
        }
        let kind: EventKind = cols[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let epoch = cols[1].parse().map_err(|_| bad(format!("bad epoch `{}`", cols[1])))?;
        let topic_id = cols[2]
            .parse()
            .map_err(|_| bad(format!("bad topic id `{}`", cols[2])))?;
        let related = cols[3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<TopicNode>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        events.push(TopicEvent {
            kind,
            node: TopicNode { epoch, topic_id },
            related,
        });
    }
    Ok(events)
}
