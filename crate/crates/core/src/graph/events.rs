use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SimilarityGraph, TopicNode};
use crate::error::{Error, Result};

/// Stated in every export: events at the edges of the observed time range
/// cannot be decided from the data.
pub const BOUNDARY_CONVENTION: &str =
    "no emergence events in the first epoch, no disappearance events in the last epoch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Emergence,
    Disappearance,
    Split,
    Merge,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::Emergence,
        EventKind::Disappearance,
        EventKind::Split,
        EventKind::Merge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Emergence => "emergence",
            EventKind::Disappearance => "disappearance",
            EventKind::Split => "split",
            EventKind::Merge => "merge",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown event kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEvent {
    pub kind: EventKind,
    pub node: TopicNode,
    /// Split targets or merge sources, sorted; empty otherwise.
    pub related: Vec<TopicNode>,
}

/// Read events off node degrees:
/// in-degree 0 is an emergence, out-degree 0 a disappearance, out-degree
/// of two or more a split and in-degree of two or more a merge. A node
/// can produce several events.
pub fn classify_events(graph: &SimilarityGraph) -> Vec<TopicEvent> {
    let (first, last) = match (graph.epochs().first(), graph.epochs().last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Vec::new(),
    };
    let mut events = Vec::new();
    for node in graph.nodes() {
        let mut targets: Vec<TopicNode> = graph.out_edges(node).map(|e| e.to).collect();
        let mut sources: Vec<TopicNode> = graph.in_edges(node).map(|e| e.from).collect();
        targets.sort_unstable();
        sources.sort_unstable();
        if sources.is_empty() && node.epoch != first {
            events.push(TopicEvent {
                kind: EventKind::Emergence,
                node,
                related: Vec::new(),
            });
        }
        if targets.is_empty() && node.epoch != last {
            events.push(TopicEvent {
                kind: EventKind::Disappearance,
                node,
                related: Vec::new(),
            });
        }
        if targets.len() >= 2 {
            events.push(TopicEvent {
                kind: EventKind::Split,
                node,
                related: targets,
            });
        }
        if sources.len() >= 2 {
            events.push(TopicEvent {
                kind: EventKind::Merge,
                node,
                related: sources,
            });
        }
    }
    events
}
