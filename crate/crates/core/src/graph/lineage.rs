use std::collections::{HashSet, VecDeque};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Edge, SimilarityGraph, TopicNode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            _ => Err(Error::invalid(format!(
                "direction must be forward or backward, got `{s}`"
            ))),
        }
    }
}

/// Every node reachable from `seed` within `max_depth` hops along edge
/// direction (or against it), with the edges used to reach them.
pub fn trace_lineage(
    graph: &SimilarityGraph,
    seed: TopicNode,
    direction: Direction,
    max_depth: usize,
) -> Result<SimilarityGraph> {
    if !graph.contains(seed) {
        return Err(Error::UnknownNode {
            epoch: seed.epoch,
            topic_id: seed.topic_id,
        });
    }
    let mut visited = HashSet::from([seed]);
    let mut order = vec![seed];
    let mut edges: Vec<Edge> = Vec::new();
    let mut queue = VecDeque::from([(seed, 0usize)]);
    while let Some((node, depth)) = queue.pop_front() {
        if depth == max_depth {
            continue;
        }
        let step: Vec<(Edge, TopicNode)> = match direction {
            Direction::Forward => graph.out_edges(node).map(|e| (*e, e.to)).collect(),
            Direction::Backward => graph.in_edges(node).map(|e| (*e, e.from)).collect(),
        };
        for (edge, next) in step {
            edges.push(edge);
            if visited.insert(next) {
                order.push(next);
                queue.push_back((next, depth + 1));
            }
        }
    }
    Ok(graph.restrict(&order, edges))
}
