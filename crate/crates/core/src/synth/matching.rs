use serde::{Deserialize, Serialize};

use super::{GroundTruth, PlantedTopic};
use crate::error::{Error, Result};
use crate::graph::{similarity, Measure, TopicNode};
use crate::hdp::Topic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub node: TopicNode,
    pub planted_id: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    /// Mean similarity over matched pairs.
    pub score: f64,
}

impl Matching {
    fn from_pairs(pairs: Vec<MatchedPair>) -> Self {
        let score = if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().map(|p| p.similarity).sum::<f64>() / pairs.len() as f64
        };
        Self { pairs, score }
    }

    pub fn planted_of(&self, node: TopicNode) -> Option<usize> {
        self.pairs.iter().find(|p| p.node == node).map(|p| p.planted_id)
    }

    pub fn node_of(&self, epoch: usize, planted_id: usize) -> Option<TopicNode> {
        self.pairs
            .iter()
            .find(|p| p.node.epoch == epoch && p.planted_id == planted_id)
            .map(|p| p.node)
    }
}

/// Greedy bipartite matching on a row-major similarity table: repeatedly
/// take the most similar pair among unmatched rows and columns, ties going
/// to the smaller (row, column). Returns `(row, column)` pairs in pick order.
pub fn greedy_match(sim: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = sim
        .iter()
        .enumerate()
        .flat_map(|(i, row)| (0..row.len()).map(move |j| (i, j)))
        .collect();
    cells.sort_by(|&(a, b), &(c, d)| sim[c][d].total_cmp(&sim[a][b]).then((a, b).cmp(&(c, d))));
    let cols = sim.iter().map(Vec::len).max().unwrap_or(0);
    let mut row_used = vec![false; sim.len()];
    let mut col_used = vec![false; cols];
    let mut out = Vec::new();
    for (i, j) in cells {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out
}

fn match_against(inferred: &[Topic], planted: &[(usize, &[f64])], measure: Measure) -> Result<Matching> {
    if inferred.is_empty() || planted.is_empty() {
        return Err(Error::invalid("matching needs nonempty inferred and planted sets"));
    }
    let sim = inferred
        .iter()
        .map(|t| {
            planted
                .iter()
                .map(|(_, phi)| similarity(&t.phi, phi, measure))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = greedy_match(&sim)
        .into_iter()
        .map(|(i, j)| MatchedPair {
            node: TopicNode::from(&inferred[i]),
            planted_id: planted[j].0,
            similarity: sim[i][j],
        })
        .collect();
    Ok(Matching::from_pairs(pairs))
}

/// Match inferred topics against the undrifted planted distributions.
pub fn match_topics(inferred: &[Topic], planted: &[PlantedTopic], measure: Measure) -> Result<Matching> {
    let planted: Vec<(usize, &[f64])> = planted.iter().map(|t| (t.id, t.phi_true.as_slice())).collect();
    match_against(inferred, &planted, measure)
}

/// Match one epoch's topics against the planted topics live in that epoch.
pub fn match_epoch(epoch: usize, inferred: &[Topic], truth: &GroundTruth, measure: Measure) -> Result<Matching> {
    let live: Vec<(usize, &[f64])> = truth
        .epoch_phi
        .get(epoch)
        .map(|v| v.iter().map(|(id, phi)| (*id, phi.as_slice())).collect())
        .unwrap_or_default();
    match_against(inferred, &live, measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::seeded_rng;
    use rand::Rng;

    fn best_assignment(sim: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == sim.len() {
            return 0.0;
        }
        let mut best = best_assignment(sim, row + 1, used);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(sim[row][j] + best_assignment(sim, row + 1, used));
                used[j] = false;
            }
        }
        best
    }

    #[test]
    fn greedy_against_exhaustive_search() {
        let mut rng = seeded_rng(8);
        for _ in 0..500 {
            let (n, m) = (rng.random_range(1..6), rng.random_range(1..6));
            let mut sim: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
            let total = |pairs: &[(usize, usize)], sim: &[Vec<f64>]| pairs.iter().map(|&(i, j)| sim[i][j]).sum::<f64>();
            let optimum = best_assignment(&sim, 0, &mut vec![false; m]);
            assert!(total(&greedy_match(&sim), &sim) >= optimum / 2.0 - 1e-12);

            // Planted recovery looks like this: one clear partner per topic.
            for k in 0..n.min(m) {
                sim[k][k] = 1.0 + rng.random::<f64>();
            }
            let optimum = best_assignment(&sim, 0, &mut vec![false; m]);
            assert!((total(&greedy_match(&sim), &sim) - optimum).abs() < 1e-12);
        }
    }

    fn planted(id: usize, phi: &[f64]) -> PlantedTopic {
        PlantedTopic {
            id,
            phi_true: phi.to_vec(),
            lifespan: (0, 0),
            lineage: None,
        }
    }

    #[test]
    fn exact_copies_match_perfectly_in_any_order() {
        let phis = [[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.2, 0.0, 0.8]];
        let truth: Vec<PlantedTopic> = phis.iter().enumerate().map(|(i, p)| planted(i, p)).collect();
        let inferred: Vec<Topic> = [2, 0, 1]
            .iter()
            .enumerate()
            .map(|(k, &i)| Topic::new(0, k, phis[i].to_vec(), 1, &[]))
            .collect();
        let m = match_topics(&inferred, &truth, Measure::Jaccard).unwrap();
        assert_eq!(m.score, 1.0);
        assert_eq!(m.planted_of(TopicNode::new(0, 0)), Some(2));
        assert_eq!(m.planted_of(TopicNode::new(0, 1)), Some(0));
        assert_eq!(m.planted_of(TopicNode::new(0, 2)), Some(1));
    }

    #[test]
    fn greedy_takes_best_then_best_remaining() {
        let sim = vec![vec![0.9, 0.8, 0.1], vec![0.85, 0.3, 0.2]];
        assert_eq!(greedy_match(&sim), vec![(0, 0), (1, 1)]);
        assert!(greedy_match(&[]).is_empty());
    }

    #[test]
    fn empty_sides_are_rejected() {
        assert!(match_topics(&[], &[planted(0, &[1.0])], Measure::Jaccard).is_err());
    }
}
