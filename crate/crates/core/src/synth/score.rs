use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Matching, PlantedTopic, Relation};
use crate::graph::{EventKind, TopicEvent};

/// An event in planted-topic space: `topic` and `related` are planted ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub kind: EventKind,
    pub epoch: usize,
    pub topic: usize,
    pub related: Vec<usize>,
}

/// Events implied by the planted lifespans and lineage, under the same
/// boundary convention as the detector.
pub fn planted_events(planted: &[PlantedTopic], epochs: usize) -> Vec<PlantedEvent> {
    let mut children: BTreeMap<usize, Vec<(usize, Relation)>> = BTreeMap::new();
    for t in planted {
        if let Some(l) = &t.lineage {
            for &p in &l.parents {
                children.entry(p).or_default().push((t.id, l.relation));
            }
        }
    }
    let mut events = Vec::new();
    for t in planted {
        let (first, last) = t.lifespan;
        let kids = children.get(&t.id).map(Vec::as_slice).unwrap_or(&[]);
        if first > 0 && t.lineage.is_none() {
            events.push(PlantedEvent {
                kind: EventKind::Emergence,
                epoch: first,
                topic: t.id,
                related: vec![],
            });
        }
        if last + 1 < epochs && kids.is_empty() {
            events.push(PlantedEvent {
                kind: EventKind::Disappearance,
                epoch: last,
                topic: t.id,
                related: vec![],
            });
        }
        let mut split: Vec<usize> = kids
            .iter()
            .filter(|(_, r)| *r == Relation::SplitFrom)
            .map(|(c, _)| *c)
            .collect();
        if split.len() >= 2 {
            split.sort_unstable();
            events.push(PlantedEvent {
                kind: EventKind::Split,
                epoch: last,
                topic: t.id,
                related: split,
            });
        }
        if let Some(l) = t
            .lineage
            .as_ref()
            .filter(|l| l.relation == Relation::MergedFrom && l.parents.len() >= 2)
        {
            let mut parents = l.parents.clone();
            parents.sort_unstable();
            events.push(PlantedEvent {
                kind: EventKind::Merge,
                epoch: first,
                topic: t.id,
                related: parents,
            });
        }
    }
    events.sort();
    events
}

/// Map detected events into planted space. Events at unmatched nodes are
/// dropped, as are unmatched related nodes.
pub fn translate_events(detected: &[TopicEvent], matching: &Matching) -> Vec<PlantedEvent> {
    let mut out: Vec<PlantedEvent> = detected
        .iter()
        .filter_map(|e| {
            let topic = matching.planted_of(e.node)?;
            let mut related: Vec<usize> = e.related.iter().filter_map(|n| matching.planted_of(*n)).collect();
            related.sort_unstable();
            related.dedup();
            Some(PlantedEvent {
                kind: e.kind,
                epoch: e.node.epoch,
                topic,
                related,
            })
        })
        .collect();
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub kind: EventKind,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// 1.0 when nothing was detected.
    pub precision: f64,
    /// 1.0 when nothing was planted.
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventScores {
    pub kinds: Vec<KindScore>,
    /// Detected events whose node had no planted match.
    pub unmatched_detections: usize,
    pub convention: String,
}

impl EventScores {
    pub fn get(&self, kind: EventKind) -> &KindScore {
        self.kinds
            .iter()
            .find(|k| k.kind == kind)
            .expect("every kind is scored")
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// A translated event is a hit for a planted event of the same kind, epoch
/// and topic; split and merge hits must also name every planted related topic.
fn hits(detected: &PlantedEvent, planted: &PlantedEvent) -> bool {
    detected.kind == planted.kind
        && detected.epoch == planted.epoch
        && detected.topic == planted.topic
        && planted.related.iter().all(|r| detected.related.contains(r))
}

pub fn score_events(detected: &[TopicEvent], planted: &[PlantedEvent], matching: &Matching) -> EventScores {
    let translated = translate_events(detected, matching);
    let kinds = EventKind::ALL
        .into_iter()
        .map(|kind| {
            let det: Vec<&PlantedEvent> = translated.iter().filter(|e| e.kind == kind).collect();
            let truth: Vec<&PlantedEvent> = planted.iter().filter(|e| e.kind == kind).collect();
            let mut used = vec![false; truth.len()];
            let mut tp = 0;
            for d in &det {
                if let Some(i) = (0..truth.len()).find(|&i| !used[i] && hits(d, truth[i])) {
                    used[i] = true;
                    tp += 1;
                }
            }
            let fp = det.len() - tp;
            let fn_ = truth.len() - tp;
            KindScore {
                kind,
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
            }
        })
        .collect();
    EventScores {
        kinds,
        unmatched_detections: detected.len() - translated.len(),
        convention: "precision is 1.0 when nothing is detected; recall is 1.0 when nothing is planted".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TopicNode;
    use crate::synth::{emergence_spec, merge_spec, split_spec, MatchedPair};

    fn identity_matching(nodes: &[(usize, usize, usize)]) -> Matching {
        Matching {
            pairs: nodes
                .iter()
                .map(|&(e, t, p)| MatchedPair {
                    node: TopicNode::new(e, t),
                    planted_id: p,
                    similarity: 1.0,
                })
                .collect(),
            score: 1.0,
        }
    }

    #[test]
    fn planted_event_sets() {
        let s = split_spec(0);
        let ev = planted_events(&s.planted, s.epochs);
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].kind, ev[0].epoch, ev[0].topic), (EventKind::Split, 1, 2));
        assert_eq!(ev[0].related, vec![3, 4]);

        let m = merge_spec(0);
        let ev = planted_events(&m.planted, m.epochs);
        assert_eq!(ev.len(), 1);
        assert_eq!(
            (ev[0].kind, ev[0].epoch, ev[0].related.clone()),
            (EventKind::Merge, 2, vec![2, 3])
        );

        let e = emergence_spec(0);
        let kinds: Vec<_> = planted_events(&e.planted, e.epochs)
            .iter()
            .map(|x| (x.kind, x.epoch))
            .collect();
        assert_eq!(kinds, vec![(EventKind::Emergence, 2), (EventKind::Disappearance, 3)]);
    }

    #[test]
    fn exact_detection_scores_one() {
        let m = identity_matching(&[(1, 0, 2), (2, 0, 3), (2, 1, 4)]);
        let det = vec![TopicEvent {
            kind: EventKind::Split,
            node: TopicNode::new(1, 0),
            related: vec![TopicNode::new(2, 0), TopicNode::new(2, 1)],
        }];
        let s = split_spec(0);
        let scores = score_events(&det, &planted_events(&s.planted, s.epochs), &m);
        for k in &scores.kinds {
            assert_eq!((k.precision, k.recall), (1.0, 1.0), "{:?}", k.kind);
        }
    }

    #[test]
    fn nothing_detected() {
        let s = split_spec(0);
        let scores = score_events(&[], &planted_events(&s.planted, s.epochs), &Matching::default());
        let split = scores.get(EventKind::Split);
        assert_eq!((split.recall, split.precision), (0.0, 1.0));
    }

    #[test]
    fn spurious_emergence_hand_count() {
        // One planted split found, plus an emergence at a matched background node.
        let m = identity_matching(&[(1, 0, 2), (2, 0, 3), (2, 1, 4), (2, 2, 0), (2, 9, 1)]);
        let det = vec![
            TopicEvent {
                kind: EventKind::Split,
                node: TopicNode::new(1, 0),
                related: vec![TopicNode::new(2, 0), TopicNode::new(2, 1)],
            },
            TopicEvent {
                kind: EventKind::Emergence,
                node: TopicNode::new(2, 2),
                related: vec![],
            },
            TopicEvent {
                kind: EventKind::Emergence,
                node: TopicNode::new(2, 7),
                related: vec![],
            },
        ];
        let s = split_spec(0);
        let scores = score_events(&det, &planted_events(&s.planted, s.epochs), &m);
        assert_eq!(scores.get(EventKind::Split).recall, 1.0);
        let em = scores.get(EventKind::Emergence);
        assert_eq!((em.true_positives, em.false_positives), (0, 1));
        assert_eq!(em.precision, 0.0);
        assert_eq!(scores.unmatched_detections, 1);
    }

    #[test]
    fn split_to_wrong_children_misses() {
        let m = identity_matching(&[(1, 0, 2), (2, 0, 3), (2, 1, 0)]);
        let det = vec![TopicEvent {
            kind: EventKind::Split,
            node: TopicNode::new(1, 0),
            related: vec![TopicNode::new(2, 0), TopicNode::new(2, 1)],
        }];
        let s = split_spec(0);
        let scores = score_events(&det, &planted_events(&s.planted, s.epochs), &m);
        assert_eq!(scores.get(EventKind::Split).true_positives, 0);
    }
}
