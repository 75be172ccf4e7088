use std::str::FromStr;

use super::{GenerativeSpec, Lineage, PlantedTopic, Relation};
use crate::error::{Error, Result};

/// Named scenario generators exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Split,
    Merge,
    Emergence,
    /// `n` disjoint topics live in a single epoch.
    Disjoint(usize),
}

impl Preset {
    pub fn spec(&self, seed: u64) -> GenerativeSpec {
        match *self {
            Preset::Split => split_spec(seed),
            Preset::Merge => merge_spec(seed),
            Preset::Emergence => emergence_spec(seed),
            Preset::Disjoint(n) => disjoint_spec(n, 50, 1, 200, 100, seed),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Preset::Split),
            "merge" => Ok(Preset::Merge),
            "emergence" => Ok(Preset::Emergence),
            _ => match s.strip_prefix("disjoint:").map(str::parse) {
                Some(Ok(n)) if n > 0 => Ok(Preset::Disjoint(n)),
                _ => Err(Error::config(
                    "preset",
                    format!("unknown preset `{s}` (split, merge, emergence, disjoint:<n>)"),
                )),
            },
        }
    }
}

/// Uniform distribution over `range` in a vocabulary of `v` words.
fn uniform_on(v: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    let p = 1.0 / range.len() as f64;
    let mut phi = vec![0.0; v];
    phi[range].iter_mut().for_each(|x| *x = p);
    phi
}

/// Split `0..v` into `n` contiguous blocks whose sizes differ by at most one.
pub fn disjoint_blocks(v: usize, n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n).map(|i| (i * v / n)..((i + 1) * v / n)).collect()
}

pub fn disjoint_spec(
    n_topics: usize,
    vocab_size: usize,
    epochs: usize,
    docs_per_epoch: usize,
    tokens_per_doc: usize,
    seed: u64,
) -> GenerativeSpec {
    let planted = disjoint_blocks(vocab_size, n_topics)
        .into_iter()
        .enumerate()
        .map(|(id, r)| PlantedTopic {
            id,
            phi_true: uniform_on(vocab_size, r),
            lifespan: (0, epochs - 1),
            lineage: None,
        })
        .collect();
    GenerativeSpec {
        vocab_size,
        epochs,
        docs_per_epoch,
        tokens_per_doc,
        mixing_concentration: 0.5,
        drift_rate: 0.0,
        seed,
        planted,
    }
}

const SCENARIO_V: usize = 40;

/// Two background topics live throughout, on words 0-9 and 10-19.
fn scenario(epochs: usize, seed: u64, mut extra: Vec<PlantedTopic>) -> GenerativeSpec {
    let mut planted = vec![
        PlantedTopic {
            id: 0,
            phi_true: uniform_on(SCENARIO_V, 0..10),
            lifespan: (0, epochs - 1),
            lineage: None,
        },
        PlantedTopic {
            id: 1,
            phi_true: uniform_on(SCENARIO_V, 10..20),
            lifespan: (0, epochs - 1),
            lineage: None,
        },
    ];
    planted.append(&mut extra);
    GenerativeSpec {
        vocab_size: SCENARIO_V,
        epochs,
        docs_per_epoch: 150,
        tokens_per_doc: 50,
        mixing_concentration: 0.2,
        drift_rate: 0.0,
        seed,
        planted,
    }
}

/// Topic 2 (words 20-39) lives in epochs 0-1, then splits into topics 3
/// and 4 over the two halves of its support for epochs 2-3.
pub fn split_spec(seed: u64) -> GenerativeSpec {
    let child = |id, r| PlantedTopic {
        id,
        phi_true: uniform_on(SCENARIO_V, r),
        lifespan: (2, 3),
        lineage: Some(Lineage {
            relation: Relation::SplitFrom,
            parents: vec![2],
        }),
    };
    scenario(
        4,
        seed,
        vec![
            PlantedTopic {
                id: 2,
                phi_true: uniform_on(SCENARIO_V, 20..40),
                lifespan: (0, 1),
                lineage: None,
            },
            child(3, 20..30),
            child(4, 30..40),
        ],
    )
}

/// Mirror image of [`split_spec`]: topics 2 and 3 merge into topic 4.
pub fn merge_spec(seed: u64) -> GenerativeSpec {
    let parent = |id, r| PlantedTopic {
        id,
        phi_true: uniform_on(SCENARIO_V, r),
        lifespan: (0, 1),
        lineage: None,
    };
    scenario(
        4,
        seed,
        vec![
            parent(2, 20..30),
            parent(3, 30..40),
            PlantedTopic {
                id: 4,
                phi_true: uniform_on(SCENARIO_V, 20..40),
                lifespan: (2, 3),
                lineage: Some(Lineage {
                    relation: Relation::MergedFrom,
                    parents: vec![2, 3],
                }),
            },
        ],
    )
}

/// Six epochs; topic 2 (words 20-39) is live only in epochs 2-3.
pub fn emergence_spec(seed: u64) -> GenerativeSpec {
    scenario(
        6,
        seed,
        vec![PlantedTopic {
            id: 2,
            phi_true: uniform_on(SCENARIO_V, 20..40),
            lifespan: (2, 3),
            lineage: None,
        }],
    )
}
