use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{planted_events, GenerativeSpec, PlantedEvent, PlantedTopic};
use crate::corpus::Document;
use crate::error::Result;
use crate::stats::{categorical, derive_seed, dirichlet, seeded_rng};

/// Synthetic epoch `e` is published in year `SYNTH_BASE_YEAR + e`.
pub const SYNTH_BASE_YEAR: i32 = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticDoc {
    pub epoch: usize,
    pub words: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted: Vec<PlantedTopic>,
    /// Per epoch, the drifted distribution of every live topic, by id.
    pub epoch_phi: Vec<Vec<(usize, Vec<f64>)>>,
    pub events: Vec<PlantedEvent>,
}

impl GroundTruth {
    pub fn phi(&self, epoch: usize, id: usize) -> Option<&[f64]> {
        self.epoch_phi
            .get(epoch)?
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, p)| p.as_slice())
    }
}

// Drift streams sit far above the document seed indices.
const DRIFT_STREAM: u64 = 1 << 48;

fn drifted_phis(spec: &GenerativeSpec) -> Vec<Vec<(usize, Vec<f64>)>> {
    let mut per_epoch = vec![Vec::new(); spec.epochs];
    for t in &spec.planted {
        let mut rng = seeded_rng(derive_seed(spec.seed, DRIFT_STREAM + t.id as u64));
        let mut phi = t.phi_true.clone();
        for (epoch, slot) in per_epoch
            .iter_mut()
            .enumerate()
            .take(t.lifespan.1 + 1)
            .skip(t.lifespan.0)
        {
            if epoch > t.lifespan.0 && spec.drift_rate > 0.0 {
                let fresh = dirichlet(&vec![1.0; spec.vocab_size], &mut rng);
                for (p, f) in phi.iter_mut().zip(fresh) {
                    *p = (1.0 - spec.drift_rate) * *p + spec.drift_rate * f;
                }
            }
            slot.push((t.id, phi.clone()));
        }
    }
    per_epoch
}

/// Sample a corpus from the spec. Document `i` of the corpus draws from its
/// own seed stream, so the output does not depend on the thread count.
pub fn generate_corpus(spec: &GenerativeSpec) -> Result<(Vec<SyntheticDoc>, GroundTruth)> {
    spec.validate()?;
    let epoch_phi = drifted_phis(spec);
    let docs = (0..spec.epochs * spec.docs_per_epoch)
        .into_par_iter()
        .map(|i| {
            let epoch = i / spec.docs_per_epoch;
            let live = &epoch_phi[epoch];
            let mut rng = seeded_rng(derive_seed(spec.seed, i as u64));
            let mix = dirichlet(&vec![spec.mixing_concentration; live.len()], &mut rng);
            let words = (0..spec.tokens_per_doc)
                .map(|_| {
                    let (_, phi) = &live[categorical(&mix, &mut rng)];
                    categorical(phi, &mut rng) as u32
                })
                .collect();
            SyntheticDoc { epoch, words }
        })
        .collect();
    let truth = GroundTruth {
        planted: spec.planted.clone(),
        events: planted_events(&spec.planted, spec.epochs),
        epoch_phi,
    };
    Ok((docs, truth))
}

/// Term strings `w000`, `w001`, ... padded to a common width.
pub fn synthetic_terms(vocab_size: usize) -> Vec<String> {
    let width = vocab_size.saturating_sub(1).to_string().len().max(3);
    (0..vocab_size).map(|w| format!("w{w:0width$}")).collect()
}

/// Express synthetic documents as ordinary dated documents.
pub fn to_documents(docs: &[SyntheticDoc], vocab_size: usize) -> Vec<Document> {
    let terms = synthetic_terms(vocab_size);
    docs.iter()
        .enumerate()
        .map(|(i, d)| Document {
            id: format!("synth-{}-{i}", d.epoch),
            year: SYNTH_BASE_YEAR + d.epoch as i32,
            tokens: d.words.iter().map(|&w| terms[w as usize].clone()).collect(),
            encoded: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{disjoint_spec, split_spec};

    #[test]
    fn exact_token_counts_and_determinism() {
        let mut spec = split_spec(5);
        spec.tokens_per_doc = 50;
        let (a, truth) = generate_corpus(&spec).unwrap();
        let (b, _) = generate_corpus(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), spec.epochs * spec.docs_per_epoch);
        assert!(a.iter().all(|d| d.words.len() == 50));
        assert_eq!(truth.epoch_phi.len(), spec.epochs);
        spec.seed += 1;
        assert_ne!(generate_corpus(&spec).unwrap().0, a);
    }

    #[test]
    fn words_stay_in_live_supports() {
        let spec = split_spec(2);
        let (docs, truth) = generate_corpus(&spec).unwrap();
        for d in &docs {
            for &w in &d.words {
                assert!(truth.epoch_phi[d.epoch].iter().any(|(_, p)| p[w as usize] > 0.0));
            }
        }
    }

    #[test]
    fn drift_keeps_normalization() {
        let mut spec = disjoint_spec(2, 20, 4, 10, 10, 3);
        spec.drift_rate = 0.3;
        spec.planted.iter_mut().for_each(|t| t.lifespan = (0, 3));
        let (_, truth) = generate_corpus(&spec).unwrap();
        for epoch in &truth.epoch_phi {
            for (_, phi) in epoch {
                assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        assert_ne!(truth.phi(0, 0), truth.phi(3, 0));
    }

    #[test]
    fn documents_carry_epoch_years() {
        let spec = split_spec(4);
        let (docs, _) = generate_corpus(&spec).unwrap();
        let out = to_documents(&docs, spec.vocab_size);
        assert_eq!(out[0].year, SYNTH_BASE_YEAR);
        assert_eq!(out.last().unwrap().year, SYNTH_BASE_YEAR + spec.epochs as i32 - 1);
        assert_eq!(synthetic_terms(3), ["w000", "w001", "w002"]);
        assert_eq!(synthetic_terms(2000)[1999], "w1999");
    }
}
