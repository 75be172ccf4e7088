use rand::seq::SliceRandom;
use rand::Rng;

use super::Hyperparams;
use crate::error::{Error, Result};
use crate::stats::{beta_one, categorical, dirichlet, seeded_rng, SeededRng};

/// Token visiting order within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// Documents in corpus order, tokens in position order.
    #[default]
    Fixed,
    /// A fresh random permutation of all tokens each sweep.
    Random,
}

/// Number of tables occupied after seating `customers` customers in a CRP
/// whose new-table strength is `strength`: customer `i` (1-based) opens a
/// table with probability `strength / (i - 1 + strength)`.
pub fn crp_table_count<R: Rng + ?Sized>(customers: u32, strength: f64, rng: &mut R) -> u32 {
    if customers == 0 {
        return 0;
    }
    let mut tables = 1;
    for i in 1..customers {
        if rng.random::<f64>() * (i as f64 + strength) < strength {
            tables += 1;
        }
    }
    tables
}

/// Complete sampler state for one epoch.
///
/// Topic-indexed tables are dense over the `K` active topics and are
/// compacted whenever a topic empties, so every active topic holds at least
/// one token between operations.
#[derive(Debug, Clone)]
pub struct HdpState {
    vocab_size: usize,
    /// Topic of each token, `[doc][position]`.
    assignments: Vec<Vec<u32>>,
    /// `n_jk`, `[doc][topic]`.
    doc_topic: Vec<Vec<u32>>,
    /// `n_kw` stored word-major, `[word][topic]`.
    word_topic: Vec<Vec<u32>>,
    /// `n_k`.
    topic_total: Vec<u64>,
    /// `m_jk`, `[doc][topic]`.
    tables: Vec<Vec<u32>>,
    beta: Vec<f64>,
    beta_residual: f64,
    hyper: Hyperparams,
    seed: u64,
    sweep: u64,
    strict: bool,
    rng: SeededRng,
}

impl HdpState {
    /// Random initial state: every token uniformly assigned to one of
    /// `k_init` topics and `beta ~ Dir(gamma / (k_init + 1))` over those
    /// topics plus the residual.
    pub fn init(
        documents: &[Vec<u32>],
        vocab_size: usize,
        hyper: Hyperparams,
        k_init: usize,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        if documents.is_empty() {
            return Err(Error::EmptyCorpus("no documents to fit".into()));
        }
        if documents.iter().all(|d| d.is_empty()) {
            return Err(Error::EmptyCorpus("documents contain no tokens".into()));
        }
        if k_init == 0 {
            return Err(Error::invalid("k_init must be >= 1"));
        }
        if let Some(w) = documents.iter().flatten().find(|&&w| w as usize >= vocab_size) {
            return Err(Error::invalid(format!(
                "word id {w} out of range for vocabulary of size {vocab_size}"
            )));
        }

        let mut rng = seeded_rng(seed);
        let assignments: Vec<Vec<u32>> = documents
            .iter()
            .map(|d| d.iter().map(|_| rng.random_range(0..k_init as u32)).collect())
            .collect();

        let mut doc_topic = vec![vec![0u32; k_init]; documents.len()];
        let mut word_topic = vec![vec![0u32; k_init]; vocab_size];
        let mut topic_total = vec![0u64; k_init];
        for (d, (doc, z)) in documents.iter().zip(&assignments).enumerate() {
            for (&w, &k) in doc.iter().zip(z) {
                doc_topic[d][k as usize] += 1;
                word_topic[w as usize][k as usize] += 1;
                topic_total[k as usize] += 1;
            }
        }

        let mut sticks = dirichlet(&vec![hyper.gamma / (k_init + 1) as f64; k_init + 1], &mut rng);
        let beta_residual = sticks.pop().expect("k_init + 1 entries");

        let mut state = HdpState {
            vocab_size,
            assignments,
            doc_topic,
            word_topic,
            topic_total,
            tables: vec![vec![0u32; k_init]; documents.len()],
            beta: sticks,
            beta_residual,
            hyper,
            seed,
            sweep: 0,
            strict: false,
            rng,
        };
        while let Some(k) = state.topic_total.iter().rposition(|&n| n == 0) {
            state.remove_topic(k);
        }
        state.sample_tables();
        Ok(state)
    }

    pub fn num_topics(&self) -> usize {
        self.topic_total.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_documents(&self) -> usize {
        self.assignments.len()
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sweep(&self) -> u64 {
        self.sweep
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_residual(&self) -> f64 {
        self.beta_residual
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_total
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc][topic]
    }

    pub fn topic_word_count(&self, topic: usize, word: usize) -> u32 {
        self.word_topic[word][topic]
    }

    pub fn table_count(&self, doc: usize, topic: usize) -> u32 {
        self.tables[doc][topic]
    }

    pub fn total_tables(&self) -> u64 {
        self.tables.iter().flatten().map(|&m| m as u64).sum()
    }

    /// When set, every sweep verifies all count and stick invariants on
    /// entry and exit.
    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub(crate) fn set_concentrations(&mut self, gamma: f64, alpha0: f64) {
        self.hyper.gamma = gamma;
        self.hyper.alpha0 = alpha0;
    }

    pub(crate) fn rng_mut(&mut self) -> &mut SeededRng {
        &mut self.rng
    }

    /// Full invariant check against the documents the state was built from.
    pub fn check_invariants(&self, documents: &[Vec<u32>]) -> Result<()> {
        let fail = |m: String| Err(Error::Integrity(m));
        self.check_shape(documents)?;
        let k = self.num_topics();
        let mut word_topic = vec![vec![0u32; k]; self.vocab_size];
        let mut totals = vec![0u64; k];
        for (d, (doc, z)) in documents.iter().zip(&self.assignments).enumerate() {
            let mut row = vec![0u32; k];
            for (&w, &t) in doc.iter().zip(z) {
                let t = t as usize;
                if t >= k {
                    return fail(format!("doc {d}: assignment {t} >= K={k}"));
                }
                row[t] += 1;
                word_topic[w as usize][t] += 1;
                totals[t] += 1;
            }
            if row != self.doc_topic[d] {
                return fail(format!("doc {d}: n_jk does not match assignments"));
            }
            for t in 0..k {
                let (n, m) = (self.doc_topic[d][t], self.tables[d][t]);
                if (n > 0 && m == 0) || m > n {
                    return fail(format!("doc {d} topic {t}: tables {m} vs customers {n}"));
                }
            }
        }
        if word_topic != self.word_topic {
            return fail("n_kw does not match assignments".into());
        }
        if totals != self.topic_total {
            return fail("n_k does not match assignments".into());
        }
        if let Some(t) = totals.iter().position(|&n| n == 0) {
            return fail(format!("topic {t} is empty"));
        }
        Ok(())
    }

    /// Structural checks cheap enough to run before every sweep.
    fn check_shape(&self, documents: &[Vec<u32>]) -> Result<()> {
        let fail = |m: String| Err(Error::Integrity(m));
        let k = self.num_topics();
        if documents.len() != self.assignments.len() {
            return fail(format!(
                "state has {} documents, got {}",
                self.assignments.len(),
                documents.len()
            ));
        }
        if let Some(d) = documents
            .iter()
            .zip(&self.assignments)
            .position(|(doc, z)| doc.len() != z.len())
        {
            return fail(format!("doc {d}: length differs from state"));
        }
        if self.beta.len() != k || self.word_topic.len() != self.vocab_size {
            return fail("table dimensions inconsistent with K or V".into());
        }
        if self
            .beta
            .iter()
            .chain([&self.beta_residual])
            .any(|b| b.is_nan() || *b <= 0.0)
        {
            return fail("stick weights must be positive".into());
        }
        let total: f64 = self.beta.iter().sum::<f64>() + self.beta_residual;
        if (total - 1.0).abs() > 1e-9 {
            return fail(format!("stick weights sum to {total}"));
        }
        Ok(())
    }

    /// One pass over every token, followed by table and stick resampling.
    pub fn gibbs_sweep(&mut self, documents: &[Vec<u32>], scan: ScanOrder) -> Result<()> {
        if self.strict {
            self.check_invariants(documents)?;
        } else {
            self.check_shape(documents)?;
        }

        match scan {
            ScanOrder::Fixed => {
                for d in 0..documents.len() {
                    for i in 0..documents[d].len() {
                        self.resample_token(documents, d, i);
                    }
                }
            }
            ScanOrder::Random => {
                let mut order: Vec<(u32, u32)> = documents
                    .iter()
                    .enumerate()
                    .flat_map(|(d, doc)| (0..doc.len()).map(move |i| (d as u32, i as u32)))
                    .collect();
                order.shuffle(&mut self.rng);
                for (d, i) in order {
                    self.resample_token(documents, d as usize, i as usize);
                }
            }
        }

        self.sample_tables_and_beta();
        self.sweep += 1;

        if self.strict {
            self.check_invariants(documents)?;
        }
        Ok(())
    }

    fn resample_token(&mut self, documents: &[Vec<u32>], d: usize, i: usize) {
        let w = documents[d][i] as usize;
        let old = self.assignments[d][i] as usize;
        self.doc_topic[d][old] -= 1;
        self.word_topic[w][old] -= 1;
        self.topic_total[old] -= 1;
        if self.topic_total[old] == 0 {
            self.remove_topic(old);
        }

        let k = self.num_topics();
        let alpha = self.hyper.alpha0;
        let eta = self.hyper.eta;
        let v_eta = self.vocab_size as f64 * eta;
        let mut weights = Vec::with_capacity(k + 1);
        {
            let nd = &self.doc_topic[d];
            let nw = &self.word_topic[w];
            for t in 0..k {
                weights.push(
                    (nd[t] as f64 + alpha * self.beta[t]) * (nw[t] as f64 + eta) / (self.topic_total[t] as f64 + v_eta),
                );
            }
        }
        weights.push(alpha * self.beta_residual / self.vocab_size as f64);

        let mut new = categorical(&weights, &mut self.rng);
        if new == k {
            new = self.add_topic();
        }
        self.assignments[d][i] = new as u32;
        self.doc_topic[d][new] += 1;
        self.word_topic[w][new] += 1;
        self.topic_total[new] += 1;
    }

    /// Break a fresh topic off the residual stick: `v ~ Beta(1, gamma)`.
    fn add_topic(&mut self) -> usize {
        let v = beta_one(self.hyper.gamma, &mut self.rng);
        self.beta.push(v * self.beta_residual);
        self.beta_residual *= 1.0 - v;
        for row in self.doc_topic.iter_mut() {
            row.push(0);
        }
        for row in self.tables.iter_mut() {
            row.push(0);
        }
        for row in self.word_topic.iter_mut() {
            row.push(0);
        }
        self.topic_total.push(0);
        self.topic_total.len() - 1
    }

    /// Drop topic `k` (its stick mass returns to the residual) and move the
    /// last topic into its slot.
    fn remove_topic(&mut self, k: usize) {
        let last = self.topic_total.len() - 1;
        self.beta_residual += self.beta.swap_remove(k);
        self.topic_total.swap_remove(k);
        for row in self.word_topic.iter_mut() {
            row.swap_remove(k);
        }
        for row in self.tables.iter_mut() {
            row.swap_remove(k);
        }
        for (d, row) in self.doc_topic.iter_mut().enumerate() {
            row.swap_remove(k);
            if k != last && row[k] > 0 {
                for z in self.assignments[d].iter_mut() {
                    if *z as usize == last {
                        *z = k as u32;
                    }
                }
            }
        }
    }

    fn sample_tables(&mut self) {
        let alpha = self.hyper.alpha0;
        for (counts, tables) in self.doc_topic.iter().zip(self.tables.iter_mut()) {
            for (t, (&n, m)) in counts.iter().zip(tables.iter_mut()).enumerate() {
                *m = crp_table_count(n, alpha * self.beta[t], &mut self.rng);
            }
        }
    }

    /// Resample the table counts `m_jk`, then
    /// `beta ~ Dir(m_.1, ..., m_.K, gamma)`.
    pub fn sample_tables_and_beta(&mut self) {
        self.sample_tables();
        let mut alphas = vec![0.0f64; self.num_topics() + 1];
        for row in &self.tables {
            for (a, &m) in alphas.iter_mut().zip(row) {
                *a += m as f64;
            }
        }
        *alphas.last_mut().expect("residual entry") = self.hyper.gamma;
        let mut sticks = dirichlet(&alphas, &mut self.rng);
        self.beta_residual = sticks.pop().expect("residual entry");
        self.beta = sticks;
    }

    /// Sum over tokens of `ln phi_{z, w}` with phi estimated from the
    /// current counts.
    pub fn log_likelihood(&self, documents: &[Vec<u32>]) -> f64 {
        let eta = self.hyper.eta;
        let v_eta = self.vocab_size as f64 * eta;
        let log_norm: Vec<f64> = self.topic_total.iter().map(|&n| (n as f64 + v_eta).ln()).collect();
        documents
            .iter()
            .zip(&self.assignments)
            .flat_map(|(doc, z)| doc.iter().zip(z))
            .map(|(&w, &k)| (self.word_topic[w as usize][k as usize] as f64 + eta).ln() - log_norm[k as usize])
            .sum()
    }
}
