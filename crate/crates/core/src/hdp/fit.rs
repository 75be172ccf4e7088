use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{estimate_topics, HdpState, Hyperparams, ScanOrder, Topic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burn_in: usize,
    pub sweeps: usize,
    /// Resample concentrations after every `resample_every`-th sweep; 0 disables.
    pub resample_every: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            burn_in: 500,
            sweeps: 500,
            resample_every: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub hyper: Hyperparams,
    pub schedule: Schedule,
    pub k_init: usize,
    pub min_mass: u64,
    pub scan: ScanOrder,
    /// Auxiliary-variable iterations per concentration update.
    pub aux_iters: usize,
    /// Verify every sampler invariant before and after each sweep.
    pub check_invariants: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparams::default(),
            schedule: Schedule::default(),
            k_init: 2,
            min_mass: 1,
            scan: ScanOrder::Fixed,
            aux_iters: 20,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Active topics after each sweep.
    pub k_trace: Vec<usize>,
    /// Log-likelihood proxy after each sweep.
    pub log_likelihood: Vec<f64>,
    pub final_gamma: f64,
    pub final_alpha0: f64,
}

impl Diagnostics {
    /// Two columns per sweep: `K log_likelihood`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, ll) in self.k_trace.iter().zip(&self.log_likelihood) {
            let _ = writeln!(out, "{k}\t{ll}");
        }
        out
    }

    pub fn final_k(&self) -> usize {
        self.k_trace.last().copied().unwrap_or(0)
    }
}

/// Fit one epoch and return the topics of the final sample.
pub fn fit_epoch(
    documents: &[Vec<u32>],
    terms: &[String],
    vocab_size: usize,
    config: &FitConfig,
    seed: u64,
    epoch: usize,
) -> Result<(Vec<Topic>, Diagnostics)> {
    let Schedule {
        burn_in,
        sweeps,
        resample_every,
    } = config.schedule;
    if burn_in < 1 || sweeps < 1 {
        return Err(Error::config("schedule", "burn_in and sweeps must be >= 1"));
    }
    let mut state = HdpState::init(documents, vocab_size, config.hyper, config.k_init, seed)?;
    state.set_strict(config.check_invariants);

    let total = burn_in + sweeps;
    let mut k_trace = Vec::with_capacity(total);
    let mut log_likelihood = Vec::with_capacity(total);
    for s in 1..=total {
        state.gibbs_sweep(documents, config.scan)?;
        if resample_every > 0 && s % resample_every == 0 {
            state.resample_concentrations(config.aux_iters)?;
        }
        k_trace.push(state.num_topics());
        log_likelihood.push(state.log_likelihood(documents));
    }
    log::debug!(
        "epoch {epoch}: K={} gamma={:.3} alpha0={:.3}",
        state.num_topics(),
        state.hyper().gamma,
        state.hyper().alpha0
    );

    let topics = estimate_topics(&state, epoch, terms, config.min_mass);
    let diagnostics = Diagnostics {
        k_trace,
        log_likelihood,
        final_gamma: state.hyper().gamma,
        final_alpha0: state.hyper().alpha0,
    };
    Ok((topics, diagnostics))
}
