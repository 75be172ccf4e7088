//! Direct-assignment Gibbs sampler for the hierarchical Dirichlet process.
//!
//! The corpus-level measure is carried as explicit stick weights over the
//! active topics plus one residual weight for all unseen topics; document
//! mixtures are integrated out and summarized by the auxiliary table
//! counts of the Chinese restaurant franchise. Topic-word distributions
//! have a symmetric Dirichlet base measure with pseudo-count `eta`.

mod concentration;
mod fit;
mod state;
mod stick;
mod topics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use concentration::{resample_alpha0, resample_gamma};
pub use fit::{fit_epoch, Diagnostics, FitConfig, Schedule};
pub use state::{crp_table_count, HdpState, ScanOrder};
pub use stick::{stick_breaking, stick_breaking_with, StickWeights};
pub(crate) use topics::top_indices;
pub use topics::{estimate_topics, TermProb, Topic, TopicRecord, SPARSE_EPSILON, TOP_TERMS_EXPORTED};

/// Shape/rate parameters of a Gamma hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 1.0, rate: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Corpus-level concentration.
    pub gamma: f64,
    /// Document-level concentration.
    pub alpha0: f64,
    /// Symmetric topic-word pseudo-count.
    pub eta: f64,
    pub gamma_prior: GammaPrior,
    pub alpha0_prior: GammaPrior,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha0: 1.0,
            eta: 0.5,
            gamma_prior: GammaPrior::default(),
            alpha0_prior: GammaPrior::default(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("alpha0", self.alpha0),
            ("eta", self.eta),
            ("gamma_prior.shape", self.gamma_prior.shape),
            ("gamma_prior.rate", self.gamma_prior.rate),
            ("alpha0_prior.shape", self.alpha0_prior.shape),
            ("alpha0_prior.rate", self.alpha0_prior.rate),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}
