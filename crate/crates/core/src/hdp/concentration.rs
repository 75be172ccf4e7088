//! Auxiliary-variable Gibbs updates for the two concentration parameters
//! under Gamma(shape, rate) hyperpriors.

use rand::Rng;
use rand_distr::{Bernoulli, Beta, Distribution};

use super::{GammaPrior, HdpState};
use crate::error::{Error, Result};
use crate::stats::gamma_rate;

fn finite_positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integrity(format!("{name} resampled to {v}")))
    }
}

/// Update the corpus-level concentration given `num_topics` occupied
/// dishes served at `num_tables` tables.
///
/// Each iteration draws `x ~ Beta(gamma + 1, M)` and then gamma from the
/// two-component mixture
/// `pi Gamma(a + K, b - ln x) + (1 - pi) Gamma(a + K - 1, b - ln x)`
/// with odds `pi / (1 - pi) = (a + K - 1) / (M (b - ln x))`.
pub fn resample_gamma<R: Rng + ?Sized>(
    gamma: f64,
    num_topics: usize,
    num_tables: u64,
    prior: GammaPrior,
    iters: usize,
    rng: &mut R,
) -> Result<f64> {
    if num_tables == 0 || num_topics == 0 {
        return Err(Error::Integrity("cannot resample gamma without tables".into()));
    }
    let (a, b) = (prior.shape, prior.rate);
    let k = num_topics as f64;
    let m = num_tables as f64;
    let mut g = gamma;
    for _ in 0..iters {
        let x = Beta::new(g + 1.0, m)
            .map_err(|e| Error::Integrity(format!("gamma auxiliary: {e}")))?
            .sample(rng);
        let rate = b - x.max(f64::MIN_POSITIVE).ln();
        let odds = (a + k - 1.0) / (m * rate);
        let pi = odds / (1.0 + odds);
        let shape = if rng.random::<f64>() < pi { a + k } else { a + k - 1.0 };
        g = finite_positive("gamma", gamma_rate(shape, rate, rng))?;
    }
    Ok(g)
}

/// Update the document-level concentration shared by all documents.
///
/// Per document `j` with `n_j > 0` tokens: `w_j ~ Beta(alpha + 1, n_j)`,
/// `s_j ~ Bernoulli(n_j / (n_j + alpha))`; then
/// `alpha ~ Gamma(a + M - sum s_j, b - sum ln w_j)` with `M` the total
/// table count.
pub fn resample_alpha0<R: Rng + ?Sized>(
    alpha0: f64,
    doc_lengths: &[u64],
    total_tables: u64,
    prior: GammaPrior,
    iters: usize,
    rng: &mut R,
) -> Result<f64> {
    let (a, b) = (prior.shape, prior.rate);
    let mut alpha = alpha0;
    for _ in 0..iters {
        let mut sum_log_w = 0.0;
        let mut sum_s = 0.0;
        for &n in doc_lengths.iter().filter(|&&n| n > 0) {
            let n = n as f64;
            let w = Beta::new(alpha + 1.0, n)
                .map_err(|e| Error::Integrity(format!("alpha0 auxiliary: {e}")))?
                .sample(rng);
            sum_log_w += w.max(f64::MIN_POSITIVE).ln();
            if Bernoulli::new(n / (n + alpha))
                .map_err(|e| Error::Integrity(format!("alpha0 auxiliary: {e}")))?
                .sample(rng)
            {
                sum_s += 1.0;
            }
        }
        let shape = a + total_tables as f64 - sum_s;
        if shape <= 0.0 {
            return Err(Error::Integrity(format!(
                "alpha0 posterior shape {shape}: fewer tables than occupied documents"
            )));
        }
        alpha = finite_positive("alpha0", gamma_rate(shape, b - sum_log_w, rng))?;
    }
    Ok(alpha)
}

impl HdpState {
    /// Resample both concentrations from the current tables.
    pub fn resample_concentrations(&mut self, iters: usize) -> Result<()> {
        let hyper = *self.hyper();
        let k = self.num_topics();
        let tables = self.total_tables();
        let lengths: Vec<u64> = self.assignments().iter().map(|z| z.len() as u64).collect();
        let gamma = resample_gamma(hyper.gamma, k, tables, hyper.gamma_prior, iters, self.rng_mut())?;
        let alpha0 = resample_alpha0(
            hyper.alpha0,
            &lengths,
            tables,
            hyper.alpha0_prior,
            iters,
            self.rng_mut(),
        )?;
        self.set_concentrations(gamma, alpha0);
        Ok(())
    }
}
