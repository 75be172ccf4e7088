//! Random-variate helpers shared by the sampler and the synthetic generator.
//!
//! Every stochastic component draws from [`SeededRng`]; seeds for
//! independent work units (epochs, scenario replicates) come from
//! [`derive_seed`] so results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for work unit `index` under `master`: `splitmix64(splitmix64(master) ^ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Draw from Beta(1, concentration) by inverting its CDF `1 - (1-v)^c`.
pub fn beta_one<R: Rng + ?Sized>(concentration: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    // 1 - u is in (0, 1], so the power is well defined.
    1.0 - (1.0 - u).powf(1.0 / concentration)
}

/// Natural log of a Gamma(shape, 1) variate. Small shapes are handled with
/// `G(a) = G(a + 1) * U^(1/a)` in log space so the result never underflows.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && shape.is_finite());
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.max(f64::MIN_POSITIVE).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng)
            .max(f64::MIN_POSITIVE);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        g.ln() + u.ln() / shape
    }
}

/// Dirichlet draw with strictly positive entries summing to one.
pub fn dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = alphas.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|&l| (l - max).exp().max(f64::MIN_POSITIVE)).collect();
    let total: f64 = out.iter().sum();
    for x in out.iter_mut() {
        *x /= total;
    }
    out
}

/// Gamma(shape, rate) variate.
pub fn gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    ln_gamma_variate(shape, rng).exp() / rate
}

/// Index drawn proportionally to the (unnormalized, nonnegative) weights.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding left u marginally above the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
