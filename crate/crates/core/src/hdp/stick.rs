use rand::Rng;

use crate::stats::beta_one;

/// A truncated stick-breaking draw. `residual` is the unbroken remainder,
/// computed as the complement of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights {
    pub weights: Vec<f64>,
    pub residual: f64,
}

impl StickWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.residual
    }
}

/// Break sticks with fractions from `next_fraction` until the remaining
/// length `prod(1 - v_l)` drops below `residual_tol`.
pub fn stick_breaking_with(residual_tol: f64, mut next_fraction: impl FnMut() -> f64) -> StickWeights {
    assert!(
        residual_tol > 0.0 && residual_tol < 1.0,
        "residual_tol must be in (0, 1)"
    );
    let mut weights = Vec::new();
    let mut remaining = 1.0f64;
    while remaining >= residual_tol {
        let v = next_fraction();
        weights.push(v * remaining);
        remaining *= 1.0 - v;
    }
    let residual = (1.0 - weights.iter().sum::<f64>()).max(0.0);
    StickWeights { weights, residual }
}

/// Stick-breaking weights of a DP with concentration `gamma`:
/// `beta_k = v_k * prod_{l<k} (1 - v_l)`, `v_l ~ Beta(1, gamma)`.
pub fn stick_breaking<R: Rng + ?Sized>(gamma: f64, residual_tol: f64, rng: &mut R) -> StickWeights {
    assert!(gamma > 0.0, "gamma must be positive");
    stick_breaking_with(residual_tol, || beta_one(gamma, rng))
}
