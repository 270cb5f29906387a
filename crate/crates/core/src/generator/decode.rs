use rand::Rng;

use super::GenError;
use crate::num::Real;
use crate::scoring::{LogDist, TokenId};

/// `log p_cond - alpha * log p_uncond`, renormalized. `alpha = 0` returns
/// `cond` unchanged.
pub fn poe_next_distribution<F: Real>(cond: &LogDist<F>, uncond: &LogDist<F>, alpha: F) -> Result<LogDist<F>, GenError> {
    if !cond.same_vocab(uncond) {
        return Err(GenError::VocabMismatch);
    }
    if !(alpha >= F::zero() && alpha.is_finite()) {
        return Err(GenError::InvalidParams(format!("alpha {alpha} must be finite and non-negative")));
    }
    if alpha == F::zero() {
        return Ok(cond.clone());
    }
    let weights = cond
        .values()
        .iter()
        .zip(uncond.values())
        .map(|(&c, &u)| if c == F::neg_infinity() { c } else { c - alpha * u })
        .collect();
    Ok(LogDist::from_log_weights(cond.vocab().clone(), weights)?)
}

/// Divides log-probabilities by `temperature` and renormalizes.
pub fn temper<F: Real>(dist: &LogDist<F>, temperature: F) -> LogDist<F> {
    if temperature == F::one() {
        return dist.clone();
    }
    let weights = dist.values().iter().map(|&l| l / temperature).collect();
    LogDist::from_log_weights(dist.vocab().clone(), weights).expect("tempered weights stay finite")
}

/// Smallest set of most probable tokens whose mass reaches `top_p`, most
/// probable first; ties go to the lower id.
pub fn nucleus_support<F: Real>(dist: &LogDist<F>, top_p: F) -> Vec<TokenId> {
    let mut order: Vec<TokenId> = (0..dist.len() as TokenId).filter(|&t| dist.logp(t) > F::neg_infinity()).collect();
    order.sort_by(|&a, &b| {
        dist.logp(b)
            .partial_cmp(&dist.logp(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut mass = F::zero();
    for (i, &t) in order.iter().enumerate() {
        mass = mass + dist.prob(t);
        if mass >= top_p {
            order.truncate(i + 1);
            break;
        }
    }
    order
}

/// Draws from `dist` restricted to `support` and renormalized there.
/// Consumes exactly one uniform draw.
pub fn sample_within<F: Real, R: Rng + ?Sized>(dist: &LogDist<F>, support: &[TokenId], rng: &mut R) -> TokenId {
    let weights: Vec<f64> = support.iter().map(|&t| dist.prob(t).to_f64_lossy()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (&t, w) in support.iter().zip(&weights) {
        acc += w;
        if u < acc {
            return t;
        }
    }
    *support.last().expect("support is nonempty")
}

/// Temperature, then top-p truncation, then a draw.
pub fn nucleus_sample<F: Real, R: Rng + ?Sized>(dist: &LogDist<F>, top_p: F, temperature: F, rng: &mut R) -> TokenId {
    let tempered = temper(dist, temperature);
    let support = nucleus_support(&tempered, top_p);
    sample_within(&tempered, &support, rng)
}
