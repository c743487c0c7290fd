//! Alternative ways to model repetition, kept for comparison with the
//! utility-decay law in [`crate::mixture`].
//!
//! * Effective data: the exponent stays fixed and repeated samples count for
//!   less, `n_eff = η(1 + δ + … + δ^(k-2)) + γ·δ^(k-1)`. Mixing two buckets
//!   then re-weights their exponents by their decay factors.
//! * Combined: both the effective sample count and the bucket weights decay,
//!   `y_k = y_1 · Π_j (n_eff_j / n_eff_{j-1})^(b_eff^(j))`.
//!
//! The combined form and the utility-decay mixture agree on the loss change
//! produced by a single sample drawn at a state `(y_0, n_0)` with `n_0 ≫ 1`;
//! [`local_step_ratios`] measures that.

use crate::error::{domain, Result};
use crate::math;
use crate::mixture::{check_shared, MixtureSpec};
use crate::scaling::EpochSchedule;

/// Bookkeeping for the effective-data count at some point in training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDataState {
    /// Unique samples per epoch.
    pub eta: f64,
    /// Samples seen so far in the current epoch.
    pub gamma: f64,
    /// Per-epoch decay of a sample's worth.
    pub delta: f64,
    /// 1-based epoch index.
    pub epoch: u64,
}

/// Discounted count of samples seen.
pub fn n_effective(state: &EffectiveDataState) -> Result<f64> {
    let EffectiveDataState { eta, gamma, delta, epoch } = *state;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(domain!("unique sample count must be nonnegative, got {eta}"));
    }
    if !(gamma >= 0.0 && gamma <= eta) {
        return Err(domain!("samples in current epoch ({gamma}) must lie in [0, {eta}]"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain!("decay factor must lie in (0, 1], got {delta}"));
    }
    if epoch < 1 {
        return Err(domain!("epochs are 1-based, got {epoch}"));
    }
    let mut completed = 0.0;
    let mut weight = 1.0;
    for _ in 0..epoch - 1 {
        completed += weight;
        weight *= delta;
    }
    Ok(eta * completed + gamma * weight)
}

/// Exponent of two buckets mixed under the effective-data view:
/// `(δ1·b1 + δ2·b2) / (δ1 + δ2)`.
pub fn b_eff_effective_data(b1: f64, delta1: f64, b2: f64, delta2: f64) -> Result<f64> {
    for delta in [delta1, delta2] {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(domain!("decay factor must lie in (0, 1], got {delta}"));
        }
    }
    Ok((delta1 * b1 + delta2 * b2) / (delta1 + delta2))
}

/// Loss under the combined formulation, with the mixture's rescaled decay
/// factors driving both the effective sample count and the exponent weights.
///
/// During mixture epoch `j` each sample adds the size-weighted mean of
/// `δ̂_i^(j-1)` to `n_eff`, and the exponent is the decay-weighted mean
/// `Σ w_i b_i δ̂_i^(j-1) / Σ w_i δ̂_i^(j-1)`.
pub fn eval_loss_f3(spec: &MixtureSpec, a: f64, d: f64, total_samples: u64) -> Result<f64> {
    check_shared(a, d)?;
    let params = spec.params();
    let schedule = EpochSchedule::new(params.combined_size(), total_samples)?;
    let epochs = schedule.current_epoch();
    let p = params.pool_count();

    let mut decay = alloc::vec![1.0f64; p];
    let first = (total_samples.min(schedule.pool_size())) as f64;
    let b_first = params.weighted_mean_sorted(|s| params.b_sorted(s));
    let mut exponent = b_first * (math::ln(first) - math::ln(params.sample_unit()));
    let mut n_eff = first;
    for j in 2..=epochs {
        for (slot, w) in decay.iter_mut().enumerate() {
            *w *= params.delta_sorted(slot);
        }
        let mean_decay = params.weighted_mean_sorted(|s| decay[s]);
        let b_eff = params.weighted_mean_sorted(|s| params.b_sorted(s) * decay[s]) / mean_decay;
        let prev = schedule.boundary(j - 1);
        let seen = total_samples.min(schedule.boundary(j)) - prev;
        let gained = mean_decay * seen as f64;
        exponent += b_eff * math::ln_1p(gained / n_eff);
        n_eff += gained;
    }
    Ok(a * math::exp(exponent) + d)
}

/// Loss ratios `y_1 / y_0` for one sample drawn from the mixture at state
/// `n0` during the given epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStep {
    /// `(1 + 1/n0)^(b_eff)` with the utility-decay exponent.
    pub effective_utility: f64,
    /// `(1 + δ_eff/n0)^(b_eff')` with the decay-weighted exponent.
    pub combined: f64,
}

impl LocalStep {
    pub fn relative_gap(&self) -> f64 {
        ((self.combined - self.effective_utility) / self.effective_utility).abs()
    }
}

pub fn local_step_ratios(spec: &MixtureSpec, epoch: u64, n0: f64) -> Result<LocalStep> {
    if epoch < 1 {
        return Err(domain!("epochs are 1-based, got {epoch}"));
    }
    if !(n0.is_finite() && n0 >= 1.0) {
        return Err(domain!("state sample count must be at least 1, got {n0}"));
    }
    let params = spec.params();
    let decay = |s: usize| math::powi(params.delta_sorted(s), epoch - 1);
    let b_utility = params.effective_utility(epoch)?;
    let mean_decay = params.weighted_mean_sorted(decay);
    let b_combined = params.weighted_mean_sorted(|s| params.b_sorted(s) * decay(s)) / mean_decay;
    Ok(LocalStep {
        effective_utility: math::exp(b_utility * math::ln_1p(1.0 / n0)),
        combined: math::exp(b_combined * math::ln_1p(mean_decay / n0)),
    })
}
