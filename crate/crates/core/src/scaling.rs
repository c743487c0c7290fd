//! Single-pool scaling law with utility decay under repetition.
//!
//! Within one pass over a pool the loss follows `dy/dn = (y/n)·b`; every
//! further pass multiplies the exponent by `δ = (1/2)^(1/τ)`. Integrating
//! epoch by epoch gives
//!
//! ```text
//! y = a · n_1^{b_1} · Π_{j=2..k} (m_j / n_{j-1})^{b_j} + d,   b_j = b·δ^{j-1}
//! ```
//!
//! where `n_j = j·N` and `m_j` is `n_j` for finished epochs or the running
//! sample count for the epoch in progress. The product is evaluated in log
//! space.
//!
//! Only the first factor depends on the unit in which samples are counted.
//! Schedules count raw samples and carry a *sample unit* (samples per unit,
//! 1 by default) that `n_1` is divided by. With a normalizer shared across
//! pools the unit is part of the model: `a·(n/u)^b` shifts pools with
//! different `b` by different amounts.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;

/// Scaling constants for one data pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams {
    /// Normalizer, shared across pools in a joint fit.
    pub a: f64,
    /// Utility exponent of a fresh sample (negative).
    pub b: f64,
    /// Irreducible error floor.
    pub d: f64,
    /// Half-life of the utility, in epochs.
    pub tau: f64,
}

impl UtilityParams {
    pub fn new(a: f64, b: f64, d: f64, tau: f64) -> Result<Self> {
        let params = Self { a, b, d, tau };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(domain!("normalizer a must be positive, got {}", self.a));
        }
        if !(self.b.is_finite() && self.b < 0.0) {
            return Err(domain!("utility exponent b must be negative, got {}", self.b));
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(domain!("irreducible error d must be nonnegative, got {}", self.d));
        }
        delta_from_tau(self.tau).map(|_| ())
    }

    /// Per-epoch decay factor of the utility exponent.
    pub fn delta(&self) -> f64 {
        decay(self.tau)
    }
}

/// Samples seen against a pool that is cycled epoch after epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSchedule {
    pool_size: u64,
    total_samples: u64,
    unit: f64,
}

impl EpochSchedule {
    pub fn new(pool_size: u64, total_samples: u64) -> Result<Self> {
        if pool_size == 0 {
            return Err(domain!("pool size must be positive"));
        }
        if total_samples == 0 {
            return Err(domain!("empty schedule: no samples seen"));
        }
        Ok(Self {
            pool_size,
            total_samples,
            unit: 1.0,
        })
    }

    /// Count samples in units of `unit` raw samples.
    pub fn with_unit(mut self, unit: f64) -> Result<Self> {
        check_unit(unit)?;
        self.unit = unit;
        Ok(self)
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn pool_size(&self) -> u64 {
        self.pool_size
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    /// 1-based index of the epoch containing the last sample seen.
    pub fn current_epoch(&self) -> u64 {
        self.total_samples.div_ceil(self.pool_size)
    }

    /// Samples seen at the end of epoch `j` (`n_0 = 0`).
    pub fn boundary(&self, epoch: u64) -> u64 {
        epoch * self.pool_size
    }

    /// `n_1, …, n_k` up to and including the current epoch.
    pub fn epoch_boundaries(&self) -> Vec<u64> {
        (1..=self.current_epoch()).map(|j| self.boundary(j)).collect()
    }

    /// Whether the last sample seen closes an epoch.
    pub fn on_boundary(&self) -> bool {
        self.total_samples.is_multiple_of(self.pool_size)
    }
}

pub(crate) fn check_unit(unit: f64) -> Result<()> {
    if !(unit.is_finite() && unit > 0.0) {
        return Err(domain!("sample unit must be positive, got {unit}"));
    }
    Ok(())
}

fn decay(tau: f64) -> f64 {
    math::powf(0.5, 1.0 / tau)
}

/// `(1/2)^(1/τ)`: the factor applied to the utility exponent per repetition.
pub fn delta_from_tau(tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(domain!("half-life tau must be positive, got {tau}"));
    }
    let delta = decay(tau);
    // very large tau rounds delta to 1.0 and the pool never decays
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain!("half-life tau={tau} gives a degenerate decay factor"));
    }
    Ok(delta)
}

/// Utility exponent during the given 1-based epoch: `b·δ^(epoch-1)`.
pub fn utility_at_epoch(b: f64, tau: f64, epoch: u64) -> Result<f64> {
    if epoch < 1 {
        return Err(domain!("epochs are 1-based, got {epoch}"));
    }
    let delta = delta_from_tau(tau)?;
    Ok(b * math::powi(delta, epoch - 1))
}

/// Change in loss contributed by the next sample: `(y/n)·b`.
pub fn instantaneous_utility(y: f64, n: f64, b: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(domain!("samples seen must be positive, got {n}"));
    }
    Ok(y / n * b)
}

/// `ln(n_1/u) + Σ_{j≥2} δ^{j-1}·ln(m_j / n_{j-1})`.
///
/// The log of the reducible loss is `ln a + b · log_exposure(δ, schedule)`,
/// so this one number carries every dependence on δ and the schedule. The
/// grid search reuses it across `a`, `b` and `d`.
pub fn log_exposure(delta: f64, schedule: &EpochSchedule) -> f64 {
    let pool = schedule.pool_size as f64;
    let total = schedule.total_samples;
    let epochs = schedule.current_epoch();
    let offset = math::ln(schedule.unit);
    if epochs == 1 {
        return math::ln(total as f64) - offset;
    }
    let mut acc = math::ln(pool) - offset;
    let mut weight = 1.0;
    for j in 2..epochs {
        weight *= delta;
        // ln(j / (j-1)) without forming the ratio
        acc += weight * math::ln_1p(1.0 / (j - 1) as f64);
    }
    weight *= delta;
    let prev = schedule.boundary(epochs - 1);
    let seen_in_epoch = total - prev;
    acc += weight * math::ln_1p(seen_in_epoch as f64 / prev as f64);
    acc
}

/// Closed-form error after `schedule.total_samples()` samples.
pub fn eval_loss(params: &UtilityParams, schedule: &EpochSchedule) -> Result<f64> {
    params.validate()?;
    Ok(loss_unchecked(params, schedule))
}

pub(crate) fn loss_unchecked(params: &UtilityParams, schedule: &EpochSchedule) -> f64 {
    loss_from_exposure(params.a, params.b, params.d, log_exposure(params.delta(), schedule))
}

#[inline]
pub(crate) fn loss_from_exposure(a: f64, b: f64, d: f64, exposure: f64) -> f64 {
    a * math::exp(b * exposure) + d
}

/// Convenience wrapper building the schedule from raw counts.
pub fn eval_loss_at(params: &UtilityParams, pool_size: u64, total_samples: u64) -> Result<f64> {
    eval_loss(params, &EpochSchedule::new(pool_size, total_samples)?)
}
