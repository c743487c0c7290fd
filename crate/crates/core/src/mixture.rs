//! Uniform mixtures of data pools.
//!
//! Merging pools of sizes `N_i` into one of size `N̂` slows each pool's decay:
//! a contrastive learner sees `O(N̂²)` pairings, so pool `i` takes
//! `τ̂_i = (N̂/N_i)·τ_i` mixture epochs to lose half of its utility. During
//! mixture epoch `e` the combined exponent is the size-weighted mean of
//! `b_i·δ̂_i^(e-1)`, and the mixture loss is the single-pool law evaluated on
//! `N̂` with that exponent.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;
use crate::scaling::{self, log_exposure, EpochSchedule, UtilityParams};

/// One constituent of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub id: String,
    pub params: UtilityParams,
    pub size: u64,
}

impl PoolEntry {
    pub fn new(id: impl Into<String>, params: UtilityParams, size: u64) -> Self {
        Self {
            id: id.into(),
            params,
            size,
        }
    }
}

/// Pools sampled uniformly at random into one training stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pools: Vec<PoolEntry>,
    tau_exponent: f64,
    sample_unit: f64,
}

impl MixtureSpec {
    pub fn new(pools: Vec<PoolEntry>) -> Result<Self> {
        if pools.is_empty() {
            return Err(domain!("a mixture needs at least one pool"));
        }
        for (i, pool) in pools.iter().enumerate() {
            pool.params.validate()?;
            if pool.size == 0 {
                return Err(domain!("pool {} has zero size", pool.id));
            }
            if pools[..i].iter().any(|other| other.id == pool.id) {
                return Err(domain!("duplicate pool id {}", pool.id));
            }
        }
        pools
            .iter()
            .try_fold(0u64, |acc, p| acc.checked_add(p.size))
            .ok_or_else(|| domain!("combined pool size overflows"))?;
        Ok(Self {
            pools,
            tau_exponent: 1.0,
            sample_unit: 1.0,
        })
    }

    pub fn single(pool: PoolEntry) -> Result<Self> {
        Self::new(alloc::vec![pool])
    }

    /// Replace the half-life rescaling `τ̂ = (N̂/N)·τ` by `τ̂ = (N̂/N)^k·τ`.
    pub fn with_tau_exponent(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(domain!("rescaling exponent must be a nonnegative real, got {k}"));
        }
        self.tau_exponent = k;
        Ok(self)
    }

    pub fn tau_exponent(&self) -> f64 {
        self.tau_exponent
    }

    /// Count samples in units of `unit` raw samples (see [`crate::scaling`]).
    pub fn with_sample_unit(mut self, unit: f64) -> Result<Self> {
        scaling::check_unit(unit)?;
        self.sample_unit = unit;
        Ok(self)
    }

    pub fn sample_unit(&self) -> f64 {
        self.sample_unit
    }

    pub fn pools(&self) -> &[PoolEntry] {
        &self.pools
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn combined_size(&self) -> u64 {
        self.pools.iter().map(|p| p.size).sum()
    }

    /// Pools of `self` followed by those of `other`; half-lives are rescaled
    /// against the new combined size, never compounded.
    pub fn merge(&self, other: &MixtureSpec) -> Result<MixtureSpec> {
        let mut pools = self.pools.clone();
        pools.extend(other.pools.iter().cloned());
        MixtureSpec::new(pools)?
            .with_tau_exponent(self.tau_exponent)?
            .with_sample_unit(self.sample_unit)
    }

    /// Size-weighted mean of the constituent normalizers.
    pub fn normalizer(&self) -> f64 {
        self.params().weighted_mean(|i| self.pools[i].params.a)
    }

    /// Size-weighted mean of the constituent error floors.
    pub fn floor(&self) -> f64 {
        self.params().weighted_mean(|i| self.pools[i].params.d)
    }

    pub fn params(&self) -> MixtureParams {
        MixtureParams::from_spec(self)
    }
}

/// Mixture constants precomputed from a [`MixtureSpec`].
///
/// Pools are held in id order so that every reduction runs in the same order
/// whatever order the spec listed them in.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    order: Vec<usize>,
    sizes: Vec<u64>,
    b: Vec<f64>,
    tau_hat: Vec<f64>,
    delta_hat: Vec<f64>,
    combined_size: u64,
    equal_sizes: bool,
    sample_unit: f64,
}

impl MixtureParams {
    fn from_spec(spec: &MixtureSpec) -> Self {
        let mut order: Vec<usize> = (0..spec.pools.len()).collect();
        order.sort_by(|&i, &j| spec.pools[i].id.cmp(&spec.pools[j].id));
        let combined_size = spec.combined_size();
        let pools = || order.iter().map(|&i| &spec.pools[i]);
        let tau_hat: Vec<f64> = pools()
            .map(|p| rescale_tau_with_exponent(p.params.tau, p.size, combined_size, spec.tau_exponent))
            .collect();
        let delta_hat = tau_hat.iter().map(|&t| math::powf(0.5, 1.0 / t)).collect();
        let sizes: Vec<u64> = pools().map(|p| p.size).collect();
        let equal_sizes = sizes.iter().all(|&s| s == sizes[0]);
        Self {
            b: pools().map(|p| p.params.b).collect(),
            order,
            sizes,
            tau_hat,
            delta_hat,
            combined_size,
            equal_sizes,
            sample_unit: spec.sample_unit,
        }
    }

    pub fn pool_count(&self) -> usize {
        self.b.len()
    }

    pub fn combined_size(&self) -> u64 {
        self.combined_size
    }

    pub fn sample_unit(&self) -> f64 {
        self.sample_unit
    }

    /// Rescaled half-life of each pool, in the spec's pool order.
    pub fn tau_hat(&self) -> Vec<f64> {
        self.in_spec_order(&self.tau_hat)
    }

    /// Rescaled decay factor of each pool, in the spec's pool order.
    pub fn delta_hat(&self) -> Vec<f64> {
        self.in_spec_order(&self.delta_hat)
    }

    fn in_spec_order(&self, values: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; values.len()];
        for (slot, &i) in self.order.iter().enumerate() {
            out[i] = values[slot];
        }
        out
    }

    /// Size-weighted mean of a per-pool quantity, indexed by spec position.
    ///
    /// Equal-size mixtures use the plain mean `Σx/p`.
    pub(crate) fn weighted_mean(&self, value: impl Fn(usize) -> f64) -> f64 {
        self.weighted_mean_sorted(|slot| value(self.order[slot]))
    }

    /// Same, indexed by sorted slot.
    pub(crate) fn weighted_mean_sorted(&self, value: impl Fn(usize) -> f64) -> f64 {
        let p = self.pool_count();
        if self.equal_sizes {
            (0..p).map(value).sum::<f64>() / p as f64
        } else {
            let total = self.combined_size as f64;
            (0..p).map(|slot| self.sizes[slot] as f64 / total * value(slot)).sum()
        }
    }

    pub(crate) fn b_sorted(&self, slot: usize) -> f64 {
        self.b[slot]
    }

    pub(crate) fn delta_sorted(&self, slot: usize) -> f64 {
        self.delta_hat[slot]
    }

    /// Mixture utility exponent during the given 1-based mixture epoch.
    pub fn effective_utility(&self, epoch: u64) -> Result<f64> {
        if epoch < 1 {
            return Err(domain!("epochs are 1-based, got {epoch}"));
        }
        Ok(self.weighted_mean_sorted(|s| self.b[s] * math::powi(self.delta_hat[s], epoch - 1)))
    }

    /// `Σ_j b_eff^(j)·ln(m_j/n_{j-1})` (with `ln(n_1/u)` for the first epoch).
    pub fn log_loss_exponent(&self, total_samples: u64) -> Result<f64> {
        let schedule = EpochSchedule::new(self.combined_size, total_samples)?.with_unit(self.sample_unit)?;
        Ok(self.weighted_mean_sorted(|s| self.b[s] * log_exposure(self.delta_hat[s], &schedule)))
    }
}

/// `(N̂/N)·τ`: half-life of a pool once it is merged into a larger one.
pub fn rescale_tau(tau: f64, own_size: u64, combined_size: u64) -> Result<f64> {
    scaling::delta_from_tau(tau)?;
    if own_size == 0 {
        return Err(domain!("pool size must be positive"));
    }
    if combined_size < own_size {
        return Err(domain!(
            "combined size {combined_size} is smaller than the pool's own size {own_size}"
        ));
    }
    Ok(combined_size as f64 / own_size as f64 * tau)
}

fn rescale_tau_with_exponent(tau: f64, own: u64, combined: u64, k: f64) -> f64 {
    let ratio = combined as f64 / own as f64;
    if k == 1.0 {
        ratio * tau
    } else {
        math::powf(ratio, k) * tau
    }
}

/// Mixture utility exponent at a 1-based epoch.
pub fn effective_utility(spec: &MixtureSpec, epoch: u64) -> Result<f64> {
    spec.params().effective_utility(epoch)
}

/// Error of a model trained on the mixture, with shared normalizer `a` and
/// floor `d`. For a one-pool mixture this is exactly [`scaling::eval_loss`].
pub fn eval_mixture_loss(spec: &MixtureSpec, a: f64, d: f64, total_samples: u64) -> Result<f64> {
    eval_with_params(&spec.params(), a, d, total_samples)
}

/// As [`eval_mixture_loss`] against precomputed [`MixtureParams`].
pub fn eval_with_params(params: &MixtureParams, a: f64, d: f64, total_samples: u64) -> Result<f64> {
    check_shared(a, d)?;
    let exponent = params.log_loss_exponent(total_samples)?;
    Ok(a * math::exp(exponent) + d)
}

pub(crate) fn check_shared(a: f64, d: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(domain!("normalizer a must be positive, got {a}"));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(domain!("irreducible error d must be nonnegative, got {d}"));
    }
    Ok(())
}
