//! Numerical oracles for the closed-form laws.
//!
//! Rather than evaluating the product formula, the integrators step the
//! per-sample dynamics `dy/dn = (y - d)/n · b_e` with classical RK4 in
//! `t = ln n`, holding `b_e` constant within each epoch. Mixtures are
//! integrated round-robin: every step gives each pool a sub-step
//! proportional to its size using that pool's own decayed exponent, which
//! realizes "cycled alternately" without ever forming the averaged exponent.
//!
//! Trajectories are anchored at the end of the first epoch, where the law
//! is the classical `a·(n/u)^b + d`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{config, domain, Result};
use crate::fitting::PoolObservations;
use crate::math;
use crate::mixture::{check_shared, MixtureSpec};
use crate::scaling::{self, UtilityParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integration step as a fraction of the pool size.
    pub step_fraction: f64,
    /// Standard deviation of additive Gaussian noise on emitted errors.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Raw samples per counting unit for single-pool runs; mixtures use
    /// their own.
    pub sample_unit: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_fraction: 1e-3,
            noise_sigma: 0.0,
            seed: 0,
            sample_unit: 1.0,
        }
    }
}

impl SimConfig {
    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    pub fn with_step_fraction(mut self, step_fraction: f64) -> Self {
        self.step_fraction = step_fraction;
        self
    }

    pub fn with_sample_unit(mut self, unit: f64) -> Self {
        self.sample_unit = unit;
        self
    }

    fn steps_per_epoch(&self) -> Result<u64> {
        let f = self.step_fraction;
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(config!("step fraction must lie in (0, 1], got {f}: cannot resolve an epoch"));
        }
        Ok(libm::ceil(1.0 / f) as u64)
    }
}

/// `(samples_seen, error)` pairs produced by an integrator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn endpoint(&self) -> Option<(f64, f64)> {
        self.points.last().copied()
    }

    /// Error recorded at exactly `samples` samples, if a step landed there.
    pub fn value_at(&self, samples: f64) -> Option<f64> {
        self.points
            .binary_search_by(|(n, _)| n.total_cmp(&samples))
            .ok()
            .map(|i| self.points[i].1)
    }
}

struct Lane {
    size: f64,
    b: f64,
    delta: f64,
}

/// One RK4 step of `dz/dt = rate·z` over `dt`.
fn rk4(z: f64, rate: f64, dt: f64) -> f64 {
    let k1 = rate * z;
    let k2 = rate * (z + 0.5 * dt * k1);
    let k3 = rate * (z + 0.5 * dt * k2);
    let k4 = rate * (z + dt * k3);
    z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate the lanes up to `total`, landing exactly on each of `stops`.
fn integrate_lanes(
    lanes: &[Lane],
    a: f64,
    d: f64,
    unit: f64,
    total: u64,
    cfg: &SimConfig,
    stops: &[u64],
) -> Result<(Trajectory, Vec<f64>)> {
    let steps = cfg.steps_per_epoch()?;
    scaling::check_unit(unit)?;
    let combined: f64 = lanes.iter().map(|l| l.size).sum();
    let combined_u = combined as u64;
    if (total as f64) < combined * cfg.step_fraction {
        return Err(config!(
            "budget {total} is below one integration step ({} samples)",
            combined * cfg.step_fraction
        ));
    }
    let equal = lanes.iter().all(|l| l.size == lanes[0].size);
    let b_first = if equal {
        lanes.iter().map(|l| l.b).sum::<f64>() / lanes.len() as f64
    } else {
        lanes.iter().map(|l| l.size / combined * l.b).sum()
    };
    let classical = |n: f64| a * math::powf(n / unit, b_first) + d;

    let mut stop_values = alloc::vec![f64::NAN; stops.len()];
    let mut next_stop = 0;
    while next_stop < stops.len() && stops[next_stop] <= combined_u.min(total) {
        stop_values[next_stop] = classical(stops[next_stop] as f64);
        next_stop += 1;
    }

    let mut n = combined.min(total as f64);
    let mut z = classical(n) - d;
    let mut traj = Trajectory {
        points: alloc::vec![(n, z + d)],
    };
    let round = combined / steps as f64;
    let total_f = total as f64;
    let epochs = total.div_ceil(combined_u);
    let mut rates = alloc::vec![0.0; lanes.len()];
    for epoch in 2..=epochs {
        for (rate, lane) in rates.iter_mut().zip(lanes) {
            *rate = lane.b * math::powi(lane.delta, epoch - 1);
        }
        let base = (epoch - 1) as f64 * combined;
        let end = (epoch as f64 * combined).min(total_f);
        for s in 1..=steps {
            let target = (base + combined * (s as f64 / steps as f64)).min(end);
            while n < target {
                let stop = stops.get(next_stop).map(|&x| x as f64);
                let next = match stop {
                    Some(x) if x < target => x,
                    _ => target,
                };
                let share = (next - n) / round;
                let mut m = n;
                for (i, (lane, &rate)) in lanes.iter().zip(&rates).enumerate() {
                    let m_next = if i + 1 == lanes.len() {
                        next
                    } else {
                        m + lane.size / steps as f64 * share
                    };
                    z = rk4(z, rate, math::ln_1p((m_next - m) / m));
                    m = m_next;
                }
                n = next;
                if stop == Some(n) {
                    stop_values[next_stop] = z + d;
                    next_stop += 1;
                }
            }
            traj.points.push((n, z + d));
            if n >= end {
                break;
            }
        }
    }
    Ok((traj, stop_values))
}

fn single_lane(params: &UtilityParams, pool_size: u64) -> Result<Lane> {
    params.validate()?;
    if pool_size == 0 {
        return Err(domain!("pool size must be positive"));
    }
    Ok(Lane {
        size: pool_size as f64,
        b: params.b,
        delta: params.delta(),
    })
}

fn mixture_lanes(spec: &MixtureSpec) -> Vec<Lane> {
    let combined = spec.combined_size() as f64;
    spec.pools()
        .iter()
        .map(|p| {
            let ratio = combined / p.size as f64;
            let tau_hat = if spec.tau_exponent() == 1.0 {
                ratio * p.params.tau
            } else {
                math::powf(ratio, spec.tau_exponent()) * p.params.tau
            };
            Lane {
                size: p.size as f64,
                b: p.params.b,
                delta: math::powf(0.5, 1.0 / tau_hat),
            }
        })
        .collect()
}

/// Step the single-pool dynamics out to `total_samples`.
pub fn integrate_single(params: &UtilityParams, pool_size: u64, total_samples: u64, cfg: &SimConfig) -> Result<Trajectory> {
    let lane = single_lane(params, pool_size)?;
    Ok(integrate_lanes(&[lane], params.a, params.d, cfg.sample_unit, total_samples, cfg, &[])?.0)
}

/// Step a round-robin mixture out to `total_samples`.
pub fn integrate_mixture(spec: &MixtureSpec, a: f64, d: f64, total_samples: u64, cfg: &SimConfig) -> Result<Trajectory> {
    check_shared(a, d)?;
    Ok(integrate_lanes(&mixture_lanes(spec), a, d, spec.sample_unit(), total_samples, cfg, &[])?.0)
}

/// Integrated mixture error at each budget (sorted ascending).
pub fn simulate_mixture_at(spec: &MixtureSpec, a: f64, d: f64, budgets: &[u64], cfg: &SimConfig) -> Result<Vec<f64>> {
    check_shared(a, d)?;
    let total = check_budgets(budgets)?;
    Ok(integrate_lanes(&mixture_lanes(spec), a, d, spec.sample_unit(), total, cfg, budgets)?.1)
}

fn check_budgets(budgets: &[u64]) -> Result<u64> {
    if budgets.is_empty() {
        return Err(domain!("no budgets given"));
    }
    if budgets[0] == 0 || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain!("budgets must be positive and strictly ascending"));
    }
    Ok(*budgets.last().unwrap())
}

fn noisy(values: Vec<f64>, cfg: &SimConfig) -> Result<Vec<f64>> {
    let sigma = cfg.noise_sigma;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(config!("noise sigma must be nonnegative, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| config!("noise distribution: {e}"))?;
    Ok(values
        .into_iter()
        .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect())
}

/// Closed-form errors at the given budgets plus seeded Gaussian noise,
/// clamped to `[0, 1]`.
pub fn generate_observations(
    pool_id: impl Into<String>,
    params: &UtilityParams,
    pool_size: u64,
    budgets: &[u64],
    cfg: &SimConfig,
) -> Result<PoolObservations> {
    params.validate()?;
    check_budgets(budgets)?;
    let unit = cfg.sample_unit;
    let clean = budgets
        .iter()
        .map(|&n| scaling::eval_loss(params, &scaling::EpochSchedule::new(pool_size, n)?.with_unit(unit)?))
        .collect::<Result<Vec<_>>>()?;
    let errors = noisy(clean, cfg)?;
    PoolObservations::new(pool_id, pool_size, budgets.iter().copied().zip(errors).collect())?.with_sample_unit(unit)
}

/// Observations of a merged pool produced by the round-robin integrator.
pub fn generate_mixture_observations(
    pool_id: impl Into<String>,
    spec: &MixtureSpec,
    a: f64,
    d: f64,
    budgets: &[u64],
    cfg: &SimConfig,
) -> Result<PoolObservations> {
    let clean = simulate_mixture_at(spec, a, d, budgets, cfg)?;
    let errors = noisy(clean, cfg)?;
    PoolObservations::new(pool_id, spec.combined_size(), budgets.iter().copied().zip(errors).collect())?
        .with_sample_unit(spec.sample_unit())
}
