//! Exhaustive grid-search estimation of scaling constants.
//!
//! The normalizer `a` is shared by every pool; `b`, `τ` and `d` are fitted
//! per pool. For each candidate `a` the per-pool minima are summed and the
//! `a` with the lowest total wins. Ties go to the lexicographically smallest
//! `(a, b, τ, d)` grid indices, so the result does not depend on evaluation
//! order or thread count.
//!
//! The search leans on the factorisation `y - d = a·exp(b·G(δ, n))` where
//! `G` is [`log_exposure`]: `G` is computed once per `(τ, point)`,
//! `exp(b·G)` once per `(b, τ, point)`, and only an affine map is left for
//! the `(a, d)` sweep.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{config, domain, Result};
use crate::math;
use crate::mixture::{eval_with_params, MixtureSpec};
use crate::scaling::{self, log_exposure, EpochSchedule, UtilityParams};

/// Observed error curve for one pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolObservations {
    pub pool_id: String,
    pub pool_size: u64,
    /// `(samples_seen, error)` with strictly increasing `samples_seen`.
    pub points: Vec<(u64, f64)>,
    /// Raw samples per counting unit (see [`crate::scaling`]).
    pub sample_unit: f64,
}

impl PoolObservations {
    pub fn new(pool_id: impl Into<String>, pool_size: u64, points: Vec<(u64, f64)>) -> Result<Self> {
        let obs = Self {
            pool_id: pool_id.into(),
            pool_size,
            points,
            sample_unit: 1.0,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn with_sample_unit(mut self, unit: f64) -> Result<Self> {
        scaling::check_unit(unit)?;
        self.sample_unit = unit;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 {
            return Err(domain!("pool {} has zero size", self.pool_id));
        }
        if self.points.is_empty() {
            return Err(domain!("pool {} has no observations", self.pool_id));
        }
        scaling::check_unit(self.sample_unit)?;
        let mut prev = 0u64;
        for &(n, err) in &self.points {
            if n <= prev {
                return Err(domain!(
                    "pool {}: samples_seen must be positive and strictly increasing (got {n} after {prev})",
                    self.pool_id
                ));
            }
            if !(0.0..=1.0).contains(&err) {
                return Err(domain!("pool {}: error {err} at {n} samples is outside [0, 1]", self.pool_id));
            }
            prev = n;
        }
        Ok(())
    }

    fn schedules(&self) -> Vec<EpochSchedule> {
        self.points
            .iter()
            .map(|&(n, _)| {
                EpochSchedule::new(self.pool_size, n)
                    .and_then(|s| s.with_unit(self.sample_unit))
                    .expect("validated")
            })
            .collect()
    }
}

/// Discrete search space for [`fit_joint`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub d_values: Vec<f64>,
    version: String,
}

/// Fixed set of irreducible-error candidates.
pub const D_VALUES: [f64; 5] = [0.01, 0.02, 0.05, 0.10, 0.2];

impl ParamGrid {
    /// 100 linear `a` in `[0.001, 1]`, 100 geometric `|b|` in `[0.005, 0.5]`,
    /// integer `τ` in `1..=50` and the five `d` candidates.
    pub fn standard() -> Self {
        Self::spaced(100, 100, 50)
    }

    /// Standard ranges with custom point counts.
    pub fn spaced(a_points: usize, b_points: usize, tau_max: u32) -> Self {
        let a_values = linspace(0.001, 1.0, a_points);
        let mut b_values: Vec<f64> = geomspace(0.005, 0.5, b_points).into_iter().map(|m| -m).collect();
        b_values.reverse();
        let tau_values = (1..=tau_max).map(f64::from).collect();
        let version = alloc::format!(
            "a=lin{a_points}[0.001,1];b=-geo{b_points}[0.005,0.5];tau=int[1,{tau_max}];d={{0.01,0.02,0.05,0.1,0.2}}"
        );
        Self {
            a_values,
            b_values,
            tau_values,
            d_values: D_VALUES.to_vec(),
            version,
        }
    }

    /// An arbitrary grid; each axis must be non-empty, sorted ascending and
    /// inside the parameter domain.
    pub fn custom(
        a_values: Vec<f64>,
        b_values: Vec<f64>,
        tau_values: Vec<f64>,
        d_values: Vec<f64>,
        version: impl Into<String>,
    ) -> Result<Self> {
        let grid = Self {
            a_values,
            b_values,
            tau_values,
            d_values,
            version: version.into(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        type Axis<'a> = (&'static str, &'a [f64], fn(f64) -> bool);
        let axes: [Axis; 4] = [
            ("a", &self.a_values, |x| x > 0.0),
            ("b", &self.b_values, |x| x < 0.0),
            ("tau", &self.tau_values, |x| x > 0.0),
            ("d", &self.d_values, |x| x >= 0.0),
        ];
        for (name, values, in_domain) in axes {
            if values.is_empty() {
                return Err(config!("grid axis {name} is empty"));
            }
            if values.iter().any(|&x| !x.is_finite() || !in_domain(x)) {
                return Err(domain!("grid axis {name} has values outside the parameter domain"));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(domain!("grid axis {name} must be strictly ascending"));
            }
        }
        Ok(())
    }

    /// Keep only grid values inside the given closed ranges.
    pub fn restrict(
        &self,
        a: Option<(f64, f64)>,
        b: Option<(f64, f64)>,
        tau: Option<(f64, f64)>,
        d: Option<(f64, f64)>,
    ) -> Result<Self> {
        fn keep(values: &[f64], range: Option<(f64, f64)>) -> Vec<f64> {
            match range {
                Some((lo, hi)) => values.iter().copied().filter(|&x| x >= lo && x <= hi).collect(),
                None => values.to_vec(),
            }
        }
        let mut version = self.version.clone();
        for (name, range) in [("a", a), ("b", b), ("tau", tau), ("d", d)] {
            if let Some((lo, hi)) = range {
                version.push_str(&alloc::format!(";{name}in[{lo},{hi}]"));
            }
        }
        let grid = Self {
            a_values: keep(&self.a_values, a),
            b_values: keep(&self.b_values, b),
            tau_values: keep(&self.tau_values, tau),
            d_values: keep(&self.d_values, d),
            version,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn size(&self) -> usize {
        self.a_values.len() * self.b_values.len() * self.tau_values.len() * self.d_values.len()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = hi / lo;
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo * math::powf(ratio, i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Fitted constants for one pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolFit {
    pub pool_id: String,
    pub pool_size: u64,
    pub b: f64,
    pub tau: f64,
    pub d: f64,
    pub l2_loss: f64,
}

/// Result of a joint fit across pools sharing one normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub a: f64,
    pub pools: Vec<PoolFit>,
    pub total_l2_loss: f64,
    pub grid_version: String,
    pub sample_unit: f64,
}

impl FitResult {
    pub fn pool(&self, pool_id: &str) -> Option<&PoolFit> {
        self.pools.iter().find(|p| p.pool_id == pool_id)
    }

    pub fn params(&self, pool_id: &str) -> Option<UtilityParams> {
        self.pool(pool_id).map(|p| UtilityParams {
            a: self.a,
            b: p.b,
            d: p.d,
            tau: p.tau,
        })
    }

    /// Closed-form prediction for a fitted pool after `total_samples`.
    pub fn predict(&self, pool_id: &str, total_samples: u64) -> Result<f64> {
        let fit = self.pool(pool_id).ok_or_else(|| domain!("no fitted pool {pool_id}"))?;
        let params = self.params(pool_id).expect("pool exists");
        let schedule = EpochSchedule::new(fit.pool_size, total_samples)?.with_unit(self.sample_unit)?;
        scaling::eval_loss(&params, &schedule)
    }
}

/// Sum of squared residuals of the closed-form curve against the points.
pub fn l2_fit_loss(params: &UtilityParams, obs: &PoolObservations) -> Result<f64> {
    params.validate()?;
    obs.validate()?;
    let mut loss = 0.0;
    for (schedule, &(_, err)) in obs.schedules().iter().zip(&obs.points) {
        let r = scaling::loss_unchecked(params, schedule) - err;
        loss += r * r;
    }
    Ok(loss)
}

/// Best `(loss, b index, d index)` for one `(a, τ)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    loss: f64,
    b: usize,
    d: usize,
}

const EMPTY_CELL: Cell = Cell {
    loss: f64::INFINITY,
    b: usize::MAX,
    d: usize::MAX,
};

/// `table[τ][a]`: minimum over `(b, d)` for each `(a, τ)`, ties to the
/// smallest `(b, d)` index.
type Table = Vec<Vec<Cell>>;

fn tau_column(obs: &PoolObservations, errors: &[f64], schedules: &[EpochSchedule], a_values: &[f64], grid: &ParamGrid, tau: f64) -> Vec<Cell> {
    let delta = scaling::delta_from_tau(tau).expect("validated grid");
    let exposure: Vec<f64> = schedules.iter().map(|s| log_exposure(delta, s)).collect();
    let mut scaled = alloc::vec![0.0; exposure.len()];
    let mut best = alloc::vec![EMPTY_CELL; a_values.len()];
    debug_assert_eq!(obs.points.len(), errors.len());
    for (bi, &b) in grid.b_values.iter().enumerate() {
        for (s, &g) in scaled.iter_mut().zip(&exposure) {
            *s = math::exp(b * g);
        }
        for (ai, &a) in a_values.iter().enumerate() {
            for (di, &d) in grid.d_values.iter().enumerate() {
                let mut loss = 0.0;
                for (&s, &y) in scaled.iter().zip(errors) {
                    let r = (a * s + d) - y;
                    loss += r * r;
                }
                if loss < best[ai].loss {
                    best[ai] = Cell { loss, b: bi, d: di };
                }
            }
        }
    }
    best
}

fn pool_table(obs: &PoolObservations, a_values: &[f64], grid: &ParamGrid) -> Table {
    let schedules = obs.schedules();
    let errors: Vec<f64> = obs.points.iter().map(|&(_, e)| e).collect();
    let column = |&tau: &f64| tau_column(obs, &errors, &schedules, a_values, grid, tau);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.tau_values.par_iter().map(column).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.tau_values.iter().map(column).collect()
    }
}

/// Smallest `(loss, b, τ, d)` over all τ for one `a` column.
fn best_over_tau(table: &Table, ai: usize) -> (Cell, usize) {
    let mut best = (EMPTY_CELL, usize::MAX);
    for (ti, column) in table.iter().enumerate() {
        let cell = column[ai];
        let better = cell.loss < best.0.loss
            || (cell.loss == best.0.loss && (cell.b, ti, cell.d) < (best.0.b, best.1, best.0.d));
        if better {
            best = (cell, ti);
        }
    }
    best
}

fn check_pools(all_obs: &[PoolObservations], grid: &ParamGrid) -> Result<()> {
    grid.validate()?;
    if all_obs.is_empty() {
        return Err(domain!("at least one pool is required"));
    }
    for (i, obs) in all_obs.iter().enumerate() {
        obs.validate()?;
        if all_obs[..i].iter().any(|o| o.pool_id == obs.pool_id) {
            return Err(domain!("pool id {} appears more than once", obs.pool_id));
        }
        if obs.sample_unit != all_obs[0].sample_unit {
            return Err(domain!("pools in one fit must share a sample unit"));
        }
    }
    Ok(())
}

/// Best `(b, τ, d)` for a pool with the normalizer held at `a_fixed`.
pub fn fit_single_pool(obs: &PoolObservations, a_fixed: f64, grid: &ParamGrid) -> Result<PoolFit> {
    check_pools(core::slice::from_ref(obs), grid)?;
    if !(a_fixed.is_finite() && a_fixed > 0.0) {
        return Err(domain!("normalizer a must be positive, got {a_fixed}"));
    }
    let table = pool_table(obs, &[a_fixed], grid);
    let (cell, ti) = best_over_tau(&table, 0);
    Ok(pool_fit(obs, grid, cell, ti))
}

fn pool_fit(obs: &PoolObservations, grid: &ParamGrid, cell: Cell, ti: usize) -> PoolFit {
    PoolFit {
        pool_id: obs.pool_id.clone(),
        pool_size: obs.pool_size,
        b: grid.b_values[cell.b],
        tau: grid.tau_values[ti],
        d: grid.d_values[cell.d],
        l2_loss: cell.loss,
    }
}

/// Joint fit: one shared `a`, per-pool `(b, τ, d)`.
pub fn fit_joint(all_obs: &[PoolObservations], grid: &ParamGrid) -> Result<FitResult> {
    check_pools(all_obs, grid)?;
    let tables: Vec<Table> = all_obs.iter().map(|obs| pool_table(obs, &grid.a_values, grid)).collect();

    // (total loss, a index, per-pool best cell and tau index)
    type Best = (f64, usize, Vec<(Cell, usize)>);
    let mut best: Option<Best> = None;
    for ai in 0..grid.a_values.len() {
        let per_pool: Vec<(Cell, usize)> = tables.iter().map(|t| best_over_tau(t, ai)).collect();
        let total: f64 = per_pool.iter().map(|(c, _)| c.loss).sum();
        if best.as_ref().is_none_or(|(t, _, _)| total < *t) {
            best = Some((total, ai, per_pool));
        }
    }
    let (total, ai, per_pool) = best.expect("non-empty grid");
    if !total.is_finite() {
        return Err(config!("no finite-loss grid point"));
    }
    Ok(FitResult {
        a: grid.a_values[ai],
        pools: all_obs
            .iter()
            .zip(per_pool)
            .map(|(obs, (cell, ti))| pool_fit(obs, grid, cell, ti))
            .collect(),
        total_l2_loss: total,
        grid_version: grid.version.to_string(),
        sample_unit: all_obs[0].sample_unit,
    })
}

/// Constrained joint fit where every pool shares one half-life as well as `a`.
pub fn fit_joint_shared_tau(all_obs: &[PoolObservations], grid: &ParamGrid) -> Result<FitResult> {
    check_pools(all_obs, grid)?;
    let tables: Vec<Table> = all_obs.iter().map(|obs| pool_table(obs, &grid.a_values, grid)).collect();

    let mut best: Option<(f64, usize, usize)> = None;
    for ai in 0..grid.a_values.len() {
        for ti in 0..grid.tau_values.len() {
            let total: f64 = tables.iter().map(|t| t[ti][ai].loss).sum();
            if best.is_none_or(|(t, _, _)| total < t) {
                best = Some((total, ai, ti));
            }
        }
    }
    let (total, ai, ti) = best.expect("non-empty grid");
    if !total.is_finite() {
        return Err(config!("no finite-loss grid point"));
    }
    Ok(FitResult {
        a: grid.a_values[ai],
        pools: all_obs
            .iter()
            .zip(&tables)
            .map(|(obs, t)| pool_fit(obs, grid, t[ti][ai], ti))
            .collect(),
        total_l2_loss: total,
        grid_version: alloc::format!("{};shared-tau", grid.version),
        sample_unit: all_obs[0].sample_unit,
    })
}

/// L2 loss of the mixture prediction against a merged pool's observations
/// when half-lives are rescaled by `(N̂/N)^k` instead of `N̂/N`, for each `k`.
///
/// The mixture's normalizer and floor are the size-weighted means of its
/// constituents. Output is sorted by `k`.
pub fn sweep_k_exponent(merged: &PoolObservations, mixture: &MixtureSpec, k_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    merged.validate()?;
    if k_grid.is_empty() {
        return Err(domain!("k grid is empty"));
    }
    if merged.pool_size != mixture.combined_size() {
        return Err(domain!(
            "merged pool {} has size {} but the mixture combines {} samples",
            merged.pool_id,
            merged.pool_size,
            mixture.combined_size()
        ));
    }
    if merged.sample_unit != mixture.sample_unit() {
        return Err(domain!("merged pool and mixture count samples in different units"));
    }
    let a = mixture.normalizer();
    let d = mixture.floor();
    let mut out = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let params = mixture.clone().with_tau_exponent(k)?.params();
        let mut loss = 0.0;
        for &(n, err) in &merged.points {
            let r = eval_with_params(&params, a, d, n)? - err;
            loss += r * r;
        }
        out.push((k, loss));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// `k` with the lowest loss; ties to the smaller `k`.
pub fn argmin_k(sweep: &[(f64, f64)]) -> Option<f64> {
    sweep
        .iter()
        .fold(None, |best: Option<(f64, f64)>, &(k, loss)| match best {
            Some((_, l)) if l <= loss => best,
            _ => Some((k, loss)),
        })
        .map(|(k, _)| k)
}
