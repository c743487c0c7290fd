//! Compute-aware choice of how aggressively to filter.
//!
//! Buckets are ranked best to worst. A strategy trains on a prefix of the
//! ladder (top bucket only, top two, ...); its error at a budget is the
//! mixture law evaluated for that prefix. The report records the best
//! strategy per budget and the budget intervals where the best one changes.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;
use crate::mixture::{eval_with_params, MixtureSpec, PoolEntry};

/// Relative gap below which two predicted errors count as a tie.
pub const TIE_RTOL: f64 = 1e-12;

/// Quality-ranked buckets, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketLadder {
    buckets: Vec<PoolEntry>,
    pub metric_name: String,
    sample_unit: f64,
}

impl BucketLadder {
    pub fn new(buckets: Vec<PoolEntry>, metric_name: impl Into<String>) -> Result<Self> {
        // validates ids, sizes and params
        MixtureSpec::new(buckets.clone())?;
        Ok(Self {
            buckets,
            metric_name: metric_name.into(),
            sample_unit: 1.0,
        })
    }

    /// Count samples in units of `unit` raw samples in every strategy.
    pub fn with_sample_unit(mut self, unit: f64) -> Result<Self> {
        crate::scaling::check_unit(unit)?;
        self.sample_unit = unit;
        Ok(self)
    }

    pub fn sample_unit(&self) -> f64 {
        self.sample_unit
    }

    pub fn buckets(&self) -> &[PoolEntry] {
        &self.buckets
    }

    /// Places where a lower-ranked bucket has a larger `|b|` than the one
    /// above it. Allowed, but usually a sign the ranking is off.
    pub fn ordering_warnings(&self) -> Vec<String> {
        self.buckets
            .windows(2)
            .filter(|w| w[1].params.b.abs() > w[0].params.b.abs())
            .map(|w| {
                alloc::format!(
                    "bucket {} (b={}) is ranked below {} (b={}) but has higher utility",
                    w[1].id,
                    w[1].params.b,
                    w[0].id,
                    w[0].params.b
                )
            })
            .collect()
    }

    /// Label of the strategy that trains on the first `depth` buckets.
    pub fn strategy_label(&self, depth: usize) -> String {
        let ids: Vec<&str> = self.buckets[..depth].iter().map(|b| b.id.as_str()).collect();
        ids.join("+")
    }
}

/// Prefix unions of the ladder: `{1}`, `{1,2}`, ..., all buckets.
pub fn enumerate_strategies(ladder: &BucketLadder) -> Vec<MixtureSpec> {
    (1..=ladder.buckets.len())
        .map(|depth| {
            MixtureSpec::new(ladder.buckets[..depth].to_vec())
                .and_then(|s| s.with_sample_unit(ladder.sample_unit))
                .expect("ladder validated")
        })
        .collect()
}

/// Interval of consecutive budgets across which the best strategy changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossover {
    pub from_budget: u64,
    pub to_budget: u64,
    pub from_strategy: usize,
    pub to_strategy: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub metric_name: String,
    pub strategies: Vec<String>,
    pub budgets: Vec<u64>,
    /// `[strategy][budget]`.
    pub per_strategy_error: Vec<Vec<f64>>,
    pub best_strategy_per_budget: Vec<usize>,
    pub crossovers: Vec<Crossover>,
}

/// Index of the smallest error, ties (within [`TIE_RTOL`]) to the smaller
/// index.
fn argmin_aggressive(errors: impl Iterator<Item = f64>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in errors.enumerate() {
        match best {
            Some((_, b)) if e >= b - TIE_RTOL * b.abs() => {}
            _ => best = Some((i, e)),
        }
    }
    best.map_or(0, |(i, _)| i)
}

/// Predicted error of every strategy at every budget, with a shared
/// normalizer `a`. Each strategy's floor is the size-weighted mean of its
/// buckets' `d`.
pub fn predict_report(ladder: &BucketLadder, a: f64, budgets: &[u64]) -> Result<StrategyReport> {
    if budgets.is_empty() {
        return Err(domain!("no budgets given"));
    }
    if budgets[0] == 0 || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain!("budgets must be positive and strictly ascending"));
    }
    let strategies = enumerate_strategies(ladder);
    let row = |spec: &MixtureSpec| -> Result<Vec<f64>> {
        let params = spec.params();
        let d = spec.floor();
        budgets.iter().map(|&n| eval_with_params(&params, a, d, n)).collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        strategies.par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<Vec<f64>>> = strategies.iter().map(row).collect();
    let per_strategy_error = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let best: Vec<usize> = (0..budgets.len())
        .map(|j| argmin_aggressive(per_strategy_error.iter().map(|r| r[j])))
        .collect();
    let mut report = StrategyReport {
        metric_name: ladder.metric_name.clone(),
        strategies: (1..=strategies.len()).map(|d| ladder.strategy_label(d)).collect(),
        budgets: budgets.to_vec(),
        per_strategy_error,
        best_strategy_per_budget: best,
        crossovers: Vec::new(),
    };
    report.crossovers = crossover_budgets(&report);
    Ok(report)
}

/// Budget intervals where the best strategy changes; empty if one strategy
/// wins everywhere.
pub fn crossover_budgets(report: &StrategyReport) -> Vec<Crossover> {
    let best = &report.best_strategy_per_budget;
    best.windows(2)
        .zip(report.budgets.windows(2))
        .filter(|(s, _)| s[0] != s[1])
        .map(|(s, n)| Crossover {
            from_budget: n[0],
            to_budget: n[1],
            from_strategy: s[0],
            to_strategy: s[1],
        })
        .collect()
}

/// `count` budgets spaced geometrically from `start` to `end` inclusive,
/// rounded to whole samples; duplicates after rounding are dropped.
pub fn geometric_budgets(start: u64, end: u64, count: usize) -> Result<Vec<u64>> {
    if start == 0 || end < start || count == 0 {
        return Err(domain!("need 0 < start <= end and a positive count"));
    }
    if count == 1 {
        return Ok(alloc::vec![start]);
    }
    let ratio = end as f64 / start as f64;
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            if i == count - 1 {
                end
            } else {
                libm::round(start as f64 * math::powf(ratio, i as f64 / (count - 1) as f64)) as u64
            }
        })
        .collect();
    out.dedup();
    Ok(out)
}
