//! One function per subcommand. Each returns the text it would print; the
//! binary prints it.

use std::fmt::Write as _;

use qqt_core::curation::predict_report;
use qqt_core::fitting::{argmin_k, fit_joint, fit_joint_shared_tau, sweep_k_exponent};
use qqt_core::formulations::eval_loss_f3;
use qqt_core::mixture::eval_mixture_loss;
use qqt_core::sim::{generate_mixture_observations, generate_observations};
use qqt_core::{BucketLadder, Error, FitResult, MixtureSpec, ParamGrid, PoolEntry, PoolObservations, SimConfig, UtilityParams};
use serde::Serialize;

use crate::budgets::{parse_budgets, parse_k_grid};
use crate::cli::{ExtrapolateArgs, FitArgs, Formulation, MixArgs, RecommendArgs, SimulateArgs, SweepKArgs};
use crate::error::{input, CliError, CliResult};
use crate::fitfile::{read_fit, render_fit};
use crate::manifest::read_manifest;
use crate::numfmt::{round_sig9, sig9};
use crate::obslog::{csv_writer, finish, read_log, render_log, PoolLog};
use crate::output::write_atomic;

/// Standard output and standard error of a successful command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
}

fn search(e: Error) -> CliError {
    match e {
        Error::Config(m) => CliError::Search(m),
        other => other.into(),
    }
}

pub fn fit(args: &FitArgs) -> CliResult<Outcome> {
    let manifest = read_manifest(&args.manifest)?;
    let logs = read_log(&args.observations, args.accuracy)?;
    let mut out = Outcome::default();
    let mut observations = Vec::with_capacity(logs.len());
    for log in logs {
        let entry = manifest
            .iter()
            .find(|m| m.pool_id == log.pool_id)
            .ok_or_else(|| input(format!("pool {} is in the log but not in the manifest", log.pool_id)))?;
        observations.push(PoolObservations::new(log.pool_id, entry.size, log.points)?.with_sample_unit(args.sample_unit)?);
    }
    for m in &manifest {
        if !observations.iter().any(|o| o.pool_id == m.pool_id) {
            writeln!(out.stderr, "warning: pool {} has no observations and is not fitted", m.pool_id).unwrap();
        }
    }

    let g = &args.grid;
    let grid = ParamGrid::spaced(g.a_points, g.b_points, g.tau_max)
        .restrict(g.a_range, g.b_range, g.tau_range, g.d_range)
        .map_err(search)?;
    let result = if g.shared_tau {
        fit_joint_shared_tau(&observations, &grid)
    } else {
        fit_joint(&observations, &grid)
    }
    .map_err(search)?;
    write_atomic(&args.out, render_fit(&result).as_bytes())?;

    writeln!(out.stdout, "a = {}", sig9(result.a)).unwrap();
    for p in &result.pools {
        writeln!(
            out.stdout,
            "{}: b = {}, tau = {}, d = {}, l2 = {}",
            p.pool_id,
            sig9(p.b),
            sig9(p.tau),
            sig9(p.d),
            sig9(p.l2_loss)
        )
        .unwrap();
    }
    writeln!(out.stdout, "total l2 loss = {}", sig9(result.total_l2_loss)).unwrap();
    Ok(out)
}

fn series_csv(budgets: &[u64], values: &[f64]) -> String {
    let mut w = csv_writer();
    w.write_record(["samples_seen", "predicted_error"]).unwrap();
    for (n, y) in budgets.iter().zip(values) {
        w.write_record([n.to_string(), sig9(*y)]).unwrap();
    }
    finish(w)
}

pub fn extrapolate(args: &ExtrapolateArgs) -> CliResult<Outcome> {
    let fit = read_fit(&args.fit)?;
    let budgets = parse_budgets(&args.budgets)?;
    if fit.pool(&args.pool_id).is_none() {
        return Err(input(format!("pool {} is not in {}", args.pool_id, args.fit.display())));
    }
    let values = budgets
        .iter()
        .map(|&n| fit.predict(&args.pool_id, n))
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&args.out, series_csv(&budgets, &values).as_bytes())?;
    Ok(Outcome::default())
}

fn mixture_of(fit: &FitResult, ids: &[String], tau_exponent: f64) -> CliResult<MixtureSpec> {
    if ids.is_empty() {
        return Err(input("no pools given"));
    }
    let entries = ids
        .iter()
        .map(|id| {
            let params = fit.params(id).ok_or_else(|| input(format!("pool {id} is not in the fit file")))?;
            Ok(PoolEntry::new(id.clone(), params, fit.pool(id).unwrap().pool_size))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MixtureSpec::new(entries)?
        .with_tau_exponent(tau_exponent)?
        .with_sample_unit(fit.sample_unit)?)
}

pub fn mix(args: &MixArgs) -> CliResult<Outcome> {
    let fit = read_fit(&args.fit)?;
    let budgets = parse_budgets(&args.budgets)?;
    let spec = mixture_of(&fit, &args.pools, args.tau_exponent)?;
    let d = spec.floor();
    let values = budgets
        .iter()
        .map(|&n| match args.formulation {
            Formulation::Theorem1 => eval_mixture_loss(&spec, fit.a, d, n),
            Formulation::F3 => eval_loss_f3(&spec, fit.a, d, n),
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&args.out, series_csv(&budgets, &values).as_bytes())?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    metric_name: &'a str,
    strategies: &'a [String],
    budgets: &'a [u64],
    per_strategy_error: Vec<Vec<f64>>,
    best_strategy_per_budget: Vec<&'a str>,
    crossovers: Vec<CrossoverRecord<'a>>,
}

#[derive(Serialize)]
struct CrossoverRecord<'a> {
    from_budget: u64,
    to_budget: u64,
    from_strategy: &'a str,
    to_strategy: &'a str,
}

pub fn recommend(args: &RecommendArgs) -> CliResult<Outcome> {
    let fit = read_fit(&args.fit)?;
    let manifest = read_manifest(&args.manifest)?;
    let budgets = parse_budgets(&args.budgets)?;
    let buckets = manifest
        .iter()
        .map(|m| {
            let params = fit
                .params(&m.pool_id)
                .ok_or_else(|| input(format!("manifest pool {} is missing from the fit file", m.pool_id)))?;
            Ok(PoolEntry::new(m.pool_id.clone(), params, m.size))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let ladder = BucketLadder::new(buckets, args.metric.clone())?.with_sample_unit(fit.sample_unit)?;
    let report = predict_report(&ladder, fit.a, &budgets)?;

    let label = |i: usize| report.strategies[i].as_str();
    let file = ReportFile {
        metric_name: &report.metric_name,
        strategies: &report.strategies,
        budgets: &report.budgets,
        per_strategy_error: report
            .per_strategy_error
            .iter()
            .map(|row| row.iter().map(|&y| round_sig9(y)).collect())
            .collect(),
        best_strategy_per_budget: report.best_strategy_per_budget.iter().map(|&i| label(i)).collect(),
        crossovers: report
            .crossovers
            .iter()
            .map(|c| CrossoverRecord {
                from_budget: c.from_budget,
                to_budget: c.to_budget,
                from_strategy: label(c.from_strategy),
                to_strategy: label(c.to_strategy),
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("report serializes");
    json.push('\n');

    let mut w = csv_writer();
    w.write_record(["strategy", "samples_seen", "predicted_error"]).unwrap();
    for (s, row) in report.per_strategy_error.iter().enumerate() {
        for (n, y) in report.budgets.iter().zip(row) {
            w.write_record([label(s), &n.to_string(), &sig9(*y)]).unwrap();
        }
    }
    let series = finish(w);
    let series_path = args.series.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    if series_path == args.out {
        return Err(input("series and report paths coincide"));
    }
    write_atomic(&args.out, json.as_bytes())?;
    write_atomic(&series_path, series.as_bytes())?;

    let mut out = Outcome::default();
    for w in ladder.ordering_warnings() {
        writeln!(out.stderr, "warning: {w}").unwrap();
    }
    for (n, &best) in report.budgets.iter().zip(&report.best_strategy_per_budget) {
        writeln!(out.stdout, "{n}: {}", label(best)).unwrap();
    }
    if report.crossovers.is_empty() {
        writeln!(out.stdout, "no crossovers").unwrap();
    }
    for c in &report.crossovers {
        writeln!(
            out.stdout,
            "crossover {} -> {} between {} and {}",
            label(c.from_strategy),
            label(c.to_strategy),
            c.from_budget,
            c.to_budget
        )
        .unwrap();
    }
    Ok(out)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<Outcome> {
    let budgets = parse_budgets(&args.budgets)?;
    let inline = [args.a, args.b, args.d, args.tau];
    let base = SimConfig::default()
        .with_noise(args.noise, args.seed)
        .with_step_fraction(args.step_fraction);
    let logs: Vec<PoolObservations> = match &args.fit {
        Some(path) => {
            if inline.iter().any(Option::is_some) || args.sample_unit.is_some() {
                return Err(input("give either --fit or inline constants, not both"));
            }
            let fit = read_fit(path)?;
            let cfg = base.with_sample_unit(fit.sample_unit);
            if let Some(ids) = &args.mix {
                let spec = mixture_of(&fit, ids, args.tau_exponent)?;
                let id = args.pool_id.clone().unwrap_or_else(|| "merged".into());
                vec![generate_mixture_observations(id, &spec, fit.a, spec.floor(), &budgets, &cfg)?]
            } else {
                let ids: Vec<String> = match &args.pool_id {
                    Some(id) => vec![id.clone()],
                    None => fit.pools.iter().map(|p| p.pool_id.clone()).collect(),
                };
                if args.pool_size.is_some() && ids.len() != 1 {
                    return Err(input("--pool-size needs a single --pool-id"));
                }
                ids.iter()
                    .enumerate()
                    .map(|(i, id)| {
                        let params = fit.params(id).ok_or_else(|| input(format!("pool {id} is not in the fit file")))?;
                        let size = args.pool_size.unwrap_or(fit.pool(id).unwrap().pool_size);
                        let cfg = SimConfig {
                            seed: args.seed.wrapping_add(i as u64),
                            ..cfg
                        };
                        Ok(generate_observations(id.clone(), &params, size, &budgets, &cfg)?)
                    })
                    .collect::<CliResult<Vec<_>>>()?
            }
        }
        None => {
            if args.mix.is_some() {
                return Err(input("--mix needs --fit"));
            }
            let [Some(a), Some(b), Some(d), Some(tau)] = inline else {
                return Err(input("give --fit or all of --a, --b, --d, --tau"));
            };
            let size = args.pool_size.ok_or_else(|| input("--pool-size is required with inline constants"))?;
            let params = UtilityParams::new(a, b, d, tau)?;
            let cfg = base.with_sample_unit(args.sample_unit.unwrap_or(1.0));
            let id = args.pool_id.clone().unwrap_or_else(|| "pool".into());
            vec![generate_observations(id, &params, size, &budgets, &cfg)?]
        }
    };
    let pools: Vec<PoolLog> = logs
        .into_iter()
        .map(|o| PoolLog {
            pool_id: o.pool_id,
            points: o.points,
        })
        .collect();
    write_atomic(&args.out, render_log(&pools).as_bytes())?;
    Ok(Outcome::default())
}

pub fn sweep_k(args: &SweepKArgs) -> CliResult<Outcome> {
    let fit = read_fit(&args.fit)?;
    let logs = read_log(&args.observations, args.accuracy)?;
    let k_grid = parse_k_grid(&args.k_grid)?;
    let [merged] = logs.as_slice() else {
        return Err(input(format!("merged log must hold exactly one pool, found {}", logs.len())));
    };
    let ids: Vec<String> = match &args.pools {
        Some(ids) => ids.clone(),
        None => fit.pools.iter().map(|p| p.pool_id.clone()).collect(),
    };
    let spec = mixture_of(&fit, &ids, 1.0)?;
    let obs = PoolObservations::new(merged.pool_id.clone(), spec.combined_size(), merged.points.clone())?
        .with_sample_unit(fit.sample_unit)?;
    let sweep = sweep_k_exponent(&obs, &spec, &k_grid)?;

    let mut w = csv_writer();
    w.write_record(["k", "loss"]).unwrap();
    for (k, loss) in &sweep {
        w.write_record([sig9(*k), sig9(*loss)]).unwrap();
    }
    write_atomic(&args.out, finish(w).as_bytes())?;

    let mut out = Outcome::default();
    if spec.len() == 1 {
        writeln!(out.stderr, "warning: a single pool is not rescaled, so every k fits equally well").unwrap();
    }
    let best = argmin_k(&sweep).expect("non-empty grid");
    writeln!(out.stdout, "argmin k = {}", sig9(best)).unwrap();
    Ok(out)
}
