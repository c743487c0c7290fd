//! Fit results as JSON. Floats are written in shortest round-trip form so a
//! file reads back to the identical [`FitResult`].

use std::path::Path;

use qqt_core::{FitResult, PoolFit, UtilityParams};
use serde::{Deserialize, Serialize};

use crate::error::{input, CliResult};
use crate::output::read_text;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitFile {
    grid_version: String,
    #[serde(default = "unit_default")]
    sample_unit: f64,
    a: f64,
    pools: Vec<PoolRecord>,
    total_l2_loss: f64,
}

fn unit_default() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRecord {
    pool_id: String,
    size: u64,
    b: f64,
    tau: f64,
    d: f64,
    l2_loss: f64,
}

pub fn render_fit(fit: &FitResult) -> String {
    let file = FitFile {
        grid_version: fit.grid_version.clone(),
        sample_unit: fit.sample_unit,
        a: fit.a,
        pools: fit
            .pools
            .iter()
            .map(|p| PoolRecord {
                pool_id: p.pool_id.clone(),
                size: p.pool_size,
                b: p.b,
                tau: p.tau,
                d: p.d,
                l2_loss: p.l2_loss,
            })
            .collect(),
        total_l2_loss: fit.total_l2_loss,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("fit serializes");
    text.push('\n');
    text
}

pub fn parse_fit(text: &str) -> CliResult<FitResult> {
    let file: FitFile = serde_json::from_str(text).map_err(|e| input(format!("fit file line {}: {e}", e.line())))?;
    if file.pools.is_empty() {
        return Err(input("fit file lists no pools"));
    }
    if !(file.sample_unit.is_finite() && file.sample_unit > 0.0) {
        return Err(input("fit file sample_unit must be positive"));
    }
    for (i, p) in file.pools.iter().enumerate() {
        UtilityParams::new(file.a, p.b, p.d, p.tau).map_err(|e| input(format!("pool {}: {e}", p.pool_id)))?;
        if p.size == 0 {
            return Err(input(format!("pool {} has size 0", p.pool_id)));
        }
        if file.pools[..i].iter().any(|o| o.pool_id == p.pool_id) {
            return Err(input(format!("pool {} appears twice", p.pool_id)));
        }
    }
    Ok(FitResult {
        a: file.a,
        pools: file
            .pools
            .into_iter()
            .map(|p| PoolFit {
                pool_id: p.pool_id,
                pool_size: p.size,
                b: p.b,
                tau: p.tau,
                d: p.d,
                l2_loss: p.l2_loss,
            })
            .collect(),
        total_l2_loss: file.total_l2_loss,
        grid_version: file.grid_version,
        sample_unit: file.sample_unit,
    })
}

pub fn read_fit(path: &Path) -> CliResult<FitResult> {
    parse_fit(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}
