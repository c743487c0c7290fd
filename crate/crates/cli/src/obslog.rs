//! Observation logs: CSV with header `pool_id,samples_seen,error`, one row
//! per evaluation, sorted by `(pool_id, samples_seen)`.

use std::path::Path;

use crate::error::{input, CliResult};
use crate::numfmt::sig9;
use crate::output::read_text;

pub const HEADER: [&str; 3] = ["pool_id", "samples_seen", "error"];

/// Rows of one pool, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolLog {
    pub pool_id: String,
    pub points: Vec<(u64, f64)>,
}

/// Parse and validate a log. With `accuracy` the third column holds
/// accuracies and is stored as `1 - value`.
pub fn parse_log(text: &str, accuracy: bool) -> CliResult<Vec<PoolLog>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| input(format!("line 1: {e}")))?.clone();
    for (i, expected) in HEADER.iter().enumerate() {
        match header.get(i) {
            Some(col) if col == *expected => {}
            Some(col) => {
                return Err(input(format!(
                    "line 1: header column {} is `{col}`, expected `{expected}`",
                    i + 1
                )))
            }
            None => return Err(input(format!("line 1: header is missing column `{expected}`"))),
        }
    }
    if header.len() > HEADER.len() {
        return Err(input(format!("line 1: unexpected header column `{}`", &header[HEADER.len()])));
    }

    let mut pools: Vec<PoolLog> = Vec::new();
    let mut prev: Option<(String, u64)> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| input(format!("line {line}: {msg}"));
        let pool_id = &record[0];
        if pool_id.is_empty() {
            return Err(at("empty pool_id".into()));
        }
        let samples: u64 = record[1]
            .parse()
            .map_err(|_| at(format!("samples_seen `{}` is not a positive integer", &record[1])))?;
        if samples == 0 {
            return Err(at("samples_seen must be positive".into()));
        }
        let value: f64 = record[2]
            .parse()
            .map_err(|_| at(format!("error `{}` is not a number", &record[2])))?;
        if !(0.0..=1.0).contains(&value) {
            let what = if accuracy { "accuracy" } else { "error" };
            return Err(at(format!("{what} {value} is outside [0, 1]")));
        }
        let error = if accuracy { 1.0 - value } else { value };

        if let Some((p, n)) = &prev {
            let key = (pool_id, samples);
            if key <= (p.as_str(), *n) {
                let why = if key == (p.as_str(), *n) { "duplicate row" } else { "rows out of order" };
                return Err(at(format!("{why}: ({pool_id}, {samples}) after ({p}, {n})")));
            }
        }
        prev = Some((pool_id.to_string(), samples));
        match pools.last_mut() {
            Some(last) if last.pool_id == pool_id => last.points.push((samples, error)),
            _ => pools.push(PoolLog {
                pool_id: pool_id.to_string(),
                points: vec![(samples, error)],
            }),
        }
    }
    if pools.is_empty() {
        return Err(input("observation log has no rows"));
    }
    Ok(pools)
}

pub fn read_log(path: &Path, accuracy: bool) -> CliResult<Vec<PoolLog>> {
    parse_log(&read_text(path)?, accuracy).map_err(|e| match e {
        crate::error::CliError::Input(m) => input(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Render pools as a log, sorting rows by `(pool_id, samples_seen)`.
pub fn render_log(pools: &[PoolLog]) -> String {
    let mut rows: Vec<(&str, u64, f64)> = pools
        .iter()
        .flat_map(|p| p.points.iter().map(move |&(n, e)| (p.pool_id.as_str(), n, e)))
        .collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut w = csv_writer();
    w.write_record(HEADER).expect("in-memory write");
    for (id, n, e) in rows {
        w.write_record([id, &n.to_string(), &sig9(e)]).expect("in-memory write");
    }
    finish(w)
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
