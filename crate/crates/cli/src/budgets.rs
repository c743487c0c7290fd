//! Sample counts with decimal suffixes (`12.8M`, `640M`, `1.2B`) and budget
//! lists.

use qqt_core::curation::geometric_budgets;

use crate::error::{input, CliResult};

/// Parse a non-negative count such as `128M` or `12.8M`. `K`, `M` and `B`
/// (or `G`) are decimal thousands, millions and billions. The value must
/// be a whole number of samples.
pub fn parse_count(text: &str) -> Result<u64, String> {
    let t = text.trim();
    let (digits, scale) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 3),
        Some('M' | 'm') => (&t[..t.len() - 1], 6),
        Some('B' | 'b' | 'G' | 'g') => (&t[..t.len() - 1], 9),
        _ => (t, 0),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let bad = || format!("`{text}` is not a sample count (e.g. 5000, 12.8M, 1B)");
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > scale {
        return Err(format!("`{text}` is not a whole number of samples"));
    }
    let mut value: u128 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    value = value
        .checked_mul(10u128.pow(scale as u32))
        .ok_or_else(|| format!("`{text}` is too large"))?;
    if !frac.is_empty() {
        let f: u128 = frac.parse().map_err(|_| bad())?;
        value += f * 10u128.pow((scale - frac.len()) as u32);
    }
    u64::try_from(value).map_err(|_| format!("`{text}` is too large"))
}

/// Raw samples per counting unit, e.g. `1M`.
pub fn parse_unit(text: &str) -> Result<f64, String> {
    match parse_count(text)? {
        0 => Err("sample unit must be positive".into()),
        n => Ok(n as f64),
    }
}

/// Either a comma-separated ascending list (`32M,64M,128M`) or a geometric
/// grid `geom:START:END:COUNT`.
pub fn parse_budgets(text: &str) -> CliResult<Vec<u64>> {
    let text = text.trim();
    if let Some(spec) = text.strip_prefix("geom:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(input(format!("budget grid `{text}` must look like geom:START:END:COUNT")));
        }
        let start = parse_count(parts[0]).map_err(input)?;
        let end = parse_count(parts[1]).map_err(input)?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| input(format!("budget grid count `{}` is not an integer", parts[2])))?;
        return Ok(geometric_budgets(start, end, count)?);
    }
    if text.is_empty() {
        return Err(input("no budgets given"));
    }
    let budgets = text
        .split(',')
        .map(|s| parse_count(s).map_err(input))
        .collect::<CliResult<Vec<u64>>>()?;
    if budgets[0] == 0 || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(input("budgets must be positive and strictly ascending"));
    }
    Ok(budgets)
}

/// Inclusive `LO:HI` range of reals.
pub fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("range `{text}` must look like LO:HI"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad range bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad range bound `{hi}`"))?;
    if !(lo <= hi) {
        return Err(format!("range `{text}` is empty"));
    }
    Ok((lo, hi))
}

/// `LO:HI:STEP` or a comma-separated list of reals, ascending.
pub fn parse_k_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| input(format!("`{s}` is not a number")));
    let grid = if parts.len() == 3 {
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && lo <= hi) {
            return Err(input(format!("k grid `{text}` needs LO <= HI and STEP > 0")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| lo + step * i as f64).collect()
    } else {
        text.split(',').map(num).collect::<CliResult<Vec<f64>>>()?
    };
    if grid.is_empty() || grid.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
        return Err(input("k values must be finite and nonnegative"));
    }
    Ok(grid)
}
