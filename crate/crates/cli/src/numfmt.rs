//! Fixed-precision number output for CSV and report files.

/// `x` rounded to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `x` rounded to 9 significant digits.
pub fn sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}
