//! Number formatting shared by the report, CSV and TSV writers.

/// Rounds `x` to `digits` significant decimal digits.
///
/// Non-finite values pass through unchanged.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let precision = digits.saturating_sub(1);
    format!("{x:.precision$e}").parse().unwrap_or(x)
}

/// Formats `x` at 12 significant digits using the shortest representation
/// that reads back to the rounded value.
pub fn fmt12(x: f64) -> String {
    format!("{}", round_sig(x, 12))
}

/// Formats an optional value at 12 significant digits; `None` and non-finite
/// values become an empty field.
pub fn fmt12_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => fmt12(v),
        _ => String::new(),
    }
}
