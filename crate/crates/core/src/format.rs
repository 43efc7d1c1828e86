//! Fixed numeric formatting used by every text exporter.

/// Formats `x` with `digits` significant digits in plain decimal notation.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Let the exponent come from the rounded scientific form so that
    // values like 9.9999999999 pick the right magnitude.
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Edge distances.
pub fn distance(x: f64) -> String {
    format!("{x:.6}")
}

/// Bootstrap fractions.
pub fn reliability(x: f64) -> String {
    format!("{x:.2}")
}

/// Average bootstrap values.
pub fn average(x: f64) -> String {
    format!("{x:.4}")
}
