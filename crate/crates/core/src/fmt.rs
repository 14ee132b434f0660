//! Fixed-point rendering used by every text output.
//!
//! Values are rounded half-to-even on their exact binary value, which is what
//! the standard formatter does. Negative zero is printed as zero so that
//! outputs are stable across platforms.

/// Render `x` with exactly `decimals` digits after the point.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, x);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Round to `decimals` places, half-to-even, going through the decimal rendering.
pub fn round_to(x: f64, decimals: usize) -> f64 {
    fixed(x, decimals).parse().unwrap_or(x)
}

/// Twelve significant digits in scientific notation; parses back exactly to
/// the rounded value.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.11e}", x)
}
