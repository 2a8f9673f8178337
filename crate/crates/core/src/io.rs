//! Plain-text number formatting shared by the CSV and report writers.

/// 15 significant digits in scientific notation, locale-free.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if v == 0.0 {
        // normalise -0.0
        "0.00000000000000e0".to_string()
    } else {
        format!("{v:.14e}")
    }
}
