//! Small shared helpers.

/// Canonical decimal formatting for report output: fixed 9 decimal places,
/// trailing zeros trimmed. One formatting convention everywhere makes
/// report files byte-comparable across runs and absorbs sub-ulp noise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}
