/// Fixed-point rendering of `x` with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        // same shape as a value in [1, 10)
        let decimals = digits.saturating_sub(1);
        return format!("{:.decimals$}", 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit (9.99.. -> 10.0)
    let carried = s
        .trim_start_matches('-')
        .trim_start_matches('0')
        .trim_start_matches('.');
    let sig = carried.chars().filter(char::is_ascii_digit).count();
    if sig > digits && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        s
    }
}
