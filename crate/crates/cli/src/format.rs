/// Fixed-point decimal with six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let decimals = |v: f64| (5 - v.abs().log10().floor() as i32).max(0) as usize;
    let d = decimals(x);
    // rounding can carry into a new leading digit (9.999996 -> 10.00000)
    let rounded: f64 = format!("{x:.d$}").parse().unwrap_or(x);
    let d = if rounded == 0.0 { d } else { decimals(rounded) };
    format!("{x:.d$}")
}
