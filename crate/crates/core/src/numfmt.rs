//! Fixed-precision number formatting shared by the trace and report writers.

/// Formats `x` with six significant digits, keeping trailing zeros, the
/// same way C's `%#.6g` does: `1.00000`, `0.123000`, `1.00000e-05`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    // normalise -0.0 so traces never show "-0.00000"
    let x = if x == 0.0 { 0.0 } else { x };
    // scientific rendering is correctly rounded and tells us the decimal exponent
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        format!("{:.*}", decimals, x)
    }
}

/// Shortest round-trip rendering that always carries a decimal point.
pub fn exact(x: f64) -> String {
    let s = format!("{:?}", x);
    if s.contains('e') {
        // Debug switches to exponent form for very large/small values; Display never does
        let d = format!("{}", x);
        if d.contains('.') {
            d
        } else {
            format!("{d}.0")
        }
    } else {
        s
    }
}
