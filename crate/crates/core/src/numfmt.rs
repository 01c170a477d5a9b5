//! Locale-independent number formatting shared by every text export.

/// Formats `x` like C's `%.9g`: nine significant digits, trailing zeros
/// stripped, exponent notation outside `[1e-4, 1e9)`.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{}{:02}", mantissa, sign, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    let fixed = format!("{:.*}", decimals, x);
    let out = strip_zeros(&fixed);
    if out == "-0" {
        "0".to_string()
    } else {
        out
    }
}

/// Rounds `x` to nine significant digits so JSON output matches the CSV text.
pub fn round_g9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    fmt_g9(x).parse().unwrap_or(x)
}

fn strip_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let trimmed = s.trim_end_matches('0');
    trimmed.trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(-0.0), "0");
        assert_eq!(fmt_g9(1.0), "1");
        assert_eq!(fmt_g9(0.5), "0.5");
        assert_eq!(fmt_g9(-2.25), "-2.25");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g9(0.0001), "0.0001");
        assert_eq!(fmt_g9(std::f64::consts::PI), "3.14159265");
    }

    #[test]
    fn rounding_is_idempotent() {
        let x = round_g9(std::f64::consts::E);
        assert_eq!(round_g9(x), x);
        assert_eq!(fmt_g9(x), "2.71828183");
    }
}
