//! Numeric output formatting shared by the CLI and CSV writers.

/// Formats `x` with six significant digits, `%g`-style.
///
/// Trailing zeros are trimmed but at least one fractional digit is kept in
/// fixed notation, so `1` prints as `1.0` and `2π/180` as `0.0349066`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_fixed(&s)
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

fn trim_fixed(s: &str) -> String {
    if !s.contains('.') {
        return format!("{s}.0");
    }
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0), "1.0");
        assert_eq!(sig6(0.0), "0.0");
        assert_eq!(sig6(2.0 * std::f64::consts::PI / 180.0), "0.0349066");
        assert_eq!(sig6(3.368_487_2), "3.36849");
        assert_eq!(sig6(-0.5), "-0.5");
        assert_eq!(sig6(123456.7), "123457.0");
        assert_eq!(sig6(1.0e-7), "1e-7");
        assert_eq!(sig6(2.5e9), "2.5e9");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn output_reparses_close() {
        for &x in &[1.234_567_89, -98765.4321, 3.3e-8, 0.000_123_456_7] {
            let back: f64 = sig6(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-5, "{x} -> {back}");
        }
    }
}
