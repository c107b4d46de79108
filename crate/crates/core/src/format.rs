//! Number formatting for CSV tables.

/// Shortest decimal that round-trips the value after rounding to six
/// significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific literal");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_significant_digits() {
        assert_eq!(sig6(0.00457), "0.00457");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(-0.0100503358535), "-0.0100503");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(f64::NAN), "NaN");
    }
}
