//! Fixed-significance decimal formatting shared by every CSV writer.

/// Formats `x` with `sig` significant digits, switching to exponent notation
/// for very large or very small magnitudes (the `%.{sig}g` convention).
/// Non-finite values are written as `NaN`, `inf` or `-inf`.
pub fn sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    // Round first in exponent form so the decimal exponent reflects carries.
    let e_form = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = e_form.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

/// Nine significant digits, the precision of every exchanged file.
pub fn sig9(x: f64) -> String {
    sig(x, 9)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_values() {
        assert_eq!(sig9(10.0), "10");
        assert_eq!(sig9(0.1), "0.1");
        assert_eq!(sig9(-1.5), "-1.5");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(9.9999999999), "10");
        assert_eq!(sig(0.0001234567, 3), "0.000123");
    }

    #[test]
    fn exponent_values() {
        assert_eq!(sig9(1.0e-9), "1e-9");
        assert_eq!(sig9(-2.5e12), "-2.5e12");
        assert_eq!(sig9(f64::NAN), "NaN");
    }

    proptest! {
        #[test]
        fn parses_back_within_precision(x in -1.0e12f64..1.0e12) {
            let back: f64 = sig9(x).parse().unwrap();
            let tol = 5.0e-9 * x.abs().max(f64::MIN_POSITIVE);
            prop_assert!((back - x).abs() <= tol, "{} -> {}", x, back);
        }

        #[test]
        fn idempotent(x in -1.0e6f64..1.0e6) {
            let once = sig9(x);
            let twice = sig9(once.parse().unwrap());
            prop_assert_eq!(once, twice);
        }
    }
}
