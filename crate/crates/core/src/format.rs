//! Number formatting for CSV output.

/// Formats with 12 significant digits, `%.12g` style: plain decimal for
/// moderate magnitudes, scientific otherwise, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    significant(x, 12)
}

pub fn significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
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

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(26.513290039741314), "26.5132900397");
        assert_eq!(sig12(-0.6), "-0.6");
        assert_eq!(sig12(3.178914388020833e-6), "3.17891438802e-6");
        assert_eq!(sig12(1234567890123.0), "1.23456789012e12");
        assert_eq!(sig12(0.99999999999999), "1");
        assert_eq!(sig12(f64::NAN), "NaN");
        assert_eq!(sig12(1e-5), "0.00001");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 12345.6789, 7.25e-9, -4.4e7] {
            let back: f64 = sig12(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} -> {}", sig12(x));
        }
    }
}
