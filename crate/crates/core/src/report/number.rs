//! Fixed-point formatting with round-half-even.
//!
//! Rounding operates on the shortest decimal representation of the `f64`
//! (the one `{}` prints), so `0.125` at two decimals gives `0.12` and `2.675`
//! gives `2.68` even though the binary value of `2.675` is slightly below
//! the midpoint.

/// `value` rounded half-to-even at `decimals` places, printed with exactly
/// that many fractional digits. A result that rounds to zero never carries
/// a minus sign.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    if value.is_nan() {
        return "NaN".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:e}", value.abs());
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp: i64 = exp.parse().expect("integer exponent");
    let mut digits: Vec<u8> = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| b - b'0')
        .collect();

    // number = 0.d1 d2 ... * 10^(int_len)
    let mut int_len = exp + 1;
    if int_len < 0 {
        let mut padded = vec![0u8; (-int_len) as usize];
        padded.extend(digits);
        digits = padded;
        int_len = 0;
    }
    let mut int_len = int_len as usize;
    let keep = int_len + decimals;
    if digits.len() <= keep {
        digits.resize(keep + 1, 0);
    }
    let dropped = digits[keep];
    let rest_nonzero = digits[keep + 1..].iter().any(|&d| d != 0);
    let last_odd = keep > 0 && digits[keep - 1] % 2 == 1;
    digits.truncate(keep);
    if dropped > 5 || (dropped == 5 && (rest_nonzero || last_odd)) {
        let mut i = keep;
        loop {
            if i == 0 {
                digits.insert(0, 1);
                int_len += 1;
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }

    let to_str = |ds: &[u8]| ds.iter().map(|d| char::from(b'0' + d)).collect::<String>();
    let int_part = to_str(&digits[..int_len]);
    let int_part = int_part.trim_start_matches('0');
    let mut out = String::new();
    if value < 0.0 && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.push_str(if int_part.is_empty() { "0" } else { int_part });
    if decimals > 0 {
        out.push('.');
        out.push_str(&to_str(&digits[int_len..]));
    }
    out
}

/// Numeric counterpart of [`format_fixed`].
pub fn round_half_even(value: f64, decimals: usize) -> f64 {
    if !value.is_finite() {
        return value;
    }
    format_fixed(value, decimals)
        .parse()
        .expect("format_fixed yields a decimal literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_even() {
        assert_eq!(format_fixed(0.125, 2), "0.12");
        assert_eq!(format_fixed(0.375, 2), "0.38");
        assert_eq!(format_fixed(2.5, 0), "2");
        assert_eq!(format_fixed(3.5, 0), "4");
        assert_eq!(format_fixed(0.5, 0), "0");
        assert_eq!(format_fixed(2.675, 2), "2.68");
        assert_eq!(format_fixed(0.0125, 3), "0.012");
    }

    #[test]
    fn ordinary_values() {
        assert_eq!(format_fixed(72.3, 1), "72.3");
        assert_eq!(format_fixed(0.072, 3), "0.072");
        assert_eq!(format_fixed(0.0004, 3), "0.000");
        assert_eq!(format_fixed(-0.0004, 3), "0.000");
        assert_eq!(format_fixed(-0.0006, 3), "-0.001");
        assert_eq!(format_fixed(0.0, 3), "0.000");
        assert_eq!(format_fixed(9.9996, 3), "10.000");
        assert_eq!(format_fixed(999.96, 1), "1000.0");
        assert_eq!(format_fixed(100.0, 1), "100.0");
        assert_eq!(format_fixed(12345.678, 0), "12346");
        assert_eq!(format_fixed(1e-20, 3), "0.000");
        assert_eq!(format_fixed(1.5e20, 1), "150000000000000000000.0");
        assert_eq!(format_fixed(f64::NAN, 2), "NaN");
        assert_eq!(format_fixed(f64::NEG_INFINITY, 2), "-inf");
    }

    #[test]
    fn numeric_rounding() {
        assert_eq!(round_half_even(0.125, 2), 0.12);
        assert_eq!(round_half_even(-1.35, 1), -1.4);
        assert_eq!(round_half_even(0.031, 3), 0.031);
    }
}
