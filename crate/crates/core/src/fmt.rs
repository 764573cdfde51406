//! Number formatting shared by the CSV writers.

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros removed.
pub fn g9(v: f64) -> String {
    const PREC: i32 = 9;
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..PREC).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (PREC - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
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
    use super::g9;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g9(0.0), "0");
        assert_eq!(g9(1.0), "1");
        assert_eq!(g9(-0.5), "-0.5");
        assert_eq!(g9(0.127604), "0.127604");
        assert_eq!(g9(1.0 / 3.0), "0.333333333");
        assert_eq!(g9(123456789.0), "123456789");
        assert_eq!(g9(1234567891.0), "1.23456789e+09");
        assert_eq!(g9(1.5e-7), "1.5e-07");
        assert_eq!(g9(0.0001234), "0.0001234");
        assert_eq!(g9(0.0625), "0.0625");
    }
}
