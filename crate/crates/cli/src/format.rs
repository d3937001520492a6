//! Number formatting shared by printed tables and CSV output.

/// Rounds half-to-even to 6 significant digits.
///
/// Values with decimal exponent in `[-5, 15)` are written positionally,
/// others in scientific notation; trailing zeros are dropped.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // `{:e}` rounds the exact binary value half-to-even.
    let s = format!("{:.5e}", x);
    let (mant, exp) = s.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if !(-5..15).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{}{}", digits, "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    let body = if body.contains('.') { body.trim_end_matches('0').trim_end_matches('.').to_string() } else { body };
    format!("{sign}{body}")
}

pub fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}
