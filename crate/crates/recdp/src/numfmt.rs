//! Plain-decimal rendering with a fixed number of significant digits.

/// Renders `x` with `digits` significant digits as a plain decimal (no
/// exponent), trimming trailing zeros. Values outside 1e-12..1e15 fall back
/// to scientific notation so the string stays short and exact.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-12..15).contains(&exp) {
        return trim_mantissa(mantissa) + "e" + &exp.to_string();
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits_only: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits_only);
    } else {
        let int_len = exp as usize + 1;
        if digits_only.len() <= int_len {
            out.push_str(&digits_only);
            out.extend(std::iter::repeat_n('0', int_len - digits_only.len()));
        } else {
            out.push_str(&digits_only[..int_len]);
            out.push('.');
            out.push_str(&digits_only[int_len..]);
        }
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

fn trim_mantissa(m: &str) -> String {
    if m.contains('.') {
        m.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        m.to_owned()
    }
}
