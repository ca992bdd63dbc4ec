//! Lexical forms accepted for numeric and date values.

/// `[+-]?[0-9]+`, surrounding whitespace ignored.
pub fn is_integer(raw: &str) -> bool {
    let s = raw.trim();
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Decimal with optional sign, fraction and exponent (`208`, `-4.5`,
/// `.5`, `1e3`), surrounding whitespace ignored.
pub fn is_decimal(raw: &str) -> bool {
    let s = raw.trim();
    !s.is_empty() && leading_decimal_len(s) == s.len()
}

/// ISO-8601 calendar date `YYYY-MM-DD` naming a real day.
pub fn is_iso_date(raw: &str) -> bool {
    let b = raw.trim().as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |range: std::ops::Range<usize>| -> Option<u32> {
        b[range].iter().try_fold(0u32, |acc, &c| c.is_ascii_digit().then(|| acc * 10 + u32::from(c - b'0')))
    };
    let (Some(year), Some(month), Some(day)) = (digits(0..4), digits(5..7), digits(8..10)) else {
        return false;
    };
    let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    let days = match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap => 29,
        2 => 28,
        _ => return false,
    };
    (1..=days).contains(&day)
}

fn leading_integer_len(s: &str) -> usize {
    let b = s.as_bytes();
    let sign = usize::from(matches!(b.first(), Some(b'+' | b'-')));
    let digits = b[sign..].iter().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        0
    } else {
        sign + digits
    }
}

fn leading_decimal_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = usize::from(matches!(b.first(), Some(b'+' | b'-')));
    let int_digits = b[i..].iter().take_while(|c| c.is_ascii_digit()).count();
    i += int_digits;
    let mut frac_digits = 0;
    if b.get(i) == Some(&b'.') {
        frac_digits = b[i + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
        if int_digits + frac_digits > 0 {
            i += 1 + frac_digits;
        }
    }
    if int_digits + frac_digits == 0 {
        return 0;
    }
    if matches!(b.get(i), Some(b'e' | b'E')) {
        let mut j = i + 1;
        if matches!(b.get(j), Some(b'+' | b'-')) {
            j += 1;
        }
        let exp_digits = b[j..].iter().take_while(|c| c.is_ascii_digit()).count();
        if exp_digits > 0 {
            i = j + exp_digits;
        }
    }
    i
}

/// The numeric token a malformed number can be coerced to: the longest
/// leading integer (or decimal) token, offered only when what follows it
/// is nothing but letters and whitespace. `"208 days"` yields `208`;
/// `"20.8.1"` and `"days"` yield nothing.
pub fn coerce_leading_number(raw: &str, decimal: bool) -> Option<&str> {
    let s = raw.trim();
    let len = if decimal { leading_decimal_len(s) } else { leading_integer_len(s) };
    if len == 0 {
        return None;
    }
    let (token, rest) = s.split_at(len);
    let rest = rest.trim();
    (!rest.is_empty() && rest.chars().all(|c| c.is_alphabetic() || c.is_whitespace())).then_some(token)
}
