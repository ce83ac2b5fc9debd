//! Exact decimal numbers for quantity magnitudes and aggregates.
//!
//! Aggregates must be exact in base 10 (an average of two whole-krona
//! prizes is an exact half), so quantities carry an integer mantissa and
//! a base-10 scale instead of a binary float. The display scale is kept
//! as parsed; comparison and hashing normalize it away.

use alloc::string::String;
use core::fmt;

/// Most fractional digits a decimal will carry. Division extends the
/// scale up to this bound and rounds half-even beyond it.
pub const MAX_SCALE: u32 = 12;

/// Mantissa magnitude bound; keeps scale alignment inside i128.
const MAX_MANTISSA: i128 = 1_000_000_000_000_000_000_000_000; // 1e24

#[derive(Debug, Clone, Copy)]
pub struct Decimal {
    mantissa: i128,
    scale: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecimalError {
    Malformed,
    OutOfRange,
    Overflow,
    DivideByZero,
}

impl fmt::Display for DecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecimalError::Malformed => write!(f, "malformed decimal literal"),
            DecimalError::OutOfRange => write!(f, "decimal literal out of range"),
            DecimalError::Overflow => write!(f, "decimal arithmetic overflow"),
            DecimalError::DivideByZero => write!(f, "division by zero"),
        }
    }
}

impl core::error::Error for DecimalError {}

fn pow10(exp: u32) -> i128 {
    10i128.pow(exp)
}

impl Decimal {
    pub fn new(mantissa: i128, scale: u32) -> Result<Self, DecimalError> {
        if scale > MAX_SCALE || mantissa.abs() > MAX_MANTISSA {
            return Err(DecimalError::OutOfRange);
        }
        Ok(Decimal { mantissa, scale })
    }

    pub fn from_int(n: i64) -> Self {
        Decimal { mantissa: n as i128, scale: 0 }
    }

    pub fn zero() -> Self {
        Decimal { mantissa: 0, scale: 0 }
    }

    /// Parses `-?digits(.digits)?`. The written scale is preserved so the
    /// literal round-trips through `Display`.
    pub fn parse(text: &str) -> Result<Self, DecimalError> {
        let text = text.trim();
        let (neg, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if digits.is_empty() {
            return Err(DecimalError::Malformed);
        }
        let mut mantissa: i128 = 0;
        let mut scale: u32 = 0;
        let mut seen_dot = false;
        let mut int_digits = 0usize;
        for c in digits.chars() {
            match c {
                '0'..='9' => {
                    if !seen_dot {
                        int_digits += 1;
                    }
                    mantissa = mantissa
                        .checked_mul(10)
                        .and_then(|m| m.checked_add((c as u8 - b'0') as i128))
                        .ok_or(DecimalError::OutOfRange)?;
                    if seen_dot {
                        scale += 1;
                    }
                }
                '.' if !seen_dot => seen_dot = true,
                _ => return Err(DecimalError::Malformed),
            }
        }
        if int_digits == 0 || (seen_dot && scale == 0) {
            return Err(DecimalError::Malformed);
        }
        if neg {
            mantissa = -mantissa;
        }
        Decimal::new(mantissa, scale)
    }

    pub fn is_integer(&self) -> bool {
        let (m, s) = self.normalized_parts();
        s == 0 || m == 0
    }

    /// Integer value if the decimal has no fractional part.
    pub fn to_int(&self) -> Option<i128> {
        let (m, s) = self.normalized_parts();
        if s == 0 {
            Some(m)
        } else {
            None
        }
    }

    fn normalized_parts(&self) -> (i128, u32) {
        let mut m = self.mantissa;
        let mut s = self.scale;
        if m == 0 {
            return (0, 0);
        }
        while s > 0 && m % 10 == 0 {
            m /= 10;
            s -= 1;
        }
        (m, s)
    }

    /// Same value with trailing fractional zeros dropped.
    pub fn normalized(&self) -> Decimal {
        let (m, s) = self.normalized_parts();
        Decimal { mantissa: m, scale: s }
    }

    pub fn checked_add(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let scale = self.scale.max(other.scale);
        let a = self
            .mantissa
            .checked_mul(pow10(scale - self.scale))
            .ok_or(DecimalError::Overflow)?;
        let b = other
            .mantissa
            .checked_mul(pow10(scale - other.scale))
            .ok_or(DecimalError::Overflow)?;
        let sum = a.checked_add(b).ok_or(DecimalError::Overflow)?;
        if sum.abs() > MAX_MANTISSA * 1000 {
            return Err(DecimalError::Overflow);
        }
        Ok(Decimal { mantissa: sum, scale })
    }

    pub fn checked_mul_int(&self, n: i128) -> Result<Decimal, DecimalError> {
        let m = self.mantissa.checked_mul(n).ok_or(DecimalError::Overflow)?;
        Ok(Decimal { mantissa: m, scale: self.scale })
    }

    /// Divides by a positive integer, extending the scale just far enough
    /// for an exact result. Non-terminating quotients round half-even at
    /// [`MAX_SCALE`].
    pub fn checked_div_int(&self, n: i128) -> Result<Decimal, DecimalError> {
        if n == 0 {
            return Err(DecimalError::DivideByZero);
        }
        let mut m = self.mantissa;
        let mut s = self.scale;
        while m % n != 0 && s < MAX_SCALE {
            m = m.checked_mul(10).ok_or(DecimalError::Overflow)?;
            s += 1;
        }
        if m % n == 0 {
            return Ok(Decimal { mantissa: m / n, scale: s }.normalized());
        }
        let q = m / n;
        let rem = (m % n).abs();
        let half = rem.checked_mul(2).ok_or(DecimalError::Overflow)?;
        let nn = n.abs();
        let mut rounded = q;
        let away = if (m < 0) != (n < 0) { -1 } else { 1 };
        if half > nn || (half == nn && q % 2 != 0) {
            rounded += away;
        }
        Ok(Decimal { mantissa: rounded, scale: s }.normalized())
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == core::cmp::Ordering::Equal
    }
}

impl Eq for Decimal {}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        let scale = self.scale.max(other.scale);
        let a = self.mantissa * pow10(scale - self.scale);
        let b = other.mantissa * pow10(scale - other.scale);
        a.cmp(&b)
    }
}

impl core::hash::Hash for Decimal {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        let (m, s) = self.normalized_parts();
        m.hash(state);
        s.hash(state);
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let div = pow10(self.scale) as u128;
        let int = abs / div;
        let frac = abs % div;
        let mut frac_digits = String::new();
        let mut rem = frac;
        let mut place = div / 10;
        while place > 0 {
            frac_digits.push((b'0' + (rem / place) as u8) as char);
            rem %= place;
            place /= 10;
        }
        write!(f, "{sign}{int}.{frac_digits}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn d(s: &str) -> Decimal {
        Decimal::parse(s).unwrap()
    }

    #[test]
    fn parse_round_trips_written_form() {
        for s in ["8000000", "118165", "4059082.5", "0.25", "1.52", "-3.10", "0"] {
            assert_eq!(d(s).to_string(), s);
        }
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", ".", "1.", ".5", "1.2.3", "1a", "--1", "1 2"] {
            assert!(Decimal::parse(s).is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn equality_ignores_trailing_zeros() {
        assert_eq!(d("4059082.50"), d("4059082.5"));
        assert_eq!(d("8000000"), d("8000000.000"));
        assert_ne!(d("1.01"), d("1.1"));
    }

    #[test]
    fn ordering_aligns_scales() {
        assert!(d("118165") < d("8000000"));
        assert!(d("2.5") > d("2.45"));
        assert!(d("-1.5") < d("0"));
    }

    // avg {118165, 8000000} = 4059082.5 exactly.
    #[test]
    fn division_extends_scale_exactly() {
        let sum = d("118165").checked_add(&d("8000000")).unwrap();
        assert_eq!(sum, d("8118165"));
        let avg = sum.checked_div_int(2).unwrap();
        assert_eq!(avg.to_string(), "4059082.5");
    }

    #[test]
    fn division_rounds_half_even_when_non_terminating() {
        let third = d("1").checked_div_int(3).unwrap();
        assert_eq!(third.to_string(), "0.333333333333");
        let two_thirds = d("2").checked_div_int(3).unwrap();
        assert_eq!(two_thirds.to_string(), "0.666666666667");
    }

    #[test]
    fn avg_times_count_recovers_sum_when_exact() {
        // counts of the form 2^a * 5^b terminate in base 10
        for count in [1i128, 2, 4, 5, 8, 10, 16, 20, 25] {
            let sum = d("8118165.75");
            let avg = sum.checked_div_int(count).unwrap();
            assert_eq!(avg.checked_mul_int(count).unwrap(), sum, "count {count}");
        }
    }
}
