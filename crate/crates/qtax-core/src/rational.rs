//! Exact rational arithmetic used throughout the engine.
//!
//! Every probability, kernel entry, constraint weight and prior mass is a
//! [`Q`] (arbitrary precision rational). Comparisons are exact by default;
//! an optional tolerance is threaded through the few places where decimal
//! input makes exact equality too strict.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::str::FromStr;

/// Arbitrary precision rational number, the engine's only numeric type.
pub type Q = BigRational;

/// Shorthand constructor from integer numerator and denominator.
///
/// Panics if `den == 0`.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// The rational zero.
pub fn q0() -> Q {
    Q::zero()
}

/// The rational one.
pub fn q1() -> Q {
    Q::one()
}

/// Parse a rational literal: either `p/q` or a bare integer.
///
/// Signs are accepted on the numerator only (`-3/4`, not `3/-4`).
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() || d.is_negative() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n = BigInt::from_str(s).ok()?;
        Some(Q::from_integer(n))
    }
}

/// Parse a decimal literal such as `0.25` or `-1.5e-3` into an exact rational.
///
/// The value is the exact rational the digits denote; no binary float is
/// involved at any point.
pub fn parse_decimal(s: &str) -> Option<Q> {
    let s = s.trim();
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, i32::from_str(e).ok()?),
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mut numer = if joined.is_empty() {
        BigInt::zero()
    } else {
        BigInt::from_str(&joined).ok()?
    };
    if sign < 0 {
        numer = -numer;
    }
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    if shift >= 0 {
        Some(Q::from_integer(numer * ten.pow(shift as u32)))
    } else {
        Some(Q::new(numer, ten.pow((-shift) as u32)))
    }
}

/// Format a rational in lowest terms: `p/q`, or a bare integer when `q == 1`.
pub fn format_q(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Equality policy for probability comparisons.
///
/// `Tolerance(None)` is exact equality. `Tolerance(Some(eps))` accepts
/// `|a - b| <= eps`, which the engine enables only when a model was parsed
/// in decimal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerance(pub Option<Q>);

impl Tolerance {
    /// Exact comparison, the rational-mode default.
    pub fn exact() -> Self {
        Tolerance(None)
    }

    /// Absolute tolerance `eps`.
    pub fn absolute(eps: Q) -> Self {
        Tolerance(Some(eps))
    }

    /// `true` when `a` and `b` are equal under this policy.
    pub fn eq(&self, a: &Q, b: &Q) -> bool {
        match &self.0 {
            None => a == b,
            Some(eps) => (a - b).abs() <= *eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_parse_and_reduce() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-3/4").unwrap(), q(-3, 4));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational(" 12 / 16 ").unwrap(), q(3, 4));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("3/-4").is_none());
        assert!(parse_rational("a/b").is_none());
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_decimal("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_decimal("0.707107").unwrap(), q(707107, 1_000_000));
        assert_eq!(parse_decimal("2.5e-3").unwrap(), q(1, 400));
        assert_eq!(parse_decimal("1e2").unwrap(), q(100, 1));
        assert_eq!(parse_decimal(".5").unwrap(), q(1, 2));
        assert_eq!(parse_decimal("5.").unwrap(), q(5, 1));
        assert!(parse_decimal(".").is_none());
        assert!(parse_decimal("0.2.5").is_none());
    }

    #[test]
    fn formatting_is_lowest_terms() {
        assert_eq!(format_q(&q(2, 4)), "1/2");
        assert_eq!(format_q(&q(8, 2)), "4");
        assert_eq!(format_q(&q(-1, 3)), "-1/3");
        assert_eq!(format_q(&q0()), "0");
    }

    #[test]
    fn tolerance_policies() {
        let exact = Tolerance::exact();
        assert!(exact.eq(&q(1, 2), &q(2, 4)));
        assert!(!exact.eq(&q(1, 2), &q(500001, 1_000_000)));
        let loose = Tolerance::absolute(q(1, 100_000));
        assert!(loose.eq(&q(1, 2), &q(500001, 1_000_000)));
        assert!(!loose.eq(&q(1, 2), &q(51, 100)));
    }
}
