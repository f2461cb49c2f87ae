//! Exact rational arithmetic helpers.
//!
//! All clock values, delays and reachability times in this crate are
//! arbitrary-precision rationals. Floating point would break the exact
//! equality tests at region boundaries, so nothing here ever rounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// The rational scalar used throughout the crate.
pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_zero() -> Q {
    Q::zero()
}

pub fn q_one() -> Q {
    Q::one()
}

/// Integer part of a non-negative rational as `u32`.
///
/// Panics if the value is negative or does not fit; callers only apply
/// this to bounded clock values.
pub fn floor_u32(q: &Q) -> u32 {
    assert!(!q.is_negative(), "floor_u32 on negative rational {q}");
    q.floor()
        .to_integer()
        .to_u32()
        .expect("clock value exceeds u32 range")
}

/// Fractional part `q - floor(q)` of a non-negative rational.
pub fn frac_part(q: &Q) -> Q {
    q - q.floor()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct ParseQError(pub String);

/// Parses `p` or `p/q` (lowest terms not required on input).
pub fn parse_q(text: &str) -> Result<Q, ParseQError> {
    let bad = || ParseQError(text.to_string());
    match text.split_once('/') {
        None => {
            let n: BigInt = text.parse().map_err(|_| bad())?;
            Ok(Q::from_integer(n))
        }
        Some((num, den)) => {
            let n: BigInt = num.parse().map_err(|_| bad())?;
            let d: BigInt = den.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
    }
}

/// Canonical serialization: `p/q` in lowest terms, integers as plain `p`.
pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A rational extended with a top element, used for game values where
/// infinity means "a final state is never reached".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtQ {
    Fin(Q),
    Inf,
}

impl ExtQ {
    pub fn zero() -> Self {
        ExtQ::Fin(Q::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtQ::Fin(_))
    }

    /// Adds a finite delay; infinity is absorbing.
    pub fn add_delay(&self, t: &Q) -> ExtQ {
        match self {
            ExtQ::Fin(v) => ExtQ::Fin(v + t),
            ExtQ::Inf => ExtQ::Inf,
        }
    }

    pub fn as_finite(&self) -> Option<&Q> {
        match self {
            ExtQ::Fin(v) => Some(v),
            ExtQ::Inf => None,
        }
    }
}

impl PartialOrd for ExtQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtQ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtQ::Fin(a), ExtQ::Fin(b)) => a.cmp(b),
            (ExtQ::Fin(_), ExtQ::Inf) => Ordering::Less,
            (ExtQ::Inf, ExtQ::Fin(_)) => Ordering::Greater,
            (ExtQ::Inf, ExtQ::Inf) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtQ::Fin(v) => write!(f, "{}", fmt_q(v)),
            ExtQ::Inf => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(fmt_q(&parse_q("3/4").unwrap()), "3/4");
        assert_eq!(fmt_q(&parse_q("6/8").unwrap()), "3/4");
        assert_eq!(fmt_q(&parse_q("5").unwrap()), "5");
        assert_eq!(fmt_q(&parse_q("0/7").unwrap()), "0");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
        assert!(parse_q("").is_err());
    }

    #[test]
    fn floor_and_frac() {
        let q = q_ratio(7, 4);
        assert_eq!(floor_u32(&q), 1);
        assert_eq!(frac_part(&q), q_ratio(3, 4));
        assert_eq!(frac_part(&q_int(2)), q_zero());
    }

    #[test]
    fn ext_order_has_infinity_on_top() {
        assert!(ExtQ::Fin(q_int(1_000_000)) < ExtQ::Inf);
        assert_eq!(ExtQ::Inf.cmp(&ExtQ::Inf), Ordering::Equal);
        assert_eq!(ExtQ::Inf.add_delay(&q_int(3)), ExtQ::Inf);
        assert_eq!(
            ExtQ::Fin(q_ratio(1, 2)).add_delay(&q_ratio(1, 2)),
            ExtQ::Fin(q_int(1))
        );
    }

    proptest! {
        #[test]
        fn serialization_round_trips_bit_exactly(n in -10_000i64..10_000, d in 1i64..500) {
            let q = q_ratio(n, d);
            let text = fmt_q(&q);
            let back = parse_q(&text).unwrap();
            prop_assert_eq!(&back, &q);
            prop_assert_eq!(fmt_q(&back), text);
        }
    }
}
