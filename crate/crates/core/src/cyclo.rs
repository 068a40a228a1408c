//! Exact roots of unity and rational valuations.
//!
//! Character values of finite-order data are stored as `exp(2 pi i k / n)`
//! with `k/n` reduced. Their `p`-adic size is known in closed form, so no
//! extension of `Q_p` is ever materialized.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::padic::{PadicNum, Valuation};

/// Rational valuation with `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RatVal {
    Finite(Ratio<i64>),
    Infinite,
}

impl RatVal {
    pub fn zero() -> Self {
        RatVal::Finite(Ratio::from_integer(0))
    }

    pub fn int(v: i64) -> Self {
        RatVal::Finite(Ratio::from_integer(v))
    }

    pub fn finite(self) -> Option<Ratio<i64>> {
        match self {
            RatVal::Finite(r) => Some(r),
            RatVal::Infinite => None,
        }
    }

    pub fn add(self, other: RatVal) -> RatVal {
        match (self, other) {
            (RatVal::Finite(a), RatVal::Finite(b)) => RatVal::Finite(a + b),
            _ => RatVal::Infinite,
        }
    }

    pub fn sub_int(self, k: i64) -> RatVal {
        match self {
            RatVal::Finite(a) => RatVal::Finite(a - k),
            RatVal::Infinite => RatVal::Infinite,
        }
    }
}

impl From<Valuation> for RatVal {
    fn from(v: Valuation) -> Self {
        match v {
            Valuation::Finite(k) => RatVal::int(k),
            Valuation::Infinite => RatVal::Infinite,
        }
    }
}

impl PartialOrd for RatVal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RatVal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (RatVal::Finite(a), RatVal::Finite(b)) => a.cmp(b),
            (RatVal::Finite(_), RatVal::Infinite) => Ordering::Less,
            (RatVal::Infinite, RatVal::Finite(_)) => Ordering::Greater,
            (RatVal::Infinite, RatVal::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for RatVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatVal::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            RatVal::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            RatVal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for RatVal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RatVal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratval(&s).ok_or_else(|| serde::de::Error::custom(format!("bad valuation {s:?}")))
    }
}

pub fn parse_ratval(s: &str) -> Option<RatVal> {
    if s == "inf" {
        return Some(RatVal::Infinite);
    }
    match s.split_once('/') {
        Some((n, d)) => Some(RatVal::Finite(Ratio::new(n.trim().parse().ok()?, d.trim().parse().ok()?))),
        None => Some(RatVal::int(s.trim().parse().ok()?)),
    }
}

/// `exp(2 pi i num / den)`, always reduced with `0 <= num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootOfUnity {
    num: u32,
    den: u32,
}

impl RootOfUnity {
    pub fn new(num: i64, den: u32) -> Self {
        assert!(den > 0);
        let num = num.rem_euclid(den as i64) as u32;
        let g = num.gcd(&den).max(1);
        let (num, den) = if num == 0 { (0, 1) } else { (num / g, den / g) };
        RootOfUnity { num, den }
    }

    pub fn one() -> Self {
        RootOfUnity { num: 0, den: 1 }
    }

    pub fn minus_one() -> Self {
        RootOfUnity::new(1, 2)
    }

    /// `+1` or `-1`.
    pub fn sign(positive: bool) -> Self {
        if positive { Self::one() } else { Self::minus_one() }
    }

    /// `i = exp(2 pi i / 4)`.
    pub fn i() -> Self {
        RootOfUnity::new(1, 4)
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn order(self) -> u32 {
        self.den
    }

    pub fn is_one(self) -> bool {
        self.num == 0
    }

    /// `Some(+1 | -1)` for real values.
    pub fn as_sign(self) -> Option<i32> {
        match (self.num, self.den) {
            (0, 1) => Some(1),
            (1, 2) => Some(-1),
            _ => None,
        }
    }

    pub fn mul(self, o: RootOfUnity) -> RootOfUnity {
        let den = self.den.lcm(&o.den);
        let a = self.num as i64 * (den / self.den) as i64 + o.num as i64 * (den / o.den) as i64;
        RootOfUnity::new(a, den)
    }

    pub fn inv(self) -> RootOfUnity {
        RootOfUnity::new(-(self.num as i64), self.den)
    }

    pub fn pow(self, e: i64) -> RootOfUnity {
        RootOfUnity::new(self.num as i64 * e.rem_euclid(self.den as i64), self.den)
    }

    pub fn to_complex(self) -> (f64, f64) {
        let t = 2.0 * std::f64::consts::PI * self.num as f64 / self.den as f64;
        (t.cos(), t.sin())
    }

    /// Exact `v_p(zeta - 1)`: `1 / (p^(r-1)(p-1))` for order `p^r`, `0` for
    /// any other nontrivial order, `inf` for `zeta = 1`.
    pub fn valuation_minus_one(self, p: u64) -> RatVal {
        if self.is_one() {
            return RatVal::Infinite;
        }
        let mut n = self.den as u64;
        let mut r = 0u32;
        while n % p == 0 {
            n /= p;
            r += 1;
        }
        if n != 1 {
            return RatVal::zero();
        }
        let den = (p.pow(r - 1) * (p - 1)) as i64;
        RatVal::Finite(Ratio::new(1, den))
    }

    /// Image in `Z_p` for orders dividing `p - 1`, using `omega(g)` for the
    /// chosen primitive root `g` mod `p` as the generator of `mu_{p-1}`.
    pub fn to_padic(self, p: u64, generator: u64, prec: u32) -> Option<PadicNum> {
        if (p - 1) % self.den as u64 != 0 {
            return None;
        }
        let t = PadicNum::from_int(p, generator as i64, prec).teichmuller().ok()?;
        let e = self.num as u64 * ((p - 1) / self.den as u64);
        Some(t.pow(e))
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_sign() {
            Some(1) => f.write_str("1"),
            Some(_) => f.write_str("-1"),
            None if self.den == 4 => f.write_str(if self.num == 1 { "i" } else { "-i" }),
            None => write!(f, "e({}/{})", self.num, self.den),
        }
    }
}

/// Smallest primitive root modulo an odd prime.
pub fn primitive_root(p: u64) -> u64 {
    let phi = p - 1;
    let factors = crate::arith::prime_factors(phi);
    (2..p)
        .find(|&g| factors.iter().all(|&f| crate::arith::pow_mod(g, phi / f, p) != 1))
        .expect("odd prime has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_valuations() {
        assert_eq!(RootOfUnity::minus_one().valuation_minus_one(5), RatVal::zero());
        assert_eq!(RootOfUnity::new(1, 5).valuation_minus_one(5), RatVal::Finite(Ratio::new(1, 4)));
        assert_eq!(RootOfUnity::new(2, 9).valuation_minus_one(3), RatVal::Finite(Ratio::new(1, 6)));
        assert_eq!(RootOfUnity::new(1, 15).valuation_minus_one(5), RatVal::zero());
        assert_eq!(RootOfUnity::one().valuation_minus_one(3), RatVal::Infinite);
    }

    #[test]
    fn group_law() {
        let z = RootOfUnity::new(1, 6);
        assert_eq!(z.pow(6), RootOfUnity::one());
        assert_eq!(z.pow(3), RootOfUnity::minus_one());
        assert_eq!(RootOfUnity::i().mul(RootOfUnity::i()), RootOfUnity::minus_one());
        assert_eq!(z.mul(z.inv()), RootOfUnity::one());
    }

    #[test]
    fn padic_image_has_right_order() {
        let z = RootOfUnity::new(1, 3).to_padic(7, primitive_root(7), 20).unwrap();
        assert!(z.pow(3).congruent_to_rational(1, 1));
        assert!(!z.congruent_to_rational(1, 1));
        assert!(RootOfUnity::new(1, 4).to_padic(7, 3, 20).is_none());
    }

    #[test]
    fn ratval_order_and_parse() {
        assert!(RatVal::int(3) < RatVal::Infinite);
        assert_eq!(parse_ratval("1/4"), Some(RatVal::Finite(Ratio::new(1, 4))));
        assert_eq!(RatVal::Finite(Ratio::new(2, 4)).to_string(), "1/2");
    }
}
