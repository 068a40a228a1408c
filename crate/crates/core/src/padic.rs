//! Fixed-precision arithmetic in `Q_p`.
//!
//! A [`PadicNum`] is `p^val * unit` where `unit` is known modulo `p^prec`.
//! Precision is relative: `prec` counts the significant base-`p` digits of
//! the unit part. Sums and differences may cancel leading digits, in which
//! case the relative precision shrinks; it never grows.
//!
//! A value whose digits all cancelled is an *inexact zero*: `prec == 0` and
//! `val` is the absolute precision it is known to. The exact zero (from an
//! exact rational `0`) has infinite valuation.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default number of significant digits carried by the pipeline.
pub const DEFAULT_PRECISION: u32 = 40;

/// Integer valuation, or `+inf` for the exact zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(p: u64, n: &BigInt) -> u32 {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

fn pow_p(p: u64, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    let e = a.extended_gcd(&m);
    debug_assert!(e.gcd.is_one(), "inverse of a non-unit");
    e.x.mod_floor(&m).to_biguint().expect("nonnegative")
}

/// An element of `Q_p` at finite precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicNum {
    p: u64,
    /// `None` marks the exact zero.
    val: Option<i64>,
    unit: BigUint,
    prec: u32,
}

impl PadicNum {
    pub fn zero(p: u64) -> Self {
        PadicNum { p, val: None, unit: BigUint::zero(), prec: 0 }
    }

    /// A zero known only modulo `p^abs_prec`.
    pub fn inexact_zero(p: u64, abs_prec: i64) -> Self {
        PadicNum { p, val: Some(abs_prec), unit: BigUint::zero(), prec: 0 }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_int(p, 1, prec)
    }

    pub fn from_int(p: u64, n: i64, prec: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), prec)
    }

    pub fn from_bigint(p: u64, n: &BigInt, prec: u32) -> Self {
        Self::from_rational(p, n, &BigInt::one(), prec)
    }

    /// Embeds `num/den` with `prec` significant digits.
    pub fn from_rational(p: u64, num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero(p);
        }
        let vn = int_valuation(p, num) as i64;
        let vd = int_valuation(p, den) as i64;
        let pb = BigInt::from(p);
        let un = num / pb.pow(vn as u32);
        let ud = den / pb.pow(vd as u32);
        let m = BigInt::from(pow_p(p, prec));
        let un = un.mod_floor(&m).to_biguint().expect("nonnegative");
        let ud = ud.mod_floor(&m).to_biguint().expect("nonnegative");
        let mm = m.to_biguint().expect("positive");
        let unit = (un * mod_inverse(&ud, &mm)) % &mm;
        PadicNum { p, val: Some(vn - vd), unit, prec }
    }

    pub fn from_ratio(p: u64, r: &num_rational::Ratio<i64>, prec: u32) -> Self {
        Self::from_rational(p, &BigInt::from(*r.numer()), &BigInt::from(*r.denom()), prec)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Significant digits of the unit part.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Valuation; for an inexact zero this is the known lower bound.
    pub fn val_p(&self) -> Valuation {
        match self.val {
            None => Valuation::Infinite,
            Some(v) => Valuation::Finite(v),
        }
    }

    /// `val + prec`: the power of `p` modulo which the value is known.
    pub fn absolute_precision(&self) -> Option<i64> {
        self.val.map(|v| v + self.prec as i64)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.val.is_none()
    }

    /// True for both the exact zero and an inexact zero.
    pub fn is_zero(&self) -> bool {
        self.val.is_none() || self.prec == 0
    }

    pub fn unit_part(&self) -> &BigUint {
        &self.unit
    }

    /// Base-`p` digits of the unit part, least significant first.
    pub fn digits(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.prec as usize);
        let pb = BigUint::from(self.p);
        let mut u = self.unit.clone();
        for _ in 0..self.prec {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u64().expect("digit"));
            u = q;
        }
        out
    }

    pub fn from_digits(p: u64, val: Valuation, digits: &[u64]) -> Result<Self> {
        let Valuation::Finite(v) = val else {
            return Ok(Self::zero(p));
        };
        let mut unit = BigUint::zero();
        for d in digits.iter().rev() {
            if *d >= p {
                return Err(Error::InvalidInput(format!("digit {d} out of range for p={p}")));
            }
            unit = unit * p + d;
        }
        if !digits.is_empty() && digits[0] == 0 {
            return Err(Error::InvalidInput("leading unit digit must be nonzero".into()));
        }
        Ok(PadicNum { p, val: Some(v), unit, prec: digits.len() as u32 })
    }

    /// Truncates to at most `prec` significant digits.
    pub fn with_precision(&self, prec: u32) -> Self {
        if self.val.is_none() || prec >= self.prec {
            return self.clone();
        }
        let unit = &self.unit % pow_p(self.p, prec);
        PadicNum { p: self.p, val: self.val, unit, prec }
    }

    /// Multiplies by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        if let Some(v) = out.val.as_mut() {
            *v += k;
        }
        out
    }

    fn check_prime(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixing p-adic numbers over different primes");
    }

    /// Signed representative of the value modulo `p^abs`, as a rational
    /// `n / p^k`; used for display and tests.
    pub fn to_bigint_scaled(&self) -> Option<(BigInt, i64)> {
        let v = self.val?;
        Some((BigInt::from_biguint(Sign::Plus, self.unit.clone()), v))
    }

    /// Exact comparison with a rational, to the available precision.
    pub fn congruent_to_rational(&self, num: i64, den: i64) -> bool {
        let r = PadicNum::from_rational(self.p, &num.into(), &den.into(), self.prec.max(1) + 4);
        let d = self - &r;
        match (self.absolute_precision(), d.val_p()) {
            (_, Valuation::Infinite) => true,
            (Some(a), Valuation::Finite(v)) => d.prec == 0 || v >= a,
            (None, Valuation::Finite(_)) => d.is_zero(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = pow_p(self.p, self.prec);
        Ok(PadicNum {
            p: self.p,
            val: Some(-self.val.expect("nonzero")),
            unit: mod_inverse(&self.unit, &m),
            prec: self.prec,
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = PadicNum::one(self.p, self.prec.max(1));
        if self.is_exact_zero() {
            return if e == 0 { acc } else { self.clone() };
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// `x^e` for a signed exponent.
    pub fn powi(&self, e: i64) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow(e as u64))
        } else {
            Ok(self.inv()?.pow(e.unsigned_abs()))
        }
    }

    /// Teichmüller representative of a unit: `lim u^(p^n)`.
    pub fn teichmuller(&self) -> Result<Self> {
        if self.val != Some(0) || self.prec == 0 {
            return Err(Error::InvalidInput("Teichmüller lift needs a unit".into()));
        }
        let mut t = self.clone();
        for _ in 0..=self.prec {
            t = t.pow(self.p);
        }
        Ok(t)
    }

    /// The principal-unit projection `<u> = u / omega(u)` of a unit.
    pub fn one_unit_part(&self) -> Result<Self> {
        self.checked_div(&self.teichmuller()?)
    }

    /// Iwasawa logarithm: `log_p(p) = 0`, `log_p(zeta) = 0` for roots of unity,
    /// and the usual series on `1 + pZ_p`.
    pub fn iwasawa_log(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::LogOfZero);
        }
        let p = self.p;
        let unit = PadicNum { p, val: Some(0), unit: self.unit.clone(), prec: self.prec };
        // u^(p-1) lies in 1 + pZ_p; divide the log by p - 1 afterwards.
        let y = unit.pow(p - 1);
        let z = &y - &PadicNum::one(p, self.prec);
        let series = log1p_series(&z, self.prec)?;
        series.checked_div(&PadicNum::from_int(p, p as i64 - 1, self.prec))
    }
}

/// `log(1 + z)` for `v_p(z) >= 1`, summed until terms drop below the
/// absolute precision of `z`.
fn log1p_series(z: &PadicNum, prec: u32) -> Result<PadicNum> {
    let p = z.p;
    let Some(vz) = z.val else {
        return Ok(PadicNum::zero(p));
    };
    if z.prec == 0 {
        return Ok(PadicNum::inexact_zero(p, vz));
    }
    if vz < 1 {
        return Err(Error::InvalidInput("log series needs v_p(z) >= 1".into()));
    }
    let target = prec as i64 + vz;
    let mut acc = PadicNum::zero(p);
    let mut power = z.clone();
    let mut k: u64 = 1;
    loop {
        let vk = int_valuation(p, &BigInt::from(k)) as i64;
        if (k as i64) * vz - vk >= target {
            break;
        }
        let kk = PadicNum::from_int(p, k as i64, prec + 8);
        let term = power.checked_div(&kk)?;
        acc = if k % 2 == 1 { &acc + &term } else { &acc - &term };
        power = &power * z;
        k += 1;
    }
    Ok(acc)
}

impl<'a> std::ops::Add<&'a PadicNum> for &'a PadicNum {
    type Output = PadicNum;

    fn add(self, rhs: &'a PadicNum) -> PadicNum {
        self.check_prime(rhs);
        let p = self.p;
        let (a, b) = match (self.val, rhs.val) {
            (None, _) => return rhs.clone(),
            (_, None) => return self.clone(),
            (Some(va), Some(vb)) if va <= vb => (self, rhs),
            _ => (rhs, self),
        };
        let va = a.val.expect("finite");
        let vb = b.val.expect("finite");
        let abs = a.absolute_precision().unwrap().min(b.absolute_precision().unwrap());
        if abs <= va {
            return PadicNum::inexact_zero(p, abs);
        }
        let width = (abs - va) as u32;
        let m = pow_p(p, width);
        let shifted = if abs > vb {
            (&b.unit * pow_p(p, (vb - va) as u32)) % &m
        } else {
            BigUint::zero()
        };
        let s = (&a.unit % &m + shifted) % &m;
        normalize(p, va, s, width)
    }
}

fn normalize(p: u64, v: i64, s: BigUint, width: u32) -> PadicNum {
    if s.is_zero() {
        return PadicNum::inexact_zero(p, v + width as i64);
    }
    let pb = BigUint::from(p);
    let mut s = s;
    let mut t = 0u32;
    loop {
        let (q, r) = s.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        s = q;
        t += 1;
    }
    PadicNum { p, val: Some(v + t as i64), unit: s, prec: width - t }
}

impl std::ops::Neg for &PadicNum {
    type Output = PadicNum;

    fn neg(self) -> PadicNum {
        if self.is_zero() {
            return self.clone();
        }
        let m = pow_p(self.p, self.prec);
        PadicNum { p: self.p, val: self.val, unit: (&m - &self.unit) % &m, prec: self.prec }
    }
}

impl<'a> std::ops::Sub<&'a PadicNum> for &'a PadicNum {
    type Output = PadicNum;

    fn sub(self, rhs: &'a PadicNum) -> PadicNum {
        let n = -rhs;
        self + &n
    }
}

impl<'a> std::ops::Mul<&'a PadicNum> for &'a PadicNum {
    type Output = PadicNum;

    fn mul(self, rhs: &'a PadicNum) -> PadicNum {
        self.check_prime(rhs);
        let p = self.p;
        match (self.val, rhs.val) {
            (None, _) | (_, None) => PadicNum::zero(p),
            (Some(a), Some(b)) => {
                if self.prec == 0 || rhs.prec == 0 {
                    // an inexact zero times anything known to some digits
                    let bound = a + b + self.prec.min(rhs.prec) as i64;
                    return PadicNum::inexact_zero(p, bound);
                }
                let prec = self.prec.min(rhs.prec);
                let m = pow_p(p, prec);
                PadicNum { p, val: Some(a + b), unit: (&self.unit * &rhs.unit) % m, prec }
            }
        }
    }
}

impl fmt::Display for PadicNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.val {
            None => f.write_str("0"),
            Some(v) if self.prec == 0 => write!(f, "O({}^{})", self.p, v),
            Some(v) => {
                let digits: Vec<String> =
                    self.digits().iter().rev().take(8).map(|d| d.to_string()).collect();
                write!(f, "{}^{} * (..{}) + O({}^{})", self.p, v, digits.join(""), self.p, v + self.prec as i64)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PadicWire {
    p: u64,
    val: serde_json::Value,
    digits: Vec<u64>,
    prec: u32,
}

impl Serialize for PadicNum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let val = match self.val {
            None => serde_json::Value::String("inf".into()),
            Some(v) => serde_json::Value::from(v),
        };
        PadicWire { p: self.p, val, digits: self.digits(), prec: self.prec }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = PadicWire::deserialize(d)?;
        let val = match &w.val {
            serde_json::Value::String(s) if s == "inf" => Valuation::Infinite,
            v => Valuation::Finite(v.as_i64().ok_or_else(|| D::Error::custom("val must be int or \"inf\""))?),
        };
        if w.prec == 0 {
            return Ok(match val {
                Valuation::Infinite => PadicNum::zero(w.p),
                Valuation::Finite(v) => PadicNum::inexact_zero(w.p, v),
            });
        }
        PadicNum::from_digits(w.p, val, &w.digits).map_err(D::Error::custom)
    }
}

/// Result of the numeric derivative `lim (f(p^n) - f(0)) / p^n`.
#[derive(Clone, Debug)]
pub struct DerivativeEstimate {
    pub value: PadicNum,
    /// `(n, (f(p^n) - f(0)) / p^n)` for `n = 1..=max_n`.
    pub quotients: Vec<(u32, PadicNum)>,
}

/// Largest step `n` supported by `prec` digits: each step costs one digit
/// and a margin of ten digits is kept for the attested comparison.
pub fn derivative_depth(prec: u32) -> u32 {
    prec.saturating_sub(10).min(6).max(1)
}

/// Numeric p-adic derivative at `0` of a function on nonnegative integers.
///
/// Successive quotients must satisfy `v_p(q_{n+1} - q_n) >= n - slack`,
/// otherwise the sequence is reported as non-convergent.
pub fn padic_derivative<F>(p: u64, max_n: u32, slack: i64, f: F) -> Result<DerivativeEstimate>
where
    F: Fn(u64) -> PadicNum,
{
    let f0 = f(0);
    let mut quotients = Vec::with_capacity(max_n as usize);
    for n in 1..=max_n {
        let k = p.checked_pow(n).ok_or_else(|| Error::InvalidInput("step p^n overflows".into()))?;
        let diff = &f(k) - &f0;
        quotients.push((n, diff.shift(-(n as i64))));
    }
    for w in quotients.windows(2) {
        let (n, ref a) = w[0];
        let (_, ref b) = w[1];
        let d = b - a;
        if let Valuation::Finite(v) = d.val_p() {
            if !d.is_zero() && v < n as i64 - slack {
                return Err(Error::NonConvergent { step: n, valuation: v });
            }
        }
    }
    let value = quotients.last().map(|(_, q)| q.clone()).unwrap_or_else(|| PadicNum::zero(p));
    Ok(DerivativeEstimate { value, quotients })
}

/// A sequence with a declared limit and a guaranteed convergence rate
/// `v_p(term_n - limit) >= n - rate_offset`.
#[derive(Clone, Debug)]
pub struct PadicSeqLimit {
    pub terms: std::collections::BTreeMap<u32, PadicNum>,
    pub declared_limit: PadicNum,
    pub rate_offset: i64,
}

impl PadicSeqLimit {
    pub fn from_estimate(est: &DerivativeEstimate, limit: PadicNum, rate_offset: i64) -> Self {
        PadicSeqLimit { terms: est.quotients.iter().cloned().collect(), declared_limit: limit, rate_offset }
    }

    /// Checks the rate at every stored index, within available precision.
    pub fn check(&self) -> Result<()> {
        for (&n, t) in &self.terms {
            let d = t - &self.declared_limit;
            if d.is_zero() {
                continue;
            }
            let v = d.val_p().finite().expect("nonzero");
            if v < n as i64 - self.rate_offset {
                return Err(Error::NonConvergent { step: n, valuation: v });
            }
        }
        Ok(())
    }
}

/// Valuation of a nonzero rational `a/b`.
pub fn rational_valuation(p: u64, num: i64, den: i64) -> Valuation {
    if num == 0 {
        return Valuation::Infinite;
    }
    let n = int_valuation(p, &BigInt::from(num)) as i64;
    let d = int_valuation(p, &BigInt::from(den)) as i64;
    Valuation::Finite(n - d)
}
