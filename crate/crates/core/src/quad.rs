//! Imaginary quadratic fields `K = Q(sqrt(-d))`: elements, prime splitting,
//! ideals in Hermite normal form and the class number.
//!
//! The ring of integers is `Z[w]` where `w` has minimal polynomial
//! `x^2 - t x + n`, with `(t, n) = (1, (1 - D)/4)` for `D = 1 mod 4` and
//! `(0, d)` otherwise.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};

/// Class numbers are computed by brute force below this `|D|`.
pub const CLASS_NUMBER_BOUND: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Split,
    Inert,
    Ramified,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Split => "split",
            SplitKind::Inert => "inert",
            SplitKind::Ramified => "ramified",
        })
    }
}

/// A prime of `K`. Degree-one primes are `(l, w - r)` for a root `r` of the
/// minimal polynomial mod `l`; an inert prime is `(l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub ell: u64,
    pub residue_degree: u32,
    pub root: Option<i64>,
}

impl PrimeIdeal {
    pub fn norm(&self) -> u64 {
        self.ell.pow(self.residue_degree)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeSplit {
    pub ell: u64,
    pub kind: SplitKind,
    pub primes_above: Vec<PrimeIdeal>,
}

/// `a + b w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
}

impl QuadInt {
    pub const fn new(a: i64, b: i64) -> Self {
        QuadInt { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, b) => write!(f, "{b}*w"),
            (a, b) if b < 0 => write!(f, "{a}-{}*w", -b),
            (a, b) => write!(f, "{a}+{b}*w"),
        }
    }
}

/// The integral ideal `c (a Z + (b + w) Z)` with `a | N(b + w)`, `0 <= b < a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IdealRep {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub norm: u64,
    pub class_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadField {
    d: u64,
    disc: i64,
    t: i64,
    n: i64,
    class_number: u64,
    unit_count: u32,
    reduced_forms: Vec<(i64, i64, i64)>,
}

impl QuadField {
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 || arith::factor(d).iter().any(|&(_, e)| e > 1) {
            return Err(Error::InvalidInput(format!("d = {d} is not squarefree")));
        }
        let d_i = d as i64;
        let disc = if d % 4 == 3 { -d_i } else { -4 * d_i };
        let (t, n) = if disc.rem_euclid(4) == 1 { (1, (1 - disc) / 4) } else { (0, d_i) };
        let reduced_forms = reduced_forms(disc)?;
        let unit_count = match disc {
            -3 => 6,
            -4 => 4,
            _ => 2,
        };
        Ok(QuadField { d, disc, t, n, class_number: reduced_forms.len() as u64, unit_count, reduced_forms })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn class_number(&self) -> u64 {
        self.class_number
    }

    pub fn unit_count(&self) -> u32 {
        self.unit_count
    }

    /// Trace and norm of `w`.
    pub fn omega_poly(&self) -> (i64, i64) {
        (self.t, self.n)
    }

    /// `xi = sqrt(D) = 2w - t`.
    pub fn xi(&self) -> QuadInt {
        QuadInt::new(-self.t, 2)
    }

    pub fn norm(&self, x: QuadInt) -> i64 {
        x.a * x.a + self.t * x.a * x.b + self.n * x.b * x.b
    }

    pub fn trace(&self, x: QuadInt) -> i64 {
        2 * x.a + self.t * x.b
    }

    pub fn conj(&self, x: QuadInt) -> QuadInt {
        QuadInt::new(x.a + self.t * x.b, -x.b)
    }

    pub fn mul(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        // w^2 = t w - n
        let bb = x.b * y.b;
        QuadInt::new(x.a * y.a - self.n * bb, x.a * y.b + x.b * y.a + self.t * bb)
    }

    pub fn add(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        QuadInt::new(x.a + y.a, x.b + y.b)
    }

    pub fn neg(&self, x: QuadInt) -> QuadInt {
        QuadInt::new(-x.a, -x.b)
    }

    pub fn pow(&self, x: QuadInt, e: u32) -> QuadInt {
        (0..e).fold(QuadInt::new(1, 0), |acc, _| self.mul(acc, x))
    }

    /// Complex embedding with `Im(xi) > 0`.
    pub fn to_complex(&self, x: QuadInt) -> (f64, f64) {
        let s = (-self.disc as f64).sqrt();
        (x.a as f64 + x.b as f64 * self.t as f64 / 2.0, x.b as f64 * s / 2.0)
    }

    pub fn classify_prime(&self, ell: u64) -> PrimeSplit {
        let roots = self.roots_mod(ell);
        let kind = match arith::kronecker(self.disc, ell) {
            1 => SplitKind::Split,
            -1 => SplitKind::Inert,
            _ => SplitKind::Ramified,
        };
        let primes_above = match kind {
            SplitKind::Inert => vec![PrimeIdeal { ell, residue_degree: 2, root: None }],
            SplitKind::Ramified => vec![PrimeIdeal { ell, residue_degree: 1, root: Some(roots[0]) }],
            SplitKind::Split => {
                roots.iter().map(|&r| PrimeIdeal { ell, residue_degree: 1, root: Some(r) }).collect()
            }
        };
        PrimeSplit { ell, kind, primes_above }
    }

    /// Roots of `x^2 - t x + n` modulo `m`, ascending.
    pub fn roots_mod(&self, m: u64) -> Vec<i64> {
        let m = m as i64;
        (0..m).filter(|&r| (r * r - self.t * r + self.n).rem_euclid(m) == 0).collect()
    }

    pub fn prime_ideal_rep(&self, pr: &PrimeIdeal) -> IdealRep {
        match pr.root {
            // w - r in the ideal means b + w with b = -r mod l
            Some(r) => {
                let a = pr.ell as i64;
                self.ideal(a, (-r).rem_euclid(a), 1)
            }
            None => self.ideal(1, 0, pr.ell as i64),
        }
    }

    fn ideal(&self, a: i64, b: i64, c: i64) -> IdealRep {
        let norm = (c * c * a) as u64;
        let class_index = self.class_index_of(a, b);
        IdealRep { a, b, c, norm, class_index }
    }

    fn class_index_of(&self, a: i64, b: i64) -> usize {
        if self.class_number == 1 {
            return 0;
        }
        // a Z + (b + w) Z has norm form N(a x + (b + w) y) / a
        let bq = 2 * b + self.t;
        let cq = (b * b + self.t * b + self.n) / a;
        let f = reduce_form(a, bq, cq);
        self.reduced_forms.iter().position(|&g| g == f).expect("reduced form listed")
    }

    pub fn contains(&self, ideal: &IdealRep, x: QuadInt) -> bool {
        if x.a % ideal.c != 0 || x.b % ideal.c != 0 {
            return false;
        }
        let (xa, xb) = (x.a / ideal.c, x.b / ideal.c);
        (xa - ideal.b * xb) % ideal.a == 0
    }

    /// The ideal `(x)`.
    pub fn principal(&self, x: QuadInt) -> Result<IdealRep> {
        if x.is_zero() {
            return Err(Error::InvalidInput("zero ideal".into()));
        }
        let norm = self.norm(x) as u64;
        let c = num_integer::gcd(x.a, x.b).abs();
        let prim = norm / (c * c) as u64;
        let a = prim as i64;
        let b = (0..a)
            .find(|&b| self.contains(&self.ideal(a, b, c), x) && (b * b + self.t * b + self.n) % a == 0)
            .ok_or_else(|| Error::Invariant(format!("no HNF for ({x})")))?;
        Ok(self.ideal(a, b, c))
    }

    /// A generator of a principal ideal, normalized to the first element in
    /// the search order with nonnegative leading coordinate.
    pub fn generator(&self, ideal: &IdealRep) -> Option<QuadInt> {
        let nrm = ideal.norm as i64;
        let y_max = ((4 * nrm) as f64 / (-self.disc) as f64).sqrt().floor() as i64 + 1;
        for y in 0..=y_max {
            // x^2 + t y x + (n y^2 - N) = 0
            let disc = self.t * self.t * y * y - 4 * (self.n * y * y - nrm);
            if disc < 0 {
                continue;
            }
            let s = disc.isqrt();
            if s * s != disc {
                continue;
            }
            for num in [-self.t * y + s, -self.t * y - s] {
                if num % 2 != 0 {
                    continue;
                }
                let x = QuadInt::new(num / 2, y);
                if self.contains(ideal, x) {
                    return Some(if x.a < 0 || (x.a == 0 && x.b < 0) { self.neg(x) } else { x });
                }
            }
        }
        None
    }

    /// Every integral ideal of norm at most `bound`, sorted by `(norm, c, a, b)`.
    pub fn ideals_up_to_norm(&self, bound: u64) -> Vec<IdealRep> {
        let mut out = Vec::new();
        let mut c = 1i64;
        while (c * c) as u64 <= bound {
            let amax = bound / (c * c) as u64;
            for a in 1..=amax as i64 {
                for b in self.roots_mod(a as u64) {
                    // roots of x^2 - t x + n give b = -r for b + w
                    out.push(self.ideal(a, (-b).rem_euclid(a), c));
                }
            }
            c += 1;
        }
        out.sort_by_key(|i| (i.norm, i.c, i.a, i.b));
        out
    }

    /// Ideal counts for norms `1..=bound` from `sum_{m | n} chi_D(m)`.
    pub fn ideal_counts_oracle(&self, bound: u64) -> Vec<u64> {
        let mut counts = vec![0i64; bound as usize + 1];
        for m in 1..=bound {
            let chi = arith::kronecker(self.disc, m) as i64;
            if chi == 0 {
                continue;
            }
            let mut n = m;
            while n <= bound {
                counts[n as usize] += chi;
                n += m;
            }
        }
        counts.into_iter().map(|c| c as u64).collect()
    }

    pub fn write_ideals_csv<W: Write>(&self, ideals: &[IdealRep], mut w: W) -> std::io::Result<()> {
        writeln!(w, "norm,a,b,c,class_index")?;
        for i in ideals {
            writeln!(w, "{},{},{},{},{}", i.norm, i.a, i.b, i.c, i.class_index)?;
        }
        Ok(())
    }
}

/// Reduced positive definite forms `(a, b, c)` of discriminant `disc`:
/// `|b| <= a <= c`, with `b >= 0` whenever `|b| = a` or `a = c`.
pub fn reduced_forms(disc: i64) -> Result<Vec<(i64, i64, i64)>> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidInput(format!("{disc} is not a negative discriminant")));
    }
    if -disc > CLASS_NUMBER_BOUND {
        return Err(Error::BoundExceeded(-disc));
    }
    let mut out = Vec::new();
    let mut a = 1;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (a == c && b < 0) {
                continue;
            }
            out.push((a, b, c));
        }
        a += 1;
    }
    Ok(out)
}

pub fn class_number(disc: i64) -> Result<u64> {
    Ok(reduced_forms(disc)?.len() as u64)
}

fn reduce_form(mut a: i64, mut b: i64, mut c: i64) -> (i64, i64, i64) {
    loop {
        if b > a || b <= -a {
            // translate b into (-a, a]
            let k = (a - b).div_euclid(2 * a);
            let nb = b + 2 * a * k;
            c += k * b + a * k * k;
            b = nb;
        }
        if a > c || (a == c && b < 0) {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            continue;
        }
        if b > a || b <= -a {
            continue;
        }
        return (a, b, c);
    }
}
