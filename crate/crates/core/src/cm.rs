//! The CM form `f_lambda = sum_a lambda(a) q^N(a)` and a numeric check of its
//! functional-equation sign.

use std::io::Write;

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::arith;
use crate::error::{Error, Result};
use crate::hecke::GlobalHeckeChar;
use crate::quad::{QuadInt, SplitKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QExpansion {
    pub character: String,
    pub weight: u32,
    pub level: u64,
    pub bound: u64,
    /// `coefficients[n]` for `0 <= n <= bound`, in `Z[w]`.
    pub coefficients: Vec<QuadInt>,
    /// `(t, n)` with `w^2 = t w - n`, kept for products and embeddings.
    pub omega: (i64, i64),
}

pub fn q_expansion(lam: &GlobalHeckeChar, bound: u64) -> Result<QExpansion> {
    if bound < 1 {
        return Err(Error::InvalidInput("q-expansion bound must be at least 1".into()));
    }
    let field = &lam.field;
    let ideals = field.ideals_up_to_norm(bound);
    let values = crate::par::map(&ideals, |i| lam.eval_ideal(i).map(|v| v.alg));
    let mut coefficients = vec![QuadInt::new(0, 0); bound as usize + 1];
    for (ideal, v) in ideals.iter().zip(values) {
        if let Some(a) = v {
            let slot = &mut coefficients[ideal.norm as usize];
            *slot = field.add(*slot, a);
        }
    }
    Ok(QExpansion {
        character: lam.label(),
        weight: lam.k + 1,
        level: field.disc().unsigned_abs() * lam.conductor_norm(),
        bound,
        coefficients,
        omega: field.omega_poly(),
    })
}

impl QExpansion {
    pub fn coeff(&self, n: u64) -> QuadInt {
        self.coefficients[n as usize]
    }

    fn mul(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        let (t, n) = self.omega;
        QuadInt::new(x.a * y.a - n * x.b * y.b, x.a * y.b + x.b * y.a + t * x.b * y.b)
    }

    /// Image under `w -> (t + sqrt(t^2 - 4n)) / 2`, imaginary part positive.
    pub fn to_complex(&self, x: QuadInt) -> (f64, f64) {
        let (t, n) = self.omega;
        let re = x.a as f64 + x.b as f64 * t as f64 / 2.0;
        let im = x.b as f64 * ((4 * n - t * t) as f64).sqrt() / 2.0;
        (re, im)
    }

    /// First coprime pair `(m, n)` with `mn <= bound` and `a_mn != a_m a_n`.
    pub fn multiplicativity_failure(&self) -> Option<(u64, u64)> {
        for m in 2..=self.bound {
            for n in m + 1..=self.bound / m {
                if num_integer::gcd(m, n) == 1 && self.coeff(m * n) != self.mul(self.coeff(m), self.coeff(n)) {
                    return Some((m, n));
                }
            }
        }
        None
    }

    /// Inert primes up to the bound with `a_ell != 0`.
    pub fn inert_nonvanishing(&self, lam: &GlobalHeckeChar) -> Vec<u64> {
        arith::primes_up_to(self.bound)
            .into_iter()
            .filter(|&l| lam.field.classify_prime(l).kind == SplitKind::Inert)
            .filter(|&l| !self.coeff(l).is_zero())
            .collect()
    }

    /// Primes up to the bound violating `|a_ell| <= 2 ell^(k/2)`, `k + 1` the weight.
    pub fn hecke_bound_failures(&self) -> Vec<u64> {
        let k = (self.weight - 1) as f64;
        arith::primes_up_to(self.bound)
            .into_iter()
            .filter(|&l| {
                let (re, im) = self.to_complex(self.coeff(l));
                (re * re + im * im).sqrt() > 2.0 * (l as f64).powf(k / 2.0) + 1e-9
            })
            .collect()
    }

    /// CSV with columns `n,a_n,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,a_n,re,im")?;
        for n in 1..=self.bound {
            let a = self.coeff(n);
            let (re, im) = self.to_complex(a);
            writeln!(w, "{n},{a},{re:.12},{im:.12}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub sign: i32,
    pub residual: f64,
    /// `(y, Re g(1/y) / (y^k conj g(y)))` at each sample point.
    pub samples: Vec<(f64, f64)>,
}

pub const PROBE_POINTS: [f64; 3] = [1.1, 1.25, 1.4];
pub const PROBE_TOLERANCE: f64 = 1e-6;

/// Sign `W` in `g(1/y) = W y^k conj(g(y))` with `g(y) = f(i y / sqrt(N))`,
/// evaluated in double-double arithmetic.
pub fn functional_equation_probe(f: &QExpansion) -> Result<ProbeResult> {
    if f.bound < 200 {
        return Err(Error::Precondition(format!("probe needs bound >= 200, got {}", f.bound)));
    }
    let two_pi = TwoFloat::from(2.0) * TwoFloat::from(std::f64::consts::PI)
        + TwoFloat::from(2.0 * 1.2246467991473532e-16);
    let sqrt_n = TwoFloat::from(f.level as f64).sqrt();
    let coeffs: Vec<(TwoFloat, TwoFloat)> = (0..=f.bound)
        .map(|n| {
            let x = f.coeff(n);
            let (t, nn) = f.omega;
            let re = TwoFloat::from(x.a as f64) + TwoFloat::from(x.b as f64 * t as f64) / 2.0;
            let im = TwoFloat::from(x.b as f64) * TwoFloat::from((4 * nn - t * t) as f64).sqrt() / 2.0;
            (re, im)
        })
        .collect();
    let g = |y: TwoFloat| -> (TwoFloat, TwoFloat) {
        let step = (-(two_pi * y) / sqrt_n).exp();
        let mut e = TwoFloat::from(1.0);
        let (mut re, mut im) = (TwoFloat::from(0.0), TwoFloat::from(0.0));
        for c in coeffs.iter().skip(1) {
            e *= step;
            re += c.0 * e;
            im += c.1 * e;
        }
        (re, im)
    };
    let mut samples = Vec::new();
    for &y in &PROBE_POINTS {
        let yy = TwoFloat::from(y);
        let (ar, ai) = g(TwoFloat::from(1.0) / yy);
        let (br, bi) = g(yy);
        // divide by y^k conj(b)
        let scale = yy.powi(f.weight as i32);
        let (br, bi) = (br * scale, -(bi * scale));
        let den = br * br + bi * bi;
        let re = (ar * br + ai * bi) / den;
        let im = (ai * br - ar * bi) / den;
        if f64::from(im).abs() > PROBE_TOLERANCE {
            return Err(Error::Inconclusive(f64::from(im).abs()));
        }
        samples.push((y, f64::from(re)));
    }
    let sign = if samples[0].1 >= 0.0 { 1 } else { -1 };
    let residual = samples.iter().map(|&(_, r)| (r - sign as f64).abs()).fold(0.0, f64::max);
    if residual > PROBE_TOLERANCE {
        return Err(Error::Inconclusive(residual));
    }
    Ok(ProbeResult { sign, residual, samples })
}
