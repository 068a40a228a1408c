//! Fourier coefficients of the toric Eisenstein series attached to `lambda`
//! and to its cyclotomic derivative, the mu-invariant formula, the grid
//! search and the witness construction.
//!
//! Only characters with `h_K = 1` and `c = c^- = (sqrt(-q))` reach the grid.
//! For those the quotient `D_1` is trivial, and the polarization choice
//! `c(a)` is encoded by a norm `t` dividing the numerator of `beta`: the
//! local exponent at `ell` is `v_ell(beta) - v_ell(t)`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::cm;
use crate::cyclo::RatVal;
use crate::error::{Error, HypothesisError, Result};
use crate::hecke::{local_tau, CharSpec, GlobalHeckeChar, LocalChar};
use crate::local::{
    self, eps_factor, lambda_star_xi, log_ratio_valuation, mu_p_local, sign_condition, EpsilonFactor, FactorFamily,
    FactorKind, LocalElement, LocalFactor,
};
use crate::padic::{PadicNum, Valuation};
use crate::quad::SplitKind;

pub const PROBE_BOUND: u64 = 2000;

/// Positive rational `num / den`, reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosRat {
    pub num: u64,
    pub den: u64,
}

impl PosRat {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num > 0 && den > 0);
        let g = num.gcd(&den);
        PosRat { num: num / g, den: den / g }
    }

    pub fn int(n: u64) -> Self {
        PosRat::new(n, 1)
    }

    /// `v_ell` as an integer.
    pub fn valuation(self, ell: u64) -> i64 {
        arith::valuation(ell, self.num) as i64 - arith::valuation(ell, self.den) as i64
    }

    /// Residue mod `m` of a rational prime to `m`.
    pub fn residue(self, m: u64) -> Option<u64> {
        let inv = mod_inverse(self.den % m, m)?;
        Some(((self.num % m) as u128 * inv as u128 % m as u128) as u64)
    }

    /// Unit part at `ell` reduced mod `ell`.
    pub fn unit_residue(self, ell: u64) -> i64 {
        let strip = |mut x: u64| {
            while x % ell == 0 {
                x /= ell;
            }
            x
        };
        PosRat { num: strip(self.num), den: strip(self.den) }.residue(ell).expect("unit") as i64
    }
}

impl std::fmt::Display for PosRat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 { write!(f, "{}", self.num) } else { write!(f, "{}/{}", self.num, self.den) }
    }
}

impl Serialize for PosRat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PosRat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let parse = |x: &str| x.trim().parse::<u64>().ok().filter(|&v| v > 0);
        let (n, dd) = match s.split_once('/') {
            Some((a, b)) => (parse(a), parse(b)),
            None => (parse(&s), Some(1)),
        };
        match (n, dd) {
            (Some(n), Some(dd)) => Ok(PosRat::new(n, dd)),
            _ => Err(serde::de::Error::custom(format!("bad positive rational {s:?}"))),
        }
    }
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let e = num_integer::Integer::extended_gcd(&(a as i64), &(m as i64));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i64) as u64)
}

/// Representatives `1..=(p-1)/2` of `(Z/p)^* / {+-1}`; `u` stands for its
/// Teichmuller lift.
pub fn d0(p: u64) -> Vec<u64> {
    (1..=(p - 1) / 2).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub p_split: bool,
    pub p_ndvd_h: bool,
    pub p_ndvd_units: bool,
    pub root_number: Option<i32>,
    pub probe_sign: Option<i32>,
}

impl Hypotheses {
    /// First violated hypothesis, in a fixed order.
    pub fn gate(&self, lam: &GlobalHeckeChar, p: u64) -> Result<()> {
        if !self.p_split {
            return Err(HypothesisError::NotSplit { p, d: lam.field.d() }.into());
        }
        if !self.p_ndvd_h {
            return Err(HypothesisError::DividesClassNumber { p, h: lam.field.class_number() }.into());
        }
        if !self.p_ndvd_units {
            return Err(HypothesisError::DividesUnits(p).into());
        }
        match (self.root_number, self.probe_sign) {
            (Some(w), Some(s)) if w != s => Err(HypothesisError::RootNumberMismatch { formula: w, probe: s }.into()),
            (Some(1), _) => Err(HypothesisError::RootNumberPlusOne.into()),
            (Some(_), _) => Ok(()),
            (None, _) => Err(Error::Invariant("root number unavailable".into())),
        }
    }
}

/// Checks that fail before any hypothesis can be evaluated.
pub fn check_prime(lam: &GlobalHeckeChar, p: u64) -> Result<()> {
    if p < 3 || !arith::is_prime(p) {
        return Err(HypothesisError::BadPrime(p).into());
    }
    if lam.divides_conductor(p) {
        return Err(Error::ConductorMeetsP(p));
    }
    if lam.field.class_number() != 1 {
        return Err(HypothesisError::ClassNumberNotOne(lam.field.class_number()).into());
    }
    Ok(())
}

pub fn evaluate_hypotheses(lam: &GlobalHeckeChar, p: u64, probe: bool) -> Result<Hypotheses> {
    check_prime(lam, p)?;
    let root_number = Some(local::global_root_number(lam)?);
    let probe_sign = if probe {
        let f = cm::q_expansion(lam, PROBE_BOUND)?;
        Some(cm::functional_equation_probe(&f)?.sign)
    } else {
        None
    };
    Ok(Hypotheses {
        p_split: lam.field.classify_prime(p).kind == SplitKind::Split,
        p_ndvd_h: lam.field.class_number() % p != 0,
        p_ndvd_units: lam.field.unit_count() as u64 % p != 0,
        root_number,
        probe_sign,
    })
}

/// Characters the grid pipeline accepts: conductor exactly `(sqrt(-q))`.
pub fn check_supported(lam: &GlobalHeckeChar) -> Result<()> {
    if lam.conductor != vec![(lam.q, 1)] {
        return Err(Error::Unsupported(format!(
            "grid search needs c = (sqrt(-{})); got conductor {:?}",
            lam.q, lam.conductor
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportViolation {
    NotUnitAtP,
    ResidueNotInD0,
    PoleAtConductor,
    DenominatorOffConductor,
    PolarizationNotNorm,
    PolarizationNotDividing,
}

/// A point `(beta, u, c(a))` with `c(a)` encoded by the norm `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta: PosRat,
    pub u: u64,
    pub t: u64,
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(beta={}, u={}, t={})", self.beta, self.u, self.t)
    }
}

/// Fixed data of one run.
#[derive(Clone, Debug)]
pub struct Context {
    pub lam: GlobalHeckeChar,
    pub p: u64,
    pub prec: u32,
    pub ramified: LocalChar,
    pub eps: EpsilonFactor,
    pub xi_q: crate::cyclo::RootOfUnity,
}

impl Context {
    pub fn new(lam: &GlobalHeckeChar, p: u64, prec: u32) -> Result<Self> {
        check_supported(lam)?;
        check_prime(lam, p)?;
        let ramified = lam.local_component(lam.places_above(lam.q)[0])?;
        let eps = eps_factor(lam, &ramified, 0)?;
        let xi_q = lambda_star_xi(lam, lam.q)?;
        Ok(Context { lam: lam.clone(), p, prec, ramified, eps, xi_q })
    }

    fn kind(&self, ell: u64) -> SplitKind {
        self.lam.field.classify_prime(ell).kind
    }

    /// Whether `t` is the norm of an integral ideal prime to `pq`.
    pub fn is_norm(&self, t: u64) -> bool {
        arith::factor(t).into_iter().all(|(l, e)| {
            l != self.p && l != self.lam.q && (self.kind(l) == SplitKind::Split || e % 2 == 0)
        })
    }

    pub fn support(&self, x: &GridPoint) -> Option<SupportViolation> {
        let (p, q) = (self.p, self.lam.q);
        if x.beta.valuation(p) != 0 {
            return Some(SupportViolation::NotUnitAtP);
        }
        let r = x.beta.residue(p).expect("unit at p");
        if r != x.u || !d0(p).contains(&x.u) {
            return Some(SupportViolation::ResidueNotInD0);
        }
        if x.beta.valuation(q) < -1 {
            return Some(SupportViolation::PoleAtConductor);
        }
        if x.beta.den != q.pow(x.beta.valuation(q).min(0).unsigned_abs() as u32) {
            return Some(SupportViolation::DenominatorOffConductor);
        }
        if !self.is_norm(x.t) {
            return Some(SupportViolation::PolarizationNotNorm);
        }
        if x.beta.num % x.t != 0 {
            return Some(SupportViolation::PolarizationNotDividing);
        }
        None
    }

    /// `beta^(k-1)` as a p-adic unit.
    fn prefactor(&self, beta: PosRat) -> PadicNum {
        let b = PadicNum::from_rational(
            self.p,
            &num_bigint::BigInt::from(beta.num),
            &num_bigint::BigInt::from(beta.den),
            self.prec,
        );
        b.pow(self.lam.k as u64 - 1)
    }

    fn ramified_factor(&self, beta: PosRat, deriv: bool) -> Result<LocalFactor> {
        let q = self.lam.q;
        let eta = LocalElement { m: beta.valuation(q), u: beta.unit_residue(q) };
        local::whittaker_a_ramified(&self.lam, &self.ramified, eta, &self.eps, self.p, self.prec, deriv)
    }

    /// Local factors at `x`, in increasing order of place, then the
    /// p-indicator and the weight prefactor family.
    pub fn factors(&self, x: &GridPoint) -> Result<Vec<LocalFactor>> {
        let (p, q, prec) = (self.p, self.lam.q, self.prec);
        let mut out = Vec::new();
        let mut primes: Vec<u64> = arith::prime_factors(x.beta.num).into_iter().filter(|&l| l != q).collect();
        primes.push(q);
        primes.sort();
        for ell in primes {
            if ell == q {
                out.push(self.ramified_factor(x.beta, false)?);
                continue;
            }
            let n = x.beta.valuation(ell) - arith::valuation(ell, x.t) as i64;
            let (kind, family) = match self.kind(ell) {
                SplitKind::Split => (FactorKind::ASplit, FactorFamily::SplitA { ell, n }),
                SplitKind::Inert => (FactorKind::AUnramified, FactorFamily::InertA { ell, n }),
                SplitKind::Ramified => unreachable!("only q ramifies"),
            };
            out.push(LocalFactor::new(ell.to_string(), kind, family, p, prec, false)?);
        }
        out.push(LocalFactor::new(p.to_string(), FactorKind::PIndicator, FactorFamily::Constant { value: 1 }, p, prec, false)?);
        let fam = FactorFamily::AnglePower { num: x.beta.num, den: x.beta.den };
        out.push(LocalFactor::new("inf".into(), FactorKind::Prefactor, fam, p, prec, false)?);
        Ok(out)
    }

    /// Coefficient of `E_{lambda,u}` and of `E_{lambda',u}` at `x`.
    pub fn assemble(&self, x: &GridPoint) -> Result<CoefficientAssembly> {
        let p = self.p;
        if let Some(v) = self.support(x) {
            return Ok(CoefficientAssembly {
                point: *x,
                factors: Vec::new(),
                prefactor: PadicNum::zero(p),
                total: PadicNum::zero(p),
                deriv_total: PadicNum::zero(p),
                vanishing: Vec::new(),
                support: Some(v),
            });
        }
        let mut factors = self.factors(x)?;
        let prefactor = self.prefactor(x.beta);
        let mut total = prefactor.clone();
        for f in &factors {
            total = &total * &f.value;
        }
        let vanishing: Vec<usize> = (0..factors.len()).filter(|&i| factors[i].vanished).collect();
        let deriv_total = if vanishing.len() == 1 {
            let j = vanishing[0];
            let d = factors[j].family.derivative(p, self.prec)?;
            factors[j].derivative = Some(d.clone());
            let mut acc = &prefactor * &d;
            for (i, f) in factors.iter().enumerate() {
                if i != j {
                    acc = &acc * &f.value;
                }
            }
            acc
        } else if vanishing.is_empty() {
            return Err(Error::Invariant(format!("no local factor vanishes at {x}")));
        } else {
            PadicNum::zero(p)
        };
        let vanishing = vanishing.into_iter().map(|i| factors[i].place.clone()).collect();
        Ok(CoefficientAssembly { point: *x, factors, prefactor, total, deriv_total, vanishing, support: None })
    }

    /// `k -> a_beta(E_{lambda N^k, u})` at nonnegative integers.
    pub fn total_at(&self, x: &GridPoint, k: u64) -> Result<PadicNum> {
        if self.support(x).is_some() {
            return Ok(PadicNum::zero(self.p));
        }
        let mut acc = self.prefactor(x.beta);
        for f in self.factors(x)? {
            acc = &acc * &f.family.value_at(k, self.p, self.prec)?;
        }
        Ok(acc)
    }

    /// A non-split place with `W(lambda_v^*) tau(beta) = -lambda_v^*(xi)`.
    pub fn vanishing_witness(&self, beta: PosRat) -> Result<(u64, VanishingCase)> {
        let q = self.lam.q;
        let disc = self.lam.field.disc();
        let tau = local_tau(disc, q, beta.valuation(q), beta.unit_residue(q));
        if sign_condition(&self.ramified, self.xi_q, tau) {
            return Ok((q, VanishingCase::Conductor));
        }
        for ell in arith::prime_factors(beta.num) {
            if ell != q && self.kind(ell) == SplitKind::Inert && beta.valuation(ell) % 2 != 0 {
                return Ok((ell, VanishingCase::InertOdd));
            }
        }
        Err(Error::Invariant(format!("no non-split place satisfies the sign identity at beta = {beta}")))
    }

    /// Support grid for `beta = n / q^j`, `n <= bound`, `j in {0, 1}`, in a
    /// fixed order: by `j`, then `n`, then `t`.
    pub fn grid(&self, bound: u64) -> Vec<GridPoint> {
        let (p, q) = (self.p, self.lam.q);
        let mut out = Vec::new();
        for j in 0..=1u32 {
            for n in 1..=bound {
                if n % p == 0 || (j == 1 && n % q == 0) {
                    continue;
                }
                let beta = PosRat::new(n, q.pow(j));
                let u = beta.residue(p).expect("unit");
                if !d0(p).contains(&u) {
                    continue;
                }
                for t in self.norm_divisors(n) {
                    out.push(GridPoint { beta, u, t });
                }
            }
        }
        out
    }

    fn norm_divisors(&self, n: u64) -> Vec<u64> {
        let mut ts = vec![1u64];
        for (l, e) in arith::factor(n) {
            if l == self.p || l == self.lam.q {
                continue;
            }
            let step = if self.kind(l) == SplitKind::Split { 1 } else { 2 };
            let mut next = Vec::new();
            for &t in &ts {
                let mut pw = 1;
                for _ in (0..=e).step_by(step) {
                    next.push(t * pw);
                    pw *= l.pow(step as u32);
                }
            }
            ts = next;
        }
        ts.sort();
        ts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VanishingCase {
    /// `v | c(lambda)`: the `A`-factor vanishes.
    Conductor,
    /// Inert `v` prime to `c` with `v(c_v beta)` odd: the `a`-factor vanishes.
    InertOdd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientAssembly {
    pub point: GridPoint,
    pub factors: Vec<LocalFactor>,
    pub prefactor: PadicNum,
    pub total: PadicNum,
    pub deriv_total: PadicNum,
    /// Places whose factor vanishes at `k = 0`.
    pub vanishing: Vec<String>,
    pub support: Option<SupportViolation>,
}

impl CoefficientAssembly {
    /// `v_p(deriv_total / log_p(1 + p))`.
    pub fn normalized_valuation(&self) -> RatVal {
        local::normalized_valuation(&self.deriv_total)
    }

    pub fn factor_at(&self, place: &str) -> Option<&LocalFactor> {
        self.factors.iter().find(|f| f.place == place && f.kind != FactorKind::PIndicator)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceLedger {
    pub place: u64,
    pub mu_p: RatVal,
    pub log_ratio: RatVal,
    pub mu_prime_p_v: RatVal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsLedger {
    pub places: Vec<PlaceLedger>,
    pub mu_prime_p: RatVal,
    pub rhs: RatVal,
}

/// Combine `(place, mu_p(lambda_v), v_p(log ratio))` over `v | c^-`.
pub fn rhs_from_ledger(entries: &[(u64, RatVal, RatVal)]) -> RhsLedger {
    let mu_prime_p = entries.iter().fold(RatVal::zero(), |acc, e| acc.add(e.1));
    let places: Vec<PlaceLedger> = entries
        .iter()
        .enumerate()
        .map(|(i, &(place, mu_p, log_ratio))| {
            let others = entries.iter().enumerate().filter(|(j, _)| *j != i).fold(RatVal::zero(), |a, (_, e)| a.add(e.1));
            PlaceLedger { place, mu_p, log_ratio, mu_prime_p_v: log_ratio.add(others) }
        })
        .collect();
    let rhs = places.iter().map(|l| l.mu_prime_p_v).fold(mu_prime_p, |a, b| a.min(b));
    RhsLedger { places, mu_prime_p, rhs }
}

/// `min_{v | c^-} {mu'_p(lambda), mu'_{p,v}(lambda)}` with its ledger.
pub fn mu_formula_rhs(lam: &GlobalHeckeChar, p: u64) -> Result<RhsLedger> {
    check_prime(lam, p)?;
    let mut entries = Vec::new();
    for ell in lam.conductor_minus() {
        let lc = lam.local_component(lam.places_above(ell)[0])?;
        entries.push((ell, mu_p_local(&lc, p), RatVal::int(log_ratio_valuation(ell, p))));
    }
    if entries.is_empty() {
        return Err(Error::Precondition("c^- is trivial".into()));
    }
    Ok(rhs_from_ledger(&entries))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Attestation {
    /// Every coefficient of `E_{lambda,u}` is exactly zero.
    pub vanishing: bool,
    /// Every grid point has a non-split place with the sign identity, and its factor vanishes.
    pub vanishing_witness: bool,
    /// Ramified factors cancel exactly when the sign identity holds.
    pub eps_cancellation: bool,
    /// `v_p(A_{beta,v}) >= mu_p(lambda_v)` at every `v | c^-`.
    pub place_floors: bool,
    /// Every normalized valuation is `>= rhs`.
    pub lower_bound: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub bound: u64,
    pub points: usize,
    pub min: RatVal,
    pub argmin: Option<GridPoint>,
    pub attestation: Attestation,
}

struct PointReport {
    point: GridPoint,
    valuation: RatVal,
    failures: [Option<String>; 5],
}

fn check_point(ctx: &Context, x: &GridPoint, rhs: RatVal, mu_q: RatVal) -> Result<PointReport> {
    let a = ctx.assemble(x)?;
    let q = ctx.lam.q.to_string();
    let mut failures: [Option<String>; 5] = Default::default();
    if !a.total.is_exact_zero() {
        failures[0] = Some(format!("total != 0 at {x}"));
    }
    match ctx.vanishing_witness(x.beta) {
        Ok((place, _)) if a.vanishing.contains(&place.to_string()) => {}
        Ok((place, _)) => failures[1] = Some(format!("witness place {place} does not vanish at {x}")),
        Err(e) => failures[1] = Some(e.to_string()),
    }
    let fq = a.factor_at(&q).expect("ramified factor present");
    let disc = ctx.lam.field.disc();
    let tau = local_tau(disc, ctx.lam.q, x.beta.valuation(ctx.lam.q), x.beta.unit_residue(ctx.lam.q));
    if fq.vanished != sign_condition(&ctx.ramified, ctx.xi_q, tau) {
        failures[2] = Some(format!("cancellation mismatch at {x}"));
    }
    if local::ratval(&fq.value) < mu_q {
        failures[3] = Some(format!("A-factor below mu_p at {x}"));
    }
    let valuation = a.normalized_valuation();
    if valuation < rhs {
        failures[4] = Some(format!("valuation {valuation} < rhs at {x}"));
    }
    Ok(PointReport { point: *x, valuation, failures })
}

pub fn brute_force_mu(ctx: &Context, bound: u64) -> Result<GridResult> {
    brute_force_mu_with(ctx, bound, true)
}

/// Grid minimum of normalized valuations, with the per-point attestations.
/// `parallel = false` forces the sequential path.
pub fn brute_force_mu_with(ctx: &Context, bound: u64, parallel: bool) -> Result<GridResult> {
    let rhs = mu_formula_rhs(&ctx.lam, ctx.p)?.rhs;
    let mu_q = mu_p_local(&ctx.ramified, ctx.p);
    let grid = ctx.grid(bound);
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let f = |x: &GridPoint| check_point(ctx, x, rhs, mu_q);
    let reports = if parallel { crate::par::map(&grid, f) } else { crate::par::map_seq(&grid, f) };
    let mut att = Attestation {
        vanishing: true,
        vanishing_witness: true,
        eps_cancellation: true,
        place_floors: true,
        lower_bound: true,
        failures: Vec::new(),
    };
    let mut min = RatVal::Infinite;
    let mut argmin = None;
    for r in reports {
        let r = r?;
        if r.valuation < min {
            min = r.valuation;
            argmin = Some(r.point);
        }
        let flags = [
            &mut att.vanishing,
            &mut att.vanishing_witness,
            &mut att.eps_cancellation,
            &mut att.place_floors,
            &mut att.lower_bound,
        ];
        for (flag, fail) in flags.into_iter().zip(r.failures) {
            if let Some(msg) = fail {
                *flag = false;
                if att.failures.len() < 20 {
                    att.failures.push(msg);
                }
            }
        }
    }
    Ok(GridResult { bound, points: grid.len(), min, argmin, attestation: att })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessTarget {
    Global,
    Place(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub target: WitnessTarget,
    pub point: GridPoint,
    /// Place whose factor is differentiated.
    pub place: u64,
    pub valuation: RatVal,
    /// Auxiliary inert prime `q_1` and its class `q_1 mod p`.
    pub aux_prime: Option<u64>,
    pub aux_class: Option<u64>,
}

/// Split primes prime to `pq`, with `1` first; used to move `beta` into `D_0 (1 + pZ_p)`.
fn split_multipliers(ctx: &Context, limit: u64) -> Vec<u64> {
    let mut out = vec![1];
    out.extend(
        arith::primes_up_to(limit)
            .into_iter()
            .filter(|&l| l != ctx.p && ctx.kind(l) == SplitKind::Split),
    );
    out
}

fn in_d0(ctx: &Context, beta: PosRat) -> Option<u64> {
    let u = beta.residue(ctx.p)?;
    d0(ctx.p).contains(&u).then_some(u)
}

/// Auxiliary prime for the global witness: inert, away from `pq`, with
/// `q_1 = a (mod p)` and `q_1 != a (mod p^2)` for `a = q_1 mod p` in `1..p`,
/// and `v_p(log_p q_1) = 1`.
pub fn aux_prime_ok(ctx: &Context, q1: u64) -> bool {
    let p = ctx.p;
    let p2 = p * p;
    q1 != p
        && q1 != ctx.lam.q
        && ctx.kind(q1) == SplitKind::Inert
        && q1 % p2 != q1 % p
        && arith::pow_mod(q1 % p2, p - 1, p2) != 1
}

/// Witness for `mu'_p(lambda)` (global) or for `mu'_{p,v}(lambda)` at `v = v_1`.
pub fn construct_witness(ctx: &Context, target: WitnessTarget, bound: u64) -> Result<Witness> {
    let (p, q) = (ctx.p, ctx.lam.q);
    let ledger = mu_formula_rhs(&ctx.lam, p)?;
    let mults = split_multipliers(ctx, bound);
    let pows = [(1, 1), (1, q), (q, 1), (q * q, 1)];
    match target {
        WitnessTarget::Global => {
            for q1 in arith::primes_up_to(bound) {
                if !aux_prime_ok(ctx, q1) {
                    continue;
                }
                for &s in &mults {
                    for &(num, den) in &pows {
                        let Some(n) = q1.checked_mul(s).and_then(|x| x.checked_mul(num)) else { continue };
                        if n > bound {
                            continue;
                        }
                        let beta = PosRat::new(n, den);
                        let Some(u) = in_d0(ctx, beta) else { continue };
                        let x = GridPoint { beta, u, t: 1 };
                        let a = ctx.assemble(&x)?;
                        if a.vanishing != [q1.to_string()] {
                            continue;
                        }
                        let v = a.normalized_valuation();
                        if v != ledger.mu_prime_p {
                            return Err(Error::Invariant(format!(
                                "global witness {x} has valuation {v}, expected {}",
                                ledger.mu_prime_p
                            )));
                        }
                        return Ok(Witness {
                            target,
                            point: x,
                            place: q1,
                            valuation: v,
                            aux_prime: Some(q1),
                            aux_class: Some(q1 % p),
                        });
                    }
                }
            }
            Err(Error::SearchExhausted(format!("no global witness with numerator <= {bound}")))
        }
        WitnessTarget::Place(v1) => {
            if ctx.lam.conductor_minus() != [v1] {
                return Err(Error::Precondition(format!("place witness needs c^- supported at {v1} only")));
            }
            let want = ledger.places.iter().find(|l| l.place == v1).expect("v1 in ledger").mu_prime_p_v;
            for &s in &mults {
                for m in -1..=3i64 {
                    // m + 2 must be a unit for the derivative to reach mu'_{p,v}
                    if (m + 2) % p as i64 == 0 {
                        continue;
                    }
                    let (num, den) = if m < 0 { (s, q) } else { (s * q.pow(m as u32), 1) };
                    if num > bound {
                        continue;
                    }
                    let beta = PosRat::new(num, den);
                    let Some(u) = in_d0(ctx, beta) else { continue };
                    let x = GridPoint { beta, u, t: 1 };
                    let a = ctx.assemble(&x)?;
                    if a.vanishing != [v1.to_string()] {
                        continue;
                    }
                    let v = a.normalized_valuation();
                    if v != want {
                        return Err(Error::Invariant(format!("place witness {x} has valuation {v}, expected {want}")));
                    }
                    return Ok(Witness { target, point: x, place: v1, valuation: v, aux_prime: None, aux_class: None });
                }
            }
            Err(Error::SearchExhausted(format!("no place witness at {v1} with numerator <= {bound}")))
        }
    }
}

/// Local search for `eta_v` with `v_p(A_{eta_v,v}(lambda)) = mu_p(lambda_v)`.
pub fn local_witness(ctx: &Context) -> Result<(LocalElement, RatVal)> {
    let q = ctx.lam.q;
    let mu = mu_p_local(&ctx.ramified, ctx.p);
    for m in -1..=4 {
        for u in 1..q as i64 {
            let eta = LocalElement { m, u };
            let f = local::whittaker_a_ramified(&ctx.lam, &ctx.ramified, eta, &ctx.eps, ctx.p, ctx.prec, false)?;
            let v = local::ratval(&f.value);
            if v == mu {
                return Ok((eta, v));
            }
        }
    }
    Err(Error::SearchExhausted(format!("no eta_v at {q} reaches mu_p")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    NotEqual,
    Refused,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub bound: u64,
    pub points: usize,
    pub min: RatVal,
    pub argmin: Option<GridPoint>,
    /// Minimum over the grid at twice the bound.
    pub min_at_double: Option<RatVal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSet {
    pub global: Option<Witness>,
    pub place: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuCertificate {
    pub character: String,
    pub spec: CharSpec,
    pub p: u64,
    pub precision: u32,
    pub hypotheses: Option<Hypotheses>,
    pub rhs: Option<RatVal>,
    pub ledger: Option<RhsLedger>,
    pub witness: WitnessSet,
    pub grid: Option<GridSummary>,
    pub attestation: Option<Attestation>,
    pub lower_bound_attested: bool,
    /// The per-coefficient floor is checked on the grid only.
    pub beta_uniformity: String,
    pub verdict: Verdict,
    /// First violated invariant or refusal reason.
    pub failure: Option<String>,
}

impl MuCertificate {
    pub fn refusal(lam: &GlobalHeckeChar, p: u64, prec: u32, hyp: Option<Hypotheses>, err: &Error) -> Self {
        MuCertificate {
            character: lam.label(),
            spec: lam.spec(),
            p,
            precision: prec,
            hypotheses: hyp,
            rhs: None,
            ledger: None,
            witness: WitnessSet { global: None, place: None },
            grid: None,
            attestation: None,
            lower_bound_attested: false,
            beta_uniformity: "not-run".into(),
            verdict: Verdict::Refused,
            failure: Some(err.to_string()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub bound: u64,
    pub prec: u32,
    pub probe: bool,
    pub check_double: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { bound: 500, prec: crate::padic::DEFAULT_PRECISION, probe: true, check_double: true }
    }
}

/// Runs the full check. Hypothesis failures are returned as errors together
/// with a refusal certificate; an inconsistent run yields `NotEqual`.
pub fn verify_mu_equality(
    lam: &GlobalHeckeChar,
    p: u64,
    opts: &VerifyOptions,
) -> std::result::Result<MuCertificate, (Error, MuCertificate)> {
    let refuse = |hyp: Option<Hypotheses>, e: Error| {
        let c = MuCertificate::refusal(lam, p, opts.prec, hyp, &e);
        (e, c)
    };
    let hyp = evaluate_hypotheses(lam, p, opts.probe).map_err(|e| refuse(None, e))?;
    hyp.gate(lam, p).map_err(|e| refuse(Some(hyp.clone()), e))?;
    let ctx = Context::new(lam, p, opts.prec).map_err(|e| refuse(Some(hyp.clone()), e))?;
    let ledger = mu_formula_rhs(lam, p).map_err(|e| refuse(Some(hyp.clone()), e))?;
    let rhs = ledger.rhs;
    let mut failure: Option<String> = None;
    let mut note = |msg: String| {
        if failure.is_none() {
            failure = Some(msg);
        }
    };

    let global = construct_witness(&ctx, WitnessTarget::Global, opts.bound).map_err(|e| note(e.to_string())).ok();
    let place = match lam.conductor_minus().as_slice() {
        [v1] => construct_witness(&ctx, WitnessTarget::Place(*v1), opts.bound).map_err(|e| note(e.to_string())).ok(),
        _ => None,
    };
    let grid = brute_force_mu(&ctx, opts.bound).map_err(|e| note(e.to_string())).ok();
    let double = if opts.check_double {
        brute_force_mu(&ctx, 2 * opts.bound).map_err(|e| note(e.to_string())).ok().map(|g| g.min)
    } else {
        None
    };

    let mut verdict = Verdict::Equal;
    let mut lower = false;
    if let Some(g) = &grid {
        let a = &g.attestation;
        lower = a.lower_bound && a.place_floors;
        if let Some(f) = a.failures.first() {
            note(f.clone());
        }
        if !(a.vanishing && a.vanishing_witness && a.eps_cancellation && lower) {
            verdict = Verdict::NotEqual;
        }
        if g.min != rhs {
            note(format!("grid minimum {} differs from rhs {}", g.min, rhs));
            verdict = Verdict::NotEqual;
        }
        if double.is_some_and(|d| d != g.min) {
            note(format!("grid minimum moves between B = {} and 2B", opts.bound));
            verdict = Verdict::NotEqual;
        }
    } else {
        verdict = Verdict::NotEqual;
    }
    let best = [&global, &place].into_iter().flatten().map(|w| w.valuation).min();
    if best != Some(rhs) {
        note(format!("no witness reaches rhs {rhs}"));
        verdict = Verdict::NotEqual;
    }

    Ok(MuCertificate {
        character: lam.label(),
        spec: lam.spec(),
        p,
        precision: opts.prec,
        hypotheses: Some(hyp),
        rhs: Some(rhs),
        ledger: Some(ledger),
        witness: WitnessSet { global, place },
        grid: grid.as_ref().map(|g| GridSummary {
            bound: g.bound,
            points: g.points,
            min: g.min,
            argmin: g.argmin,
            min_at_double: double,
        }),
        attestation: grid.map(|g| g.attestation),
        lower_bound_attested: lower,
        beta_uniformity: "tested-not-proved".into(),
        verdict,
        failure,
    })
}

/// Valuation used by the witness check, exposed for tests.
pub fn derivative_valuation(a: &CoefficientAssembly) -> Valuation {
    a.deriv_total.val_p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::canonical;
    use num_rational::Ratio;

    #[test]
    fn ledger_arithmetic() {
        let r = rhs_from_ledger(&[(11, RatVal::zero(), RatVal::zero())]);
        assert_eq!(r.rhs, RatVal::zero());
        let quarter = RatVal::Finite(Ratio::new(1, 4));
        let r = rhs_from_ledger(&[(3, RatVal::zero(), RatVal::int(2)), (7, quarter, RatVal::int(0))]);
        assert_eq!(r.mu_prime_p, quarter);
        assert_eq!(r.places[1].mu_prime_p_v, RatVal::zero());
        assert_eq!(r.rhs, RatVal::zero());
        let r = rhs_from_ledger(&[(3, quarter, RatVal::int(1))]);
        assert_eq!(r.rhs, quarter);
    }

    #[test]
    fn rhs_for_test_characters() {
        for (d, p, want_log) in [(11, 3, 0), (11, 5, 0), (19, 5, 0), (19, 7, 1)] {
            let r = mu_formula_rhs(&canonical(d).unwrap(), p).unwrap();
            assert_eq!(r.rhs, RatVal::zero());
            assert!(r.places[0].log_ratio >= RatVal::int(want_log));
        }
    }

    #[test]
    fn support_violations_give_zero() {
        let ctx = Context::new(&canonical(11).unwrap(), 5, 20).unwrap();
        let a = ctx.assemble(&GridPoint { beta: PosRat::int(5), u: 0, t: 1 }).unwrap();
        assert_eq!(a.support, Some(SupportViolation::NotUnitAtP));
        assert!(a.deriv_total.is_exact_zero());
        let a = ctx.assemble(&GridPoint { beta: PosRat::int(3), u: 3, t: 1 }).unwrap();
        assert_eq!(a.support, Some(SupportViolation::ResidueNotInD0));
        let a = ctx.assemble(&GridPoint { beta: PosRat::new(1, 121), u: 1, t: 1 }).unwrap();
        assert_eq!(a.support, Some(SupportViolation::PoleAtConductor));
    }

    #[test]
    fn two_vanishing_factors_kill_the_derivative() {
        let ctx = Context::new(&canonical(11).unwrap(), 5, 20).unwrap();
        // 7 and 13 are inert in Q(sqrt(-11)); 91 = 1 mod 5
        let x = GridPoint { beta: PosRat::int(91), u: 1, t: 1 };
        let a = ctx.assemble(&x).unwrap();
        assert!(a.vanishing.len() >= 2, "{:?}", a.vanishing);
        assert!(a.deriv_total.is_exact_zero());
        assert!(a.total.is_exact_zero());
    }

    #[test]
    fn vanishing_place_is_stable_under_split_squares() {
        let ctx = Context::new(&canonical(11).unwrap(), 5, 20).unwrap();
        let b = PosRat::int(7);
        let scaled = PosRat::int(7 * 9);
        assert_eq!(ctx.vanishing_witness(b).unwrap(), ctx.vanishing_witness(scaled).unwrap());
        assert_eq!(ctx.vanishing_witness(b).unwrap().1, VanishingCase::InertOdd);
    }

    #[test]
    fn witnesses_reach_their_targets() {
        for (d, p) in [(11, 3), (19, 7)] {
            let ctx = Context::new(&canonical(d).unwrap(), p, 30).unwrap();
            let g = construct_witness(&ctx, WitnessTarget::Global, 500).unwrap();
            assert_eq!(g.valuation, RatVal::zero());
            let q1 = g.aux_prime.unwrap();
            assert_ne!(arith::pow_mod(q1, p - 1, p * p), 1);
            let w = construct_witness(&ctx, WitnessTarget::Place(d), 500).unwrap();
            assert_eq!(w.valuation, RatVal::int(log_ratio_valuation(d, p)));
        }
    }

    #[test]
    fn local_witness_reaches_mu() {
        let ctx = Context::new(&canonical(19).unwrap(), 5, 20).unwrap();
        let (_, v) = local_witness(&ctx).unwrap();
        assert_eq!(v, RatVal::zero());
    }
}
