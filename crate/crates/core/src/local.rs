//! Local invariants: conductor exponents, root numbers, `mu_p(lambda_v)`,
//! epsilon factors and the Whittaker factors entering Fourier coefficients,
//! with their p-adic derivatives along `k -> lambda N^k`.
//!
//! p-adic conventions. For `x` in `F_v^*` the twist `N^k(x)` is replaced by
//! its p-adic avatar `<ell>^(-2 v(x) k)`, where `<ell> = ell / omega(ell)`;
//! this is the `c = 2` scaling. Derivatives are exact closed forms; the
//! numeric limit in [`crate::padic::padic_derivative`] is only an oracle.

use std::io::Write;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::cyclo::{RatVal, RootOfUnity};
use crate::error::{Error, Result};
use crate::hecke::{local_tau, GlobalHeckeChar, LocalChar};
use crate::padic::{int_valuation, PadicNum, Valuation};
use crate::quad::SplitKind;

/// `v(c(O_K))` for `xi = sqrt(D_K)` over `F = Q`.
pub const POLARIZATION_VALUATION: i64 = 0;

pub fn cond_exponent(chi: &LocalChar) -> u32 {
    chi.cond_exp()
}

/// `sum_{i=0}^n (-1)^i i`.
pub fn alternating_index_sum(n: i64) -> i64 {
    if n < 0 {
        0
    } else if n % 2 == 0 {
        n / 2
    } else {
        -(n + 1) / 2
    }
}

/// `<ell> = ell / omega(ell)` in `1 + pZ_p`.
pub fn angle(ell: u64, p: u64, prec: u32) -> Result<PadicNum> {
    PadicNum::from_int(p, ell as i64, prec).one_unit_part()
}

/// `log_p(ell)`; equal to `log_p <ell>`.
pub fn log_ell(ell: u64, p: u64, prec: u32) -> Result<PadicNum> {
    PadicNum::from_int(p, ell as i64, prec).iwasawa_log()
}

/// `v_p(ell^(p-1) - 1)`, which equals `v_p(log_p ell)` for `ell != p`.
pub fn log_valuation(ell: u64, p: u64) -> i64 {
    let x = BigInt::from(ell).pow((p - 1) as u32) - BigInt::one();
    int_valuation(p, &x) as i64
}

/// `v_p(log_p |pi_v| / log_p(1 + p))`.
pub fn log_ratio_valuation(ell: u64, p: u64) -> i64 {
    log_valuation(ell, p) - 1
}

/// Unitary value `lambda_v^*(xi)` at the `F`-place below `ell`: the product
/// over the primes of `K` above `ell`.
pub fn lambda_star_xi(lam: &GlobalHeckeChar, ell: u64) -> Result<RootOfUnity> {
    let mut out = RootOfUnity::one();
    for place in lam.places_above(ell) {
        let lc = lam.local_component(place)?;
        let v = if place.kind == SplitKind::Ramified {
            lc.uniformizer_value.phase
        } else {
            lc.eval_unit(lam.field.xi())?
        };
        out = out.mul(v);
    }
    Ok(out)
}

/// The parity sign `(-1)^(a + v(c(O_K)))` at a non-split place.
pub fn parity_sign(lc: &LocalChar) -> RootOfUnity {
    RootOfUnity::sign((lc.cond_exp() as i64 + POLARIZATION_VALUATION) % 2 == 0)
}

/// Local root number from the self-dual formula: `lambda^*(xi)` at split
/// places and `(-1)^(a + v(c(O_K))) lambda^*(xi)` at non-split ones.
pub fn local_root_number(lc: &LocalChar, lambda_star_xi: RootOfUnity) -> RootOfUnity {
    match lc.place.kind {
        SplitKind::Split => lambda_star_xi,
        _ => parity_sign(lc).mul(lambda_star_xi),
    }
}

pub fn local_root_number_at(lam: &GlobalHeckeChar, ell: u64) -> Result<RootOfUnity> {
    let xi = lambda_star_xi(lam, ell)?;
    let lc = lam.local_component(lam.places_above(ell)[0])?;
    Ok(local_root_number(&lc, xi))
}

/// Rational primes where a local root number can differ from 1.
pub fn bad_primes(lam: &GlobalHeckeChar) -> Vec<u64> {
    let mut v: Vec<u64> = lam.conductor.iter().map(|&(l, _)| l).collect();
    if !v.contains(&lam.q) {
        v.push(lam.q);
    }
    v.sort();
    v
}

/// `W(lambda^*) = prod_v W(lambda_v^*)`, with `W_infinity = lambda_infinity^*(xi)`.
pub fn global_root_number(lam: &GlobalHeckeChar) -> Result<i32> {
    let mut w = lam.infinity_phase_xi();
    let mut xi_prod = lam.infinity_phase_xi();
    for ell in bad_primes(lam) {
        w = w.mul(local_root_number_at(lam, ell)?);
        xi_prod = xi_prod.mul(lambda_star_xi(lam, ell)?);
    }
    if !xi_prod.is_one() {
        return Err(Error::Invariant(format!("prod_v lambda_v^*(xi) = {xi_prod}, not 1")));
    }
    w.as_sign().ok_or_else(|| Error::Invariant(format!("root number {w} is not a sign")))
}

/// `mu_p(lambda_v) = inf_x v_p(lambda_v(x) - 1)`, the minimum over the
/// unit-table generators and the uniformizer phase.
pub fn mu_p_local(lc: &LocalChar, p: u64) -> RatVal {
    lc.unit_table
        .iter()
        .map(|e| e.value)
        .chain(std::iter::once(lc.uniformizer_value.phase))
        .map(|z| z.valuation_minus_one(p))
        .min()
        .unwrap_or(RatVal::Infinite)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    ASplit,
    AUnramified,
    ARamified,
    AInert,
    PIndicator,
    Prefactor,
}

impl std::fmt::Display for FactorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FactorKind::ASplit => "a_split",
            FactorKind::AUnramified => "a_unramified",
            FactorKind::ARamified => "A_ramified",
            FactorKind::AInert => "A_inert",
            FactorKind::PIndicator => "p_indicator",
            FactorKind::Prefactor => "prefactor",
        })
    }
}

/// A local factor as a function of the twist `k`, with exact value and
/// derivative at `k = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FactorFamily {
    /// `sum_{i=0}^n <ell>^(-2ki)`.
    SplitA { ell: u64, n: i64 },
    /// `sum_{i=0}^n (-1)^i <ell>^(-2ki)`.
    InertA { ell: u64, n: i64 },
    /// `|pi|^(-1/2) A~`: `tau(pi) <q>^(2k) + tau(-2 eta) eps <q>^(-2k(m + a + n_psi))`.
    Ramified { q: u64, tau_pi: i32, tau_m2eta: i32, eps: i32, m: i64, a: u32, psi_shift: i64 },
    /// `-|pi| + sum_{j=0}^n (lambda N^k)^*(pi^j)(1 - |pi|) - (lambda N^k)^*(pi^(n+1))|pi|`.
    InertTilde { ell: u64, n: i64 },
    /// Constant in `k`.
    Constant { value: i64 },
    /// `<beta>^k` for a positive rational `beta`.
    AnglePower { num: u64, den: u64 },
}

impl FactorFamily {
    /// Exact value at `k` in `Z_{>=0}`.
    pub fn value_at(&self, k: u64, p: u64, prec: u32) -> Result<PadicNum> {
        let k = k as i64;
        let int = |x: i64| PadicNum::from_int(p, x, prec);
        Ok(match *self {
            FactorFamily::SplitA { ell, n } | FactorFamily::InertA { ell, n } => {
                if n < 0 {
                    return Ok(PadicNum::zero(p));
                }
                let alt = matches!(self, FactorFamily::InertA { .. });
                let a = angle(ell, p, prec)?;
                let step = a.powi(-2 * k)?;
                let mut acc = PadicNum::zero(p);
                let mut term = PadicNum::one(p, prec);
                for i in 0..=n {
                    let t = if alt && i % 2 == 1 { -&term } else { term.clone() };
                    acc = &acc + &t;
                    term = &term * &step;
                }
                acc
            }
            FactorFamily::Ramified { q, tau_pi, tau_m2eta, eps, m, a, psi_shift } => {
                let g = angle(q, p, prec)?;
                let first = &int(tau_pi as i64) * &g.powi(2 * k)?;
                let e = -2 * k * (m + a as i64 + psi_shift);
                let second = &int((tau_m2eta * eps) as i64) * &g.powi(e)?;
                &first + &second
            }
            FactorFamily::InertTilde { ell, n } => {
                let g = angle(ell, p, prec)?;
                let abs = PadicNum::from_rational(p, &BigInt::one(), &BigInt::from(ell), prec);
                let one_minus = &PadicNum::one(p, prec) - &abs;
                let star = |j: i64| -> Result<PadicNum> {
                    let s = g.powi(-2 * j * k)?;
                    Ok(if j % 2 == 1 { -&s } else { s })
                };
                let mut acc = -&abs;
                for j in 0..=n {
                    acc = &acc + &(&star(j)? * &one_minus);
                }
                &acc - &(&star(n + 1)? * &abs)
            }
            FactorFamily::Constant { value } => int(value),
            FactorFamily::AnglePower { num, den } => {
                let b = PadicNum::from_rational(p, &BigInt::from(num), &BigInt::from(den), prec);
                b.one_unit_part()?.pow(k as u64)
            }
        })
    }

    /// Exact value at `k = 0`, as a rational `(num, den)`.
    pub fn value_at_zero(&self) -> (i64, i64) {
        match *self {
            FactorFamily::SplitA { n, .. } => ((n + 1).max(0), 1),
            FactorFamily::InertA { n, .. } => ((n >= 0 && n % 2 == 0) as i64, 1),
            FactorFamily::Ramified { tau_pi, tau_m2eta, eps, .. } => ((tau_pi + tau_m2eta * eps) as i64, 1),
            FactorFamily::InertTilde { ell, n } => {
                let l = ell as i64;
                // -1/l + [n even](1 - 1/l) + (-1)^n / l
                let even = (n % 2 == 0) as i64;
                let sign = if n % 2 == 0 { 1 } else { -1 };
                (-1 + even * (l - 1) + sign, l)
            }
            FactorFamily::Constant { value } => (value, 1),
            FactorFamily::AnglePower { .. } => (1, 1),
        }
    }

    /// Closed-form derivative at `k = 0`.
    pub fn derivative(&self, p: u64, prec: u32) -> Result<PadicNum> {
        let int = |x: i64| PadicNum::from_int(p, x, prec);
        Ok(match *self {
            FactorFamily::SplitA { ell, n } => {
                if n < 0 {
                    return Ok(PadicNum::zero(p));
                }
                // -2 log ell * sum i
                &int(-n * (n + 1)) * &log_ell(ell, p, prec)?
            }
            FactorFamily::InertA { ell, n } => {
                if n < 0 {
                    return Ok(PadicNum::zero(p));
                }
                &int(-2 * alternating_index_sum(n)) * &log_ell(ell, p, prec)?
            }
            FactorFamily::Ramified { q, tau_pi, tau_m2eta, eps, m, a, psi_shift } => {
                let c = 2 * tau_pi as i64 - 2 * (tau_m2eta * eps) as i64 * (m + a as i64 + psi_shift);
                &int(c) * &log_ell(q, p, prec)?
            }
            FactorFamily::InertTilde { ell, n } => {
                // d/dk of (-1)^j <l>^(-2jk) is (-1)^(j+1) 2j log l
                let l = ell as i64;
                let mut num = 0i64;
                for j in 0..=n {
                    let s = if j % 2 == 0 { -1 } else { 1 };
                    num += s * 2 * j * (l - 1);
                }
                let j = n + 1;
                let s = if j % 2 == 0 { -1 } else { 1 };
                num -= s * 2 * j;
                let r = PadicNum::from_rational(p, &BigInt::from(num), &BigInt::from(l), prec);
                &r * &log_ell(ell, p, prec)?
            }
            FactorFamily::Constant { .. } => PadicNum::zero(p),
            FactorFamily::AnglePower { num, den } => {
                let b = PadicNum::from_rational(p, &BigInt::from(num), &BigInt::from(den), prec);
                b.iwasawa_log()?
            }
        })
    }

    /// The rational prime whose `log_p` divides the derivative, if any.
    pub fn log_prime(&self) -> Option<u64> {
        match *self {
            FactorFamily::SplitA { ell, .. }
            | FactorFamily::InertA { ell, .. }
            | FactorFamily::InertTilde { ell, .. } => Some(ell),
            FactorFamily::Ramified { q, .. } => Some(q),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFactor {
    pub place: String,
    pub kind: FactorKind,
    pub family: FactorFamily,
    pub value: PadicNum,
    pub derivative: Option<PadicNum>,
    pub vanished: bool,
}

impl LocalFactor {
    pub fn new(place: String, kind: FactorKind, family: FactorFamily, p: u64, prec: u32, deriv: bool) -> Result<Self> {
        let (n, d) = family.value_at_zero();
        let value = if n == 0 {
            PadicNum::zero(p)
        } else {
            PadicNum::from_rational(p, &BigInt::from(n), &BigInt::from(d), prec)
        };
        let derivative = if deriv { Some(family.derivative(p, prec)?) } else { None };
        Ok(LocalFactor { place, kind, vanished: value.is_exact_zero(), family, value, derivative })
    }

    pub fn value_valuation(&self) -> Valuation {
        self.value.val_p()
    }

    pub fn derivative_valuation(&self) -> Option<Valuation> {
        self.derivative.as_ref().map(|d| d.val_p())
    }
}

pub fn whittaker_a(n: i64, chi: &LocalChar, p: u64, prec: u32) -> Result<LocalFactor> {
    let ell = chi.place.ell;
    let (kind, family) = match chi.place.kind {
        SplitKind::Split => (FactorKind::ASplit, FactorFamily::SplitA { ell, n }),
        SplitKind::Inert => (FactorKind::AUnramified, FactorFamily::InertA { ell, n }),
        SplitKind::Ramified => {
            return Err(Error::Unsupported(format!("a-factor at ramified place {ell}")));
        }
    };
    LocalFactor::new(ell.to_string(), kind, family, p, prec, false)
}

pub fn whittaker_a_deriv(n: i64, chi: &LocalChar, p: u64, prec: u32) -> Result<LocalFactor> {
    if chi.place.kind != SplitKind::Inert || chi.is_ramified() {
        return Err(Error::Unsupported(format!(
            "a-factor derivative needs an unramified inert place, got {} ({})",
            chi.place, chi.place.kind
        )));
    }
    let family = FactorFamily::InertA { ell: chi.place.ell, n };
    LocalFactor::new(chi.place.ell.to_string(), FactorKind::AUnramified, family, p, prec, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFactor {
    pub place: u64,
    pub conductor_exponent: u32,
    pub psi_shift: i64,
    /// Gauss sum `sum_x chi_+^-1(x) psi(x / ell^(a + n_psi))` under `iota_infinity`.
    pub gauss_sum: (f64, f64),
    /// Sign used in the two-term formula, fixed by the cancellation oracle.
    pub pinned: RootOfUnity,
}

/// Quadratic Gauss sum `sum_{x mod ell} (x|ell) exp(-2 pi i x / ell^(1+n))`.
pub fn gauss_sum(ell: u64, psi_shift: i64) -> (f64, f64) {
    let modulus = (ell as f64).powi(1 + psi_shift as i32);
    let mut re = 0.0;
    let mut im = 0.0;
    for x in 1..ell {
        let s = crate::arith::jacobi(x as i64, ell) as f64;
        let t = -2.0 * std::f64::consts::PI * x as f64 / modulus;
        re += s * t.cos();
        im += s * t.sin();
    }
    (re, im)
}

/// The cancellation condition: `W(lambda_v^*) tau(eta) = -lambda_v^*(xi)`.
pub fn sign_condition(lc: &LocalChar, lambda_star_xi: RootOfUnity, tau_eta: i32) -> bool {
    let w = local_root_number(lc, lambda_star_xi);
    w.mul(RootOfUnity::sign(tau_eta == 1)) == lambda_star_xi.mul(RootOfUnity::minus_one())
}

/// Epsilon factor of `chi_+ = lambda_+ |.|^-1` at a ramified place, with the
/// sign of the two-term formula pinned so that the cancellation of `A~`
/// happens exactly under [`sign_condition`].
pub fn eps_factor(lam: &GlobalHeckeChar, lc: &LocalChar, psi_shift: i64) -> Result<EpsilonFactor> {
    if lc.place.kind != SplitKind::Ramified {
        return Err(Error::Unsupported(format!("epsilon factor pinned only at ramified places, got {}", lc.place)));
    }
    let a = lc.cond_exp();
    if a == 0 {
        return Err(Error::Unsupported("unramified chi_+: epsilon factor is elementary".into()));
    }
    let ell = lc.place.ell;
    let disc = lam.field.disc();
    let xi = lambda_star_xi(lam, ell)?;
    let tau_pi = local_tau(disc, ell, 1, 1);
    let candidates = [RootOfUnity::one(), RootOfUnity::minus_one(), RootOfUnity::i(), RootOfUnity::i().inv()];
    let mut pinned = None;
    for c in candidates {
        let ok = [1i64, -1].iter().all(|&u_sign| {
            (-1..=2).all(|m| {
                // eta = ell^m * u with tau(u) = u_sign
                let u = if u_sign == 1 { 1 } else { non_residue(ell) };
                let tau_eta = local_tau(disc, ell, m, u);
                let tau_m2eta = local_tau(disc, ell, m, -2 * u);
                let second = RootOfUnity::sign(tau_m2eta == 1).mul(c);
                let vanishes = second == RootOfUnity::sign(tau_pi == 1).mul(RootOfUnity::minus_one());
                vanishes == sign_condition(lc, xi, tau_eta)
            })
        });
        if ok {
            pinned = Some(c);
            break;
        }
    }
    let pinned = pinned.ok_or_else(|| Error::Invariant(format!("no epsilon sign reproduces the cancellation at {ell}")))?;
    Ok(EpsilonFactor { place: ell, conductor_exponent: a, psi_shift, gauss_sum: gauss_sum(ell, psi_shift), pinned })
}

/// Smallest quadratic non-residue mod an odd prime.
pub fn non_residue(ell: u64) -> i64 {
    (2..ell as i64).find(|&x| crate::arith::jacobi(x, ell) == -1).expect("odd prime")
}

/// `eta = ell^m u` in `F_v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalElement {
    pub m: i64,
    pub u: i64,
}

pub fn whittaker_a_ramified(
    lam: &GlobalHeckeChar,
    lc: &LocalChar,
    eta: LocalElement,
    eps: &EpsilonFactor,
    p: u64,
    prec: u32,
    deriv: bool,
) -> Result<LocalFactor> {
    if lc.place.kind != SplitKind::Ramified {
        return Err(Error::Unsupported(format!("ramified A-factor at {}", lc.place)));
    }
    if eta.m < -1 {
        return Err(Error::Precondition(format!("v(2 eta) = {} < -1", eta.m)));
    }
    let disc = lam.field.disc();
    let ell = lc.place.ell;
    let eps_sign = eps.pinned.as_sign().ok_or_else(|| Error::Invariant("pinned epsilon is not real".into()))?;
    let family = FactorFamily::Ramified {
        q: ell,
        tau_pi: local_tau(disc, ell, 1, 1),
        tau_m2eta: local_tau(disc, ell, eta.m, -2 * eta.u),
        eps: eps_sign,
        m: eta.m,
        a: eps.conductor_exponent,
        psi_shift: eps.psi_shift,
    };
    LocalFactor::new(ell.to_string(), FactorKind::ARamified, family, p, prec, deriv)
}

pub fn whittaker_a_inert(lc: &LocalChar, eta: LocalElement, p: u64, prec: u32, deriv: bool) -> Result<LocalFactor> {
    if lc.place.kind != SplitKind::Inert {
        return Err(Error::Unsupported(format!("inert A-factor at {}", lc.place)));
    }
    if eta.m < 0 {
        return Err(Error::Precondition(format!("eta must be integral, v = {}", eta.m)));
    }
    let family = FactorFamily::InertTilde { ell: lc.place.ell, n: eta.m };
    LocalFactor::new(lc.place.ell.to_string(), FactorKind::AInert, family, p, prec, deriv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Ramified,
    Inert,
}

pub fn whittaker_a_deriv_branch(
    lam: &GlobalHeckeChar,
    lc: &LocalChar,
    eta: LocalElement,
    branch: Branch,
    p: u64,
    prec: u32,
) -> Result<LocalFactor> {
    match (branch, lc.place.kind) {
        (Branch::Ramified, SplitKind::Ramified) => {
            let eps = eps_factor(lam, lc, 0)?;
            whittaker_a_ramified(lam, lc, eta, &eps, p, prec, true)
        }
        (Branch::Inert, SplitKind::Inert) => whittaker_a_inert(lc, eta, p, prec, true),
        (b, k) => Err(Error::InvalidInput(format!("branch {b:?} does not match {k} place"))),
    }
}

/// Truncated Riemann sum of `int chi^-1(x + theta) psi(-beta x) dx` over
/// `ell^-n Z_ell / ell^n Z_ell` for an unramified inert `chi` with
/// `chi(ell) = mu` and `theta = sqrt(D)/2`.
pub fn inert_whittaker_riemann(ell: u64, disc: i64, beta_val: i64, mu: f64, n: u32) -> f64 {
    let l = ell as i128;
    let size = l.pow(2 * n);
    let scale = l.pow(n);
    let beta = l.pow(beta_val as u32);
    let measure = 1.0 / scale as f64;
    let mut total = 0.0;
    for x_num in 0..size {
        // x = x_num / ell^n; N(x + theta) = x^2 - D/4
        let norm_num = 4 * x_num * x_num - disc as i128 * scale * scale;
        let v_norm = if norm_num == 0 { i64::MAX } else { val_i128(ell, norm_num) as i64 - 2 * n as i64 };
        let v_e = v_norm.min(0) / 2;
        let chi_inv = mu.powi(-(v_e as i32));
        // psi(-beta x) with psi_ell(y) = exp(-2 pi i {y})
        let frac = ((beta * x_num) % scale) as f64 / scale as f64;
        total += chi_inv * (2.0 * std::f64::consts::PI * frac).cos() * measure;
    }
    total
}

fn val_i128(p: u64, mut n: i128) -> u32 {
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Closed form of the same truncated integral, `n > beta_val`.
pub fn inert_whittaker_integral(ell: u64, beta_val: i64, mu: f64) -> f64 {
    let l = ell as f64;
    let mut total = 1.0;
    for j in 1..=beta_val {
        total += mu.powi(j as i32) * (l.powi(j as i32) - l.powi(j as i32 - 1));
    }
    total - mu.powi(beta_val as i32 + 1) * l.powi(beta_val as i32)
}

/// CSV with columns `place,kind,v_p(value),vanished,v_p(derivative)`.
pub fn write_factor_csv<W: Write>(factors: &[LocalFactor], mut w: W) -> std::io::Result<()> {
    writeln!(w, "place,kind,v_p(value),vanished,v_p(derivative)")?;
    for f in factors {
        let dv = f.derivative_valuation().map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", f.place, f.kind, f.value_valuation(), f.vanished, dv)?;
    }
    Ok(())
}

/// Valuation of a nonzero p-adic number as a rational, `inf` for zero.
pub fn ratval(x: &PadicNum) -> RatVal {
    if x.is_zero() {
        RatVal::Infinite
    } else {
        x.val_p().into()
    }
}

/// `v_p(x / log_p(1 + p))`.
pub fn normalized_valuation(x: &PadicNum) -> RatVal {
    ratval(x).sub_int(1)
}
