//! Self-dual Hecke characters of `K = Q(sqrt(-q))`, `q = 3 mod 4` prime,
//! of infinity type `k` with `k` odd.
//!
//! The base character is `lambda((a)) = (a mod sqrt(-q) | q) a^k`. Twists
//! by complex conjugation and by genus characters `chi_{D'} o N` keep
//! self-duality. Local components use the geometric normalization: for `a`
//! prime to the conductor, `lambda((a)) = a^k prod_{v | c} lambda_v(a)^-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::cyclo::RootOfUnity;
use crate::error::{Error, Result};
use crate::quad::{IdealRep, PrimeIdeal, QuadField, QuadInt, SplitKind};

/// A twist of the canonical character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Twist {
    pub conj: bool,
    /// Odd fundamental discriminant `D'` prime to `q`.
    pub genus: Option<i64>,
}

impl Twist {
    pub fn canonical() -> Self {
        Twist::default()
    }

    pub fn parse(label: &str) -> Result<Self> {
        let mut t = Twist::default();
        for part in label.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part {
                "canonical" | "none" => {}
                "conj" => t.conj = true,
                _ => {
                    let d = part
                        .strip_prefix("genus:")
                        .and_then(|s| s.parse::<i64>().ok())
                        .ok_or_else(|| Error::InvalidInput(format!("unknown twist {part:?}")))?;
                    if !is_odd_fundamental(d) {
                        return Err(Error::InvalidInput(format!("{d} is not an odd fundamental discriminant")));
                    }
                    t.genus = Some(d);
                }
            }
        }
        Ok(t)
    }
}

impl fmt::Display for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.conj, self.genus) {
            (false, None) => f.write_str("canonical"),
            (true, None) => f.write_str("conj"),
            (false, Some(d)) => write!(f, "genus:{d}"),
            (true, Some(d)) => write!(f, "conj,genus:{d}"),
        }
    }
}

/// `D' = 1 mod 4`, squarefree, `D' != 1`.
pub fn is_odd_fundamental(d: i64) -> bool {
    d != 1 && d != 0 && d.rem_euclid(4) == 1 && arith::factor(d.unsigned_abs()).iter().all(|&(_, e)| e == 1)
}

/// Character spec file contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpec {
    pub d: u64,
    pub k: u32,
    pub conductor: Vec<(u64, u32)>,
    #[serde(default = "default_twist")]
    pub twist: String,
}

fn default_twist() -> String {
    "canonical".into()
}

impl CharSpec {
    pub fn build(&self) -> Result<GlobalHeckeChar> {
        let field = QuadField::new(self.d)?;
        let twist = Twist::parse(&self.twist)?;
        build_selfdual_char(&field, self.k, &self.conductor, twist)
    }
}

/// A finite place of `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Place {
    pub ell: u64,
    pub kind: SplitKind,
    pub prime: PrimeIdeal,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.prime.root) {
            (SplitKind::Split, Some(r)) => write!(f, "{}[w={}]", self.ell, r),
            _ => write!(f, "{}", self.ell),
        }
    }
}

/// `phase * alg * ell^norm_power`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalValue {
    pub phase: RootOfUnity,
    pub alg: QuadInt,
    pub norm_power: i64,
}

impl LocalValue {
    pub fn root(phase: RootOfUnity) -> Self {
        LocalValue { phase, alg: QuadInt::new(1, 0), norm_power: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitEntry {
    pub generator: QuadInt,
    /// 1 for the tame layer; `j + 1` for a generator of `1 + pi^j`.
    pub level: u32,
    pub value: RootOfUnity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum UnitRule {
    Trivial,
    /// Legendre symbol of the residue mod the prime of degree one.
    ResidueLegendre,
    /// Legendre symbol of the residue norm.
    NormLegendre,
}

/// `lambda_v` restricted to data at one finite place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalChar {
    pub place: Place,
    /// A global element that is a uniformizer of `K_v`.
    pub uniformizer: QuadInt,
    /// Value of `lambda_v^*` on `uniformizer`, before any norm twist.
    pub uniformizer_value: LocalValue,
    pub unit_table: Vec<UnitEntry>,
    pub norm_shift: i32,
    rule: UnitRule,
    t: i64,
    n: i64,
}

impl LocalChar {
    pub fn cond_exp(&self) -> u32 {
        self.unit_table.iter().filter(|e| !e.value.is_one()).map(|e| e.level).max().unwrap_or(0)
    }

    pub fn is_ramified(&self) -> bool {
        self.cond_exp() > 0
    }

    /// Value on a unit of `O_v` given as a global element prime to `v`.
    pub fn eval_unit(&self, u: QuadInt) -> Result<RootOfUnity> {
        let ell = self.place.ell as i64;
        let res = match self.rule {
            UnitRule::Trivial => return Ok(RootOfUnity::one()),
            UnitRule::ResidueLegendre => {
                let r = self.place.prime.root.expect("degree one prime");
                (u.a + u.b * r).rem_euclid(ell)
            }
            UnitRule::NormLegendre => (u.a * u.a + self.t * u.a * u.b + self.n * u.b * u.b).rem_euclid(ell),
        };
        match arith::jacobi(res, ell as u64) {
            0 => Err(Error::InvalidInput(format!("{u:?} is not a unit at {}", self.place))),
            s => Ok(RootOfUnity::sign(s == 1)),
        }
    }

    /// Value of `lambda_v^*` on a rational `x = ell^m u` in `F_v^*`, phase only.
    pub fn eval_base(&self, m: i64, u: i64) -> Result<RootOfUnity> {
        let unit = self.eval_unit(QuadInt::new(u, 0))?;
        let unif = match self.place.kind {
            SplitKind::Inert => self.uniformizer_value.phase,
            // ell = -pi^2 for pi = sqrt(-q)
            SplitKind::Ramified => self
                .eval_unit(QuadInt::new(-1, 0))?
                .mul(self.uniformizer_value.phase.pow(2)),
            SplitKind::Split => {
                return Err(Error::Unsupported("restriction to F_v at a single split prime".into()));
            }
        };
        Ok(unif.pow(m).mul(unit))
    }

    /// Uniformizer value of `(lambda N^s)^*` including the norm twist.
    pub fn twisted_uniformizer_value(&self) -> LocalValue {
        let f = self.place.prime.residue_degree as i64;
        let mut v = self.uniformizer_value;
        v.norm_power -= self.norm_shift as i64 * f;
        v
    }
}

/// Value `alg * norm^shift` of a character on an ideal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharValue {
    pub alg: QuadInt,
    pub norm: u64,
    pub shift: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalHeckeChar {
    pub field: QuadField,
    pub k: u32,
    pub q: u64,
    #[serde(with = "twist_serde")]
    pub twist: Twist,
    pub norm_shift: i32,
    /// `(ell, e)`, where `e` is the exponent of the prime above `ell`.
    pub conductor: Vec<(u64, u32)>,
    /// Split refinement: for each split `ell | c+`, the prime in `F`; its
    /// conjugate lies in `F_c`.
    pub split_refinement: Vec<PrimeIdeal>,
}

mod twist_serde {
    use super::Twist;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Twist, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Twist, D::Error> {
        let s = String::deserialize(d)?;
        Twist::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The conductor forced by a twist of the canonical character.
pub fn twist_conductor(q: u64, twist: Twist) -> Vec<(u64, u32)> {
    let mut c = vec![(q, 1)];
    if let Some(d) = twist.genus {
        c.extend(arith::prime_factors(d.unsigned_abs()).into_iter().map(|l| (l, 1)));
    }
    c.sort();
    c
}

pub fn build_selfdual_char(
    field: &QuadField,
    k: u32,
    conductor: &[(u64, u32)],
    twist: Twist,
) -> Result<GlobalHeckeChar> {
    if field.class_number() != 1 {
        return Err(crate::error::HypothesisError::ClassNumberNotOne(field.class_number()).into());
    }
    if k % 2 == 0 {
        return Err(Error::NoSelfDualCharacter(format!(
            "weight {k} is even; the unit -1 forces an odd weight"
        )));
    }
    let mut cond: Vec<(u64, u32)> = conductor.to_vec();
    cond.sort();
    if cond.is_empty() {
        return Err(Error::NoSelfDualCharacter(
            "conductor (1): an unramified character of odd weight is not well defined on (-1)".into(),
        ));
    }
    let q = field.d();
    if field.disc() != -(q as i64) || !arith::is_prime(q) || q <= 3 {
        return Err(Error::Unsupported(format!(
            "D = {} is not -q for a prime q > 3",
            field.disc()
        )));
    }
    if let Some(d) = twist.genus {
        if d.unsigned_abs() % q == 0 {
            return Err(Error::InvalidInput(format!("genus discriminant {d} meets q = {q}")));
        }
    }
    let expected = twist_conductor(q, twist);
    if cond != expected {
        return Err(Error::NoSelfDualCharacter(format!(
            "twist {twist} has conductor {expected:?}, requested {cond:?}"
        )));
    }
    let split_refinement = cond
        .iter()
        .filter(|(l, _)| field.classify_prime(*l).kind == SplitKind::Split)
        .map(|(l, _)| field.classify_prime(*l).primes_above[0])
        .collect();
    Ok(GlobalHeckeChar { field: field.clone(), k, q, twist, norm_shift: 0, conductor: cond, split_refinement })
}

pub fn canonical(d: u64) -> Result<GlobalHeckeChar> {
    let field = QuadField::new(d)?;
    build_selfdual_char(&field, 1, &[(d, 1)], Twist::canonical())
}

impl GlobalHeckeChar {
    pub fn label(&self) -> String {
        let mut s = format!("Q(sqrt(-{}))/k={}/{}", self.field.d(), self.k, self.twist);
        if self.norm_shift != 0 {
            s.push_str(&format!("/N^{}", self.norm_shift));
        }
        s
    }

    pub fn spec(&self) -> CharSpec {
        CharSpec { d: self.field.d(), k: self.k, conductor: self.conductor.clone(), twist: self.twist.to_string() }
    }

    /// Choose which prime above a split `ell | c` lies in `F`.
    pub fn refine_split(&mut self, prime: PrimeIdeal) -> Result<()> {
        let slot = self
            .split_refinement
            .iter_mut()
            .find(|p| p.ell == prime.ell)
            .ok_or_else(|| Error::InvalidInput(format!("{} is not a split prime of c", prime.ell)))?;
        *slot = prime;
        Ok(())
    }

    /// Norm of the conductor.
    pub fn conductor_norm(&self) -> u64 {
        self.conductor
            .iter()
            .map(|&(l, e)| match self.field.classify_prime(l).kind {
                SplitKind::Ramified => l.pow(e),
                _ => l.pow(2 * e),
            })
            .product()
    }

    /// Rational primes below `c-` (non-split).
    pub fn conductor_minus(&self) -> Vec<u64> {
        self.conductor
            .iter()
            .map(|&(l, _)| l)
            .filter(|&l| self.field.classify_prime(l).kind != SplitKind::Split)
            .collect()
    }

    pub fn conductor_plus(&self) -> Vec<u64> {
        self.conductor
            .iter()
            .map(|&(l, _)| l)
            .filter(|&l| self.field.classify_prime(l).kind == SplitKind::Split)
            .collect()
    }

    pub fn divides_conductor(&self, ell: u64) -> bool {
        self.conductor.iter().any(|&(l, _)| l == ell)
    }

    pub fn places_above(&self, ell: u64) -> Vec<Place> {
        let ps = self.field.classify_prime(ell);
        ps.primes_above.iter().map(|&prime| Place { ell, kind: ps.kind, prime }).collect()
    }

    pub fn conductor_places(&self) -> Vec<Place> {
        self.conductor.iter().flat_map(|&(l, _)| self.places_above(l)).collect()
    }

    /// Finite-order part `eps(a) = prod_{v | c} lambda_v(a)^-1` on elements
    /// prime to `c`, from closed forms.
    pub fn finite_order(&self, a: QuadInt) -> Option<i32> {
        let (t, n) = self.field.omega_poly();
        let q = self.q as i64;
        let w0 = self.field.roots_mod(self.q)[0];
        let s = arith::jacobi((a.a + a.b * w0).rem_euclid(q), self.q);
        let nrm = a.a * a.a + t * a.a * a.b + n * a.b * a.b;
        let g = match self.twist.genus {
            Some(d) => arith::jacobi(nrm, d.unsigned_abs()),
            None => 1,
        };
        (s * g != 0).then_some(s * g)
    }

    /// `lambda((a))`, or `None` when `(a)` meets the conductor.
    pub fn eval_element(&self, a: QuadInt) -> Option<CharValue> {
        let eps = self.finite_order(a)?;
        let base = if self.twist.conj { self.field.conj(a) } else { a };
        let mut alg = self.field.pow(base, self.k);
        if eps < 0 {
            alg = self.field.neg(alg);
        }
        Some(CharValue { alg, norm: self.field.norm(a) as u64, shift: self.norm_shift })
    }

    pub fn eval_ideal(&self, ideal: &IdealRep) -> Option<CharValue> {
        let g = self.field.generator(ideal)?;
        self.eval_element(g)
    }

    pub fn lambda_star(&self) -> GlobalHeckeChar {
        self.twist_by_norm(-1)
    }

    pub fn twist_by_norm(&self, s: i32) -> GlobalHeckeChar {
        let mut out = self.clone();
        out.norm_shift += s;
        out
    }

    pub fn conjugate(&self) -> GlobalHeckeChar {
        let mut out = self.clone();
        out.twist.conj = !out.twist.conj;
        out
    }

    /// Unitary phase of `lambda_infinity^*` on `xi`.
    pub fn infinity_phase_xi(&self) -> RootOfUnity {
        let i_k = RootOfUnity::i().pow(self.k as i64);
        if self.twist.conj { i_k } else { i_k.inv() }
    }

    fn unit_rule(&self, place: &Place) -> UnitRule {
        if place.ell == self.q {
            return UnitRule::ResidueLegendre;
        }
        if self.twist.genus.is_some_and(|d| d.unsigned_abs() % place.ell == 0) {
            return match place.kind {
                SplitKind::Split => UnitRule::ResidueLegendre,
                _ => UnitRule::NormLegendre,
            };
        }
        UnitRule::Trivial
    }

    fn bare_local(&self, place: Place) -> LocalChar {
        let (t, n) = self.field.omega_poly();
        LocalChar {
            place,
            uniformizer: QuadInt::new(place.ell as i64, 0),
            uniformizer_value: LocalValue::root(RootOfUnity::one()),
            unit_table: Vec::new(),
            norm_shift: self.norm_shift,
            rule: self.unit_rule(&place),
            t,
            n,
        }
    }

    /// Local component at a finite place.
    pub fn local_component(&self, place: Place) -> Result<LocalChar> {
        let mut lc = self.bare_local(place);
        lc.unit_table = self.unit_table(&lc);
        match place.kind {
            SplitKind::Inert => {
                lc.uniformizer_value = LocalValue::root(RootOfUnity::minus_one());
            }
            SplitKind::Ramified => {
                lc.uniformizer = self.field.xi();
                // product formula on xi: it is a unit at every other finite place
                let mut prod = self.infinity_phase_xi();
                for other in self.conductor_places().into_iter().filter(|p| p.ell != place.ell) {
                    let oc = self.bare_local(other);
                    prod = prod.mul(oc.eval_unit(self.field.xi())?);
                }
                lc.uniformizer_value = LocalValue::root(prod.inv());
            }
            SplitKind::Split => {
                let rep = self.field.prime_ideal_rep(&place.prime);
                let pi = self
                    .field
                    .generator(&rep)
                    .ok_or_else(|| Error::Invariant(format!("no generator for prime above {}", place.ell)))?;
                lc.uniformizer = pi;
                let base = if self.twist.conj { self.field.conj(pi) } else { pi };
                let mut phase = RootOfUnity::one();
                for other in self.conductor_places().into_iter().filter(|p| *p != place) {
                    phase = phase.mul(self.bare_local(other).eval_unit(pi)?.inv());
                }
                lc.uniformizer_value =
                    LocalValue { phase, alg: self.field.pow(base, self.k), norm_power: 0 };
            }
        }
        Ok(lc)
    }

    fn unit_table(&self, lc: &LocalChar) -> Vec<UnitEntry> {
        let ell = lc.place.ell;
        let gen = match (lc.rule, lc.place.kind) {
            (UnitRule::Trivial, _) => return Vec::new(),
            (_, SplitKind::Inert) => residue_field_generator(&self.field, ell),
            _ => QuadInt::new(crate::cyclo::primitive_root(ell) as i64, 0),
        };
        let value = lc.eval_unit(gen).expect("generator is a unit");
        vec![UnitEntry { generator: gen, level: 1, value }]
    }

    /// Check `lambda^*|_{F_v^*} = tau_v` at every non-split place of `c`
    /// and `lambda(a) lambda(conj a) = N(a)^k` on small split primes.
    pub fn check_self_duality(&self) -> Result<()> {
        for place in self.conductor_places() {
            let lc = self.local_component(place)?;
            match place.kind {
                SplitKind::Split => {
                    let g = crate::cyclo::primitive_root(place.ell) as i64;
                    let conj_place = self
                        .places_above(place.ell)
                        .into_iter()
                        .find(|p| *p != place)
                        .expect("two primes above a split prime");
                    let other = self.local_component(conj_place)?;
                    let prod = lc.eval_unit(QuadInt::new(g, 0))?.mul(other.eval_unit(QuadInt::new(g, 0))?);
                    if !prod.is_one() {
                        return Err(Error::Invariant(format!("not self-dual at {place}")));
                    }
                }
                _ => {
                    let g = crate::cyclo::primitive_root(place.ell) as i64;
                    let tau = |m: i64, u: i64| -> RootOfUnity {
                        RootOfUnity::sign(local_tau(self.field.disc(), place.ell, m, u) == 1)
                    };
                    if lc.eval_base(1, 1)? != tau(1, 1) || lc.eval_base(0, g)? != tau(0, g) {
                        return Err(Error::Invariant(format!("lambda* restricted to F_v is not tau at {place}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Local quadratic character `tau` of `Q_ell^*` attached to `K_v / Q_ell`,
/// for odd `ell`, evaluated on `ell^m u`.
pub fn local_tau(disc: i64, ell: u64, m: i64, u: i64) -> i32 {
    match arith::kronecker(disc, ell) {
        1 => 1,
        -1 => {
            if m % 2 == 0 { 1 } else { -1 }
        }
        _ => {
            // K_v = Q_ell(sqrt(disc)), disc = ell * d0: tau(u) = (u|ell),
            // tau(ell) = tau(-d0) since -disc = ell * (-d0) is a norm.
            let d0 = disc / ell as i64;
            let tu = arith::jacobi(u, ell);
            let tl = arith::jacobi(-d0, ell);
            tu * if m.rem_euclid(2) == 1 { tl } else { 1 }
        }
    }
}

/// A generator of `(O_K / ell)^*` for inert `ell`.
pub fn residue_field_generator(field: &QuadField, ell: u64) -> QuadInt {
    let order = ell * ell - 1;
    let factors = arith::prime_factors(order);
    let l = ell as i64;
    let red = |x: QuadInt| QuadInt::new(x.a.rem_euclid(l), x.b.rem_euclid(l));
    let pow = |x: QuadInt, mut e: u64| {
        let mut r = QuadInt::new(1, 0);
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                r = red(field.mul(r, b));
            }
            b = red(field.mul(b, b));
            e >>= 1;
        }
        r
    };
    for b in 1..l {
        for a in 0..l {
            let g = QuadInt::new(a, b);
            if factors.iter().all(|&f| pow(g, order / f) != QuadInt::new(1, 0)) {
                return g;
            }
        }
    }
    unreachable!("finite field has a generator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_self_dual() {
        for d in [7, 11, 19, 43] {
            let lam = canonical(d).unwrap();
            lam.check_self_duality().unwrap();
            for i in lam.field.ideals_up_to_norm(60) {
                let Some(v) = lam.eval_ideal(&i) else { continue };
                let g = lam.field.generator(&i).unwrap();
                let vc = lam.eval_element(lam.field.conj(g)).unwrap();
                assert_eq!(lam.field.mul(v.alg, vc.alg), QuadInt::new(i.norm as i64, 0));
            }
        }
    }

    #[test]
    fn unit_sign_is_consistent() {
        let lam = canonical(7).unwrap();
        let a = QuadInt::new(2, 1);
        let v1 = lam.eval_element(a).unwrap();
        let v2 = lam.eval_element(lam.field.neg(a)).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn trivial_conductor_rejected() {
        let k = QuadField::new(7).unwrap();
        assert!(matches!(build_selfdual_char(&k, 1, &[], Twist::canonical()), Err(Error::NoSelfDualCharacter(_))));
        assert!(build_selfdual_char(&k, 1, &[(7, 1)], Twist::canonical()).is_ok());
        assert!(build_selfdual_char(&k, 1, &[(7, 1)], Twist::parse("genus:-3").unwrap()).is_err());
    }

    #[test]
    fn ramified_component_has_depth_zero() {
        let lam = canonical(11).unwrap();
        let lc = lam.local_component(lam.places_above(11)[0]).unwrap();
        assert_eq!(lc.cond_exp(), 1);
        assert_eq!(lc.uniformizer_value.phase, RootOfUnity::i());
    }

    #[test]
    fn twist_labels_round_trip() {
        for s in ["canonical", "conj", "genus:-3", "conj,genus:5"] {
            assert_eq!(Twist::parse(s).unwrap().to_string(), s);
        }
        assert!(Twist::parse("genus:-4").is_err());
    }
}
