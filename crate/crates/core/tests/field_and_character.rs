use muderiv::arith;
use muderiv::cyclo::RootOfUnity;
use muderiv::hecke::{build_selfdual_char, canonical, twist_conductor, local_tau, Twist};
use muderiv::quad::{class_number, QuadField, QuadInt, SplitKind};
use muderiv::Error;

#[test]
fn splitting_examples() {
    let k = QuadField::new(7).unwrap();
    assert_eq!(k.classify_prime(2).kind, SplitKind::Split);
    assert_eq!(k.classify_prime(7).kind, SplitKind::Ramified);
    assert_eq!(k.classify_prime(5).kind, SplitKind::Inert);
    assert_eq!(k.classify_prime(7).primes_above.len(), 1);
    assert_eq!(k.classify_prime(2).primes_above.len(), 2);
}

#[test]
fn splitting_matches_minimal_polynomial() {
    for d in [7u64, 11, 19, 5, 1, 2, 23] {
        let k = QuadField::new(d).unwrap();
        let (t, n) = k.omega_poly();
        for ell in arith::primes_up_to(600).into_iter().take(100) {
            let l = ell as i64;
            let roots = (0..l).filter(|&x| (x * x - t * x + n).rem_euclid(l) == 0).count();
            let disc_zero = (t * t - 4 * n).rem_euclid(l) == 0;
            let want = match roots {
                0 => SplitKind::Inert,
                1 => SplitKind::Ramified,
                _ if ell == 2 && disc_zero => SplitKind::Ramified,
                _ => SplitKind::Split,
            };
            let ps = k.classify_prime(ell);
            assert_eq!(ps.kind, want, "d={d} ell={ell}");
            let degrees: u32 = ps.primes_above.iter().map(|p| p.residue_degree).sum();
            let e = if ps.kind == SplitKind::Ramified { 2 } else { 1 };
            assert_eq!(degrees * e, 2);
        }
    }
}

#[test]
fn ideal_list_examples() {
    let k = QuadField::new(7).unwrap();
    let norms: Vec<u64> = k.ideals_up_to_norm(2).iter().map(|i| i.norm).collect();
    assert_eq!(norms, vec![1, 2, 2]);
    assert_eq!(k.ideals_up_to_norm(1).len(), 1);
    let five: Vec<u64> = k.ideals_up_to_norm(5).iter().map(|i| i.norm).collect();
    assert!(!five.contains(&5));
    assert!(five.contains(&4));
}

#[test]
fn ideal_counts_match_convolution() {
    for d in [7u64, 11, 23, 5] {
        let k = QuadField::new(d).unwrap();
        let oracle = k.ideal_counts_oracle(500);
        let mut counts = vec![0u64; 501];
        for i in k.ideals_up_to_norm(500) {
            counts[i.norm as usize] += 1;
        }
        assert_eq!(&counts[1..], &oracle[1..], "d={d}");
    }
}

#[test]
fn class_numbers() {
    assert_eq!(class_number(-7).unwrap(), 1);
    assert_eq!(class_number(-4).unwrap(), 1);
    assert_eq!(class_number(-23).unwrap(), 3);
    assert!(matches!(class_number(-4_000_004), Err(Error::BoundExceeded(_))));
    for d in [7u64, 11, 19, 43, 67, 163] {
        assert_eq!(QuadField::new(d).unwrap().class_number(), 1);
    }
}

#[test]
fn xi_squares_to_discriminant() {
    for d in [1u64, 2, 7, 11, 19, 23] {
        let k = QuadField::new(d).unwrap();
        let x = k.xi();
        assert_eq!(k.mul(x, x), QuadInt::new(k.disc(), 0));
    }
}

#[test]
fn principal_iff_class_zero() {
    let k = QuadField::new(23).unwrap();
    for i in k.ideals_up_to_norm(60) {
        assert_eq!(k.generator(&i).is_some(), i.class_index == 0, "{i:?}");
    }
}

fn sample_elements(k: &QuadField, count: usize) -> Vec<QuadInt> {
    let mut out = Vec::new();
    for s in 1i64.. {
        for a in -s..=s {
            for b in [-s, s] {
                out.push(QuadInt::new(a, b));
                out.push(QuadInt::new(b, a));
            }
        }
        if out.len() >= count * 3 {
            break;
        }
    }
    out.retain(|x| !x.is_zero() && k.norm(*x) > 0);
    out.truncate(count * 3);
    out
}

#[test]
fn canonical_characters_are_self_dual() {
    for d in [7u64, 11, 19] {
        let lam = canonical(d).unwrap();
        lam.check_self_duality().unwrap();
        let k = &lam.field;
        let mut checked = 0;
        for x in sample_elements(k, 20) {
            let Some(v) = lam.eval_element(x) else { continue };
            // lambda(a) lambda(conj a) = N(a)
            let vc = lam.eval_element(k.conj(x)).unwrap();
            assert_eq!(k.mul(v.alg, vc.alg), QuadInt::new(k.norm(x), 0));
            // lambda((a)) = +-a, fixed by the residue mod sqrt(-q)
            assert!(v.alg == x || v.alg == k.neg(x));
            checked += 1;
        }
        assert!(checked >= 20);
    }
}

#[test]
fn no_unramified_character_of_odd_weight() {
    let k = QuadField::new(7).unwrap();
    assert!(matches!(
        build_selfdual_char(&k, 1, &[], Twist::canonical()),
        Err(Error::NoSelfDualCharacter(_))
    ));
    assert!(matches!(
        build_selfdual_char(&k, 2, &[(7, 1)], Twist::canonical()),
        Err(Error::NoSelfDualCharacter(_))
    ));
}

#[test]
fn inert_component_follows_unramified_formula() {
    let lam = canonical(11).unwrap();
    let lc = lam.local_component(lam.places_above(7)[0]).unwrap();
    assert_eq!(lc.uniformizer_value.phase, RootOfUnity::minus_one());
    assert_eq!(lc.cond_exp(), 0);
    for m in 0..4 {
        for u in 1..7 {
            let tau = local_tau(lam.field.disc(), 7, 0, u);
            let want = RootOfUnity::sign(m % 2 == 0).mul(RootOfUnity::sign(tau == 1));
            assert_eq!(lc.eval_base(m, u).unwrap(), want);
        }
    }
    // N^1 scales the value on the uniformizer by |pi|^2 = 7^-2
    let lc1 = lam.twist_by_norm(1).local_component(lam.places_above(7)[0]).unwrap();
    assert_eq!(lc1.twisted_uniformizer_value().norm_power, lc.twisted_uniformizer_value().norm_power - 2);
    assert_eq!(lc1.unit_table, lc.unit_table);
}

#[test]
fn split_component_values_multiply_to_norm() {
    let lam = canonical(11).unwrap();
    let k = &lam.field;
    for ell in [3u64, 5, 23, 31, 37] {
        let places = lam.places_above(ell);
        assert_eq!(places.len(), 2);
        let a = lam.local_component(places[0]).unwrap();
        let b = lam.local_component(places[1]).unwrap();
        let prod = k.mul(a.uniformizer_value.alg, b.uniformizer_value.alg);
        let phase = a.uniformizer_value.phase.mul(b.uniformizer_value.phase);
        // pi * conj(pi) = ell up to sign; the phases absorb the sign of eps(-1)
        assert_eq!(prod.b, 0);
        assert_eq!(prod.a.unsigned_abs(), ell);
        assert!(phase.as_sign().is_some());
    }
}

#[test]
fn ramified_component_is_tamely_ramified() {
    for d in [7u64, 11, 19, 43] {
        let lam = canonical(d).unwrap();
        let lc = lam.local_component(lam.places_above(d)[0]).unwrap();
        assert_eq!(lc.cond_exp(), 1);
        assert!(lc.unit_table.iter().any(|e| !e.value.is_one()));
    }
}

#[test]
fn norm_twists_compose() {
    let lam = canonical(19).unwrap();
    assert_eq!(lam.twist_by_norm(0), lam);
    assert_eq!(lam.lambda_star().twist_by_norm(1), lam);
    assert_eq!(lam.conjugate().conjugate(), lam);
}

#[test]
fn character_times_conjugate_is_norm_on_ideals() {
    for (d, tw) in [(11u64, "canonical"), (19, "conj"), (11, "genus:-3"), (19, "genus:5")] {
        let twist = Twist::parse(tw).unwrap();
        let k = QuadField::new(d).unwrap();
        let lam = build_selfdual_char(&k, 1, &twist_conductor(d, twist), twist).unwrap();
        let mut n = 0;
        for i in k.ideals_up_to_norm(700) {
            let Some(g) = k.generator(&i) else { continue };
            let (Some(a), Some(b)) = (lam.eval_element(g), lam.eval_element(k.conj(g))) else { continue };
            assert_eq!(k.mul(a.alg, b.alg), QuadInt::new(i.norm as i64, 0), "{tw} {i:?}");
            n += 1;
        }
        assert!(n >= 200, "{tw}: {n}");
    }
}

#[test]
fn local_global_compatibility() {
    for tw in ["canonical", "conj", "genus:-3"] {
        let twist = Twist::parse(tw).unwrap();
        let k = QuadField::new(11).unwrap();
        let lam = build_selfdual_char(&k, 1, &twist_conductor(11, twist), twist).unwrap();
        let mut n = 0;
        for x in sample_elements(&k, 50) {
            let Some(v) = lam.eval_element(x) else { continue };
            let mut eps = RootOfUnity::one();
            for place in lam.conductor_places() {
                eps = eps.mul(lam.local_component(place).unwrap().eval_unit(x).unwrap().inv());
            }
            let base = if twist.conj { k.conj(x) } else { x };
            let want = if eps == RootOfUnity::one() { base } else { k.neg(base) };
            assert_eq!(v.alg, want, "{tw} {x:?}");
            n += 1;
        }
        assert!(n >= 50);
    }
}

#[test]
fn conductor_decomposition() {
    for (d, tw) in [(11u64, "genus:-3"), (19, "genus:-7"), (19, "conj,genus:5")] {
        let twist = Twist::parse(tw).unwrap();
        let k = QuadField::new(d).unwrap();
        let lam = build_selfdual_char(&k, 1, &twist_conductor(d, twist), twist).unwrap();
        for l in lam.conductor_minus() {
            assert_ne!(k.classify_prime(l).kind, SplitKind::Split);
        }
        for l in lam.conductor_plus() {
            assert_eq!(k.classify_prime(l).kind, SplitKind::Split);
        }
        lam.check_self_duality().unwrap();
    }
}

#[test]
fn char_spec_round_trip() {
    let lam = canonical(11).unwrap().conjugate();
    let json = serde_json::to_string(&lam.spec()).unwrap();
    let spec: muderiv::hecke::CharSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(spec.build().unwrap(), lam);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["conductor"], serde_json::json!([[11, 1]]));
}
