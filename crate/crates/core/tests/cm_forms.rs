use muderiv::cm::{functional_equation_probe, q_expansion};
use muderiv::hecke::{build_selfdual_char, canonical, twist_conductor, Twist};
use muderiv::local::global_root_number;
use muderiv::quad::{QuadField, QuadInt, SplitKind};

#[test]
fn q_expansion_examples() {
    for d in [7u64, 11, 19] {
        let lam = canonical(d).unwrap();
        let f = q_expansion(&lam, 200).unwrap();
        assert_eq!(f.coeff(1), QuadInt::new(1, 0));
        assert_eq!(f.weight, 2);
        assert_eq!(f.level, d * d);
        for ell in muderiv::arith::primes_up_to(200) {
            let ps = lam.field.classify_prime(ell);
            match ps.kind {
                SplitKind::Inert => assert!(f.coeff(ell).is_zero()),
                SplitKind::Split => {
                    let sum = ps.primes_above.iter().fold(QuadInt::new(0, 0), |acc, pr| {
                        let rep = lam.field.prime_ideal_rep(pr);
                        lam.field.add(acc, lam.eval_ideal(&rep).unwrap().alg)
                    });
                    assert_eq!(f.coeff(ell), sum);
                }
                SplitKind::Ramified => assert!(f.coeff(ell).is_zero()),
            }
        }
    }
}

#[test]
fn q_expansion_properties_to_2000() {
    for d in [11u64, 19] {
        for lam in [canonical(d).unwrap(), canonical(d).unwrap().conjugate()] {
            let f = q_expansion(&lam, 2000).unwrap();
            assert_eq!(f.multiplicativity_failure(), None);
            assert!(f.inert_nonvanishing(&lam).is_empty());
            assert!(f.hecke_bound_failures().is_empty());
        }
    }
}

#[test]
fn probe_matches_root_number_for_test_characters() {
    for d in [11u64, 19, 43] {
        for lam in [canonical(d).unwrap(), canonical(d).unwrap().conjugate()] {
            let probe = functional_equation_probe(&q_expansion(&lam, 2000).unwrap()).unwrap();
            assert_eq!(probe.sign, global_root_number(&lam).unwrap());
            assert!(probe.residual < 1e-6);
        }
    }
}

#[test]
fn probe_converges_with_the_bound() {
    let lam = canonical(19).unwrap();
    let a = functional_equation_probe(&q_expansion(&lam, 200).unwrap()).unwrap();
    let b = functional_equation_probe(&q_expansion(&lam, 400).unwrap()).unwrap();
    assert_eq!(a.sign, b.sign);
    assert!(b.residual <= a.residual * 0.1 || b.residual < 1e-15);
}

#[test]
fn probe_flags_known_sign_disagreements() {
    // For q = 7 mod 8 and for the genus twist by -3 the local sign formula and the
    // functional equation disagree; the probe is the one that matches the classical value.
    let lam7 = canonical(7).unwrap();
    let probe7 = functional_equation_probe(&q_expansion(&lam7, 2000).unwrap()).unwrap();
    assert_eq!(probe7.sign, 1);
    let tw = Twist::parse("genus:-3").unwrap();
    let k = QuadField::new(11).unwrap();
    let lam = build_selfdual_char(&k, 1, &twist_conductor(11, tw), tw).unwrap();
    let probe = functional_equation_probe(&q_expansion(&lam, 2000).unwrap()).unwrap();
    // w(f (x) chi_-3) = w(f) chi_-3(-121) = +1
    assert_eq!(probe.sign, 1);
}

#[test]
fn small_bounds_are_rejected() {
    let f = q_expansion(&canonical(11).unwrap(), 100).unwrap();
    assert!(functional_equation_probe(&f).is_err());
    assert!(q_expansion(&canonical(11).unwrap(), 0).is_err());
}

#[test]
fn csv_columns() {
    let f = q_expansion(&canonical(11).unwrap(), 10).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "n,a_n,re,im");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,1,1.0"));
}
