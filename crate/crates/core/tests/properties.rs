use num_bigint::BigInt;
use proptest::prelude::*;

use wachkit::characters::{bracket_weights, induced_iso_test};
use wachkit::families::{diagonalize_doubled, types_for_induced, types_for_split};
use wachkit::filtered::{classify, det_weights, index_sets_split, mat_det, weak_admissible, FiltMod2, Form, Kind};
use wachkit::padic::{binom, binom_qp, ppow, PadicScalar, Qp};
use wachkit::reduction::{det_reduction, p_adic_sum};
use wachkit::series::{lambda_f, q_series, GammaElement, PiSeries, TauSeries};

const M: u32 = 6;
const N: usize = 8;
const PREC: i64 = 40;

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 5, 7])
}

fn scalar(p: u32, d: usize) -> impl Strategy<Value = PadicScalar> {
    prop::collection::vec(-1000i64..1000, d)
        .prop_map(move |c| PadicScalar::new(p, M, c.into_iter().map(BigInt::from).collect()).unwrap())
}

fn unit(p: u32) -> impl Strategy<Value = i64> {
    (-500i64..500).prop_filter("unit", move |u| u.rem_euclid(p as i64) != 0)
}

fn int_series(p: u32) -> impl Strategy<Value = PiSeries> {
    prop::collection::vec(-50i64..50, N)
        .prop_map(move |c| PiSeries::from_ints(p, &c.into_iter().map(BigInt::from).collect::<Vec<_>>(), N, PREC))
}

fn gamma(p: u32) -> impl Strategy<Value = GammaElement> {
    (1i64..6).prop_map(move |j| GammaElement::from_int(p, (1 + p as i64).pow(j as u32)).unwrap())
}

fn weights(f: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..=4, f).prop_filter("some positive weight", |k| k.iter().any(|&x| x > 0))
}

fn ell(f: usize) -> impl Strategy<Value = Vec<i64>> {
    (weights(f), prop::collection::vec(any::<bool>(), f)).prop_map(move |(k, side)| {
        let mut l = vec![0i64; 2 * f];
        for i in 0..f {
            l[if side[i] { i } else { i + f }] = k[i];
        }
        l
    })
}

/// A Standard-form module with `v(α) = va`, `v(δ) = vd` in slot 0 and units elsewhere.
fn standard_module(p: u32, k: Vec<i64>, va: u32, vd: u32, ua: i64, ud: i64, xy: Vec<u8>) -> FiltMod2 {
    let f = k.len();
    let q = |n: BigInt| Qp::from_int(p, n, PREC);
    let mut alpha = vec![q(BigInt::from(1)); f];
    let mut delta = vec![q(BigInt::from(1)); f];
    alpha[0] = q(BigInt::from(ua) * ppow(p, va));
    delta[0] = q(BigInt::from(ud) * ppow(p, vd));
    let z = vec![Qp::zero(p, PREC); f];
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &c in &xy {
        let (a, b) = match c % 3 {
            0 => (0, 1),
            1 => (1, 0),
            _ => (1, 1),
        };
        x.push(q(BigInt::from(a)));
        y.push(q(BigInt::from(b)));
    }
    FiltMod2::new(p, k, [[alpha, z.clone()], [z, delta]], x, y, Form::Standard).unwrap()
}

fn standard_strategy() -> impl Strategy<Value = FiltMod2> {
    (prime(), 1usize..=3).prop_flat_map(|(p, f)| {
        (weights(f), 0u32..6, 0u32..6, unit(p), unit(p), prop::collection::vec(0u8..3, f))
            .prop_map(move |(k, va, vd, ua, ud, xy)| standard_module(p, k, va, vd, ua, ud, xy))
    })
}

fn twist(d: &FiltMod2, u: i64) -> FiltMod2 {
    let mut e = d.clone();
    let c = Qp::from_int(d.p, u, PREC);
    for r in 0..2 {
        for col in 0..2 {
            e.frob[r][col][0] = e.frob[r][col][0].mul(&c);
        }
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_ring_axioms((a, b, c) in (prime(), 1usize..=3).prop_flat_map(|(p, d)| (scalar(p, d), scalar(p, d), scalar(p, d)))) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.add(&b).sub(&b), a.clone());
    }

    #[test]
    fn valuation_is_additive((p, x, y, ex, ey) in prime().prop_flat_map(|p| (Just(p), unit(p), unit(p), 0u32..5, 0u32..5))) {
        let a = Qp::from_int(p, BigInt::from(x) * ppow(p, ex), PREC);
        let b = Qp::from_int(p, BigInt::from(y) * ppow(p, ey), PREC);
        prop_assert_eq!(a.mul(&b).val(), Some((ex + ey) as i64));
        prop_assert_eq!(a.div(&b).unwrap().val(), Some(ex as i64 - ey as i64));
    }

    #[test]
    fn unit_inverse_is_inverse(x in (prime(), 1usize..=3).prop_flat_map(|(p, d)| scalar(p, d))) {
        match x.unit_inverse() {
            Ok(y) => prop_assert!(x.mul(&y).is_one()),
            Err(_) => prop_assert!(x.coeffs().iter().all(|c| c % BigInt::from(x.p()) == BigInt::from(0))),
        }
    }

    #[test]
    fn binomials_agree(p in prime(), a in -200i64..200, n in 0u64..8) {
        if let Ok(exact) = binom(p, &BigInt::from(a), 20, n) {
            let tracked = binom_qp(&Qp::from_int(p, a, 20), n);
            let want = exact.to_qp().unwrap();
            prop_assert!(tracked.eq_at(&want));
        }
    }

    #[test]
    fn frobenius_commutes_with_gamma((s, g) in prime().prop_flat_map(|p| (int_series(p), gamma(p)))) {
        let lhs = s.frobenius().gamma_act(&g);
        let rhs = s.gamma_act(&g).frobenius();
        prop_assert_eq!(lhs.sub(&rhs).order_mod(M as i64), N);
    }

    #[test]
    fn gamma_group_law((s, g, h) in prime().prop_flat_map(|p| (int_series(p), gamma(p), gamma(p)))) {
        let lhs = s.gamma_act(&h).gamma_act(&g);
        let rhs = s.gamma_act(&g.compose(&h));
        prop_assert_eq!(lhs.sub(&rhs).order_mod(M as i64), N);
    }

    #[test]
    fn r_ring_is_closed((a, b) in prime().prop_flat_map(|p| (int_series(p), int_series(p)))) {
        let p = a.p();
        // pi^i / p^j stays in R while j(p-1) <= i
        let a = a.mul(&PiSeries::pi(p, N, PREC).pow(p - 1)).scale(&Qp::from_ratio(p, 1, p, PREC));
        prop_assert!(a.r_ring_check() && b.r_ring_check());
        prop_assert!(a.mul(&b).r_ring_check());
        prop_assert!(a.add(&b).r_ring_check());
    }

    #[test]
    fn tau_frobenius_cycles_constants((p, c) in prime().prop_flat_map(|p| (Just(p), prop::collection::vec(-99i64..99, 1..=4)))) {
        let t = TauSeries::new(c.iter().map(|&x| PiSeries::constant(Qp::from_int(p, x, PREC), N)).collect());
        let mut u = t.clone();
        for _ in 0..t.f() {
            u = u.tau_frobenius();
        }
        prop_assert_eq!(u.sub(&t).order_mod(M as i64), N);
    }

    #[test]
    fn lambda_functional_equation(p in prime(), f in 1usize..=3) {
        let l = lambda_f(p, f, N, M as i64 + 8);
        let qp = q_series(p, N, M as i64 + 20).scale(&Qp::from_ratio(p, 1, p, M as i64 + 20));
        prop_assert_eq!(l.frobenius_pow(f).mul(&qp).sub(&l).order_mod(M as i64), N);
    }

    #[test]
    fn classification_survives_unit_twist(d in standard_strategy(), u in 1i64..40) {
        prop_assume!(u % d.p as i64 != 0);
        let e = twist(&d, u);
        prop_assert_eq!(weak_admissible(&d).unwrap(), weak_admissible(&e).unwrap());
        if let (Ok(a), Ok(b)) = (classify(&d), classify(&e)) {
            prop_assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn split_matches_index_sets(d in standard_strategy()) {
        if let Ok(v) = classify(&d) {
            if !v.f_scalar {
                prop_assert_eq!(v.kind == Some(Kind::SplitReducible), index_sets_split(&d));
            }
        }
    }

    #[test]
    fn determinant_data(d in standard_strategy()) {
        if let Ok(dd) = det_weights(&d) {
            let n = (d.p as i128).pow(d.f() as u32) - 1;
            prop_assert_eq!(dd.reduction_exp, (-p_adic_sum(d.p, &d.weights).unwrap()).rem_euclid(n));
            prop_assert_eq!(dd.reduction_exp, det_reduction(&d.weights, d.p, d.f()).unwrap().exp);
            let v: i64 = dd.frob.iter().map(|x| x.val().unwrap()).sum();
            prop_assert_eq!(v, d.weight_sum());
            for s in 0..d.f() {
                prop_assert!(dd.frob[s].eq_at(&mat_det(&d.slot(s))));
            }
        }
    }

    #[test]
    fn induced_recipe_parity_and_round_trip(l in (1usize..=4).prop_flat_map(ell), p in prop::sample::select(vec![3u32, 5])) {
        let r = types_for_induced(&l).unwrap();
        prop_assert_eq!(r.normalized.even_count() % 2, 1);
        for (t, set) in r.normalized.types.iter().zip(&r.raw) {
            prop_assert!(set.contains(t));
        }
        let k = bracket_weights(&l).unwrap();
        let d = diagonalize_doubled(p, &r.normalized, &k).unwrap();
        prop_assert!(d.induced);
        prop_assert!(induced_iso_test(&d.ell_out, &l).unwrap());
    }

    #[test]
    fn split_recipe_parity(
        (a, b) in (1usize..=4).prop_flat_map(|f| (prop::collection::vec(0i64..=3, f), prop::collection::vec(0i64..=3, f)))
    ) {
        if let Ok(r) = types_for_split(&a, &b) {
            prop_assert_eq!(r.normalized.even_count() % 2, 0);
        }
    }
}
