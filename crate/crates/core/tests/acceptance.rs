//! Acceptance run: one PASS/FAIL line per criterion. All checks are exact at
//! the budgets pinned below; timing limits are checked on the wall clock.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wachkit::characters::{enumerate_induced_classes, induced_iso_test, rank1_wach, CrystChar};
use wachkit::families::{
    class_from_qbar, class_membership, diagonalize_doubled, family_filtered, sample_gammas, symbolic_qf,
    types_for_induced, Class, Family, FamilySpec, TypeVector,
};
use wachkit::filtered::{classify, classify_by_lines, mat_trace, phi_power_f, trace_reducibility, weak_admissible, FiltMod2, Form, Kind};
use wachkit::gamma::{reduce_mod_p, solve_family, verify};
use wachkit::padic::{ppow, PrecisionBudget, Qp};
use wachkit::reduction::{breuil_irreducible, det_reduction, p_adic_sum, reduce_induced, reduce_reducible};
use wachkit::series::{lambda_f, q_series, GammaElement, PiSeries};

const SEED: u64 = 0x5eed_0001;
const RANK1_BUDGET: (u32, usize) = (8, 12);
const RANK1_LIMIT: Duration = Duration::from_secs(5);
const LAMBDA_BUDGET: (u32, usize) = (8, 16);
const TYPES_LIMIT: Duration = Duration::from_secs(10);
const GAMMA_BUDGET: (u32, usize) = (8, 10);
const GAMMA_LIMIT: Duration = Duration::from_secs(60);
const WA_SAMPLES: usize = 500;
const TRICHOTOMY_SAMPLES: usize = 50;
const DET_SAMPLES: usize = 1000;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let r = body()?;
    let el = t.elapsed();
    if let Some(l) = limit {
        check(el <= l, || format!("took {el:?}, limit {l:?}"))?;
    }
    Ok(format!("{r} [{:.2}s]", el.as_secs_f64()))
}

fn c1_rank_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (m, n) = RANK1_BUDGET;
    let mut count = 0;
    for p in [2u32, 3, 5] {
        for f in 1..=3usize {
            let exps: Vec<i64> = (0..f).map(|_| rng.gen_range(0..=p as i64 + 1)).collect();
            let budget = PrecisionBudget::new(p, m, n).unwrap();
            let w = rank1_wach(&CrystChar::trivial_c(p, m, exps.clone()).unwrap(), budget).map_err(|e| e.to_string())?;
            let phi = w.phi_vec();
            for a in [1 + p as i64, (1 + p as i64).pow(2)] {
                let g = GammaElement::from_int(p, a).unwrap();
                let r = w.gamma(&g).map_err(|e| format!("p={p} k={exps:?} a={a}: {e}"))?;
                for s in 0..f {
                    let lhs = phi.comps[s].mul(&r.g.comps[(s + 1) % f].frobenius());
                    let rhs = r.g.comps[s].mul(&phi.comps[s].gamma_act(&g));
                    let o = lhs.sub(&rhs).order_mod(m as i64);
                    check(o >= n, || format!("p={p} k={exps:?} a={a} slot {s}: residual order {o}"))?;
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} modules, residual 0 mod (p^{m}, π^{n})"))
}

/// Linear coefficient of `prod_{n<12} q_{n+1}/p`: each factor contributes `p^n (p-1)/2`.
fn lambda_linear_oracle(p: u32, factors: u32) -> BigInt {
    (0..factors).map(|n| ppow(p, n) * BigInt::from((p - 1) / 2)).sum()
}

fn c2_lambda() -> Outcome {
    let (m, n) = LAMBDA_BUDGET;
    for p in [2u32, 3, 5] {
        for f in 1..=3usize {
            let l = lambda_f(p, f, n, m as i64 + 8);
            check(l.coeff(0).eq_at(&Qp::one(p, m as i64)), || format!("λ_{f}(0) ≠ 1 for p={p}"))?;
            let inv_p = Qp::from_ratio(p, 1, p, m as i64 + 20);
            let qp = q_series(p, n, m as i64 + 20).scale(&inv_p);
            let lhs = l.frobenius_pow(f).mul(&qp);
            let o = lhs.sub(&l).order_mod(m as i64);
            check(o >= n, || format!("φ^{f}(λ)·q/p ≠ λ for p={p}: order {o}"))?;
        }
    }
    let p = 3;
    let oracle = lambda_linear_oracle(p, 12);
    let modulus = ppow(p, 10);
    let got = lambda_f(p, 1, 20, 10).coeff(1).clone();
    let want = Qp::from_int(p, oracle.clone(), 10);
    check(got.eq_at(&want), || format!("λ_1 π-coefficient {got} vs oracle {oracle}"))?;
    let half = Qp::from_ratio(p, -1, 2, 10);
    check(got.eq_at(&half), || "λ_1 π-coefficient is not -1/2".into())?;
    check((&oracle * 2 + 1) % &modulus == BigInt::from(0), || "oracle is not -1/2 mod 3^10".into())?;
    Ok(format!("p∈{{2,3,5}}, f≤3 at (p^{m}, π^{n}); λ_1 coefficient = -1/2"))
}

fn c3_types() -> Outcome {
    let mut n = 0;
    for f in 1..=5usize {
        let ones = vec![1i64; f];
        for tv in TypeVector::all(f) {
            let a = class_membership(&tv);
            let b = class_from_qbar(&tv);
            check(a == b, || format!("{tv}: recursive {a:?} vs Q̄ {b:?}"))?;
            for p in [2u32, 3] {
                let (_, scalar) = symbolic_qf(p, &tv, &ones, &ones, 0).map_err(|e| e.to_string())?;
                check(scalar == a.is_ordinary(), || format!("{tv}: scalar trace {scalar}, class {a:?}"))?;
            }
            n += 1;
        }
    }
    Ok(format!("{n} type vectors agree"))
}

fn bracket_vectors(k: &[i64]) -> Vec<Vec<i64>> {
    let f = k.len();
    let mut out = vec![vec![0i64; 2 * f]];
    for i in 0..f {
        if k[i] == 0 {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|l| {
                let mut a = l.clone();
                a[i] = k[i];
                let mut b = l;
                b[i + f] = k[i];
                [a, b]
            })
            .collect();
    }
    out
}

fn weight_grid(f: usize, max: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..f {
        out = out.into_iter().flat_map(|v: Vec<i64>| (0..=max).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&k| k > 0));
    out
}

fn c4_round_trip() -> Outcome {
    let p = 3;
    let mut n = 0;
    for f in 1..=3 {
        for k in weight_grid(f, 3) {
            for l in bracket_vectors(&k) {
                let tv = types_for_induced(&l).map_err(|e| e.to_string())?.normalized;
                let d = diagonalize_doubled(p, &tv, &k).map_err(|e| format!("{l:?}: {e}"))?;
                check(induced_iso_test(&d.ell_out, &l).unwrap(), || format!("{l:?} -> {tv} -> {:?}", d.ell_out))?;
                let s: i64 = k.iter().sum();
                check(d.nm_lambda_val == s && d.nm_mu_val == s, || format!("{l:?}: norms"))?;
                n += 1;
            }
        }
    }
    let examples: [(&[i64], &str); 4] =
        [(&[2, 1, 0, 0], "1,2"), (&[0, 1, 2, 0], "1,4"), (&[1, 2, 0, 0, 0, 3], "1,2,1"), (&[1, 2, 3, 0, 0, 0], "1,1,2")];
    for (l, want) in examples {
        let got = types_for_induced(l).unwrap().normalized.to_string();
        check(got == want, || format!("{l:?}: {got} vs {want}"))?;
    }
    Ok(format!("{n} ℓ-vectors round-trip; fixed recipes reproduced"))
}

fn c5_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for _ in 0..10 {
        let p = [3u32, 5, 7][rng.gen_range(0..3)];
        let k0 = rng.gen_range(1..=p as i64);
        let k1 = rng.gen_range(1..=p as i64);
        let n = (p as i128).pow(4) - 1;
        let pi = p as i128;
        for (l, beta) in [
            (vec![k0, k1, 0, 0], -(k0 as i128 + pi * k1 as i128)),
            (vec![0, k1, k0, 0], -(pi * k1 as i128 + pi * pi * k0 as i128)),
        ] {
            let r = reduce_induced(&l, p, 2).map_err(|e| e.to_string())?;
            check(r.exps[0] == beta.rem_euclid(n), || format!("p={p} {l:?}: {} vs {}", r.exps[0], beta.rem_euclid(n)))?;
            check(r.exps[1] == (beta * pi * pi).rem_euclid(n), || format!("p={p} {l:?}: conjugate exponent"))?;
            let indep = beta.rem_euclid(pi * pi + 1) != 0;
            check(r.irreducible == indep && breuil_irreducible(beta, p, 2).unwrap() == indep, || format!("p={p} {l:?}: flag"))?;
        }
    }
    Ok("10 random (p, k_0, k_1), cases (i) and (iii)".into())
}

fn c6_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    for _ in 0..DET_SAMPLES {
        let p = [2u32, 3, 5, 7][rng.gen_range(0..4)];
        let f = rng.gen_range(1..=3usize);
        let k: Vec<i64> = loop {
            let k: Vec<i64> = (0..f).map(|_| rng.gen_range(0..=6)).collect();
            if k.iter().any(|&x| x > 0) {
                break k;
            }
        };
        let n = (p as i128).pow(f as u32) - 1;
        let det = det_reduction(&k, p, f).unwrap().exp;
        check(det == (-p_adic_sum(p, &k).unwrap()).rem_euclid(n), || "det exponent".into())?;
        let mut l = vec![0i64; 2 * f];
        for i in 0..f {
            l[if rng.gen_bool(0.5) { i } else { i + f }] = k[i];
        }
        let r = reduce_induced(&l, p, f).unwrap();
        check(r.beta_raw[0].rem_euclid(n) == det, || format!("induced {l:?}"))?;
        let xs: Vec<bool> = (0..f).map(|_| rng.gen_bool(0.5)).collect();
        let r = reduce_reducible(p, &k, &xs).unwrap();
        check((r.beta_raw[0] + r.beta_raw[1]).rem_euclid(n) == det, || format!("reducible {k:?} {xs:?}"))?;
    }
    Ok(format!("{DET_SAMPLES} samples"))
}

fn c7_counting() -> Outcome {
    let mut n = 0;
    for f in 1..=3 {
        for k in weight_grid(f, 2) {
            let fplus = k.iter().filter(|&&x| x > 0).count();
            let classes = enumerate_induced_classes(&k).map_err(|e| e.to_string())?;
            check(classes.len() == 1 << (fplus - 1), || format!("{k:?}: {} classes", classes.len()))?;
            for (i, a) in classes.iter().enumerate() {
                for b in &classes[i + 1..] {
                    check(!induced_iso_test(a, b).unwrap(), || format!("{a:?} ≅ {b:?}"))?;
                }
            }
            n += 1;
        }
    }
    check(enumerate_induced_classes(&[2, 1]).unwrap().len() == 2, || "f=2".into())?;
    check(enumerate_induced_classes(&[1, 1, 1]).unwrap().len() == 4, || "f=3".into())?;
    Ok(format!("{n} weight patterns"))
}

fn unit_or_scaled(rng: &mut ChaCha8Rng, p: u32, v: u32, prec: i64) -> Qp {
    let u = loop {
        let u = rng.gen_range(-40i64..=40);
        if u.rem_euclid(p as i64) != 0 {
            break u;
        }
    };
    Qp::from_int(p, BigInt::from(u) * ppow(p, v), prec)
}

fn c8_weak_admissibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let prec = 60;
    let (mut tested, mut admissible) = (0, 0);
    while tested < WA_SAMPLES {
        let p = [2u32, 3, 5][rng.gen_range(0..3)];
        let f = rng.gen_range(1..=3usize);
        let k: Vec<i64> = (0..f).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = k.iter().sum();
        let va: Vec<u32> = (0..f).map(|_| rng.gen_range(0..=total.max(0) as u32)).collect();
        let sa: i64 = va.iter().map(|&x| x as i64).sum();
        let mut vd: Vec<u32> = vec![0; f];
        let want_d = if rng.gen_bool(0.7) { (total - sa).max(0) } else { rng.gen_range(0..=total + 1) };
        vd[rng.gen_range(0..f)] = want_d as u32;
        let alpha: Vec<Qp> = va.iter().map(|&v| unit_or_scaled(&mut rng, p, v, prec)).collect();
        let delta: Vec<Qp> = vd.iter().map(|&v| unit_or_scaled(&mut rng, p, v, prec)).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..f {
            let (a, b) = match rng.gen_range(0..3) {
                0 => (Qp::zero(p, prec), Qp::one(p, prec)),
                1 => (Qp::one(p, prec), Qp::zero(p, prec)),
                _ => {
                    let v = rng.gen_range(0..2);
                    (unit_or_scaled(&mut rng, p, 0, prec), unit_or_scaled(&mut rng, p, v, prec))
                }
            };
            x.push(a);
            y.push(b);
        }
        let z = vec![Qp::zero(p, prec); f];
        let d = FiltMod2::new(p, k, [[alpha, z.clone()], [z, delta]], x, y, Form::Standard).map_err(|e| e.to_string())?;
        let lines = classify_by_lines(&d).map_err(|e| e.to_string())?;
        if lines.f_scalar {
            continue;
        }
        let closed = weak_admissible(&d).map_err(|e| e.to_string())?;
        check(closed == lines.admissible, || format!("closed {closed} vs lines {}: {d:?}", lines.admissible))?;
        if closed {
            admissible += 1;
            let v = classify(&d).map_err(|e| e.to_string())?;
            check(v.kind == lines.kind, || format!("kind {:?} vs {:?}", v.kind, lines.kind))?;
        }
        tested += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 80);
    let tv: TypeVector = "1,3".parse().unwrap();
    let mut shapes = [0usize; 3];
    let mut sampled = 0;
    while sampled < TRICHOTOMY_SAMPLES {
        let p = [3u32, 5][rng.gen_range(0..2)];
        let k = vec![rng.gen_range(1..=4i64), rng.gen_range(1..=4i64)];
        let pick = rng.gen_range(0..4);
        let v0 = rng.gen_range(1..3);
        let a0 = if pick & 1 == 1 { unit_or_scaled(&mut rng, p, v0, prec) } else { Qp::zero(p, prec) };
        let v1 = rng.gen_range(1..3);
        let a1 = if pick & 2 == 2 { unit_or_scaled(&mut rng, p, v1, prec) } else { Qp::zero(p, prec) };
        let d = family_filtered(p, &tv, &k, &[1, 1], &[a0.clone(), a1.clone()]).map_err(|e| e.to_string())?;
        let phi = &phi_power_f(&d)[0];
        let tr = mat_trace(phi);
        let disc = tr.mul(&tr).sub(&Qp::from_int(p, ppow(p, (k[0] + k[1]) as u32) * 4, prec));
        if disc.is_zero() {
            continue;
        }
        let v = classify(&d).map_err(|e| format!("{e} at α=({a0},{a1})"))?;
        let want = match (a0.is_zero(), a1.is_zero()) {
            (true, true) => Kind::SplitReducible,
            (false, false) => Kind::Irreducible,
            _ => Kind::NonSplitReducible,
        };
        check(v.kind == Some(want), || format!("k={k:?} α=({a0},{a1}): {:?} vs {want:?}", v.kind))?;
        shapes[match want {
            Kind::SplitReducible => 0,
            Kind::NonSplitReducible => 1,
            Kind::Irreducible => 2,
        }] += 1;
        sampled += 1;
    }
    Ok(format!("{tested} modules ({admissible} admissible); (1,3) trichotomy {shapes:?} split/non-split/irreducible"))
}

fn c9_gamma_solver() -> Outcome {
    let p = 3;
    let (m, n) = GAMMA_BUDGET;
    let g1 = GammaElement::from_int(p, 4).unwrap();
    let g2 = GammaElement::teichmuller(p, 2 * m as i64 + 80);
    let g12 = g1.compose(&g2);
    let gammas = [g1, g2, g12];
    let mut runs = 0;
    for k in [vec![1i64, 1], vec![2, 1]] {
        let l = vec![k[0], k[1], 0, 0];
        let tv = types_for_induced(&l).unwrap().normalized;
        let mut at_zero = None;
        for a in [(0i64, 0i64), (3, 0), (3, 3)] {
            let budget = PrecisionBudget::new(p, m, n).unwrap();
            let spec = FamilySpec::new(budget, k.clone(), tv.clone(), None, Some(vec![BigInt::from(a.0), BigInt::from(a.1)]), None)
                .map_err(|e| e.to_string())?;
            spec.validate().map_err(|e| e.to_string())?;
            let sol = solve_family(&spec, &gammas).map_err(|e| format!("k={k:?} a={a:?}: {e}"))?;
            let r = verify(&sol.family.pi, &sol.gammas[0], &sol.gammas[1], &sol.gammas[2], m as i64, n);
            check(r.passes, || format!("k={k:?} a={a:?}: {r:?}"))?;
            let red: Vec<_> = sol.gammas.iter().map(reduce_mod_p).collect();
            match &at_zero {
                None => at_zero = Some(red),
                Some(z) => check(z == &red, || format!("k={k:?} a={a:?}: G mod 3 differs from a=0"))?,
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} families, commutation and cocycle 0 mod (3^{m}, π^{n}); mod-3 specializations agree"))
}

fn z_contract(spec: &FamilySpec) -> Result<(), String> {
    let fam = Family::build(spec, &sample_gammas(spec.p, spec.budget.m as i64 + 80)).map_err(|e| e.to_string())?;
    let p = spec.p;
    let m = spec.budget.m as i64;
    let n = spec.budget.n;
    let z0 = if spec.all_weights_p() && spec.ell == p as i64 { BigInt::from(1) } else { ppow(p, ((spec.ell - 1) / (p as i64 - 1)) as u32) };
    for (i, z) in fam.z.iter().enumerate() {
        check(z.len() as i64 <= spec.ell, || format!("z_{i} degree"))?;
        check((&z[0] - &z0) % ppow(p, m as u32) == BigInt::from(0), || format!("z_{i}(0) = {} vs {z0}", z[0]))?;
        let zs = PiSeries::from_ints(p, z, n, fam.work);
        for g in [GammaElement::from_int(p, 1 + p as i64).unwrap(), GammaElement::from_int(p, (1 + p as i64).pow(2)).unwrap()] {
            let b = &fam.b[i];
            let r = zs.sub(&zs.gamma_act(&g).mul(&b.div(&b.gamma_act(&g)).unwrap()));
            check(r.order_mod(m) as i64 >= spec.ell.min(n as i64), || format!("z_{i} congruence for a={}", g.a))?;
        }
    }
    Ok(())
}

fn c10_z_contract() -> Outcome {
    let cases: [(u32, Vec<i64>, &str); 6] = [
        (3, vec![1, 1], "1,2"),
        (3, vec![2, 1], "1,2"),
        (3, vec![2, 1], "1,4"),
        (3, vec![3, 3], "1,2"),
        (3, vec![4, 1], "1,2"),
        (5, vec![2, 3, 1], "1,1,2"),
    ];
    for (p, k, tv) in &cases {
        let budget = PrecisionBudget::new(*p, 8, 10).unwrap();
        let spec = FamilySpec::new(budget, k.clone(), tv.parse().unwrap(), None, None, None).map_err(|e| e.to_string())?;
        z_contract(&spec).map_err(|e| format!("p={p} k={k:?} tv={tv}: {e}"))?;
    }
    Ok(format!("{} families incl. all k_i = p and k ≥ p", cases.len()))
}

fn c11_trace() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let mut n = 0;
    for f in 1..=4usize {
        for tv in TypeVector::all(f) {
            if !class_membership(&tv).is_ordinary() {
                continue;
            }
            for p in [2u32, 3] {
                let k: Vec<i64> = loop {
                    let k: Vec<i64> = (0..f).map(|_| rng.gen_range(0..=3)).collect();
                    if k.iter().any(|&x| x > 0) {
                        break k;
                    }
                };
                let zeros = vec![Qp::zero(p, 40); f];
                let d = family_filtered(p, &tv, &k, &vec![1; f], &zeros).map_err(|e| e.to_string())?;
                let tr = mat_trace(&phi_power_f(&d)[0]);
                check(tr.val() == Some(0), || format!("{tv} k={k:?}: v(Tr) = {:?}", tr.val()))?;
                check(trace_reducibility(&d).map_err(|e| e.to_string())?, || format!("{tv} k={k:?}"))?;
                n += 1;
            }
        }
    }
    let c = class_membership(&"3,3".parse().unwrap());
    check(c == Class::C1, || "(3,3)".into())?;
    Ok(format!("{n} ordinary instances"))
}

fn main() {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("rank-one commutation", Box::new(|| timed(Some(RANK1_LIMIT), c1_rank_one))),
        ("λ-ring identities", Box::new(|| timed(None, c2_lambda))),
        ("type machinery cross-validation", Box::new(|| timed(Some(TYPES_LIMIT), c3_types))),
        ("induced identification round trip", Box::new(|| timed(None, c4_round_trip))),
        ("reduction formulas", Box::new(|| timed(None, c5_reductions))),
        ("determinant consistency", Box::new(|| timed(None, c6_determinant))),
        ("class counting", Box::new(|| timed(None, c7_counting))),
        ("weak-admissibility oracle", Box::new(|| timed(None, c8_weak_admissibility))),
        ("Γ-solver end to end", Box::new(|| timed(Some(GAMMA_LIMIT), c9_gamma_solver))),
        ("z-polynomial contract", Box::new(|| timed(None, c10_z_contract))),
        ("trace heuristic", Box::new(|| timed(None, c11_trace))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
            Ok(Ok(msg)) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Ok(Err(msg)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {:>2} {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
