//! Γ-action on rank-two family Wach modules.
//!
//! For each `γ` we look for `G_γ ≡ Id mod π` with `Π_s φ(G_{s+1}) = G_s γ(Π_s)`
//! in every slot. The diagonal approximation is exact up to `π^ℓ`; each
//! refinement step fixes one more π-coefficient by solving a linear equation
//! on constant 2×2 matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{sample_gammas, smat_map, smat_mul, smat_order, smat_precision_limited, smat_sub, Family, FamilySpec, PiMatrix, SMat};
use crate::filtered::{mat_det, mat_mul, QMat};
use crate::padic::Qp;
use num_bigint::BigInt;
use crate::series::{GammaElement, PiSeries};

#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub gamma: GammaElement,
    pub slots: Vec<SMat>,
    /// The commutation residual vanishes mod `(p^M, π^order)`.
    pub order: usize,
}

fn qzero(p: u32, prec: i64) -> QMat {
    [[Qp::zero(p, prec), Qp::zero(p, prec)], [Qp::zero(p, prec), Qp::zero(p, prec)]]
}

fn qid(p: u32, prec: i64) -> QMat {
    [[Qp::one(p, prec), Qp::zero(p, prec)], [Qp::zero(p, prec), Qp::one(p, prec)]]
}

fn qadd(a: &QMat, b: &QMat) -> QMat {
    let e = |i: usize, j: usize| a[i][j].add(&b[i][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn qis_zero(a: &QMat) -> bool {
    a.iter().flatten().all(Qp::is_zero)
}

/// `p^e · P^{-1}` through the adjugate.
fn scaled_inverse(a: &QMat, e: i64) -> Result<QMat> {
    let d = mat_det(a);
    let s = Qp::one(a[0][0].p(), a[0][0].prec() + e.max(0) + 64).shift(e).div(&d)?;
    let adj = [[a[1][1].clone(), a[0][1].neg()], [a[1][0].neg(), a[0][0].clone()]];
    let e = |i: usize, j: usize| adj[i][j].mul(&s);
    Ok([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
}

fn min_val(a: &QMat) -> Option<i64> {
    a.iter().flatten().filter_map(Qp::val).min()
}

/// Solve `H - Q H V = A` for a constant 2×2 `H`.
///
/// When `Q ⊗ V` is topologically nilpotent the Neumann series is summed;
/// otherwise the 4×4 system is eliminated directly.
pub fn solve_linear(q: &QMat, v: &QMat, a: &QMat) -> Result<QMat> {
    let p = a[0][0].p();
    if qis_zero(a) {
        return Ok(a.clone());
    }
    let contracting = match (min_val(q), min_val(v)) {
        (_, None) | (None, _) => true,
        (Some(x), Some(y)) => x + y >= 1,
    };
    if contracting {
        let cap = a.iter().flatten().map(Qp::prec).max().unwrap();
        let mut h = a.clone();
        let mut term = a.clone();
        for _ in 0..100_000 {
            term = mat_mul(&mat_mul(q, &term), v).map(|r| r.map(|x| x.cap(cap)));
            if qis_zero(&term) {
                return Ok(h);
            }
            h = qadd(&h, &term);
        }
        return Err(Error::PrecisionLoss("Neumann series failed to terminate".into()));
    }
    // L[(i,j),(k,l)] = δ_ik δ_jl - Q_ik V_lj
    let prec = a.iter().flatten().map(Qp::prec).max().unwrap();
    let mut m: Vec<Vec<Qp>> = (0..4)
        .map(|r| {
            let (i, j) = (r / 2, r % 2);
            let mut row: Vec<Qp> = (0..4)
                .map(|c| {
                    let (k, l) = (c / 2, c % 2);
                    let delta = if i == k && j == l { Qp::one(p, prec) } else { Qp::zero(p, prec) };
                    delta.sub(&q[i][k].mul(&v[l][j]))
                })
                .collect();
            row.push(a[i][j].clone());
            row
        })
        .collect();
    for col in 0..4 {
        let piv = (col..4)
            .filter(|&r| !m[r][col].is_zero())
            .min_by_key(|&r| m[r][col].val().unwrap())
            .ok_or_else(|| Error::NotSurjective("the operator H - Q_f H V is singular".into()))?;
        m.swap(col, piv);
        let inv = m[col][col].inv()?;
        for c in col..5 {
            m[col][c] = m[col][c].mul(&inv);
        }
        for r in 0..4 {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..5 {
                    let t = m[col][c].mul(&factor);
                    m[r][c] = m[r][c].sub(&t);
                }
            }
        }
    }
    let h = [[m[0][4].clone(), m[1][4].clone()], [m[2][4].clone(), m[3][4].clone()]];
    if h.iter().flatten().any(|x| x.val().is_some_and(|v| v < 0)) {
        return Err(Error::NotSurjective("the solution is not integral".into()));
    }
    Ok(h)
}

/// `H - Q_f H (p^{f(s-1)} Q_f^{-1}) = target`.
pub fn solve_operator(qf: &QMat, target: &QMat, s: usize, f: usize) -> Result<QMat> {
    let v = scaled_inverse(qf, (f * (s - 1)) as i64)?;
    solve_linear(qf, &v, target)
}

/// Slot `s`: `Π_s φ(G_{s+1}) - G_s γ(Π_s)`.
pub fn commutation_residual(pi: &PiMatrix, gpi: &[SMat], g: &[SMat]) -> Vec<SMat> {
    let f = pi.f();
    (0..f)
        .map(|s| {
            let lhs = smat_mul(&pi.slots[s], &smat_map(&g[(s + 1) % f], PiSeries::frobenius));
            smat_sub(&lhs, &smat_mul(&g[s], &gpi[s]))
        })
        .collect()
}

fn gamma_pi(pi: &PiMatrix, g: &GammaElement) -> Vec<SMat> {
    pi.slots.iter().map(|m| smat_map(m, |x| x.gamma_act(g))).collect()
}

/// `diag(A_s/γA_s, B_s/γB_s)`.
pub fn initial_g(fam: &Family, g: &GammaElement) -> Result<Vec<SMat>> {
    let p = fam.spec.p;
    let n = fam.spec.budget.n;
    fam.gen
        .iter()
        .map(|[a, b]| {
            let x = a.div(&a.gamma_act(g))?;
            let y = b.div(&b.gamma_act(g))?;
            let z = PiSeries::zero(p, n, fam.work);
            Ok([[x, z.clone()], [z, y]])
        })
        .collect()
}

fn coeff_mat(m: &SMat, i: usize) -> QMat {
    let e = |r: usize, c: usize| m[r][c].coeff(i).clone();
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn add_at(m: &SMat, i: usize, h: &QMat) -> SMat {
    let e = |r: usize, c: usize| {
        let mut coeffs = m[r][c].coeffs().to_vec();
        coeffs[i] = coeffs[i].add(&h[r][c]);
        PiSeries::from_coeffs(m[r][c].p(), coeffs)
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn residual_order(r: &[SMat], m: i64) -> (usize, bool) {
    let o = r.iter().map(|x| smat_order(x, m)).min().unwrap();
    let limited = r.iter().any(|x| smat_precision_limited(x, m));
    (o, limited)
}

/// Fix the `π^{s-1}` coefficient so the residual vanishes mod `π^s`.
pub fn refine_g(pi: &PiMatrix, gpi: &[SMat], g: &[SMat], s: usize, m: i64) -> Result<Vec<SMat>> {
    let f = pi.f();
    let p = pi.p;
    let r = commutation_residual(pi, gpi, g);
    let (o, limited) = residual_order(&r, m);
    if o < s - 1 {
        return Err(if limited { Error::PrecisionLoss(format!("residual below π^{}", s - 1)) } else { Error::StalledResidual(o) });
    }
    let c: Vec<QMat> = r.iter().map(|x| coeff_mat(x, s - 1)).collect();
    if c.iter().all(qis_zero) {
        return Ok(g.to_vec());
    }
    let pm: Vec<QMat> = (0..f).map(|i| pi.mod_pi(i)).collect();
    let mut t = Vec::with_capacity(f);
    let mut w = Vec::with_capacity(f);
    for i in 0..f {
        t.push(mat_mul(&c[i], &scaled_inverse(&pm[i], 0)?));
        w.push(scaled_inverse(&pm[i], s as i64 - 1)?);
    }
    let prec = g[0][0][0].max_prec();
    let mut a = qzero(p, prec);
    let mut left = qid(p, prec);
    let mut right = qid(p, prec);
    for j in 0..f {
        a = qadd(&a, &mat_mul(&mat_mul(&left, &t[j]), &right));
        left = mat_mul(&left, &pm[j]);
        right = mat_mul(&w[j], &right);
    }
    let mut h = vec![qzero(p, prec); f];
    h[0] = solve_linear(&left, &right, &a)?;
    for i in (1..f).rev() {
        let next = &h[(i + 1) % f];
        h[i] = qadd(&t[i], &mat_mul(&mat_mul(&pm[i], next), &w[i]));
    }
    Ok(g.iter().zip(&h).map(|(gs, hs)| add_at(gs, s - 1, hs)).collect())
}

/// Run the refinement from the diagonal approximation to π-order `N`.
pub fn solve_gamma_in(fam: &Family, g: &GammaElement) -> Result<GammaMatrix> {
    let m = fam.spec.budget.m as i64;
    let n = fam.spec.budget.n;
    let ell = (fam.spec.ell as usize).min(n);
    let gpi = gamma_pi(&fam.pi, g);
    let mut cur = initial_g(fam, g)?;
    let (o, limited) = residual_order(&commutation_residual(&fam.pi, &gpi, &cur), m);
    if o < ell {
        return Err(if limited {
            Error::PrecisionLoss("initial residual".into())
        } else {
            Error::PropertyFailed(format!("initial residual has π-order {o} < ℓ = {ell}"))
        });
    }
    for s in (ell + 1)..=n {
        cur = refine_g(&fam.pi, &gpi, &cur, s, m)?;
    }
    let (order, limited) = residual_order(&commutation_residual(&fam.pi, &gpi, &cur), m);
    if order < n {
        return Err(if limited { Error::PrecisionLoss("final residual".into()) } else { Error::StalledResidual(order) });
    }
    for gs in &cur {
        if gs.iter().flatten().any(|x| x.min_prec() < m) {
            return Err(Error::PrecisionLoss("G known below p^M".into()));
        }
        let id = qid(fam.spec.p, m);
        let c0 = coeff_mat(gs, 0);
        if !c0.iter().flatten().zip(id.iter().flatten()).all(|(a, b)| a.eq_at(b)) {
            return Err(Error::VerificationFailed("G is not the identity mod π".into()));
        }
    }
    Ok(GammaMatrix { gamma: g.clone(), slots: cur, order })
}

/// A family together with `G_γ` for each requested `γ`.
#[derive(Debug, Clone)]
pub struct FamilySolution {
    pub family: Family,
    pub gammas: Vec<GammaMatrix>,
}

/// Build the family and solve for every `γ`, doubling the guard digits on precision loss.
pub fn solve_family(spec: &FamilySpec, gammas: &[GammaElement]) -> Result<FamilySolution> {
    let mut guard = crate::families::initial_guard(spec);
    for _ in 0..4 {
        let work = spec.budget.m as i64 + guard;
        let attempt = (|| {
            let fam = Family::build_at(spec, work, &sample_gammas(spec.p, work))?;
            let gs = gammas.iter().map(|g| solve_gamma_in(&fam, g)).collect::<Result<Vec<_>>>()?;
            Ok(FamilySolution { family: fam, gammas: gs })
        })();
        match attempt {
            Err(Error::PrecisionLoss(_)) => guard *= 2,
            r => return r,
        }
    }
    Err(Error::PrecisionLoss(format!("Γ-solver needs more than {guard} guard digits")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualOrders {
    pub commutation: Vec<usize>,
    pub cocycle: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub residual_orders: ResidualOrders,
    pub target: usize,
    pub passes: bool,
}

/// Commutation for each of `G_1, G_2, G_12` and the cocycle `G_12 = G_1 γ_1(G_2)`.
pub fn verify(pi: &PiMatrix, g1: &GammaMatrix, g2: &GammaMatrix, g12: &GammaMatrix, m: i64, n: usize) -> VerifyReport {
    let commutation: Vec<usize> = [g1, g2, g12]
        .iter()
        .map(|gm| residual_order(&commutation_residual(pi, &gamma_pi(pi, &gm.gamma), &gm.slots), m).0)
        .collect();
    let cocycle = (0..pi.f())
        .map(|s| {
            let rhs = smat_mul(&g1.slots[s], &smat_map(&g2.slots[s], |x| x.gamma_act(&g1.gamma)));
            smat_order(&smat_sub(&g12.slots[s], &rhs), m)
        })
        .min()
        .unwrap();
    let passes = commutation.iter().all(|&o| o >= n) && cocycle >= n;
    VerifyReport { residual_orders: ResidualOrders { commutation, cocycle }, target: n, passes }
}

/// Residues mod `p` of every coefficient, slot by slot; `None` where unknown.
pub fn reduce_mod_p(g: &GammaMatrix) -> Vec<Vec<Option<BigInt>>> {
    g.slots
        .iter()
        .map(|m| m.iter().flatten().flat_map(|s| s.coeffs().iter().map(|c| c.residue(1))).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveGammaJson {
    pub gamma: String,
    pub order: usize,
    pub residual_orders: ResidualOrders,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[[String; 2]; 2]>>,
}

/// Render `G` slot by slot in canonical series text mod `p^M`.
pub fn render_matrix(g: &GammaMatrix, m: u32) -> Result<Vec<[[String; 2]; 2]>> {
    g.slots
        .iter()
        .map(|s| {
            let t = |r: usize, c: usize| s[r][c].cap(m as i64).to_text(m);
            Ok([[t(0, 0)?, t(0, 1)?], [t(1, 0)?, t(1, 1)?]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::TypeVector;
    use crate::padic::PrecisionBudget;

    fn q(p: u32, n: i64) -> Qp {
        Qp::from_int(p, n, 40)
    }

    #[test]
    fn linear_solver_trivial_cases() {
        let p = 3;
        let id = [[q(p, 1), q(p, 0)], [q(p, 0), q(p, 1)]];
        let zero = [[q(p, 0), q(p, 0)], [q(p, 0), q(p, 0)]];
        assert!(qis_zero(&solve_linear(&id, &id, &zero).unwrap()));
        let a = [[q(p, 5), q(p, 1)], [q(p, 2), q(p, 7)]];
        let v0 = [[q(p, 0), q(p, 0)], [q(p, 0), q(p, 0)]];
        let h = solve_linear(&id, &v0, &a).unwrap();
        assert_eq!(h, a);
    }

    #[test]
    fn linear_solver_elimination_matches_definition() {
        let p = 3;
        let qm = [[q(p, 2), q(p, 1)], [q(p, 1), q(p, 1)]];
        let v = [[q(p, 1), q(p, 0)], [q(p, 1), q(p, 2)]];
        let a = [[q(p, 4), q(p, -2)], [q(p, 1), q(p, 3)]];
        let h = solve_linear(&qm, &v, &a).unwrap();
        let back = crate::filtered::mat_mul(&crate::filtered::mat_mul(&qm, &h), &v);
        for i in 0..2 {
            for j in 0..2 {
                assert!(h[i][j].sub(&back[i][j]).eq_at(&a[i][j]));
            }
        }
    }

    #[test]
    fn family_solves_to_budget() {
        let budget = PrecisionBudget::new(3, 6, 8).unwrap();
        let tv: TypeVector = "1,2".parse().unwrap();
        let spec = FamilySpec::new(budget, vec![1, 1], tv, None, Some(vec![BigInt::from(3), BigInt::from(0)]), None).unwrap();
        let g1 = GammaElement::from_int(3, 4).unwrap();
        let g2 = GammaElement::from_int(3, 16).unwrap();
        let g12 = g1.compose(&g2);
        let sol = solve_family(&spec, &[g1, g2, g12]).unwrap();
        let r = verify(&sol.family.pi, &sol.gammas[0], &sol.gammas[1], &sol.gammas[2], 6, 8);
        assert!(r.passes, "{r:?}");
    }
}
