//! Crystalline characters of `G_{K_f}` as bookkeeping objects, their
//! rank-one Wach modules, and induction data for characters of `G_{K_{2f}}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{PadicScalar, PrecisionBudget, Qp, Valuation};
use crate::series::{lambda_f_gamma, q_series, GammaElement, PiSeries, TauSeries};

/// `eta_c * chi_0^{k_1} * chi_1^{k_2} * ... * chi_{f-1}^{k_0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrystChar {
    pub level: usize,
    pub c: PadicScalar,
    pub exps: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrystCharJson {
    pub level: usize,
    pub c: String,
    pub exps: Vec<i64>,
}

impl CrystChar {
    pub fn new(c: PadicScalar, exps: Vec<i64>) -> Result<Self> {
        if exps.is_empty() {
            return Err(Error::Invalid("empty exponent vector".into()));
        }
        if c.val() != Valuation::Finite(0) {
            return Err(Error::NotAUnit(c.val().bound()));
        }
        Ok(CrystChar { level: exps.len(), c, exps })
    }

    /// The character with `c = 1` over `Z_p` at precision `m`.
    pub fn trivial_c(p: u32, m: u32, exps: Vec<i64>) -> Result<Self> {
        Self::new(PadicScalar::from_int(p, m, 1, 1)?, exps)
    }

    pub fn to_json(&self) -> CrystCharJson {
        CrystCharJson { level: self.level, c: self.c.to_string(), exps: self.exps.clone() }
    }

    pub fn from_json(j: &CrystCharJson) -> Result<Self> {
        let x = Self::new(PadicScalar::parse(&j.c)?, j.exps.clone())?;
        if x.level != j.level {
            return Err(Error::LevelMismatch(j.level, x.level));
        }
        Ok(x)
    }
}

impl fmt::Display for CrystChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ = η_c")?;
        let n = self.level;
        for i in 0..n {
            write!(f, " · χ_{}^{}", i, self.exps[(i + 1) % n])?;
        }
        write!(f, "  (c = {})", self.c)
    }
}

pub fn char_mul(a: &CrystChar, b: &CrystChar) -> Result<CrystChar> {
    if a.level != b.level {
        return Err(Error::LevelMismatch(a.level, b.level));
    }
    let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
    CrystChar::new(a.c.mul(&b.c), exps)
}

/// Restriction to `G_{K_{df}}`: the exponent vector repeats `d` times.
pub fn char_restrict(x: &CrystChar, d: usize) -> Result<CrystChar> {
    if d == 0 {
        return Err(Error::Invalid("restriction degree must be positive".into()));
    }
    let exps = (0..d).flat_map(|_| x.exps.iter().copied()).collect();
    CrystChar::new(x.c.clone(), exps)
}

/// Cyclic shift of the exponent vector: new `k_j = k_{j+n}`.
pub fn char_conjugate(x: &CrystChar, n: i64) -> CrystChar {
    let l = x.level as i64;
    let exps = (0..l).map(|j| x.exps[(j + n).rem_euclid(l) as usize]).collect();
    CrystChar { level: x.level, c: x.c.clone(), exps }
}

/// Rank-one Wach module with Frobenius `(c q^{k_1}, q^{k_2}, ..., q^{k_0})`.
#[derive(Clone, Debug)]
pub struct WachRank1 {
    pub chi: CrystChar,
    pub budget: PrecisionBudget,
}

/// One certified Γ-action: `g_i` mod `(p^M, pi^N)` and the residual orders.
#[derive(Clone, Debug)]
pub struct Rank1Gamma {
    pub g: TauSeries,
    pub residual_order: usize,
    pub guard: i64,
}

fn rank1_phi_slots(p: u32, exps: &[i64], c: Option<&Qp>, n: usize, prec: i64) -> Vec<PiSeries> {
    let f = exps.len();
    let q = q_series(p, n, prec);
    (0..f)
        .map(|s| {
            let base = q.pow(exps[(s + 1) % f] as u32);
            match (s, c) {
                (0, Some(c)) => base.scale(c),
                _ => base,
            }
        })
        .collect()
}

fn initial_guard(p: u32, n: usize, exps: &[i64]) -> i64 {
    let denom = (n as i64) / (p as i64 - 1) + 1;
    let k: i64 = exps.iter().sum();
    3 * denom + 2 * k + 8
}

impl WachRank1 {
    pub fn phi_vec(&self) -> TauSeries {
        let prec = self.budget.m as i64;
        let c = self.chi.c.to_qp();
        TauSeries::new(rank1_phi_slots(self.budget.p, &self.chi.exps, c.as_ref(), self.budget.n, prec))
    }

    /// The unique `g ≡ 1 mod pi` with `phi_vec * phi(g) = g * gamma(phi_vec)`.
    pub fn gamma(&self, g: &GammaElement) -> Result<Rank1Gamma> {
        let mut guard = initial_guard(self.budget.p, self.budget.n, &self.chi.exps);
        for _ in 0..4 {
            match self.gamma_at(g, guard) {
                Ok(r) => return Ok(r),
                Err(Error::PrecisionLoss(_)) => guard *= 2,
                Err(e) => return Err(e),
            }
        }
        Err(Error::PrecisionLoss(format!("rank-one Γ-action needs more than {guard} guard digits")))
    }

    fn gamma_at(&self, gm: &GammaElement, guard: i64) -> Result<Rank1Gamma> {
        let PrecisionBudget { p, m, n } = self.budget;
        let m = m as i64;
        let w = m + guard;
        let f = self.chi.level;
        let k = &self.chi.exps;
        let c = self.chi.c.to_qp().map(|c| c.cap(w));
        let lg = lambda_f_gamma(p, f, gm, n, w)?;
        // slot f-1 holds the anchor prod_j phi^j(lambda_{f,gamma})^{k_j}
        let mut anchor = PiSeries::one(p, n, w);
        let mut cur = lg.clone();
        for j in 0..f {
            anchor = anchor.mul(&cur.pow(k[j] as u32));
            if j + 1 < f {
                cur = cur.frobenius();
            }
        }
        let q = q_series(p, n, w);
        let ratio = q.div(&q.gamma_act(gm))?;
        let mut g = vec![PiSeries::one(p, n, w); f];
        g[f - 1] = anchor;
        for s in (0..f - 1).rev() {
            g[s] = ratio.pow(k[s + 1] as u32).mul(&g[s + 1].frobenius());
        }
        let phi = rank1_phi_slots(p, k, c.as_ref(), n, w);
        let mut order = n;
        for s in 0..f {
            let lhs = phi[s].mul(&g[(s + 1) % f].frobenius());
            let rhs = g[s].mul(&phi[s].gamma_act(gm));
            let r = lhs.sub(&rhs);
            let o = r.order_mod(m);
            if o < n && r.precision_limited(m) {
                return Err(Error::PrecisionLoss(format!("slot {s} residual at guard {guard}")));
            }
            order = order.min(o);
        }
        if order < n {
            return Err(Error::VerificationFailed(format!(
                "rank-one commutation residual has pi-order {order} < {n}"
            )));
        }
        for (s, gs) in g.iter().enumerate() {
            if gs.coeffs().iter().any(|x| x.prec() < m) {
                return Err(Error::PrecisionLoss(format!("g_{s} known below p^{m}")));
            }
            if !gs.coeff(0).sub(&Qp::one(p, m)).is_zero() {
                return Err(Error::VerificationFailed(format!("g_{s} is not 1 mod pi")));
            }
        }
        let g = TauSeries::new(g.into_iter().map(|s| s.cap(m)).collect());
        Ok(Rank1Gamma { g, residual_order: order, guard })
    }
}

pub fn rank1_wach(x: &CrystChar, budget: PrecisionBudget) -> Result<WachRank1> {
    if x.exps.iter().any(|&k| k < 0) {
        return Err(Error::Invalid("rank-one Wach modules need nonnegative exponents".into()));
    }
    if x.c.p() != budget.p {
        return Err(Error::Invalid("character and budget use different primes".into()));
    }
    Ok(WachRank1 { chi: x.clone(), budget })
}

fn check_bracket(l: &[i64]) -> Result<usize> {
    if l.is_empty() || l.len() % 2 != 0 {
        return Err(Error::MalformedPair(format!("length {} is not 2f", l.len())));
    }
    let f = l.len() / 2;
    for i in 0..f {
        let (a, b) = (l[i], l[i + f]);
        if a < 0 || b < 0 || (a != 0 && b != 0) {
            return Err(Error::MalformedPair(format!("slot {i}: ({a}, {b})")));
        }
    }
    Ok(f)
}

/// Weights `k_i = l_i + l_{i+f}` of a bracket-valid level-`2f` vector.
pub fn bracket_weights(l: &[i64]) -> Result<Vec<i64>> {
    let f = check_bracket(l)?;
    Ok((0..f).map(|i| l[i] + l[i + f]).collect())
}

pub fn shift_by(l: &[i64], n: usize) -> Vec<i64> {
    let len = l.len();
    (0..len).map(|j| l[(j + n) % len]).collect()
}

/// Whether `Ind chi_l` and `Ind chi_m` are isomorphic.
pub fn induced_iso_test(l: &[i64], m: &[i64]) -> Result<bool> {
    let f = check_bracket(l)?;
    check_bracket(m)?;
    if l.len() != m.len() {
        return Ok(false);
    }
    Ok(m == l || m == shift_by(l, f).as_slice())
}

pub fn induced_irreducible(l: &[i64]) -> bool {
    let f = l.len() / 2;
    (0..f).any(|i| l[i] != l[i + f])
}

/// One level-`2f` representative per isomorphism class of irreducible
/// induced representations with the given weights, lexicographically descending.
///
/// The representative has `l_j = k_j` at the first index `j` in the order
/// `1, 2, ..., f-1, 0` with `k_j > 0`.
pub fn enumerate_induced_classes(weights: &[i64]) -> Result<Vec<Vec<i64>>> {
    if weights.iter().any(|&k| k < 0) {
        return Err(Error::Invalid("negative weight".into()));
    }
    let f = weights.len();
    let positive: Vec<usize> = (1..f).chain(std::iter::once(0)).filter(|&i| weights[i] > 0).collect();
    let Some((&anchor, rest)) = positive.split_first() else {
        return Err(Error::AllWeightsZero);
    };
    let mut out = Vec::with_capacity(1 << rest.len());
    for mask in 0..(1u64 << rest.len()) {
        let mut l = vec![0i64; 2 * f];
        l[anchor] = weights[anchor];
        for (b, &i) in rest.iter().enumerate() {
            if mask >> b & 1 == 0 {
                l[i] = weights[i];
            } else {
                l[i + f] = weights[i];
            }
        }
        out.push(l);
    }
    out.sort_by(|a, b| b.cmp(a));
    Ok(out)
}
