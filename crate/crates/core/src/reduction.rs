//! Semisimplified mod-p reductions as exponents of fundamental characters.

use serde::{Deserialize, Serialize};

use crate::characters::bracket_weights;
use crate::error::{Error, Result};

/// Exponent of `omega_{n, tau_0}` at level `n`, reduced mod `p^n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FundCharExp {
    pub level: usize,
    pub exp: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub level: usize,
    /// `[e(beta), e(p^f beta)]` in the induced case, `[e(beta_1), e(beta_2)]` otherwise.
    pub exps: Vec<i128>,
    /// The same pair sorted ascending.
    pub canonical: Vec<i128>,
    /// `beta` (induced) or `beta_1, beta_2` (reducible) before reduction.
    pub beta_raw: Vec<i128>,
    pub irreducible: bool,
}

pub fn group_order(p: u32, n: usize) -> Result<i128> {
    (p as i128)
        .checked_pow(n as u32)
        .map(|x| x - 1)
        .ok_or_else(|| Error::Overflow(format!("{p}^{n}")))
}

fn pow_i(p: u32, i: usize) -> Result<i128> {
    (p as i128).checked_pow(i as u32).ok_or_else(|| Error::Overflow(format!("{p}^{i}")))
}

/// `sum c_i p^i`.
pub fn p_adic_sum(p: u32, c: &[i64]) -> Result<i128> {
    let mut acc: i128 = 0;
    for (i, &x) in c.iter().enumerate() {
        let t = pow_i(p, i)?
            .checked_mul(x as i128)
            .ok_or_else(|| Error::Overflow("exponent sum".into()))?;
        acc = acc.checked_add(t).ok_or_else(|| Error::Overflow("exponent sum".into()))?;
    }
    Ok(acc)
}

fn sorted(mut v: Vec<i128>) -> Vec<i128> {
    v.sort_unstable();
    v
}

/// Reduction of `Ind chi_l` from level `2f`: `{omega^beta, omega^{p^f beta}}`
/// with `beta = -sum_{i<2f} p^i l_i`.
pub fn reduce_induced(l: &[i64], p: u32, f: usize) -> Result<ReductionResult> {
    if l.len() != 2 * f {
        return Err(Error::MalformedEll(format!("expected {} entries, got {}", 2 * f, l.len())));
    }
    bracket_weights(l).map_err(|e| Error::MalformedEll(e.to_string()))?;
    let n = group_order(p, 2 * f)?;
    let beta = -p_adic_sum(p, l)?;
    let pf = pow_i(p, f)?;
    let e1 = beta.rem_euclid(n);
    let e2 = (e1 * pf).rem_euclid(n);
    Ok(ReductionResult {
        level: 2 * f,
        exps: vec![e1, e2],
        canonical: sorted(vec![e1, e2]),
        beta_raw: vec![beta],
        irreducible: beta.rem_euclid(pf + 1) != 0,
    })
}

/// Reduction of a reducible module whose φ-stable line has weights
/// `m_i = 0` if `x_i != 0` else `k_i`.
pub fn reduce_reducible(p: u32, weights: &[i64], x_nonzero: &[bool]) -> Result<ReductionResult> {
    if weights.len() != x_nonzero.len() {
        return Err(Error::Invalid("weights and x have different lengths".into()));
    }
    let f = weights.len();
    let m: Vec<i64> = weights.iter().zip(x_nonzero).map(|(&k, &nz)| if nz { 0 } else { k }).collect();
    reduce_from_sub_weights(p, weights, &m, f)
}

/// Same as [`reduce_reducible`] given the sub-line weights directly.
pub fn reduce_from_sub_weights(p: u32, weights: &[i64], m: &[i64], f: usize) -> Result<ReductionResult> {
    let n = group_order(p, f)?;
    let b1 = -p_adic_sum(p, m)?;
    let diff: Vec<i64> = m.iter().zip(weights).map(|(a, k)| a - k).collect();
    let b2 = p_adic_sum(p, &diff)?;
    let e1 = b1.rem_euclid(n);
    let e2 = b2.rem_euclid(n);
    Ok(ReductionResult {
        level: f,
        exps: vec![e1, e2],
        canonical: sorted(vec![e1, e2]),
        beta_raw: vec![b1, b2],
        irreducible: false,
    })
}

/// Reduction of the split sum `chi_l ⊕ chi_l'` at level `f`.
pub fn reduce_split(p: u32, l: &[i64], lp: &[i64]) -> Result<ReductionResult> {
    if l.len() != lp.len() {
        return Err(Error::MalformedEll("split pair of unequal lengths".into()));
    }
    let f = l.len();
    let n = group_order(p, f)?;
    let b1 = -p_adic_sum(p, l)?;
    let b2 = -p_adic_sum(p, lp)?;
    let e1 = b1.rem_euclid(n);
    let e2 = b2.rem_euclid(n);
    Ok(ReductionResult {
        level: f,
        exps: vec![e1, e2],
        canonical: sorted(vec![e1, e2]),
        beta_raw: vec![b1, b2],
        irreducible: false,
    })
}

/// Exponent of the determinant's reduction: `-sum p^i k_i mod p^f - 1`.
pub fn det_reduction(weights: &[i64], p: u32, f: usize) -> Result<FundCharExp> {
    let n = group_order(p, f)?;
    Ok(FundCharExp { level: f, exp: (-p_adic_sum(p, weights)?).rem_euclid(n) })
}

/// `omega_{2f}^{(1+p^f) e} = omega_f^e`; `None` when `1 + p^f` does not divide.
pub fn level_lower(x: FundCharExp, p: u32) -> Result<Option<FundCharExp>> {
    if x.level % 2 != 0 {
        return Err(Error::Invalid(format!("level {} is odd", x.level)));
    }
    let f = x.level / 2;
    let pf = pow_i(p, f)?;
    let n = group_order(p, x.level)?;
    let e = x.exp.rem_euclid(n);
    if e % (pf + 1) != 0 {
        return Ok(None);
    }
    Ok(Some(FundCharExp { level: f, exp: (e / (pf + 1)).rem_euclid(pf - 1) }))
}

/// Smallest exponent among `e * p^j`: the pair's form independent of the chosen embedding.
pub fn embedding_canonical(x: FundCharExp, p: u32) -> Result<FundCharExp> {
    let n = group_order(p, x.level)?;
    let mut best = x.exp.rem_euclid(n);
    let mut cur = best;
    for _ in 1..x.level {
        cur = (cur * p as i128).rem_euclid(n);
        best = best.min(cur);
    }
    Ok(FundCharExp { level: x.level, exp: best })
}

/// Irreducibility test `1 + p^f ∤ m` phrased independently of [`reduce_induced`].
pub fn breuil_irreducible(m: i128, p: u32, f: usize) -> Result<bool> {
    Ok(m.rem_euclid(pow_i(p, f)? + 1) != 0)
}
