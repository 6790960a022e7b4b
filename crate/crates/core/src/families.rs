//! Type vectors, the families `Π(a⃗)` built from them, and the doubled
//! diagonalization that identifies induced characters.
//!
//! Slot convention: slot `s` of a type vector holds `P_{s+1}`, so slot
//! `f - 1` holds `P_0`. Weights, units and evaluation points are indexed by
//! the matrix index, hence slot `s` uses `k_{s+1}`, `c_{s+1}`, `a_{s+1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::characters::bracket_weights;
use crate::error::{Error, Result};
use crate::filtered::{FiltMod2, Form};
use crate::padic::{centered, ppow, PrecisionBudget, Qp};
use crate::series::{lambda_f, q_series, GammaElement, PiSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatType {
    T1,
    T2,
    T3,
    T4,
}

impl MatType {
    pub const ALL: [MatType; 4] = [MatType::T1, MatType::T2, MatType::T3, MatType::T4];

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(MatType::T1),
            2 => Ok(MatType::T2),
            3 => Ok(MatType::T3),
            4 => Ok(MatType::T4),
            _ => Err(Error::Parse(format!("type {i} not in 1..4"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            MatType::T1 => 1,
            MatType::T2 => 2,
            MatType::T3 => 3,
            MatType::T4 => 4,
        }
    }

    /// `t2` and `t4` are the even types.
    pub fn is_even(self) -> bool {
        matches!(self, MatType::T2 | MatType::T4)
    }

    /// Position `(row, col)` of the matrix unit this type reduces to mod `(p, X)`
    /// when its weight is positive.
    pub fn unit_position(self) -> (usize, usize) {
        match self {
            MatType::T1 => (1, 1),
            MatType::T2 => (0, 1),
            MatType::T3 => (0, 0),
            MatType::T4 => (1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    pub types: Vec<MatType>,
}

impl TypeVector {
    pub fn new(types: Vec<MatType>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Invalid("empty type vector".into()));
        }
        Ok(TypeVector { types })
    }

    pub fn f(&self) -> usize {
        self.types.len()
    }

    pub fn even_count(&self) -> usize {
        self.types.iter().filter(|t| t.is_even()).count()
    }

    /// All `4^f` type vectors in lexicographic order.
    pub fn all(f: usize) -> Vec<TypeVector> {
        let mut out = vec![Vec::new()];
        for _ in 0..f {
            out = out
                .into_iter()
                .flat_map(|v: Vec<MatType>| {
                    MatType::ALL.iter().map(move |&t| {
                        let mut w = v.clone();
                        w.push(t);
                        w
                    })
                })
                .collect();
        }
        out.into_iter().map(|types| TypeVector { types }).collect()
    }
}

impl FromStr for TypeVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let types = s
            .split(',')
            .map(|t| {
                let i: u8 = t.trim().trim_start_matches('t').parse().map_err(|_| Error::Parse(format!("type {t:?}")))?;
                MatType::from_index(i)
            })
            .collect::<Result<Vec<_>>>()?;
        TypeVector::new(types)
    }
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.types.iter().map(|t| t.index().to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for TypeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TypeVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------- recipes

/// Allowed types per slot before normalization, and the normalized pick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub raw: Vec<Vec<MatType>>,
    pub normalized: TypeVector,
}

const ZERO_SET: [MatType; 2] = [MatType::T2, MatType::T3];
const FULL_SET: [MatType; 2] = [MatType::T1, MatType::T4];

fn normalize_pick(set: &[MatType]) -> MatType {
    if set.contains(&MatType::T2) {
        MatType::T2
    } else {
        MatType::T1
    }
}

/// Prefix slots `P_1..P_{f-1}`; returns the allowed sets, the picks and the final parity.
fn prefix_recipe(l: &[i64], f: usize) -> (Vec<Vec<MatType>>, Vec<MatType>, bool) {
    let mut odd = false;
    let mut raw = Vec::new();
    let mut picks = Vec::new();
    for &li in l.iter().take(f).skip(1) {
        let set = match (li == 0, odd) {
            (true, false) | (false, true) => ZERO_SET,
            (true, true) | (false, false) => FULL_SET,
        };
        let t = normalize_pick(&set);
        odd ^= t.is_even();
        raw.push(set.to_vec());
        picks.push(t);
    }
    (raw, picks, odd)
}

/// Type vector of the family containing `Ind(χ_l)` for a level-`2f` vector `l`.
pub fn types_for_induced(l: &[i64]) -> Result<Recipe> {
    let k = bracket_weights(l).map_err(|e| Error::MalformedEll(e.to_string()))?;
    if k.iter().all(|&x| x == 0) {
        return Err(Error::MalformedEll("all weights are zero".into()));
    }
    let f = k.len();
    let (mut raw, mut picks, odd) = prefix_recipe(l, f);
    let p0 = match (l[0] == 0, odd) {
        (true, false) => MatType::T4,
        (true, true) => MatType::T3,
        (false, false) => MatType::T2,
        (false, true) => MatType::T1,
    };
    raw.push(vec![p0]);
    picks.push(p0);
    Ok(Recipe { raw, normalized: TypeVector { types: picks } })
}

/// Type vector of the family containing `χ_l ⊕ χ_l'`, both at level `f`.
pub fn types_for_split(l: &[i64], lp: &[i64]) -> Result<Recipe> {
    if l.len() != lp.len() || l.is_empty() {
        return Err(Error::MalformedEll("split pair of unequal or zero length".into()));
    }
    let joined: Vec<i64> = l.iter().chain(lp).copied().collect();
    bracket_weights(&joined).map_err(|e| Error::MalformedEll(e.to_string()))?;
    if l.iter().all(|&x| x == 0) || lp.iter().all(|&x| x == 0) {
        return Err(Error::OrdinaryExcluded("one of the two characters has all exponents zero".into()));
    }
    Ok(split_recipe(l))
}

/// The split-case parity automaton on `ℓ⃗` alone, without the ordinary guard.
pub fn split_recipe(l: &[i64]) -> Recipe {
    let f = l.len();
    let (mut raw, mut picks, odd) = prefix_recipe(l, f);
    let p0 = match (l[0] == 0, odd) {
        (true, false) => MatType::T3,
        (true, true) => MatType::T4,
        (false, false) => MatType::T1,
        (false, true) => MatType::T2,
    };
    raw.push(vec![p0]);
    picks.push(p0);
    Recipe { raw, normalized: TypeVector { types: picks } }
}

// ---------------------------------------------------------- class membership

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    C1,
    C2,
    C1Star,
    C2Star,
    None,
}

impl Class {
    pub fn is_ordinary(self) -> bool {
        matches!(self, Class::C1 | Class::C2)
    }
}

fn follows(tv: &TypeVector, start_even: bool, last: [MatType; 2]) -> bool {
    let f = tv.f();
    let mut odd = false;
    for &t in &tv.types[..f - 1] {
        let set = if odd == start_even { FULL_SET } else { ZERO_SET };
        if !set.contains(&t) {
            return false;
        }
        odd ^= t.is_even();
    }
    tv.types[f - 1] == if odd { last[1] } else { last[0] }
}

/// Membership by the recursive parity definitions.
pub fn class_membership(tv: &TypeVector) -> Class {
    use MatType::*;
    // (prefix starts in {t2,t3}?, P_0 at even parity, P_0 at odd parity)
    let table = [
        (Class::C1, true, [T3, T4]),
        (Class::C2, false, [T1, T2]),
        (Class::C1Star, true, [T2, T1]),
        (Class::C2Star, false, [T4, T3]),
    ];
    for (c, zero_first, last) in table {
        if follows(tv, zero_first, last) {
            return c;
        }
    }
    Class::None
}

/// `Q̄_f` mod `(p, X)` for positive weights: a matrix unit `E_rc` or zero.
pub fn qbar(tv: &TypeVector) -> Option<(usize, usize)> {
    let mut cur = tv.types[0].unit_position();
    for t in &tv.types[1..] {
        let (r, c) = t.unit_position();
        if cur.1 != r {
            return None;
        }
        cur = (cur.0, c);
    }
    Some(cur)
}

/// Class read off from `Q̄_f`.
pub fn class_from_qbar(tv: &TypeVector) -> Class {
    match qbar(tv) {
        Some((0, 0)) => Class::C1,
        Some((1, 1)) => Class::C2,
        Some((0, 1)) => Class::C1Star,
        Some((1, 0)) => Class::C2Star,
        _ => Class::None,
    }
}

// ------------------------------------------------------------- symbolic Q_f

/// Polynomial in `X_0..X_{f-1}` with integer coefficients, keyed by exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, BigInt>,
}

impl SymPoly {
    pub fn zero(nvars: usize) -> Self {
        SymPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut s = SymPoly::zero(nvars);
        if !c.is_zero() {
            s.terms.insert(vec![0; nvars], c);
        }
        s
    }

    /// `c X_i`.
    pub fn var(nvars: usize, i: usize, c: BigInt) -> Self {
        let mut s = SymPoly::zero(nvars);
        let mut e = vec![0; nvars];
        e[i] = 1;
        if !c.is_zero() {
            s.terms.insert(e, c);
        }
        s
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut t = self.terms.clone();
        for (e, c) in &o.terms {
            let v = t.entry(e.clone()).or_insert_with(BigInt::zero);
            *v += c;
            if v.is_zero() {
                t.remove(e);
            }
        }
        SymPoly { nvars: self.nvars, terms: t }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = SymPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out = out.add(&SymPoly { nvars: self.nvars, terms: BTreeMap::from([(e, c1 * c2)]) });
            }
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms.get(&vec![0; self.nvars]).cloned().unwrap_or_default()
    }
}

impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0)
                    .map(|(i, &x)| if x == 1 { format!("X{i}") } else { format!("X{i}^{x}") })
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub type SymPoly2x2 = [[SymPoly; 2]; 2];

fn sym_mul(a: &SymPoly2x2, b: &SymPoly2x2) -> SymPoly2x2 {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// Entries of a type matrix given its three ingredients.
fn type_matrix<T: Clone>(t: MatType, cq: T, xz: T, one: T, zero: T) -> [[T; 2]; 2] {
    match t {
        MatType::T1 => [[cq, zero], [xz, one]],
        MatType::T2 => [[xz, one], [cq, zero]],
        MatType::T3 => [[one, xz], [zero, cq]],
        MatType::T4 => [[zero, cq], [one, xz]],
    }
}

/// `Q_f = P_1 ⋯ P_f` mod `π`, with `X_i p^{m_z}` standing in for `X_i φ(z_i)`.
/// Also returns whether the trace is constant.
pub fn symbolic_qf(p: u32, tv: &TypeVector, weights: &[i64], units: &[i64], m_z: u32) -> Result<(SymPoly2x2, bool)> {
    let f = tv.f();
    if weights.len() != f || units.len() != f {
        return Err(Error::Invalid("weights/units length differs from the type vector".into()));
    }
    let one = SymPoly::constant(f, BigInt::one());
    let zero = SymPoly::zero(f);
    let mut acc: Option<SymPoly2x2> = None;
    for (s, &t) in tv.types.iter().enumerate() {
        let i = (s + 1) % f;
        let cq = SymPoly::constant(f, BigInt::from(units[i]) * ppow(p, weights[i] as u32));
        let xz = SymPoly::var(f, i, ppow(p, m_z));
        let m = type_matrix(t, cq, xz, one.clone(), zero.clone());
        acc = Some(match acc {
            None => m,
            Some(a) => sym_mul(&a, &m),
        });
    }
    let q = acc.unwrap();
    let tr = q[0][0].add(&q[1][1]);
    let scalar = tr.is_constant();
    Ok((q, scalar))
}

// ------------------------------------------------------------ family specs

/// `⌊(ℓ-1)/(p-1)⌋`.
pub fn m_ell(p: u32, ell: i64) -> u32 {
    ((ell - 1).max(0) / (p as i64 - 1)) as u32
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub p: u32,
    pub weights: Vec<i64>,
    pub types: TypeVector,
    pub units: Vec<i64>,
    /// Evaluation point `a⃗`; the filtration uses `α_i = a_i z_i(0)`.
    pub alpha: Vec<BigInt>,
    pub ell: i64,
    pub budget: PrecisionBudget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionJson {
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpecJson {
    pub p: u32,
    pub f: usize,
    pub weights: Vec<i64>,
    pub types: TypeVector,
    #[serde(default)]
    pub alpha: Option<Vec<i64>>,
    #[serde(default)]
    pub units: Option<Vec<i64>>,
    #[serde(default)]
    pub ell: Option<i64>,
    pub precision: PrecisionJson,
}

impl FamilySpecJson {
    pub fn to_spec(&self) -> Result<FamilySpec> {
        if self.weights.len() != self.f {
            return Err(Error::Invalid("weights length differs from f".into()));
        }
        let budget = PrecisionBudget::new(self.p, self.precision.m, self.precision.n)?;
        FamilySpec::new(
            budget,
            self.weights.clone(),
            self.types.clone(),
            self.units.clone(),
            self.alpha.as_ref().map(|a| a.iter().map(|&x| BigInt::from(x)).collect()),
            self.ell,
        )
    }
}

impl FamilySpec {
    /// Fills defaults (`c_i = 1`, `a⃗ = 0`, `ℓ = max k`) and validates shapes.
    pub fn new(
        budget: PrecisionBudget,
        weights: Vec<i64>,
        types: TypeVector,
        units: Option<Vec<i64>>,
        alpha: Option<Vec<BigInt>>,
        ell: Option<i64>,
    ) -> Result<Self> {
        let f = weights.len();
        let p = budget.p;
        if types.f() != f {
            return Err(Error::Invalid(format!("type vector has length {}, weights {f}", types.f())));
        }
        if weights.iter().any(|&k| k < 0) {
            return Err(Error::Invalid("weights must be nonnegative".into()));
        }
        let kmax = *weights.iter().max().unwrap_or(&0);
        if kmax == 0 {
            return Err(Error::AllWeightsZero);
        }
        let units = units.unwrap_or_else(|| vec![1; f]);
        if units.len() != f || units.iter().any(|&c| c.rem_euclid(p as i64) == 0) {
            return Err(Error::Invalid("units must be f p-adic units".into()));
        }
        let alpha = alpha.unwrap_or_else(|| vec![BigInt::zero(); f]);
        if alpha.len() != f {
            return Err(Error::Invalid("alpha length differs from f".into()));
        }
        let ell = ell.unwrap_or(kmax);
        if ell < kmax {
            return Err(Error::Invalid(format!("ell = {ell} is below the largest weight {kmax}")));
        }
        Ok(FamilySpec { p, weights, types, units, alpha, ell, budget })
    }

    pub fn f(&self) -> usize {
        self.weights.len()
    }

    pub fn kmax(&self) -> i64 {
        *self.weights.iter().max().unwrap()
    }

    pub fn all_weights_p(&self) -> bool {
        self.weights.iter().all(|&k| k == self.p as i64)
    }

    /// The family parameter bound: `α_i ∈ p^m 𝔪`.
    pub fn m_bound(&self) -> u32 {
        let k = self.kmax();
        if k >= self.p as i64 && !self.all_weights_p() {
            m_ell(self.p, k)
        } else {
            0
        }
    }

    /// `v_p(z_i(0))`.
    pub fn m_z(&self) -> u32 {
        if self.all_weights_p() && self.ell == self.p as i64 {
            0
        } else {
            m_ell(self.p, self.ell)
        }
    }

    /// `α_i = a_i p^{m_z}`.
    pub fn alpha_values(&self, prec: i64) -> Vec<Qp> {
        let z0 = ppow(self.p, self.m_z());
        self.alpha.iter().map(|a| Qp::from_int(self.p, a * &z0, prec)).collect()
    }

    pub fn check_class(&self) -> Result<()> {
        let c = class_membership(&self.types);
        if c.is_ordinary() {
            return Err(Error::ClassViolation(format!("type vector {} lies in {:?}", self.types, c)));
        }
        Ok(())
    }

    pub fn check_bound(&self) -> Result<()> {
        let need = self.m_bound() as i64 + 1;
        for (i, a) in self.alpha_values(need + 64).iter().enumerate() {
            if let Some(v) = a.val() {
                if v < need {
                    return Err(Error::BoundViolation(format!("v_p(α_{i}) = {v} < {need}")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_class()?;
        self.check_bound()
    }
}

/// Filtered module of a type vector from its mod-`π` matrices, evaluated at `α⃗`.
pub fn family_filtered(p: u32, tv: &TypeVector, weights: &[i64], units: &[i64], alpha: &[Qp]) -> Result<FiltMod2> {
    let f = tv.f();
    let prec = alpha.iter().map(Qp::prec).min().unwrap_or(64);
    let mut frob: [[Vec<Qp>; 2]; 2] = Default::default();
    for (s, &t) in tv.types.iter().enumerate() {
        let i = (s + 1) % f;
        let cq = Qp::from_int(p, BigInt::from(units[i]) * ppow(p, weights[i] as u32), prec);
        let m = type_matrix(t, cq, alpha[i].clone(), Qp::one(p, prec), Qp::zero(p, prec));
        for r in 0..2 {
            for c in 0..2 {
                frob[r][c].push(m[r][c].clone());
            }
        }
    }
    let mut x = vec![Qp::zero(p, prec); f];
    let mut y = vec![Qp::zero(p, prec); f];
    for i in 0..f {
        let t = tv.types[(i + f - 1) % f];
        let one = Qp::one(p, prec);
        let na = alpha[i].neg();
        if matches!(t, MatType::T1 | MatType::T2) {
            x[i] = one;
            y[i] = na;
        } else {
            x[i] = na;
            y[i] = one;
        }
    }
    let diagonal = frob[0][1].iter().chain(&frob[1][0]).all(Qp::is_zero);
    let form = if diagonal { Form::Standard } else { Form::General };
    FiltMod2::new(p, weights.to_vec(), frob, x, y, form)
}

// ------------------------------------------------------- series families

pub type SMat = [[PiSeries; 2]; 2];

/// `Π` as one 2×2 series matrix per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiMatrix {
    pub p: u32,
    pub slots: Vec<SMat>,
}

impl PiMatrix {
    pub fn f(&self) -> usize {
        self.slots.len()
    }

    pub fn mod_pi(&self, s: usize) -> [[Qp; 2]; 2] {
        let m = &self.slots[s];
        let e = |r: usize, c: usize| m[r][c].coeff(0).clone();
        [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
    }
}

pub fn smat_mul(a: &SMat, b: &SMat) -> SMat {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn smat_sub(a: &SMat, b: &SMat) -> SMat {
    let e = |i: usize, j: usize| a[i][j].sub(&b[i][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn smat_map(a: &SMat, f: impl Fn(&PiSeries) -> PiSeries) -> SMat {
    [[f(&a[0][0]), f(&a[0][1])], [f(&a[1][0]), f(&a[1][1])]]
}

/// Smallest π-order of the entries, reading coefficients mod `p^m`.
pub fn smat_order(a: &SMat, m: i64) -> usize {
    a.iter().flatten().map(|s| s.order_mod(m)).min().unwrap()
}

pub fn smat_precision_limited(a: &SMat, m: i64) -> bool {
    a.iter().flatten().any(|s| s.precision_limited(m))
}

/// Where component `c` (0 = x, 1 = y) at slot `s` reads from at slot `s+1`,
/// and the exponent of `q/γq` it picks up.
fn strand_step(t: MatType, c: usize, k: i64) -> (usize, i64) {
    match (t, c) {
        (MatType::T1, 0) => (0, k),
        (MatType::T1, _) => (1, 0),
        (MatType::T2, 0) => (1, 0),
        (MatType::T2, _) => (0, k),
        (MatType::T3, 0) => (0, 0),
        (MatType::T3, _) => (1, k),
        (MatType::T4, 0) => (1, k),
        (MatType::T4, _) => (0, 0),
    }
}

/// Strand from `(slot 0, c)`: its length `f` or `2f` and the exponents met.
pub fn strand(tv: &TypeVector, weights: &[i64], c: usize) -> (usize, Vec<i64>) {
    let f = tv.f();
    let mut cur = c;
    let mut exps = Vec::new();
    for j in 0..2 * f {
        let s = j % f;
        let (next, e) = strand_step(tv.types[s], cur, weights[(s + 1) % f]);
        exps.push(e);
        cur = next;
        if j + 1 == f && cur == c {
            return (f, exps);
        }
    }
    (2 * f, exps)
}

/// A family built at working precision `work`: the diagonal generators, the
/// `z`-polynomials and `Π`.
#[derive(Debug, Clone)]
pub struct Family {
    pub spec: FamilySpec,
    pub work: i64,
    /// `gen[s] = [A_s, B_s]` with `x_s^γ = A_s/γA_s`, `y_s^γ = B_s/γB_s`.
    pub gen: Vec<[PiSeries; 2]>,
    /// Per matrix index `i`: the ratio `b_i` with `z_i = trunc(p^{m_z} b_i)`.
    pub b: Vec<PiSeries>,
    /// Exact integer coefficients of `z_i`, degree `< ℓ`.
    pub z: Vec<Vec<BigInt>>,
    pub pi: PiMatrix,
}

pub fn initial_guard(spec: &FamilySpec) -> i64 {
    let denom = spec.budget.n as i64 / (spec.p as i64 - 1) + 1;
    let k: i64 = spec.weights.iter().sum();
    4 * denom + 4 * k + spec.m_z() as i64 + 8
}

/// The default sample of `γ`: `1+p`, `(1+p)^2`, a unit of order `p-1`, and `-1` for `p = 2`.
pub fn sample_gammas(p: u32, prec: i64) -> Vec<GammaElement> {
    let mut v = vec![
        GammaElement::from_int(p, 1 + p as i64).unwrap(),
        GammaElement::from_int(p, (1 + p as i64).pow(2)).unwrap(),
    ];
    if p > 2 {
        v.push(GammaElement::teichmuller(p, prec));
    } else {
        v.push(GammaElement::from_int(p, -1).unwrap());
    }
    v
}

impl Family {
    /// Build with the adaptive guard; `gammas` are used to certify the `z` congruence.
    pub fn build(spec: &FamilySpec, gammas: &[GammaElement]) -> Result<Family> {
        let mut guard = initial_guard(spec);
        for _ in 0..4 {
            match Family::build_at(spec, spec.budget.m as i64 + guard, gammas) {
                Err(Error::PrecisionLoss(_)) => guard *= 2,
                r => return r,
            }
        }
        Err(Error::PrecisionLoss(format!("family needs more than {guard} guard digits")))
    }

    pub fn build_at(spec: &FamilySpec, work: i64, gammas: &[GammaElement]) -> Result<Family> {
        let p = spec.p;
        let f = spec.f();
        let n = spec.budget.n;
        let m = spec.budget.m as i64;
        let k = &spec.weights;
        let tv = &spec.types;
        let inv_p = Qp::from_ratio(p, 1, p, work + 2);
        let qp = q_series(p, n, work + 2).scale(&inv_p);

        let mut gen: Vec<[PiSeries; 2]> = vec![[PiSeries::one(p, n, work), PiSeries::one(p, n, work)]; f];
        for c in 0..2 {
            let (len, exps) = strand(tv, k, c);
            let lam = lambda_f(p, len, n, work);
            let mut acc = PiSeries::one(p, n, work);
            let mut cur = lam;
            for (j, &e) in exps.iter().enumerate() {
                if e > 0 {
                    acc = acc.mul(&cur.pow(e as u32));
                }
                if j + 1 < exps.len() {
                    cur = cur.frobenius();
                }
            }
            gen[0][c] = acc;
        }
        for s in (1..f).rev() {
            let next = (s + 1) % f;
            for c in 0..2 {
                let (src, e) = strand_step(tv.types[s], c, k[next]);
                gen[s][c] = qp.pow(e as u32).mul(&gen[next][src].frobenius());
            }
        }

        let m_z = spec.m_z();
        let pz = Qp::from_int(p, ppow(p, m_z), work + 64);
        let mut b = Vec::with_capacity(f);
        let mut z = Vec::with_capacity(f);
        for i in 0..f {
            let t = tv.types[(i + f - 1) % f];
            let (num, den) = if matches!(t, MatType::T1 | MatType::T2) { (1, 0) } else { (0, 1) };
            let bi = gen[i][num].div(&gen[i][den])?;
            let scaled = bi.scale(&pz);
            let mut coeffs = Vec::new();
            for d in 0..(spec.ell as usize).min(n) {
                let a = scaled.coeff(d);
                if a.prec() < m {
                    return Err(Error::PrecisionLoss(format!("z_{i} coefficient {d}")));
                }
                if let Some(v) = a.val() {
                    if v < 0 {
                        return Err(Error::IntegralityFailed(format!(
                            "z_{i} coefficient {d} has valuation {v} at scale p^{m_z}"
                        )));
                    }
                }
                let r = a.residue(a.prec() as u32).ok_or_else(|| Error::PrecisionLoss(format!("z_{i}")))?;
                coeffs.push(centered(&r, &ppow(p, a.prec() as u32)));
            }
            b.push(bi);
            z.push(coeffs);
        }

        let zs: Vec<PiSeries> = z.iter().map(|c| PiSeries::from_ints(p, c, n, work)).collect();
        for g in gammas {
            for i in 0..f {
                let r = zs[i].sub(&zs[i].gamma_act(g).mul(&b[i].div(&b[i].gamma_act(g))?));
                let o = r.order_mod(m);
                if (o as i64) < spec.ell.min(n as i64) {
                    if r.precision_limited(m) {
                        return Err(Error::PrecisionLoss(format!("z_{i} congruence")));
                    }
                    return Err(Error::PropertyFailed(format!(
                        "z_{i} - γ(z_{i}) b/γb has π-order {o} < ℓ = {} for χ(γ) = {}",
                        spec.ell, g.a
                    )));
                }
            }
        }

        let q = q_series(p, n, work);
        let mut slots = Vec::with_capacity(f);
        for (s, &t) in tv.types.iter().enumerate() {
            let i = (s + 1) % f;
            let cq = q.pow(k[i] as u32).scale(&Qp::from_int(p, spec.units[i], work));
            let xz = zs[i].frobenius().scale(&Qp::from_int(p, spec.alpha[i].clone(), work));
            slots.push(type_matrix(t, cq, xz, PiSeries::one(p, n, work), PiSeries::zero(p, n, work)));
        }
        Ok(Family { spec: spec.clone(), work, gen, b, z, pi: PiMatrix { p, slots } })
    }

    /// The filtered module `Π mod π` with its filtration.
    pub fn filtered(&self) -> Result<FiltMod2> {
        let prec = self.spec.budget.m as i64;
        family_filtered(
            self.spec.p,
            &self.spec.types,
            &self.spec.weights,
            &self.spec.units,
            &self.spec.alpha_values(prec),
        )
    }

    /// `det` of each slot as a series.
    pub fn slot_dets(&self) -> Vec<PiSeries> {
        self.pi.slots.iter().map(|m| m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0]))).collect()
    }
}

/// `z`-polynomials of a family, exact integer coefficients mod `p^M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZPolys {
    pub m_z: u32,
    pub ell: i64,
    pub coeffs: Vec<Vec<String>>,
}

pub fn build_z_polynomials(spec: &FamilySpec, gammas: &[GammaElement]) -> Result<ZPolys> {
    let fam = Family::build(spec, gammas)?;
    let modulus = ppow(spec.p, spec.budget.m);
    Ok(ZPolys {
        m_z: spec.m_z(),
        ell: spec.ell,
        coeffs: fam.z.iter().map(|c| c.iter().map(|x| centered(x, &modulus).to_string()).collect()).collect(),
    })
}

/// `Π(a⃗)` at the family's working precision and its filtered module.
pub fn build_pi(spec: &FamilySpec) -> Result<(Family, FiltMod2)> {
    spec.validate()?;
    let fam = Family::build(spec, &sample_gammas(spec.p, spec.budget.m as i64 + initial_guard(spec)))?;
    let d = fam.filtered()?;
    Ok((fam, d))
}

// --------------------------------------------------------------- doubling

/// `(a_0..a_{f-1})` repeated `d` times.
pub fn double_restrict<T: Clone>(tuple: &[T], d: usize) -> Vec<T> {
    let mut v = Vec::with_capacity(tuple.len() * d);
    for _ in 0..d {
        v.extend_from_slice(tuple);
    }
    v
}

pub fn double_restrict_matrix(m: &PiMatrix, d: usize) -> PiMatrix {
    PiMatrix { p: m.p, slots: double_restrict(&m.slots, d) }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubledDiag {
    /// `Q_i = Id` (true) or the swap `R` (false), `i = 0..2f-1`.
    pub q_is_id: Vec<bool>,
    /// Valuations of `λ_i`, `μ_i` at slot `i` (which holds `P_{i+1}`).
    pub lambda_val: Vec<i64>,
    pub mu_val: Vec<i64>,
    pub nm_lambda_val: i64,
    pub nm_mu_val: i64,
    pub zvec: Vec<u8>,
    pub ell_out: Vec<i64>,
    pub induced: bool,
}

/// Conjugate `P(0⃗)^{⊗2}` by `Q = (Q_0, .., Q_{2f-1})` into diagonal form.
pub fn diagonalize_doubled(p: u32, tv: &TypeVector, weights: &[i64]) -> Result<DoubledDiag> {
    let f = tv.f();
    if weights.len() != f {
        return Err(Error::Invalid("weights length differs from the type vector".into()));
    }
    let induced = tv.even_count() % 2 == 1;
    // slot i carries P_i = tv[(i + f - 1) mod f]
    let ptype = |i: usize| tv.types[(i + 2 * f - 1) % f];
    let mut q_is_id = vec![true; 2 * f];
    let mut odd = false;
    for (i, q) in q_is_id.iter_mut().enumerate().skip(1) {
        odd ^= ptype(i).is_even();
        *q = !odd;
    }
    let prec = 64 + 2 * weights.iter().sum::<i64>();
    let one = Qp::one(p, prec);
    let zero = Qp::zero(p, prec);
    let swap = |m: [[Qp; 2]; 2]| [[m[1][0].clone(), m[1][1].clone()], [m[0][0].clone(), m[0][1].clone()]];
    let swap_cols = |m: [[Qp; 2]; 2]| [[m[0][1].clone(), m[0][0].clone()], [m[1][1].clone(), m[1][0].clone()]];
    let mut lambda_val = Vec::new();
    let mut mu_val = Vec::new();
    let mut nm_l = one.clone();
    let mut nm_m = one.clone();
    for s in 0..2 * f {
        let i = s + 1;
        let k = weights[i % f];
        let m = type_matrix(ptype(i), Qp::from_int(p, ppow(p, k as u32), prec), zero.clone(), one.clone(), zero.clone());
        let m = if q_is_id[s] { m } else { swap(m) };
        let m = if q_is_id[i % (2 * f)] { m } else { swap_cols(m) };
        if !(m[0][1].is_zero() && m[1][0].is_zero()) {
            return Err(Error::ParityViolation(format!("slot {s} is not diagonal after conjugation")));
        }
        lambda_val.push(m[0][0].val().unwrap());
        mu_val.push(m[1][1].val().unwrap());
        nm_l = nm_l.mul(&m[0][0]);
        nm_m = nm_m.mul(&m[1][1]);
    }
    let mut zvec = Vec::with_capacity(2 * f);
    let mut ell_out = Vec::with_capacity(2 * f);
    for i in 0..2 * f {
        let x = matches!(ptype(i), MatType::T1 | MatType::T2);
        let z = (x == q_is_id[i]) as u8;
        zvec.push(z);
        ell_out.push(weights[i % f] * z as i64);
    }
    for i in 0..f {
        let ok = if induced { zvec[i + f] == 1 - zvec[i] } else { zvec[i + f] == zvec[i] };
        if !ok {
            return Err(Error::ParityViolation(format!("z-vector symmetry fails at {i}")));
        }
    }
    let total: i64 = weights.iter().sum();
    let target = Qp::from_int(p, ppow(p, total as u32), prec);
    if induced && !(nm_l.eq_at(&target) && nm_m.eq_at(&target)) {
        return Err(Error::ParityViolation("Nm λ or Nm μ differs from p^{Σk}".into()));
    }
    Ok(DoubledDiag {
        q_is_id,
        lambda_val,
        mu_val,
        nm_lambda_val: nm_l.val().unwrap(),
        nm_mu_val: nm_m.val().unwrap(),
        zvec,
        ell_out,
        induced,
    })
}
