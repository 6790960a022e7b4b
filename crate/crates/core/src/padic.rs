//! Fixed-precision p-adic numbers.
//!
//! [`Qp`] is the workhorse scalar: `p^v * u` with `u` a unit, known modulo
//! `p^prec` in absolute terms. Every arithmetic operation propagates the
//! absolute precision, so a result that claims to be zero modulo `p^M` really is.
//!
//! [`PadicScalar`] is the coordinate form used for unramified constants of
//! degree `d <= 4` over `Z_p`.

use std::cmp::min;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn ppow(p: u32, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

/// Number of factors of `p` in a nonzero integer.
pub fn vp_int(p: u32, n: &BigInt) -> u32 {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

pub fn vp_factorial(p: u32, n: u64) -> u64 {
    let mut v = 0;
    let mut q = n;
    while q > 0 {
        q /= p as u64;
        v += q;
    }
    v
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Joint truncation `(p^M, pi^N)` at which results are certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionBudget {
    pub p: u32,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
}

impl PrecisionBudget {
    pub fn new(p: u32, m: u32, n: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Invalid(format!("{p} is not prime")));
        }
        if m == 0 || n == 0 {
            return Err(Error::Invalid("precision exponents must be positive".into()));
        }
        Ok(PrecisionBudget { p, m, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valuation {
    Finite(i64),
    AtLeastPrecision(i64),
}

impl Valuation {
    /// Lower bound usable in comparisons.
    pub fn bound(self) -> i64 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeastPrecision(v) => v,
        }
    }
}

/// An element of `Q_p` known modulo `p^prec`.
///
/// Zero is stored as `u = 0, v = prec`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Qp {
    p: u32,
    v: i64,
    u: BigInt,
    prec: i64,
}

impl Qp {
    pub fn zero(p: u32, prec: i64) -> Self {
        Qp { p, v: prec, u: BigInt::zero(), prec }
    }

    pub fn one(p: u32, prec: i64) -> Self {
        Self::from_parts(p, BigInt::one(), 0, prec)
    }

    pub fn from_int(p: u32, n: impl Into<BigInt>, prec: i64) -> Self {
        Self::from_parts(p, n.into(), 0, prec)
    }

    /// `num / den` for integers, `den != 0`.
    pub fn from_ratio(p: u32, num: impl Into<BigInt>, den: impl Into<BigInt>, prec: i64) -> Self {
        let num = num.into();
        let den = den.into();
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero(p, prec);
        }
        let vd = vp_int(p, &den) as i64;
        let vn = vp_int(p, &num) as i64;
        let pb = BigInt::from(p);
        let un = num / pb.pow(vn as u32);
        let ud = den / pb.pow(vd as u32);
        let v = vn - vd;
        if v >= prec {
            return Self::zero(p, prec);
        }
        let modulus = ppow(p, (prec - v) as u32);
        let inv = ud.mod_floor(&modulus).modinv(&modulus).expect("unit");
        Self::from_parts(p, un * inv, v, prec)
    }

    /// `p^v * n` known modulo `p^prec`; `n` need not be a unit.
    pub fn from_parts(p: u32, n: BigInt, v: i64, prec: i64) -> Self {
        if n.is_zero() || v >= prec {
            return Self::zero(p, prec);
        }
        let e = vp_int(p, &n);
        let v = v + e as i64;
        if v >= prec {
            return Self::zero(p, prec);
        }
        let n = if e > 0 { n / ppow(p, e) } else { n };
        let u = n.mod_floor(&ppow(p, (prec - v) as u32));
        Qp { p, v, u, prec }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Valuation if nonzero at the stored precision.
    pub fn val(&self) -> Option<i64> {
        if self.u.is_zero() {
            None
        } else {
            Some(self.v)
        }
    }

    /// Valuation with the zero case reported as a lower bound.
    pub fn valuation(&self) -> Valuation {
        if self.u.is_zero() {
            Valuation::AtLeastPrecision(self.prec)
        } else {
            Valuation::Finite(self.v)
        }
    }

    /// `min(val, prec)`: the largest `e` for which `self` is known to be `0 mod p^e`.
    pub fn order(&self) -> i64 {
        self.v
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero()
    }

    pub fn unit_part(&self) -> &BigInt {
        &self.u
    }

    /// Lower the precision to at most `prec`.
    pub fn cap(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        Self::from_parts(self.p, self.u.clone(), self.v, prec)
    }

    /// Integer representative in `[0, p^m)` when `self` is integral and known mod `p^m`.
    pub fn residue(&self, m: u32) -> Option<BigInt> {
        if self.prec < m as i64 {
            return None;
        }
        if self.u.is_zero() || self.v >= m as i64 {
            return Some(BigInt::zero());
        }
        if self.v < 0 {
            return None;
        }
        let n = &self.u * ppow(self.p, self.v as u32);
        Some(n.mod_floor(&ppow(self.p, m)))
    }

    /// Integer representative `n` with `self = n * p^shift` for `shift <= v`.
    pub fn scaled_integer(&self, shift: i64) -> BigInt {
        if self.u.is_zero() {
            return BigInt::zero();
        }
        assert!(shift <= self.v);
        &self.u * ppow(self.p, (self.v - shift) as u32)
    }

    pub fn add(&self, o: &Qp) -> Qp {
        debug_assert_eq!(self.p, o.p);
        let prec = min(self.prec, o.prec);
        if self.u.is_zero() {
            return o.cap(prec);
        }
        if o.u.is_zero() {
            return self.cap(prec);
        }
        let v = min(self.v, o.v);
        let n = &self.u * ppow(self.p, (self.v - v) as u32) + &o.u * ppow(self.p, (o.v - v) as u32);
        Self::from_parts(self.p, n, v, prec)
    }

    pub fn neg(&self) -> Qp {
        if self.u.is_zero() {
            return self.clone();
        }
        Self::from_parts(self.p, -self.u.clone(), self.v, self.prec)
    }

    pub fn sub(&self, o: &Qp) -> Qp {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Qp) -> Qp {
        debug_assert_eq!(self.p, o.p);
        let prec = min(self.v + o.prec, o.v + self.prec);
        if self.u.is_zero() || o.u.is_zero() {
            return Self::zero(self.p, prec);
        }
        Self::from_parts(self.p, &self.u * &o.u, self.v + o.v, prec)
    }

    pub fn mul_int(&self, n: i64) -> Qp {
        self.mul(&Qp::from_int(self.p, n, self.prec + 64))
    }

    /// Multiply by `p^e` exactly.
    pub fn shift(&self, e: i64) -> Qp {
        Qp { p: self.p, v: self.v + e, u: self.u.clone(), prec: self.prec + e }
    }

    /// Multiplicative inverse; an input of valuation `v` known mod `p^P`
    /// yields a result known mod `p^(P - 2v)`.
    pub fn inv(&self) -> Result<Qp> {
        if self.u.is_zero() {
            return Err(Error::PrecisionLoss(format!(
                "inverting a value that is zero mod p^{}",
                self.prec
            )));
        }
        let rel = self.prec - self.v;
        let modulus = ppow(self.p, rel as u32);
        let ui = self.u.modinv(&modulus).expect("unit part invertible");
        Ok(Self::from_parts(self.p, ui, -self.v, self.prec - 2 * self.v))
    }

    pub fn div(&self, o: &Qp) -> Result<Qp> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: u32) -> Qp {
        let mut r = Qp::one(self.p, self.prec + 64);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Equality of values at the common precision.
    pub fn eq_at(&self, o: &Qp) -> bool {
        self.sub(o).is_zero()
    }
}

impl fmt::Display for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.u.is_zero() {
            return write!(f, "O({}^{})", self.p, self.prec);
        }
        let sym = centered(&self.u, &ppow(self.p, (self.prec - self.v) as u32));
        match self.v {
            0 => write!(f, "{sym}"),
            v => write!(f, "{}^{} * {}", self.p, v, sym),
        }
    }
}

// Conway polynomials: coefficients c_0..c_{d-1} of the monic modulus of degree d.
const CONWAY: &[(u32, &[&[u32]])] = &[
    (2, &[&[1], &[1, 1], &[1, 1, 0], &[1, 1, 0, 0]]),
    (3, &[&[1], &[2, 2], &[1, 2, 0], &[2, 0, 0, 2]]),
    (5, &[&[3], &[2, 4], &[3, 3, 0], &[2, 4, 4, 0]]),
    (7, &[&[4], &[3, 6], &[4, 0, 6], &[3, 4, 5, 0]]),
    (11, &[&[9], &[2, 7], &[9, 2, 0], &[2, 10, 8, 0]]),
    (13, &[&[11], &[2, 12], &[11, 2, 0], &[2, 12, 3, 0]]),
];

fn poly_mul_mod_p(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let d = m.len();
    let mut prod = vec![0u64; 2 * d];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for k in (d..2 * d).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for (i, mi) in m.iter().enumerate() {
            prod[k - d + i] = (prod[k - d + i] + (p - mi % p) * c) % p;
        }
    }
    prod.truncate(d);
    prod
}

/// Brute-force irreducibility of a monic polynomial of degree `<= 4` over `F_p`.
pub fn irreducible_mod_p(p: u32, low: &[u32]) -> bool {
    let d = low.len();
    if d == 1 {
        return true;
    }
    let pp = p as u64;
    let m: Vec<u64> = low.iter().map(|&c| c as u64 % pp).collect();
    // Irreducible iff no monic factor of degree <= d/2.
    for deg in 1..=d / 2 {
        let count = pp.pow(deg as u32);
        for idx in 0..count {
            let mut g = Vec::with_capacity(deg + 1);
            let mut t = idx;
            for _ in 0..deg {
                g.push(t % pp);
                t /= pp;
            }
            g.push(1);
            if divides_mod_p(&g, &m, pp) {
                return false;
            }
        }
    }
    true
}

fn divides_mod_p(g: &[u64], low: &[u64], p: u64) -> bool {
    let mut r: Vec<u64> = low.to_vec();
    r.push(1);
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        if lead != 0 {
            for (i, gi) in g.iter().enumerate() {
                r[shift + i] = (r[shift + i] + (p - gi) * lead) % p;
            }
        }
        r.pop();
    }
    r.iter().all(|&c| c == 0)
}

/// Low coefficients of the monic modulus used for degree-`d` extensions of `Q_p`.
pub fn modulus_poly(p: u32, d: usize) -> Result<Vec<u32>> {
    if !(1..=4).contains(&d) {
        return Err(Error::Invalid(format!("extension degree {d} outside 1..=4")));
    }
    if let Some((_, rows)) = CONWAY.iter().find(|(q, _)| *q == p) {
        return Ok(rows[d - 1].to_vec());
    }
    // Lexicographically first irreducible polynomial for primes outside the table.
    let total = (p as u64).pow(d as u32);
    for idx in 0..total {
        let mut low = Vec::with_capacity(d);
        let mut t = idx;
        for _ in 0..d {
            low.push((t % p as u64) as u32);
            t /= p as u64;
        }
        if low[0] != 0 && irreducible_mod_p(p, &low) {
            return Ok(low);
        }
    }
    Err(Error::Invalid("no irreducible polynomial found".into()))
}

/// An element of the degree-`d` unramified extension of `Z_p` modulo `p^M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u32,
    m: u32,
    coeffs: Vec<BigInt>,
    modulus: Vec<u32>,
}

impl PadicScalar {
    pub fn new(p: u32, m: u32, coeffs: Vec<BigInt>) -> Result<Self> {
        let d = coeffs.len();
        let modulus = modulus_poly(p, d)?;
        let pm = ppow(p, m);
        let coeffs = coeffs.into_iter().map(|c| c.mod_floor(&pm)).collect();
        Ok(PadicScalar { p, m, coeffs, modulus })
    }

    pub fn from_int(p: u32, m: u32, d: usize, n: impl Into<BigInt>) -> Result<Self> {
        let mut c = vec![BigInt::zero(); d];
        c[0] = n.into();
        Self::new(p, m, c)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn precision(&self) -> u32 {
        self.m
    }
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    fn same_ring(&self, o: &Self) {
        assert!(
            self.p == o.p && self.m == o.m && self.coeffs.len() == o.coeffs.len(),
            "scalars from different rings"
        );
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same_ring(o);
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Self::new(self.p, self.m, c).unwrap()
    }

    pub fn neg(&self) -> Self {
        let c = self.coeffs.iter().map(|a| -a).collect();
        Self::new(self.p, self.m, c).unwrap()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.same_ring(o);
        let d = self.coeffs.len();
        let mut prod = vec![BigInt::zero(); 2 * d];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                prod[i + j] += a * b;
            }
        }
        for k in (d..2 * d).rev() {
            let c = std::mem::take(&mut prod[k]);
            if c.is_zero() {
                continue;
            }
            for (i, mi) in self.modulus.iter().enumerate() {
                prod[k - d + i] -= &c * BigInt::from(*mi);
            }
        }
        prod.truncate(d);
        Self::new(self.p, self.m, prod).unwrap()
    }

    pub fn val(&self) -> Valuation {
        let mut best: Option<i64> = None;
        for c in &self.coeffs {
            if !c.is_zero() {
                let v = vp_int(self.p, c) as i64;
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        match best {
            Some(v) => Valuation::Finite(v),
            None => Valuation::AtLeastPrecision(self.m as i64),
        }
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    fn pow_mod_p(&self, e: &BigInt) -> Vec<u64> {
        let p = self.p as u64;
        let m: Vec<u64> = self.modulus.iter().map(|&c| c as u64).collect();
        let base: Vec<u64> = self
            .coeffs
            .iter()
            .map(|c| c.mod_floor(&BigInt::from(p)).to_u64().unwrap())
            .collect();
        let mut acc = vec![0u64; self.coeffs.len()];
        acc[0] = 1;
        for bit in (0..e.bits()).rev() {
            acc = poly_mul_mod_p(&acc, &acc, &m, p);
            if e.bit(bit) {
                acc = poly_mul_mod_p(&acc, &base, &m, p);
            }
        }
        acc
    }

    /// Inverse of a unit by Newton iteration from its residue-field inverse.
    pub fn unit_inverse(&self) -> Result<Self> {
        if let Valuation::Finite(v) = self.val() {
            if v > 0 {
                return Err(Error::NotAUnit(v));
            }
        } else {
            return Err(Error::NotAUnit(self.m as i64));
        }
        let q = BigInt::from(self.p).pow(self.coeffs.len() as u32);
        let y0 = self.pow_mod_p(&(q - 2u32));
        let mut y = Self::new(self.p, self.m, y0.into_iter().map(BigInt::from).collect())?;
        let two = Self::from_int(self.p, self.m, self.coeffs.len(), 2)?;
        let mut reached = 1u32;
        while reached < self.m {
            y = y.mul(&two.sub(&self.mul(&y)));
            reached *= 2;
        }
        Ok(y)
    }

    /// Parse `c0 + c1*w + ... (mod p^M)`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("scalar `{s}`"));
        let (body, tail) = s.split_once("(mod").ok_or_else(bad)?;
        let tail = tail.trim().trim_end_matches(')').trim();
        let (ps, ms) = tail.split_once('^').ok_or_else(bad)?;
        let p: u32 = ps.trim().parse().map_err(|_| bad())?;
        let m: u32 = ms.trim().parse().map_err(|_| bad())?;
        let mut terms: Vec<(usize, BigInt)> = Vec::new();
        for term in body.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(bad());
            }
            let (c, pow) = match term.split_once('*') {
                None => (term, 0usize),
                Some((c, w)) => {
                    let w = w.trim();
                    let pow = if w == "w" {
                        1
                    } else {
                        w.strip_prefix("w^").ok_or_else(bad)?.parse().map_err(|_| bad())?
                    };
                    (c.trim(), pow)
                }
            };
            terms.push((pow, c.parse().map_err(|_| bad())?));
        }
        let d = terms.iter().map(|t| t.0).max().unwrap_or(0) + 1;
        let mut coeffs = vec![BigInt::zero(); d];
        for (pow, c) in terms {
            coeffs[pow] += c;
        }
        Self::new(p, m, coeffs)
    }

    /// Embed a degree-one scalar as a tracked [`Qp`].
    pub fn to_qp(&self) -> Option<Qp> {
        if self.coeffs.len() != 1 {
            return None;
        }
        Some(Qp::from_int(self.p, self.coeffs[0].clone(), self.m as i64))
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*w")?,
                _ => write!(f, "{c}*w^{i}")?,
            }
        }
        write!(f, " (mod {}^{})", self.p, self.m)
    }
}

pub fn val(x: &PadicScalar) -> Valuation {
    x.val()
}

pub fn unit_inverse(x: &PadicScalar) -> Result<PadicScalar> {
    x.unit_inverse()
}

/// `a (a-1) ... (a-n+1) / n!` for a p-adic integer `a` known mod `p^m`.
///
/// The quotient is returned modulo `p^(m - v_p(n!))`.
pub fn binom(p: u32, a: &BigInt, m: u32, n: u64) -> Result<PadicScalar> {
    let loss = vp_factorial(p, n);
    if loss >= m as u64 {
        return Err(Error::PrecisionLoss(format!(
            "binom(_, {n}) needs more than {m} digits"
        )));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..n {
        num *= a - BigInt::from(j);
        den *= BigInt::from(j + 1);
    }
    let q = num / den;
    PadicScalar::new(p, m - loss as u32, vec![q])
}

/// [`binom`] on tracked scalars: `a` may carry any precision, the result
/// carries whatever precision the division by `n!` leaves.
pub fn binom_qp(a: &Qp, n: u64) -> Qp {
    let p = a.p();
    let mut num = Qp::one(p, a.prec() + 64);
    for j in 0..n {
        num = num.mul(&a.sub(&Qp::from_int(p, j, a.prec() + 64)));
    }
    let mut fact = BigInt::one();
    for j in 1..=n {
        fact *= BigInt::from(j);
    }
    let f = Qp::from_int(p, fact, num.prec() + 64);
    num.div(&f).expect("n! is nonzero")
}

/// Centered integer representative, handy for printing.
pub fn centered(n: &BigInt, modulus: &BigInt) -> BigInt {
    let r = n.mod_floor(modulus);
    if &r * 2 > *modulus {
        r - modulus
    } else {
        r
    }
}
