//! Truncated power series in `pi` over `Q_p` with the Frobenius
//! `pi -> (1+pi)^p - 1` and the Γ-actions `pi -> (1+pi)^a - 1`.
//!
//! Coefficients are [`Qp`] values carrying their own absolute precision,
//! so negative-valuation ("R-ring") series need no separate scale field.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{binom_qp, ppow, Qp};

/// `C(n, i)` over the integers.
pub fn binom_big(n: &BigInt, i: usize) -> BigInt {
    let mut c = BigInt::one();
    for t in 0..i {
        c = c * (n - BigInt::from(t)) / BigInt::from(t + 1);
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiSeries {
    p: u32,
    c: Vec<Qp>,
}

impl PiSeries {
    pub fn from_coeffs(p: u32, c: Vec<Qp>) -> Self {
        assert!(!c.is_empty(), "series needs at least one coefficient");
        PiSeries { p, c }
    }

    pub fn zero(p: u32, n: usize, prec: i64) -> Self {
        Self::from_coeffs(p, vec![Qp::zero(p, prec); n])
    }

    pub fn constant(x: Qp, n: usize) -> Self {
        let p = x.p();
        let prec = x.prec();
        let mut c = vec![Qp::zero(p, prec); n];
        c[0] = x;
        Self::from_coeffs(p, c)
    }

    pub fn one(p: u32, n: usize, prec: i64) -> Self {
        Self::constant(Qp::one(p, prec), n)
    }

    pub fn from_ints(p: u32, ints: &[BigInt], n: usize, prec: i64) -> Self {
        let c = (0..n)
            .map(|i| match ints.get(i) {
                Some(x) => Qp::from_int(p, x.clone(), prec),
                None => Qp::zero(p, prec),
            })
            .collect();
        Self::from_coeffs(p, c)
    }

    pub fn pi(p: u32, n: usize, prec: i64) -> Self {
        Self::from_ints(p, &[BigInt::zero(), BigInt::one()], n, prec)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of stored coefficients (the `pi`-adic precision).
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn coeff(&self, i: usize) -> &Qp {
        &self.c[i]
    }

    pub fn coeffs(&self) -> &[Qp] {
        &self.c
    }

    pub fn min_prec(&self) -> i64 {
        self.c.iter().map(Qp::prec).min().unwrap()
    }

    pub fn max_prec(&self) -> i64 {
        self.c.iter().map(Qp::prec).max().unwrap()
    }

    /// Smallest valuation among nonzero coefficients, or `None` for zero.
    pub fn min_val(&self) -> Option<i64> {
        self.c.iter().filter_map(Qp::val).min()
    }

    pub fn truncate(&self, n: usize) -> Self {
        let mut c = self.c.clone();
        c.truncate(n);
        Self::from_coeffs(self.p, c)
    }

    pub fn cap(&self, prec: i64) -> Self {
        Self::from_coeffs(self.p, self.c.iter().map(|x| x.cap(prec)).collect())
    }

    fn zip(&self, o: &Self, f: impl Fn(&Qp, &Qp) -> Qp) -> Self {
        assert_eq!(self.p, o.p);
        let n = self.n().min(o.n());
        Self::from_coeffs(self.p, (0..n).map(|i| f(&self.c[i], &o.c[i])).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, Qp::add)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, Qp::sub)
    }

    pub fn neg(&self) -> Self {
        Self::from_coeffs(self.p, self.c.iter().map(Qp::neg).collect())
    }

    pub fn scale(&self, x: &Qp) -> Self {
        Self::from_coeffs(self.p, self.c.iter().map(|c| c.mul(x)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.p, o.p);
        let n = self.n().min(o.n());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.c[0].mul(&o.c[k]);
            for i in 1..=k {
                acc = acc.add(&self.c[i].mul(&o.c[k - i]));
            }
            out.push(acc);
        }
        Self::from_coeffs(self.p, out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Self::one(self.p, self.n(), self.max_prec() + 64);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Multiplicative inverse; the constant term must be nonzero at its precision.
    pub fn inv(&self) -> Result<Self> {
        let c0i = self.c[0].inv()?;
        let n = self.n();
        let mut b: Vec<Qp> = Vec::with_capacity(n);
        b.push(c0i.clone());
        for k in 1..n {
            let mut acc = self.c[1].mul(&b[k - 1]);
            for j in 2..=k {
                acc = acc.add(&self.c[j].mul(&b[k - j]));
            }
            b.push(acc.mul(&c0i).neg());
        }
        Ok(Self::from_coeffs(self.p, b))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    /// `self(h)` for `h` with zero constant term.
    pub fn compose(&self, h: &Self) -> Self {
        assert!(h.c[0].is_zero(), "substituted series must vanish at 0");
        let n = self.n().min(h.n());
        let mut acc = Self::constant(self.c[n - 1].clone(), n);
        for i in (0..n - 1).rev() {
            acc = acc.mul(h);
            acc.c[0] = acc.c[0].add(&self.c[i]);
        }
        acc
    }

    /// Precision at which exact integer substitution data must be built.
    fn aux_prec(&self) -> i64 {
        let lo = self.min_val().unwrap_or(0).min(0);
        self.max_prec() - lo + self.n() as i64 + 8
    }

    /// `s((1+pi)^p - 1)`, coefficients fixed.
    pub fn frobenius(&self) -> Self {
        self.compose(&phi_pi(self.p, self.n(), self.aux_prec()))
    }

    pub fn frobenius_pow(&self, k: usize) -> Self {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.frobenius();
        }
        s
    }

    pub fn gamma_act(&self, g: &GammaElement) -> Self {
        self.compose(&g.pi_image(self.n(), self.aux_prec()))
    }

    /// Index of the first coefficient not known to vanish mod `p^m`; `n` if none.
    pub fn order_mod(&self, m: i64) -> usize {
        self.c.iter().position(|x| x.order() < m).unwrap_or(self.n())
    }

    /// True when some coefficient below `order_mod(m)`-blocking index is an
    /// unresolved zero, i.e. the failure is precision rather than value.
    pub fn precision_limited(&self, m: i64) -> bool {
        match self.c.iter().find(|x| x.order() < m) {
            Some(x) => x.is_zero(),
            None => false,
        }
    }

    pub fn is_zero_mod(&self, m: i64) -> bool {
        self.order_mod(m) == self.n()
    }

    /// `v_p(a_i) + i/(p-1) >= 0` for every nonzero coefficient.
    pub fn r_ring_check(&self) -> bool {
        let pm1 = self.p as i64 - 1;
        self.c
            .iter()
            .enumerate()
            .all(|(i, a)| a.val().is_none_or(|v| v * pm1 + i as i64 >= 0))
    }

    /// Common scale `e <= 0` with `p^-e * self` integral.
    pub fn scale_exp(&self) -> i64 {
        self.min_val().unwrap_or(0).min(0)
    }

    /// Integer coefficients `a_i` with `self = p^e * sum a_i pi^i` mod `p^m`.
    pub fn scaled_residues(&self, m: u32) -> Result<(i64, Vec<BigInt>)> {
        let e = self.scale_exp();
        let modulus = ppow(self.p, (m as i64 - e) as u32);
        let mut out = Vec::with_capacity(self.n());
        for (i, a) in self.c.iter().enumerate() {
            if a.prec() < m as i64 {
                return Err(Error::PrecisionLoss(format!(
                    "coefficient {i} known only mod p^{}",
                    a.prec()
                )));
            }
            out.push(a.scaled_integer(e).mod_floor(&modulus));
        }
        Ok((e, out))
    }

    /// Canonical text `p^e * (a0 + a1*pi + ...) mod (p^M, pi^N)`.
    pub fn to_text(&self, m: u32) -> Result<String> {
        let (e, a) = self.scaled_residues(m)?;
        let terms: Vec<String> = a
            .iter()
            .enumerate()
            .map(|(i, x)| match i {
                0 => x.to_string(),
                1 => format!("{x}*pi"),
                _ => format!("{x}*pi^{i}"),
            })
            .collect();
        Ok(format!(
            "{}^{} * ({}) mod ({}^{}, pi^{})",
            self.p,
            e,
            terms.join(" + "),
            self.p,
            m,
            self.n()
        ))
    }

    pub fn to_json(&self, m: u32) -> Result<SeriesJson> {
        let (scale, a) = self.scaled_residues(m)?;
        Ok(SeriesJson {
            scale,
            coeffs: a.iter().map(|x| x.to_string()).collect(),
            p: self.p,
            m,
            n: self.n(),
        })
    }
}

impl fmt::Display for PiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.c.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// JSON form of a series; coefficients are decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub scale: i64,
    pub coeffs: Vec<String>,
    pub p: u32,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
}

impl SeriesJson {
    pub fn to_series(&self) -> Result<PiSeries> {
        let prec = self.m as i64 - self.scale.min(0);
        let mut c = Vec::with_capacity(self.n);
        for s in &self.coeffs {
            let x: BigInt = s.parse().map_err(|_| Error::Parse(format!("coefficient `{s}`")))?;
            c.push(Qp::from_int(self.p, x, prec).shift(self.scale));
        }
        c.resize(self.n, Qp::zero(self.p, self.m as i64));
        Ok(PiSeries::from_coeffs(self.p, c).cap(self.m as i64))
    }
}

/// `(1+pi)^p - 1`.
pub fn phi_pi(p: u32, n: usize, prec: i64) -> PiSeries {
    let pb = BigInt::from(p);
    let ints: Vec<BigInt> = (0..n).map(|i| if i == 0 { BigInt::zero() } else { binom_big(&pb, i) }).collect();
    PiSeries::from_ints(p, &ints, n, prec)
}

/// `q = phi(pi)/pi`.
pub fn q_series(p: u32, n: usize, prec: i64) -> PiSeries {
    let pb = BigInt::from(p);
    let ints: Vec<BigInt> = (0..n).map(|i| binom_big(&pb, i + 1)).collect();
    PiSeries::from_ints(p, &ints, n, prec)
}

/// `q_{m+1} = phi^m(q) = sum_{j<p} (1+pi)^{j p^m}`, built from exact binomials.
pub fn q_n(p: u32, m: u32, n: usize, prec: i64) -> PiSeries {
    let pm = ppow(p, m);
    let ints: Vec<BigInt> = (0..n)
        .map(|i| {
            (0..p)
                .map(|j| binom_big(&(&pm * BigInt::from(j)), i))
                .fold(BigInt::zero(), |a, b| a + b)
        })
        .collect();
    PiSeries::from_ints(p, &ints, n, prec)
}

fn floor_log(p: u32, x: usize) -> i64 {
    let mut k = 0;
    let mut t = p as usize;
    while t <= x {
        k += 1;
        t *= p as usize;
    }
    k
}

/// `lambda_f = prod_{n>=0} q_{nf+1}/p`, known mod `p^prec` coefficientwise.
///
/// Factor `n` differs from 1 by a series whose coefficients have valuation at
/// least `nf - 1 - floor(log_p(N-1))`; enough factors are multiplied for the
/// tail to sit below `prec`, and each output coefficient is capped by the
/// tail bound times the smallest valuation seen so far.
pub fn lambda_f(p: u32, f: usize, n: usize, prec: i64) -> PiSeries {
    let lg = if n > 1 { floor_log(p, n - 1) } else { 0 };
    let denom = (n as i64 - 1).max(0) / (p as i64 - 1) + 1;
    let need = prec + denom + 1;
    let mut n0 = 1usize;
    while (n0 * f) as i64 - 1 - lg < need {
        n0 += 1;
    }
    let tail = (n0 * f) as i64 - 1 - lg;
    let work = prec + denom + 4;
    let inv_p = Qp::from_ratio(p, 1, p, work + 2);
    let mut acc = PiSeries::one(p, n, work);
    for k in 0..n0 {
        let factor = q_n(p, (k * f) as u32, n, work + 1).scale(&inv_p);
        acc = acc.mul(&factor);
    }
    let mut lowest = i64::MAX;
    let c = acc
        .c
        .iter()
        .map(|a| {
            lowest = lowest.min(a.val().unwrap_or(a.prec()));
            a.cap((tail + lowest).min(prec))
        })
        .collect();
    PiSeries::from_coeffs(p, c)
}

/// `lambda_{f,gamma} = lambda_f / gamma(lambda_f)`.
pub fn lambda_f_gamma(p: u32, f: usize, g: &GammaElement, n: usize, prec: i64) -> Result<PiSeries> {
    let l = lambda_f(p, f, n, prec);
    l.div(&l.gamma_act(g))
}

/// `chi(gamma) = a`, a p-adic unit; `prec = None` means an exact integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaElement {
    pub p: u32,
    pub a: BigInt,
    pub prec: Option<i64>,
}

impl GammaElement {
    pub fn from_int(p: u32, a: impl Into<BigInt>) -> Result<Self> {
        let a = a.into();
        if a.mod_floor(&BigInt::from(p)).is_zero() {
            return Err(Error::Invalid(format!("gamma value {a} is not a unit")));
        }
        Ok(GammaElement { p, a, prec: None })
    }

    /// A fixed unit of order `p-1`: the Teichmüller lift of the least
    /// primitive root, known mod `p^prec`.
    pub fn teichmuller(p: u32, prec: i64) -> Self {
        let g = (1..p as u64)
            .find(|&g| (1..(p as u64 - 1)).all(|e| modpow(g, e, p as u64) != 1))
            .unwrap_or(1);
        let modulus = ppow(p, prec as u32);
        let mut x = BigInt::from(g);
        for _ in 0..prec {
            x = x.modpow(&BigInt::from(p), &modulus);
        }
        GammaElement { p, a: x, prec: Some(prec) }
    }

    pub fn identity(p: u32) -> Self {
        GammaElement { p, a: BigInt::one(), prec: None }
    }

    pub fn as_qp(&self, prec: i64) -> Qp {
        let pr = self.prec.map_or(prec, |q| q.min(prec));
        Qp::from_int(self.p, self.a.clone(), pr)
    }

    /// The element with `chi = chi(self) * chi(o)`.
    pub fn compose(&self, o: &Self) -> Self {
        let prec = match (self.prec, o.prec) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(i64::MAX).min(b.unwrap_or(i64::MAX))),
        };
        let a = &self.a * &o.a;
        let a = match prec {
            Some(pr) => a.mod_floor(&ppow(self.p, pr as u32)),
            None => a,
        };
        GammaElement { p: self.p, a, prec }
    }

    /// `(1+pi)^a - 1` truncated to `n` terms.
    pub fn pi_image(&self, n: usize, prec: i64) -> PiSeries {
        let a = self.as_qp(prec);
        let mut c = vec![Qp::zero(self.p, prec)];
        for i in 1..n {
            c.push(binom_qp(&a, i as u64));
        }
        PiSeries::from_coeffs(self.p, c)
    }
}

fn modpow(b: u64, e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    let mut b = b % m;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// An `f`-tuple of series; component `i` belongs to the embedding `tau_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauSeries {
    pub comps: Vec<PiSeries>,
}

impl TauSeries {
    pub fn new(comps: Vec<PiSeries>) -> Self {
        assert!(!comps.is_empty());
        TauSeries { comps }
    }

    pub fn f(&self) -> usize {
        self.comps.len()
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.f(), o.f());
        TauSeries::new(self.comps.iter().zip(&o.comps).map(|(a, b)| a.mul(b)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        TauSeries::new(self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect())
    }

    /// Component `i` of the image is `phi` of component `i+1`.
    pub fn tau_frobenius(&self) -> Self {
        let f = self.f();
        TauSeries::new((0..f).map(|i| self.comps[(i + 1) % f].frobenius()).collect())
    }

    pub fn gamma_act(&self, g: &GammaElement) -> Self {
        TauSeries::new(self.comps.iter().map(|s| s.gamma_act(g)).collect())
    }

    /// `t * phi(t) * ... * phi^{f-1}(t)`.
    pub fn nm_phi(&self) -> Self {
        let mut acc = self.clone();
        let mut cur = self.clone();
        for _ in 1..self.f() {
            cur = cur.tau_frobenius();
            acc = acc.mul(&cur);
        }
        acc
    }

    pub fn order_mod(&self, m: i64) -> usize {
        self.comps.iter().map(|s| s.order_mod(m)).min().unwrap()
    }
}

pub fn frobenius(s: &PiSeries) -> PiSeries {
    s.frobenius()
}

pub fn gamma_act(s: &PiSeries, g: &GammaElement) -> PiSeries {
    s.gamma_act(g)
}

pub fn tau_frobenius(t: &TauSeries) -> TauSeries {
    t.tau_frobenius()
}

pub fn nm_phi(t: &TauSeries) -> TauSeries {
    t.nm_phi()
}

pub fn r_ring_check(s: &PiSeries) -> bool {
    s.r_ring_check()
}
