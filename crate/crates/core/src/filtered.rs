//! Rank-two filtered φ-modules over `E ⊗ K_f = E^f` with `E = Q_p`.
//!
//! The Frobenius is a tuple of 2×2 matrices `A_s`; column `j` of `A_s` gives
//! `φ(η_j)` in component `s`, so `φ` maps component `s+1` to component `s`.
//! Filtration slot `i` carries the weight `k_i` and the line `x_i η_1 + y_i η_2`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::padic::Qp;
use crate::reduction::det_reduction;

pub type QMat = [[Qp; 2]; 2];

pub fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_det(a: &QMat) -> Qp {
    a[0][0].mul(&a[1][1]).sub(&a[0][1].mul(&a[1][0]))
}

pub fn mat_trace(a: &QMat) -> Qp {
    a[0][0].add(&a[1][1])
}

pub fn mat_apply(a: &QMat, v: &[Qp; 2]) -> [Qp; 2] {
    [a[0][0].mul(&v[0]).add(&a[0][1].mul(&v[1])), a[1][0].mul(&v[0]).add(&a[1][1].mul(&v[1]))]
}

fn cross(u: &[Qp; 2], v: &[Qp; 2]) -> Qp {
    u[0].mul(&v[1]).sub(&u[1].mul(&v[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `diag(α, δ)` in every component.
    Standard,
    /// `[[α, 0], [*, δ]]`: the `η_2`-line is φ-stable.
    Triangular,
    /// `[[α, 0], [γ, α]]`.
    NonSemisimple,
    /// `diag(α, α)`.
    Scalar,
    /// No normal form asserted; classified by the line analysis.
    General,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltMod2 {
    pub p: u32,
    pub weights: Vec<i64>,
    /// `frob[r][c][s]`: entry `(r, c)` of `A_s`.
    pub frob: [[Vec<Qp>; 2]; 2],
    pub x: Vec<Qp>,
    pub y: Vec<Qp>,
    pub form: Form,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Irreducible,
    SplitReducible,
    NonSplitReducible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slack {
    /// `v_p(det φ^f) - sum k_i`.
    pub det: i64,
    /// `t_N - t_H` for each φ-stable line considered, doubled to stay integral.
    pub lines_doubled: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationVerdict {
    pub admissible: bool,
    pub kind: Option<Kind>,
    pub submodule_weights: Option<Vec<i64>>,
    pub f_scalar: bool,
    pub slack: Slack,
}

impl FiltMod2 {
    pub fn new(
        p: u32,
        weights: Vec<i64>,
        frob: [[Vec<Qp>; 2]; 2],
        x: Vec<Qp>,
        y: Vec<Qp>,
        form: Form,
    ) -> Result<Self> {
        let f = weights.len();
        if f == 0 {
            return Err(Error::Invalid("f must be positive".into()));
        }
        if weights.iter().any(|&k| k < 0) {
            return Err(Error::Invalid("weights must be nonnegative".into()));
        }
        let lens_ok = frob.iter().flatten().all(|v| v.len() == f) && x.len() == f && y.len() == f;
        if !lens_ok {
            return Err(Error::Invalid("tuple lengths disagree with f".into()));
        }
        let d = FiltMod2 { p, weights, frob, x, y, form };
        for i in 0..f {
            if d.x[i].is_zero() && d.y[i].is_zero() {
                return Err(Error::Invalid(format!("filtration vector {i} is zero")));
            }
            if mat_det(&d.slot(i)).is_zero() {
                return Err(Error::Invalid(format!("Frobenius component {i} is singular")));
            }
        }
        d.check_form()?;
        Ok(d)
    }

    fn check_form(&self) -> Result<()> {
        let f = self.f();
        let bad = |what: &str| Err(Error::Invalid(format!("{:?} form: {what}", self.form)));
        for s in 0..f {
            let a = self.slot(s);
            match self.form {
                Form::Standard if !(a[0][1].is_zero() && a[1][0].is_zero()) => return bad("off-diagonal entry"),
                Form::Triangular if !a[0][1].is_zero() => return bad("upper-right entry"),
                Form::NonSemisimple if !(a[0][1].is_zero() && a[0][0].eq_at(&a[1][1])) => {
                    return bad("expected [[α,0],[γ,α]]")
                }
                Form::Scalar if !(a[0][1].is_zero() && a[1][0].is_zero() && a[0][0].eq_at(&a[1][1])) => {
                    return bad("expected diag(α,α)")
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn f(&self) -> usize {
        self.weights.len()
    }

    pub fn slot(&self, s: usize) -> QMat {
        let e = |r: usize, c: usize| self.frob[r][c][s].clone();
        [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
    }

    pub fn weight_sum(&self) -> i64 {
        self.weights.iter().sum()
    }

    fn nm(&self, r: usize, c: usize) -> Qp {
        self.frob[r][c].iter().skip(1).fold(self.frob[r][c][0].clone(), |a, b| a.mul(b))
    }

    fn filt(&self, i: usize) -> [Qp; 2] {
        [self.x[i].clone(), self.y[i].clone()]
    }

    /// Scalars `(prec)`: the smallest precision among all inputs.
    pub fn min_prec(&self) -> i64 {
        self.frob
            .iter()
            .flatten()
            .flatten()
            .chain(&self.x)
            .chain(&self.y)
            .map(Qp::prec)
            .min()
            .unwrap()
    }
}

/// Component `s` of `A φ(A) ... φ^{f-1}(A)` is `A_s A_{s+1} ... A_{s+f-1}`.
pub fn phi_power_f(d: &FiltMod2) -> Vec<QMat> {
    let f = d.f();
    (0..f)
        .map(|s| {
            let mut acc = d.slot(s);
            for j in 1..f {
                acc = mat_mul(&acc, &d.slot((s + j) % f));
            }
            acc
        })
        .collect()
}

fn v_or_err(x: &Qp, what: &str) -> Result<i64> {
    x.val().ok_or_else(|| Error::Invalid(format!("{what} vanishes at working precision")))
}

/// One φ-stable line of component 0 and its Hodge and Newton numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableLine {
    /// Filtration slots whose pulled-back line equals this one.
    pub slots: Vec<usize>,
    pub t_h: i64,
    pub t_n_doubled: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAnalysis {
    pub lines: Vec<StableLine>,
    /// Whether `φ^f` is scalar, so that every line is stable.
    pub f_scalar: bool,
    pub det_val: i64,
}

/// Enumerate the φ-stable lines directly: pull each filtration line back to
/// component 0, test it against `φ^f`, and account for the remaining
/// eigenlines (rational or not) by the Newton polygon of `φ^f`.
pub fn stable_lines(d: &FiltMod2) -> Result<LineAnalysis> {
    let f = d.f();
    let phi0 = &phi_power_f(d)[0];
    let det = mat_det(phi0);
    let tr = mat_trace(phi0);
    let det_val = v_or_err(&det, "det φ^f")?;
    let f_scalar = phi0[0][1].is_zero() && phi0[1][0].is_zero() && phi0[0][0].eq_at(&phi0[1][1]);

    let mut prefix = d.slot(0);
    let mut pulled: Vec<(usize, [Qp; 2])> = Vec::new();
    for i in 0..f {
        let g = if i == 0 { d.filt(0) } else { mat_apply(&prefix, &d.filt(i)) };
        if i > 0 && i + 1 < f {
            prefix = mat_mul(&prefix, &d.slot(i));
        }
        if d.weights[i] > 0 {
            pulled.push((i, g));
        }
    }

    let mut lines: Vec<(StableLine, [Qp; 2], Qp)> = Vec::new();
    for (i, g) in pulled {
        let img = mat_apply(phi0, &g);
        if !cross(&img, &g).is_zero() {
            continue;
        }
        if let Some(entry) = lines.iter_mut().find(|(_, h, _)| cross(h, &g).is_zero()) {
            entry.0.slots.push(i);
            entry.0.t_h += d.weights[i];
            continue;
        }
        let j = if g[0].is_zero() { 1 } else { 0 };
        let lambda = img[j].div(&g[j])?;
        let t_n = 2 * v_or_err(&lambda, "eigenvalue")?;
        lines.push((StableLine { slots: vec![i], t_h: d.weights[i], t_n_doubled: t_n }, g, lambda));
    }

    let mut out: Vec<StableLine> = lines.iter().map(|l| l.0.clone()).collect();
    if f_scalar {
        let t_n = 2 * v_or_err(&phi0[0][0], "eigenvalue")?;
        out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: t_n });
        out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: t_n });
    } else {
        match lines.len() {
            0 => {
                let disc = tr.mul(&tr).sub(&det.mul_int(4));
                if disc.is_zero() {
                    out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: det_val });
                } else {
                    let (a, b) = newton_slopes_doubled(&tr, det_val);
                    out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: a });
                    out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: b });
                }
            }
            1 => {
                let other = det.div(&lines[0].2)?;
                if !other.eq_at(&lines[0].2) {
                    let t_n = 2 * v_or_err(&other, "eigenvalue")?;
                    out.push(StableLine { slots: vec![], t_h: 0, t_n_doubled: t_n });
                }
            }
            _ => {}
        }
    }
    Ok(LineAnalysis { lines: out, f_scalar, det_val })
}

/// Doubled slopes of `X^2 - t X + d` with `v(d) = det_val`.
fn newton_slopes_doubled(tr: &Qp, det_val: i64) -> (i64, i64) {
    match tr.val() {
        Some(vt) if 2 * vt < det_val => (2 * vt, 2 * (det_val - vt)),
        _ => (det_val, det_val),
    }
}

fn verdict_from_lines(d: &FiltMod2, la: &LineAnalysis) -> ClassificationVerdict {
    let total = d.weight_sum();
    let det_slack = la.det_val - total;
    let lines_doubled: Vec<i64> = la.lines.iter().map(|l| l.t_n_doubled - 2 * l.t_h).collect();
    let admissible = det_slack == 0 && lines_doubled.iter().all(|&s| s >= 0);
    let slack = Slack { det: det_slack, lines_doubled: lines_doubled.clone() };
    if !admissible {
        return ClassificationVerdict { admissible, kind: None, submodule_weights: None, f_scalar: la.f_scalar, slack };
    }
    let equal: Vec<&StableLine> = la.lines.iter().zip(&lines_doubled).filter(|(_, &s)| s == 0).map(|(l, _)| l).collect();
    let kind = match equal.len() {
        0 => Kind::Irreducible,
        1 => Kind::NonSplitReducible,
        _ => Kind::SplitReducible,
    };
    let submodule_weights = equal.first().map(|l| {
        (0..d.f()).map(|i| if l.slots.contains(&i) { d.weights[i] } else { 0 }).collect()
    });
    ClassificationVerdict { admissible, kind: Some(kind), submodule_weights, f_scalar: la.f_scalar, slack }
}

/// Classification from the stable-line analysis alone.
pub fn classify_by_lines(d: &FiltMod2) -> Result<ClassificationVerdict> {
    Ok(verdict_from_lines(d, &stable_lines(d)?))
}

struct StandardData {
    va: i64,
    vd: i64,
    hx: i64,
    hy: i64,
    scalar: bool,
}

fn standard_data(d: &FiltMod2) -> Result<StandardData> {
    let na = d.nm(0, 0);
    let nd = d.nm(1, 1);
    let sum_where = |pred: &dyn Fn(usize) -> bool| (0..d.f()).filter(|&i| pred(i)).map(|i| d.weights[i]).sum();
    Ok(StandardData {
        va: v_or_err(&na, "Nm α")?,
        vd: v_or_err(&nd, "Nm δ")?,
        hx: sum_where(&|i| d.x[i].is_zero()),
        hy: sum_where(&|i| d.y[i].is_zero()),
        scalar: na.eq_at(&nd),
    })
}

pub fn weak_admissible(d: &FiltMod2) -> Result<bool> {
    let total = d.weight_sum();
    match d.form {
        Form::Standard => {
            let s = standard_data(d)?;
            if s.scalar {
                return Ok(classify_by_lines(d)?.admissible);
            }
            Ok(s.va + s.vd == total && s.va >= s.hy && s.vd >= s.hx)
        }
        Form::NonSemisimple => {
            let va = v_or_err(&d.nm(0, 0), "Nm α")?;
            let hx: i64 = (0..d.f()).filter(|&i| d.x[i].is_zero()).map(|i| d.weights[i]).sum();
            Ok(2 * va == total && va >= hx)
        }
        _ => Ok(classify_by_lines(d)?.admissible),
    }
}

/// `I_0^+ ∩ J_x ∩ J_y = ∅`: no positive-weight slot has both `x_i, y_i` nonzero.
pub fn index_sets_split(d: &FiltMod2) -> bool {
    (0..d.f()).all(|i| d.weights[i] == 0 || d.x[i].is_zero() || d.y[i].is_zero())
}

pub fn classify(d: &FiltMod2) -> Result<ClassificationVerdict> {
    if d.form != Form::Standard {
        let v = classify_by_lines(d)?;
        if !v.admissible {
            return Err(Error::NotAdmissible);
        }
        return Ok(v);
    }
    let s = standard_data(d)?;
    if s.scalar {
        let v = classify_by_lines(d)?;
        return if v.admissible { Ok(v) } else { Err(Error::NotAdmissible) };
    }
    let total = d.weight_sum();
    if !(s.va + s.vd == total && s.va >= s.hy && s.vd >= s.hx) {
        return Err(Error::NotAdmissible);
    }
    let e1 = s.va == s.hy;
    let e2 = s.vd == s.hx;
    let kind = match (e1, e2) {
        (false, false) => Kind::Irreducible,
        (true, true) => Kind::SplitReducible,
        _ => Kind::NonSplitReducible,
    };
    let submodule_weights = if e2 {
        Some((0..d.f()).map(|i| if d.x[i].is_zero() { d.weights[i] } else { 0 }).collect())
    } else if e1 {
        Some((0..d.f()).map(|i| if d.y[i].is_zero() { d.weights[i] } else { 0 }).collect())
    } else {
        None
    };
    Ok(ClassificationVerdict {
        admissible: true,
        kind: Some(kind),
        submodule_weights,
        f_scalar: false,
        slack: Slack { det: 0, lines_doubled: vec![2 * (s.va - s.hy), 2 * (s.vd - s.hx)] },
    })
}

/// `v_p(Tr φ^f) = 0`, which forces reducibility.
pub fn trace_reducibility(d: &FiltMod2) -> Result<bool> {
    if d.weights.iter().all(|&k| k == 0) {
        return Err(Error::AllWeightsZero);
    }
    if !weak_admissible(d)? {
        return Err(Error::NotAdmissible);
    }
    let tr = mat_trace(&phi_power_f(d)[0]);
    Ok(tr.val() == Some(0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetData {
    pub weights: Vec<i64>,
    /// `det A_s`, the Frobenius of the wedge square in component `s`.
    pub frob: Vec<Qp>,
    /// Exponent of the determinant's reduction at level `f`.
    pub reduction_exp: i128,
}

pub fn det_weights(d: &FiltMod2) -> Result<DetData> {
    if !weak_admissible(d)? {
        return Err(Error::NotAdmissible);
    }
    Ok(DetData {
        weights: d.weights.clone(),
        frob: (0..d.f()).map(|s| mat_det(&d.slot(s))).collect(),
        reduction_exp: det_reduction(&d.weights, d.p, d.f())?.exp,
    })
}

/// Parse `7`, `"-3"`, `"1/9"` as a scalar at precision `prec`.
pub fn parse_scalar(p: u32, v: &Value, prec: i64) -> Result<Qp> {
    let bad = || Error::Parse(format!("scalar {v}"));
    match v {
        Value::Number(n) => Ok(Qp::from_int(p, n.as_i64().ok_or_else(bad)?, prec)),
        Value::String(s) => {
            let (a, b) = s.split_once('/').unwrap_or((s.as_str(), "1"));
            let a: num_bigint::BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: num_bigint::BigInt = b.trim().parse().map_err(|_| bad())?;
            if num_traits::Zero::is_zero(&b) {
                return Err(bad());
            }
            Ok(Qp::from_ratio(p, a, b, prec))
        }
        _ => Err(bad()),
    }
}

/// Render a scalar as `n` or `n/p^e` with `n` centered mod `p^m`.
pub fn render_scalar(x: &Qp, m: u32) -> String {
    let p = x.p();
    match x.val() {
        None => "0".into(),
        Some(v) if v >= 0 => {
            let r = x.residue(m.min(x.prec().max(0) as u32)).unwrap_or_default();
            let modulus = crate::padic::ppow(p, m);
            crate::padic::centered(&r, &modulus).to_string()
        }
        Some(v) => {
            let y = x.shift(-v);
            let n = y.residue(m.min(y.prec().max(0) as u32)).unwrap_or_default();
            let modulus = crate::padic::ppow(p, m);
            format!("{}/{}", crate::padic::centered(&n, &modulus), crate::padic::ppow(p, (-v) as u32))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiltMod2Json {
    pub p: u32,
    pub f: usize,
    pub weights: Vec<i64>,
    pub frob: [[Vec<Value>; 2]; 2],
    pub x: Vec<Value>,
    pub y: Vec<Value>,
    pub form: Form,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prec: Option<i64>,
}

pub const DEFAULT_SCALAR_PREC: i64 = 64;

impl FiltMod2Json {
    pub fn to_module(&self) -> Result<FiltMod2> {
        if self.weights.len() != self.f {
            return Err(Error::Invalid("weights length differs from f".into()));
        }
        let prec = self.prec.unwrap_or(DEFAULT_SCALAR_PREC);
        let conv = |v: &Vec<Value>| v.iter().map(|x| parse_scalar(self.p, x, prec)).collect::<Result<Vec<_>>>();
        let frob = [
            [conv(&self.frob[0][0])?, conv(&self.frob[0][1])?],
            [conv(&self.frob[1][0])?, conv(&self.frob[1][1])?],
        ];
        FiltMod2::new(self.p, self.weights.clone(), frob, conv(&self.x)?, conv(&self.y)?, self.form)
    }

    pub fn from_module(d: &FiltMod2, m: u32) -> Self {
        let conv = |v: &Vec<Qp>| v.iter().map(|x| Value::String(render_scalar(x, m))).collect();
        FiltMod2Json {
            p: d.p,
            f: d.f(),
            weights: d.weights.clone(),
            frob: [[conv(&d.frob[0][0]), conv(&d.frob[0][1])], [conv(&d.frob[1][0]), conv(&d.frob[1][1])]],
            x: conv(&d.x),
            y: conv(&d.y),
            form: d.form,
            prec: Some(m as i64),
        }
    }
}
