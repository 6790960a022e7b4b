use std::io::{Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use wachkit::characters::{bracket_weights, enumerate_induced_classes, rank1_wach, CrystChar};
use wachkit::families::{
    build_pi, class_membership, qbar, sample_gammas, symbolic_qf, types_for_induced, FamilySpec, SMat, TypeVector,
};
use wachkit::filtered::{classify, det_weights, trace_reducibility, FiltMod2Json};
use wachkit::gamma::{render_matrix, solve_family, verify, SolveGammaJson};
use wachkit::padic::{centered, ppow, PrecisionBudget};
use wachkit::reduction::{reduce_from_sub_weights, reduce_induced};
use wachkit::series::GammaElement;
use wachkit::Error;

#[derive(Parser)]
#[command(name = "wachkit", version, about = "Wach modules and mod-p reductions of 2-dimensional crystalline representations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, global = true)]
    p: Option<u32>,
    #[arg(long, global = true)]
    f: Option<usize>,
    /// Comma-separated weights `k_0,...,k_{f-1}`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Option<Vec<i64>>,
    /// Level-`2f` vector for induced reductions, or level-`f` submodule weights.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    l: Option<Vec<i64>>,
    /// Type vector such as `1,2`.
    #[arg(long, global = true)]
    types: Option<String>,
    /// Evaluation point `a_0,...,a_{f-1}`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<i64>>,
    /// `chi(gamma)` as an integer, or `teich` for the Teichmüller unit.
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long = "prec-p", global = true, env = "WACHKIT_PREC_P", default_value_t = 8)]
    prec_p: u32,
    #[arg(long = "prec-pi", global = true, env = "WACHKIT_PREC_PI", default_value_t = 12)]
    prec_pi: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a rank-one Wach module and verify its Γ-action.
    Char,
    /// Build Π(a) and the filtered module of a family.
    FamilyBuild,
    /// Solve for two Γ-elements and their product and verify commutation and cocycle.
    FamilyVerify,
    /// Classify a filtered module read as JSON from stdin.
    Wadm,
    /// Semisimplified mod-p reduction.
    Reduce,
    /// List the induced isomorphism classes with given weights.
    Classify,
    /// Sweep all type vectors of length f.
    Enumerate,
    /// Solve for the Γ-action of one element.
    SolveGamma,
}

enum Failure {
    Usage(String, String),
    Verification(String, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_verification() {
            Failure::Verification(e.code().into(), e.to_string())
        } else {
            Failure::Usage(e.code().into(), e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage("usage".into(), msg.into())
}

/// A report plus whether its verification passed.
struct Report {
    body: Value,
    ok: bool,
}

impl Report {
    fn ok(body: Value) -> Self {
        Report { body, ok: true }
    }
}

type Outcome = std::result::Result<Report, Failure>;

impl Common {
    fn p(&self) -> std::result::Result<u32, Failure> {
        self.p.ok_or_else(|| usage("--p is required"))
    }

    fn weights(&self) -> std::result::Result<Vec<i64>, Failure> {
        let w = self.weights.clone().ok_or_else(|| usage("--weights is required"))?;
        if let Some(f) = self.f {
            if f != w.len() {
                return Err(usage(format!("--f {f} but {} weights", w.len())));
            }
        }
        Ok(w)
    }

    fn budget(&self) -> std::result::Result<PrecisionBudget, Failure> {
        Ok(PrecisionBudget::new(self.p()?, self.prec_p, self.prec_pi)?)
    }

    fn gamma(&self, p: u32) -> std::result::Result<Option<GammaElement>, Failure> {
        match self.gamma.as_deref() {
            None => Ok(None),
            Some("teich") => Ok(Some(GammaElement::teichmuller(p, self.prec_p as i64 + 80))),
            Some(s) => {
                let a: i64 = s.parse().map_err(|_| usage(format!("--gamma {s}: expected an integer or `teich`")))?;
                Ok(Some(GammaElement::from_int(p, a)?))
            }
        }
    }

    fn family_spec(&self) -> std::result::Result<FamilySpec, Failure> {
        let budget = self.budget()?;
        let weights = self.weights()?;
        let types: TypeVector = match (&self.types, &self.l) {
            (Some(t), _) => t.parse()?,
            (None, Some(l)) => types_for_induced(l)?.normalized,
            (None, None) => return Err(usage("--types or --l is required")),
        };
        let alpha = self.alpha.as_ref().map(|a| a.iter().map(|&x| x.into()).collect());
        Ok(FamilySpec::new(budget, weights, types, None, alpha, None)?)
    }
}

fn render_smat(m: &SMat, prec: u32) -> std::result::Result<Value, Failure> {
    let t = |r: usize, c: usize| m[r][c].cap(prec as i64).to_text(prec);
    Ok(json!([[t(0, 0)?, t(0, 1)?], [t(1, 0)?, t(1, 1)?]]))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn cmd_char(c: &Common) -> Outcome {
    let budget = c.budget()?;
    let p = budget.p;
    let exps = c.weights()?;
    let chi = CrystChar::trivial_c(p, budget.m, exps)?;
    let w = rank1_wach(&chi, budget)?;
    let gammas = match c.gamma(p)? {
        Some(g) => vec![g],
        None => sample_gammas(p, budget.m as i64 + 80),
    };
    let mut rows = Vec::new();
    let mut ok = true;
    for g in &gammas {
        let r = w.gamma(g)?;
        ok &= r.residual_order >= budget.n;
        let comps: Vec<String> = r.g.comps.iter().map(|s| s.to_text(budget.m)).collect::<wachkit::Result<_>>()?;
        rows.push(json!({"gamma": g.a.to_string(), "residual_order": r.residual_order, "g": comps}));
    }
    let phi: Vec<String> = w.phi_vec().comps.iter().map(|s| s.to_text(budget.m)).collect::<wachkit::Result<_>>()?;
    Ok(Report {
        body: json!({
            "character": to_value(&chi.to_json()),
            "display": chi.to_string(),
            "phi": phi,
            "target": budget.n,
            "rows": rows,
            "passes": ok,
        }),
        ok,
    })
}

fn cmd_family_build(c: &Common) -> Outcome {
    let spec = c.family_spec()?;
    let (fam, d) = build_pi(&spec)?;
    let m = spec.budget.m;
    let modulus = ppow(spec.p, m);
    let pi: Vec<Value> = fam.pi.slots.iter().map(|s| render_smat(s, m)).collect::<Result<_, _>>()?;
    let z: Vec<Vec<String>> = fam.z.iter().map(|c| c.iter().map(|x| centered(x, &modulus).to_string()).collect()).collect();
    Ok(Report::ok(json!({
        "types": spec.types.to_string(),
        "weights": spec.weights,
        "alpha": spec.alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "ell": spec.ell,
        "m_z": spec.m_z(),
        "z": z,
        "pi": pi,
        "filtered": to_value(&FiltMod2Json::from_module(&d, m)),
        "precision": {"M": m, "N": spec.budget.n},
    })))
}

fn cmd_family_verify(c: &Common) -> Outcome {
    let spec = c.family_spec()?;
    let p = spec.p;
    let g1 = match c.gamma(p)? {
        Some(g) => g,
        None => GammaElement::from_int(p, 1 + p as i64)?,
    };
    let g2 = if p == 2 { GammaElement::from_int(p, -1)? } else { GammaElement::teichmuller(p, spec.budget.m as i64 + 80) };
    let g12 = g1.compose(&g2);
    let sol = solve_family(&spec, &[g1, g2, g12])?;
    let r = verify(&sol.family.pi, &sol.gammas[0], &sol.gammas[1], &sol.gammas[2], spec.budget.m as i64, spec.budget.n);
    let ok = r.passes;
    let gammas: Vec<String> = sol.gammas.iter().map(|g| g.gamma.a.to_string()).collect();
    let mut body = to_value(&r);
    body["gammas"] = json!(gammas);
    body["types"] = json!(spec.types.to_string());
    Ok(Report { body, ok })
}

fn cmd_wadm() -> Outcome {
    let mut input = String::new();
    std::io::stdin().read_to_string(&mut input).map_err(|e| usage(format!("stdin: {e}")))?;
    let j: FiltMod2Json = serde_json::from_str(&input).map_err(|e| Failure::Usage("parse".into(), e.to_string()))?;
    let d = j.to_module()?;
    let verdict = match classify(&d) {
        Ok(v) => to_value(&v),
        Err(Error::NotAdmissible) => json!({"admissible": false}),
        Err(e) => return Err(e.into()),
    };
    let mut body = json!({"verdict": verdict});
    if verdict["admissible"] == json!(true) {
        body["det"] = to_value(&det_weights(&d)?.reduction_exp);
        if d.weights.iter().any(|&k| k > 0) {
            body["trace_unit"] = json!(trace_reducibility(&d)?);
        }
    }
    Ok(Report::ok(body))
}

fn cmd_reduce(c: &Common) -> Outcome {
    let p = c.p()?;
    let l = c.l.clone().ok_or_else(|| usage("--l is required"))?;
    let weights = c.weights.clone();
    let f = c.f.or(weights.as_ref().map(|w| w.len())).unwrap_or(l.len() / 2);
    let r = if l.len() == 2 * f {
        if let Some(w) = &weights {
            if &bracket_weights(&l)? != w {
                return Err(usage("--l does not bracket to --weights"));
            }
        }
        reduce_induced(&l, p, f)?
    } else if l.len() == f {
        let w = c.weights()?;
        reduce_from_sub_weights(p, &w, &l, f)?
    } else {
        return Err(usage(format!("--l has length {}, expected {} or {}", l.len(), f, 2 * f)));
    };
    Ok(Report::ok(to_value(&r)))
}

fn cmd_classify(c: &Common) -> Outcome {
    let p = c.p()?;
    let w = c.weights()?;
    let f = w.len();
    let classes = enumerate_induced_classes(&w)?;
    let mut rows: Vec<(Vec<i64>, Value)> = classes
        .par_iter()
        .map(|l| -> Result<_, Error> {
            let r = reduce_induced(l, p, f)?;
            let tv = types_for_induced(l)?.normalized;
            Ok((l.clone(), json!({"l": l, "types": tv.to_string(), "reduction": to_value(&r)})))
        })
        .collect::<Result<_, _>>()?;
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Report::ok(json!({
        "weights": w,
        "count": rows.len(),
        "rows": rows.into_iter().map(|r| r.1).collect::<Vec<_>>(),
    })))
}

fn cmd_enumerate(c: &Common) -> Outcome {
    let f = c.f.or(c.weights.as_ref().map(|w| w.len())).ok_or_else(|| usage("--f is required"))?;
    let p = c.p.unwrap_or(3);
    let w = c.weights.clone().unwrap_or_else(|| vec![1; f]);
    if w.len() != f {
        return Err(usage("--weights length differs from --f"));
    }
    let units = vec![1; f];
    let rows: Vec<(String, bool, Value)> = TypeVector::all(f)
        .par_iter()
        .map(|tv| -> Result<_, Error> {
            let class = class_membership(tv);
            let (_, scalar) = symbolic_qf(p, tv, &w, &units, 0)?;
            let consistent = scalar == class.is_ordinary();
            let qb = qbar(tv).map(|(r, c)| format!("E{}{}", r + 1, c + 1));
            Ok((tv.to_string(), consistent, json!({"types": tv.to_string(), "class": to_value(&class), "qbar": qb, "trace_scalar": scalar})))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let ok = rows.iter().all(|r| r.1);
    Ok(Report {
        body: json!({"f": f, "count": rows.len(), "consistent": ok, "rows": rows.into_iter().map(|r| r.2).collect::<Vec<_>>()}),
        ok,
    })
}

fn cmd_solve_gamma(c: &Common) -> Outcome {
    let spec = c.family_spec()?;
    let p = spec.p;
    let g = match c.gamma(p)? {
        Some(g) => g,
        None => GammaElement::from_int(p, 1 + p as i64)?,
    };
    // squaring gives a cocycle check against the same solution
    let g2 = g.compose(&g);
    let sol = solve_family(&spec, &[g.clone(), g2])?;
    let gm = &sol.gammas[0];
    let r = verify(&sol.family.pi, gm, gm, &sol.gammas[1], spec.budget.m as i64, spec.budget.n);
    let order = r.residual_orders.commutation[0];
    let report = SolveGammaJson {
        gamma: g.a.to_string(),
        order,
        residual_orders: r.residual_orders.clone(),
        matrix: Some(render_matrix(gm, spec.budget.m)?),
    };
    let mut body = to_value(&report);
    body["target"] = json!(spec.budget.n);
    Ok(Report { body, ok: r.passes })
}

fn table(v: &Value) -> String {
    let mut out = String::new();
    if let Some(obj) = v.as_object() {
        let width = obj.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        for (k, x) in obj {
            if k == "rows" {
                continue;
            }
            out += &format!("{k:<width$}  {}\n", scalar_text(x));
        }
        if let Some(rows) = obj.get("rows").and_then(Value::as_array) {
            out += &rows_table(rows);
        }
    } else {
        out += &scalar_text(v);
        out.push('\n');
    }
    out
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn rows_table(rows: &[Value]) -> String {
    let Some(first) = rows.first().and_then(Value::as_object) else {
        return String::new();
    };
    let cols: Vec<&String> = first.keys().collect();
    let cells: Vec<Vec<String>> = rows.iter().map(|r| cols.iter().map(|c| scalar_text(&r[c.as_str()])).collect()).collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).chain([c.chars().count()]).max().unwrap())
        .collect();
    let line = |xs: Vec<&str>| {
        xs.iter().zip(&widths).map(|(x, w)| format!("{x:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(cols.iter().map(|c| c.as_str()).collect());
    for r in &cells {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let c = &cli.common;
    let outcome = match cli.cmd {
        Cmd::Char => cmd_char(c),
        Cmd::FamilyBuild => cmd_family_build(c),
        Cmd::FamilyVerify => cmd_family_verify(c),
        Cmd::Wadm => cmd_wadm(),
        Cmd::Reduce => cmd_reduce(c),
        Cmd::Classify => cmd_classify(c),
        Cmd::Enumerate => cmd_enumerate(c),
        Cmd::SolveGamma => cmd_solve_gamma(c),
    };
    match outcome {
        Ok(r) => {
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&r.body).expect("json") + "\n",
                Format::Table => table(&r.body),
            };
            // a closed pipe downstream is not our failure
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if r.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", json!({"error": "verification_failed", "message": "residual below target"}));
                ExitCode::from(2)
            }
        }
        Err(Failure::Usage(code, msg)) => {
            eprintln!("{}", json!({"error": code, "message": msg}));
            ExitCode::from(1)
        }
        Err(Failure::Verification(code, msg)) => {
            eprintln!("{}", json!({"error": code, "message": msg}));
            ExitCode::from(2)
        }
    }
}
