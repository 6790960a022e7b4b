//! Three library operations exported to JavaScript. Every function returns a
//! JSON string; errors come back as `{"error": code, "message": ...}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use wachkit::characters::enumerate_induced_classes;
use wachkit::families::{class_membership, symbolic_qf, types_for_induced, TypeVector};
use wachkit::reduction::reduce_induced;

fn parse_list(s: &str) -> wachkit::Result<Vec<i64>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| wachkit::Error::Parse(format!("not an integer: {x}"))))
        .collect()
}

fn finish(r: wachkit::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({"error": e.code(), "message": e.to_string()}).to_string(),
    }
}

/// Reduction of the induced representation attached to a level-`2f` vector.
#[wasm_bindgen]
pub fn reduce(p: u32, l: &str) -> String {
    finish((|| {
        let l = parse_list(l)?;
        let r = reduce_induced(&l, p, l.len() / 2)?;
        Ok(serde_json::to_value(r).expect("serializable"))
    })())
}

/// The induced classes with given weights, each with its type vector and reduction.
#[wasm_bindgen]
pub fn classify(p: u32, weights: &str) -> String {
    finish((|| {
        let w = parse_list(weights)?;
        let rows = enumerate_induced_classes(&w)?
            .into_iter()
            .map(|l| {
                let r = reduce_induced(&l, p, w.len())?;
                let tv = types_for_induced(&l)?.normalized.to_string();
                Ok(json!({"l": l, "types": tv, "exps": r.exps, "irreducible": r.irreducible}))
            })
            .collect::<wachkit::Result<Vec<_>>>()?;
        Ok(json!({"count": rows.len(), "rows": rows}))
    })())
}

/// Class membership and trace scalarity for all `4^f` type vectors.
#[wasm_bindgen]
pub fn enumerate(f: usize) -> String {
    finish((|| {
        if !(1..=5).contains(&f) {
            return Err(wachkit::Error::Invalid(format!("f = {f} outside 1..=5")));
        }
        let ones = vec![1; f];
        let rows = TypeVector::all(f)
            .iter()
            .map(|tv| {
                let (_, scalar) = symbolic_qf(3, tv, &ones, &ones, 0)?;
                Ok(json!({"types": tv.to_string(), "class": format!("{:?}", class_membership(tv)), "trace_scalar": scalar}))
            })
            .collect::<wachkit::Result<Vec<_>>>()?;
        Ok(json!({"count": rows.len(), "rows": rows}))
    })())
}
