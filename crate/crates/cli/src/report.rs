use qgrav::fieldeq::PhysicalParams;
use qgrav::symexpr::{Binding, Expr};
use serde_json::{json, Map, Value};

pub const TOOL_VERSION: &str = concat!("qgrav ", env!("CARGO_PKG_VERSION"));

/// Finite numbers as JSON numbers, everything else as null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn expr(e: &Expr) -> Value {
    Value::String(e.to_string())
}

pub fn matrix(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|row| Value::Array(row.iter().map(|&x| num(x)).collect())).collect())
}

pub fn binding(b: &Binding<f64>) -> Value {
    Value::Object(b.iter().map(|(k, v)| (k.to_string(), num(v.re))).collect())
}

pub fn physical(p: &PhysicalParams) -> Value {
    json!({
        "rho": num(p.rho),
        "m": num(p.m),
        "hbar": num(p.hbar),
        "G": num(p.g),
        "c": num(p.c),
        "units": p.units.name(),
    })
}

pub fn envelope(config: Value, seed: u64, result: Value) -> Value {
    let mut m = Map::new();
    m.insert("tool_version".into(), json!(TOOL_VERSION));
    m.insert("config".into(), config);
    m.insert("seed".into(), json!(seed));
    m.insert("result".into(), result);
    Value::Object(m)
}
