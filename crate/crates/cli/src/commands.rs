use std::f64::consts::PI;
use std::fmt::Write as _;

use qgrav::fieldeq::{field_equation_residual, Bracket, FieldEqError, FieldEqOptions, InnerProduct, PointOutcome};
use qgrav::frw::{classify_singularities, decompose, frw_metric, present_k, SingularityDomain};
use qgrav::geometry::{Geometry, GeometryOptions, TensorField, Variance};
use qgrav::numeric::{grid_eval, GridAxis, GridSpec, QuadratureOptions};
use qgrav::qmetric::{build_metric, builtin, line_element, metric_at, rank_at, Chart, MetricTensor, BUILTINS};
use qgrav::symexpr::{eval, Binding, EvalError, Expr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::args::{FrwTemplate, What};
use crate::input::Context;
use crate::report::{binding, expr, matrix, num};
use crate::CliError;

/// A finished subcommand: config additions, JSON result and text rendering.
pub struct Output {
    pub config: Map<String, Value>,
    pub result: Value,
    pub text: String,
    pub csv: Option<String>,
}

impl Output {
    fn new(result: Value, text: String) -> Self {
        Output {
            config: Map::new(),
            result,
            text,
            csv: None,
        }
    }

    fn with_config(mut self, key: &str, v: Value) -> Self {
        self.config.insert(key.into(), v);
        self
    }
}

fn parse_expr(text: &str) -> Result<Expr, CliError> {
    qgrav::parse(text).map_err(|source| CliError::Expr {
        text: text.to_string(),
        source,
    })
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Unbound(names) => CliError::Usage(format!("no value for {}; use --param or --at", names.join(", "))),
        other => CliError::Domain(other.to_string()),
    }
}

/// Seeded points inside the polar chart, merged over `base`.
fn sample_points(chart: &Chart, base: &Binding<f64>, n: usize, seed: u64) -> Vec<Binding<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges = [(0.5, 3.0), (0.3, PI - 0.3), (0.1, 2.0 * PI - 0.1), (0.5, 2.0)];
    (0..n)
        .map(|_| {
            let mut b = base.clone();
            for (k, name) in chart.coords().iter().enumerate() {
                let (lo, hi) = ranges[k.min(3)];
                b.set(name, rng.random_range(lo..hi));
            }
            b
        })
        .collect()
}

pub fn metric(ctx: &Context) -> Result<Output, CliError> {
    let w = ctx.wave()?;
    let g = build_metric(w, ctx.convention);
    let n = g.dim();
    let comps: Vec<Value> = (0..n).map(|i| Value::Array((0..n).map(|j| expr(g.get(i, j))).collect())).collect();
    let le = line_element(&g);
    let probe = sample_points(&g.chart, &ctx.bindings(), 1, ctx.seed).remove(0).merged(&ctx.at);
    let rank = rank_at(&g, &probe, 1e-10).map_err(|e| CliError::Domain(e.to_string()))?.rank;
    let mut result = json!({
        "coords": g.chart.coords(),
        "components": comps,
        "line_element": le.render(),
        "line_element_diagonal": le.render_diagonal(),
        "rank": rank,
        "rank_point": binding(&probe),
    });
    let mut text = format!("{}\nrank {rank} of {n}\n", le.render());
    if !ctx.at.is_empty() {
        let m = metric_at(&g, &ctx.bindings().merged(&ctx.at)).map_err(|e| match e {
            qgrav::qmetric::MetricError::Eval(e) => eval_error(e),
            other => CliError::Domain(other.to_string()),
        })?;
        result["values"] = matrix(&m);
        for row in &m {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.10e}")).collect();
            let _ = writeln!(text, "{}", cells.join("  "));
        }
    }
    Ok(Output::new(result, text))
}

fn metric_for(ctx: &Context, frw: &FrwTemplate) -> Result<MetricTensor, CliError> {
    match &frw.frw_scale {
        Some(s) => {
            let chart = match &ctx.wave {
                Some(w) => w.chart.clone(),
                None => Chart::polar().with_light_speed(ctx.physical.c),
            };
            let mut g = frw_metric(&parse_expr(s)?, &parse_expr(&frw.frw_k)?, &chart);
            g.params = ctx.bindings();
            Ok(g)
        }
        None => Ok(build_metric(ctx.wave()?, ctx.convention)),
    }
}

fn variance_names(t: &TensorField) -> Vec<&'static str> {
    t.variance
        .iter()
        .map(|v| match v {
            Variance::Up => "up",
            Variance::Down => "down",
        })
        .collect()
}

pub fn geometry(ctx: &Context, what: What, frw: &FrwTemplate, no_simplify: bool) -> Result<Output, CliError> {
    let g = metric_for(ctx, frw)?;
    let opts = GeometryOptions {
        simplify: !no_simplify,
        seed: ctx.seed,
    };
    let mut geo = Geometry::with_options(&g, opts).map_err(|e| CliError::Domain(e.to_string()))?;
    let point = (!ctx.at.is_empty()).then(|| g.bindings().merged(&ctx.bindings()).merged(&ctx.at));
    let value = |e: &Expr| point.as_ref().map(|p| eval(e, p).map(|v| num(v.re)).unwrap_or(Value::Null));
    let names = g.chart.coords().to_vec();
    let mut text = String::new();
    let result = if what == What::Scalar {
        let r = geo.scalar_curvature().clone();
        let _ = writeln!(text, "R = {r}");
        let mut res = json!({ "expr": expr(&r) });
        if let Some(v) = value(&r) {
            let _ = writeln!(text, "R(at) = {v}");
            res["value"] = v;
        }
        res
    } else {
        let t = match what {
            What::Christoffel => geo.christoffel().clone(),
            What::Riemann => geo.riemann().clone(),
            What::Ricci => geo.ricci().clone(),
            _ => geo.einstein().clone(),
        };
        let mut comps = Vec::new();
        for (idx, e) in t.components() {
            if e.is_zero() {
                continue;
            }
            let label: Vec<&str> = idx.iter().map(|&i| names[i].as_str()).collect();
            let _ = writeln!(text, "[{}] = {e}", label.join(","));
            let mut c = json!({ "index": idx, "expr": expr(e) });
            if let Some(v) = value(e) {
                c["value"] = v;
            }
            comps.push(c);
        }
        if comps.is_empty() {
            text.push_str("all components vanish\n");
        }
        json!({
            "coords": names,
            "variance": variance_names(&t),
            "nonzero": comps.len(),
            "components": comps,
        })
    };
    let mut result = result;
    result["what"] = json!(what.name());
    Ok(Output::new(result, text)
        .with_config("what", json!(what.name()))
        .with_config("simplify", json!(!no_simplify))
        .with_config("frw_scale", frw.frw_scale.as_ref().map_or(Value::Null, |s| json!(s)))
        .with_config("frw_k", json!(frw.frw_k)))
}

pub fn frw(ctx: &Context) -> Result<Output, CliError> {
    let w = ctx.wave()?;
    let g = build_metric(w, ctx.convention);
    let d = decompose(&g).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut offdiag_max: f64 = 0.0;
    for p in sample_points(&g.chart, &ctx.bindings(), 16, ctx.seed) {
        if let Ok(m) = metric_at(&g, &p) {
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if i != j {
                        offdiag_max = offdiag_max.max(x.abs());
                    }
                }
            }
        }
    }
    let k_text = present_k(&d.k_expr, &g.chart);
    let names = g.chart.coords();
    let offdiag: Vec<Value> = d
        .offdiag
        .iter()
        .map(|(i, j, e)| json!({ "i": names[*i], "j": names[*j], "expr": expr(e) }))
        .collect();
    let result = json!({
        "S_sq_from_theta": expr(&d.s_sq_from_theta),
        "S_sq_from_phi": expr(&d.s_sq_from_phi),
        "k_expr": k_text,
        "k_canonical": expr(&d.k_expr),
        "tt_residual": expr(&d.tt_residual),
        "isotropy_residual": expr(&d.isotropy_residual),
        "offdiag_max": num(offdiag_max),
        "offdiag": offdiag,
    });
    let text = format!(
        "S^2 (theta route) = {}\nS^2 (phi route)   = {}\nk = {k_text}\ntt residual = {}\nisotropy residual = {}\nmax |off-diagonal| = {offdiag_max:e}\n",
        d.s_sq_from_theta, d.s_sq_from_phi, d.tt_residual, d.isotropy_residual
    );
    Ok(Output::new(result, text))
}

pub fn singularities(ctx: &Context, samples: usize) -> Result<Output, CliError> {
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let w = ctx.wave()?;
    let d = decompose(&build_metric(w, ctx.convention)).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut dom = SingularityDomain::new(ctx.bindings());
    dom.samples = samples;
    let rep = classify_singularities(&d.k_expr, &dom);
    let mut text = String::new();
    let loci: Vec<Value> = rep
        .loci
        .iter()
        .map(|l| {
            let _ = writeln!(text, "{} = {}: {}", l.coordinate, l.value, l.classification.name());
            json!({
                "coordinate": l.coordinate,
                "value": expr(&l.value),
                "also": l.also.iter().map(expr).collect::<Vec<_>>(),
                "constraint": expr(&l.constraint),
                "classification": l.classification.name(),
                "witness": binding(&l.witness),
                "evidence": l.evidence.iter().map(|(d, k)| json!([num(*d), num(*k)])).collect::<Vec<_>>(),
                "numeric_position": l.numeric_position.map_or(Value::Null, num),
            })
        })
        .collect();
    if loci.is_empty() {
        text.push_str("no singular loci\n");
    }
    let result = json!({ "k_expr": expr(&d.k_expr), "loci": loci });
    Ok(Output::new(result, text).with_config("samples", json!(samples)))
}

fn inner_json(name: &str, ip: &InnerProduct) -> Value {
    json!({
        "coord": name,
        "value": num(ip.value),
        "imag": num(ip.imag),
        "imag_flag": ip.imag_flag,
        "error": num(ip.error),
        "tail": num(ip.tail),
    })
}

pub struct FieldeqArgs<'a> {
    pub t0: f64,
    pub points: usize,
    pub order: usize,
    pub pointwise: bool,
    pub unrooted: bool,
    pub frw: &'a FrwTemplate,
}

pub fn fieldeq(ctx: &Context, a: &FieldeqArgs) -> Result<Output, CliError> {
    let w = ctx.wave()?;
    let g = metric_for(ctx, a.frw)?;
    let bracket = if a.pointwise {
        if ctx.at.is_empty() {
            return Err(CliError::Usage("--pointwise needs the spatial point via --at".into()));
        }
        Bracket::Pointwise(ctx.at.clone())
    } else {
        Bracket::Integrated
    };
    let opts = FieldEqOptions {
        quadrature: QuadratureOptions {
            order: a.order,
            ..Default::default()
        },
        bracket,
        unrooted: a.unrooted,
        ..Default::default()
    };
    let points = if ctx.at.is_empty() {
        if a.points == 0 {
            return Err(CliError::Usage("--points must be positive".into()));
        }
        sample_points(&g.chart, &Binding::new(), a.points, ctx.seed)
    } else {
        vec![ctx.at.clone()]
    };
    let rep = match field_equation_residual(&g, w, &ctx.physical, &points, a.t0, &opts) {
        Ok(r) => r,
        Err(FieldEqError::AllPointsFailed(r)) => {
            return Err(CliError::Domain(format!("every point failed: {}", r.failures().join("; "))));
        }
        Err(e) => return Err(CliError::Domain(e.to_string())),
    };
    let names = w.chart.coords();
    let mut lhs = Vec::new();
    let mut residual = Vec::new();
    let mut status = Vec::new();
    let mut text = String::from("rhs:\n");
    for row in &rep.rhs.rhs {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.10e}")).collect();
        let _ = writeln!(text, "  {}", cells.join("  "));
    }
    for p in &rep.points {
        match &p.outcome {
            PointOutcome::Ok { lhs: m, residual_max } => {
                lhs.push(matrix(m));
                residual.push(num(*residual_max));
                status.push(json!("ok"));
                let _ = writeln!(text, "residual {residual_max:.10e} at {:?}", point_label(&p.point));
            }
            PointOutcome::DegenerateMetric { rank } => {
                lhs.push(Value::Null);
                residual.push(Value::Null);
                status.push(json!(format!("degenerate metric (rank {rank})")));
                let _ = writeln!(text, "degenerate metric at {:?}", point_label(&p.point));
            }
            PointOutcome::Failed(e) => {
                lhs.push(Value::Null);
                residual.push(Value::Null);
                status.push(json!(e));
                let _ = writeln!(text, "failed at {:?}: {e}", point_label(&p.point));
            }
        }
    }
    let result = json!({
        "t0": num(a.t0),
        "rhs": matrix(&rep.rhs.rhs),
        "lhs": lhs,
        "residual_max": residual,
        "status": status,
        "points": rep.points.iter().map(|p| binding(&p.point)).collect::<Vec<_>>(),
        "inner_products": rep.rhs.norms.iter().enumerate().map(|(k, ip)| inner_json(&names[k], ip)).collect::<Vec<_>>(),
        "psi_norm": inner_json("psi", &rep.rhs.psi_norm),
        "units": rep.params.units.name(),
    });
    let _ = writeln!(text, "<psi|psi> = {:.10e}", rep.rhs.psi_norm.value);
    Ok(Output::new(result, text)
        .with_config("t0", num(a.t0))
        .with_config("points", json!(a.points))
        .with_config("order", json!(a.order))
        .with_config("pointwise", json!(a.pointwise))
        .with_config("unrooted", json!(a.unrooted))
        .with_config("frw_scale", a.frw.frw_scale.as_ref().map_or(Value::Null, |s| json!(s)))
        .with_config("frw_k", json!(a.frw.frw_k)))
}

fn point_label(b: &Binding<f64>) -> Vec<(String, f64)> {
    b.iter().map(|(k, v)| (k.to_string(), v.re)).collect()
}

pub fn eval_cmd(ctx: &Context, text: Option<&str>) -> Result<Output, CliError> {
    let e = match text {
        Some(t) => parse_expr(t)?,
        None => ctx.wave()?.psi.clone(),
    };
    let point = ctx.bindings().merged(&ctx.at);
    let v = eval(&e, &point).map_err(eval_error)?;
    let result = json!({
        "expr": expr(&e),
        "point": binding(&point),
        "re": num(v.re),
        "im": num(v.im),
    });
    let out = format!("{:.17e} {:+.17e}i\n", v.re, v.im);
    Ok(Output::new(result, out).with_config("expr", text.map_or(Value::Null, |t| json!(t))))
}

fn parse_axis(s: &str) -> Result<GridAxis, CliError> {
    let bad = || CliError::Usage(format!("--axis expects NAME=MIN:MAX:COUNT[:log], got `{s}`"));
    let (name, rest) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = rest.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match parts.get(3).map(|p| p.trim()) {
        None | Some("linear") => Ok(GridAxis::linear(name.trim(), lo, hi, n)),
        Some("log") => Ok(GridAxis::log(name.trim(), lo, hi, n)),
        Some(_) => Err(bad()),
    }
}

pub fn grid(ctx: &Context, text: Option<&str>, of: &str, axes: &[String]) -> Result<Output, CliError> {
    let e = match text {
        Some(t) => parse_expr(t)?,
        None => {
            let w = ctx.wave()?;
            match of {
                "psi" => w.psi.clone(),
                "k" => decompose(&build_metric(w, ctx.convention)).map_err(|e| CliError::Domain(e.to_string()))?.k_expr,
                other => return Err(CliError::Usage(format!("--of expects k or psi, got `{other}`"))),
            }
        }
    };
    let axes: Vec<GridAxis> = if axes.is_empty() {
        vec![GridAxis::linear("r", 0.05, 5.0, 64), GridAxis::linear("theta", 0.05, PI - 0.05, 64)]
    } else {
        axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?
    };
    let mut spec = GridSpec::new(axes);
    for (k, v) in ctx.bindings().merged(&ctx.at).iter() {
        if !spec.axes.iter().any(|a| a.name == k) {
            spec = spec.hold(k, v.re);
        }
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let table = grid_eval::<f64>(&e, &spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = table.to_csv();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut cells: Vec<Value> = r.coords.iter().map(|&c| num(c)).collect();
            cells.push(r.value.map_or(Value::Null, |v| num(v.re)));
            Value::Array(cells)
        })
        .collect();
    let axes_json: Vec<Value> = spec
        .axes
        .iter()
        .map(|a| json!({ "name": a.name, "min": num(a.min), "max": num(a.max), "count": a.count }))
        .collect();
    let result = json!({
        "expr": expr(&e),
        "columns": table.columns,
        "rows": rows,
        "null_count": table.null_count(),
    });
    let mut out = Output::new(result, csv.clone())
        .with_config("axes", Value::Array(axes_json))
        .with_config("of", json!(of));
    out.csv = Some(csv);
    Ok(out)
}

pub fn builtins() -> Result<Output, CliError> {
    let mut text = String::new();
    let list: Vec<Value> = BUILTINS
        .iter()
        .map(|name| {
            let w = builtin(name).expect("builtin table");
            let _ = writeln!(text, "{name}: psi = {}", w.psi);
            json!({ "name": name, "psi": expr(&w.psi), "params": binding(&w.params) })
        })
        .collect();
    Ok(Output::new(json!({ "builtins": list }), text))
}
