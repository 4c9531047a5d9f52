//! Acceptance criteria 1-9. Runs as a plain binary and prints one line per
//! criterion; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;

use num_complex::Complex;

use qgrav::fieldeq::{field_equation_rhs, FieldEqOptions, PhysicalParams};
use qgrav::frw::{classify_singularities, decompose, extract_k, frw_metric, present_k, Classification, SingularityDomain};
use qgrav::geometry::{covariant_divergence_einstein, DivergenceSample, Geometry};
use qgrav::numeric::{finite_diff, QuadratureOptions, DEFAULT_STEP};
use qgrav::qmetric::{build_metric, builtin, Chart, Convention, MetricTensor};
use qgrav::symexpr::{
    differentiate, equivalent, eval, is_zero_by_sampling, substitute_one, Binding, EquivOptions, Expr, SampleDomain,
};
use qgrav::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn equiv(a: &Expr, b: &Expr, opts: &EquivOptions) -> Result<bool, String> {
    equivalent(a, b, opts).map(|v| v.is_equivalent()).map_err(|e| e.to_string())
}

fn p(s: &str) -> Expr {
    parse(s).expect("test expression parses")
}

fn polar_points(n: usize, seed: u64) -> Vec<Binding<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Binding::new()
                .with("r", rng.random_range(0.1..0.9))
                .with("theta", rng.random_range(0.2..2.9))
                .with("phi", rng.random_range(0.0..6.2))
                .with("t", rng.random_range(0.5..2.0))
                .with("c", 1.0)
        })
        .collect()
}

const K_TEXT: &str = "(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)";

fn criterion_1() -> Outcome {
    let w = builtin("hydrogenlike-2p").map_err(|e| e.to_string())?;
    let k = extract_k(&w).map_err(|e| e.to_string())?;
    let want = p(K_TEXT);
    for a0 in [1.0, 2.5] {
        let dom = SampleDomain::new()
            .interval("r", 0.1 * a0, 1.9 * a0)
            .interval("r", 2.1 * a0, 5.0 * a0)
            .interval("theta", 0.1, PI - 0.1);
        let opts = EquivOptions::with_domain(dom, 200, 1e-9);
        let bind = |e: &Expr| substitute_one(e, "a0", &Expr::float(a0));
        ensure(equiv(&bind(&k), &bind(&want), &opts)?, || format!("k differs at a0 = {a0}: {k}"))?;
    }
    let shown = present_k(&k, &w.chart);
    ensure(shown == K_TEXT, || format!("presented as {shown}"))?;
    Ok(format!("k = {shown}, 200 samples per a0 in {{1, 2.5}}"))
}

fn criterion_2() -> Outcome {
    let w = builtin("hydrogenlike-2p").map_err(|e| e.to_string())?;
    let k = extract_k(&w).map_err(|e| e.to_string())?;
    let rep = classify_singularities(&k, &SingularityDomain::new(w.bindings()));
    let got: Vec<(String, String, Classification)> =
        rep.loci.iter().map(|l| (l.coordinate.clone(), l.value.to_string(), l.classification)).collect();
    let want = vec![
        ("r".to_string(), "0".to_string(), Classification::Coordinate),
        ("theta".to_string(), "0".to_string(), Classification::Coordinate),
        ("r".to_string(), "2*a0".to_string(), Classification::Physical),
    ];
    ensure(got == want, || format!("loci {got:?}"))?;
    let pos = rep.loci[2].numeric_position.ok_or("r = 2*a0 not located numerically")?;
    ensure((pos - 2.0).abs() <= 1e-6, || format!("r = 2*a0 located at {pos}"))?;
    Ok(format!("r=0 coordinate, theta=0 coordinate, r=2*a0 physical at {pos:.9}"))
}

fn criterion_3() -> Outcome {
    let w = builtin("hydrogenlike-2p").map_err(|e| e.to_string())?;
    let d = decompose(&build_metric(&w, Convention::default())).map_err(|e| e.to_string())?;
    let want = p("C1^2*cos(theta)^2*cos(phi)^2*exp(-r/a0)*cos(2*omega0*t)");
    let opts = EquivOptions::with_domain(SampleDomain::new(), 200, 1e-9);
    ensure(equiv(&d.s_sq_from_theta, &want, &opts)?, || format!("S^2 = {}", d.s_sq_from_theta))?;
    let zero = is_zero_by_sampling(&d.isotropy_residual, &opts).map_err(|e| e.to_string())?;
    ensure(!zero, || "isotropy residual vanishes".into())?;
    Ok(format!("S^2 = {}, isotropy residual nonzero", d.s_sq_from_theta))
}

fn criterion_4() -> Outcome {
    let opts = EquivOptions::default();
    let sphere = MetricTensor::diagonal(
        Chart::euclidean(&["theta", "phi"]).map_err(|e| e.to_string())?,
        Binding::new().with("a", 1.3),
        vec![p("a^2"), p("a^2*sin(theta)^2")],
    );
    let mut geo = Geometry::new(&sphere).map_err(|e| e.to_string())?;
    let r = geo.scalar_curvature().clone();
    ensure(equiv(&r, &p("2/a^2"), &opts)?, || format!("2-sphere R = {r}"))?;
    for (_, e) in geo.einstein().clone().components() {
        ensure(is_zero_by_sampling(e, &opts).map_err(|e| e.to_string())?, || format!("2-sphere G = {e}"))?;
    }

    let plane = MetricTensor::from_fn(Chart::euclidean(&["x", "y"]).map_err(|e| e.to_string())?, Binding::new(), |i, j| {
        match (i, j) {
            (0, 0) => p("1 + x^2*y"),
            (1, 1) => p("2 + y^2"),
            _ => p("x/2"),
        }
    });
    let mut geo = Geometry::new(&plane).map_err(|e| e.to_string())?;
    for (_, e) in geo.einstein().clone().components() {
        ensure(is_zero_by_sampling(e, &opts).map_err(|e| e.to_string())?, || format!("2-D G = {e}"))?;
    }

    let flat = MetricTensor::diagonal(
        Chart::euclidean(&["r", "theta", "phi"]).map_err(|e| e.to_string())?,
        Binding::new(),
        vec![p("1"), p("r^2"), p("r^2*sin(theta)^2")],
    );
    let mut geo = Geometry::new(&flat).map_err(|e| e.to_string())?;
    ensure(geo.riemann().is_zero(), || "flat 3-space Riemann nonzero".into())?;

    let g = frw_metric(&Expr::sym("S"), &Expr::sym("k"), &Chart::polar());
    let mut geo = Geometry::new(&g).map_err(|e| e.to_string())?;
    let r = geo.scalar_curvature().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for pt in polar_points(20, 40) {
        let (s, k) = (rng.random_range(0.5..3.0), rng.random_range(-1.0..1.0));
        let got = eval(&r, &pt.with("S", s).with("k", k)).map_err(|e| e.to_string())?.re;
        let want = 6.0 * k / (s * s);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    ensure(worst <= 1e-9, || format!("static FRW R off by {worst:e}"))?;
    Ok(format!("2-sphere R = 2/a^2, flat Riemann = 0, 2-D Einstein = 0, static FRW max rel err {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [-1, 0, 1] {
        let g = frw_metric(&p("t^2"), &Expr::int(k), &Chart::polar());
        for s in covariant_divergence_einstein(&g, &polar_points(20, (51 + k) as u64)).map_err(|e| e.to_string())? {
            match s {
                DivergenceSample::Norm(n) => worst = worst.max(n),
                DivergenceSample::Failed(e) => return Err(format!("k = {k}: {e}")),
            }
        }
    }
    ensure(worst < 1e-6, || format!("max |div G| = {worst:e}"))?;
    Ok(format!("max |div G| = {worst:.1e} over 60 points"))
}

fn relative(exact: Complex<f64>, fd: Complex<f64>) -> f64 {
    (exact - fd).norm() / exact.norm().max(1.0)
}

fn criterion_6() -> Outcome {
    let corpus: Vec<Expr> = include_str!("../../core/tests/corpus.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(p)
        .collect();
    ensure(corpus.len() == 50, || format!("corpus has {} entries", corpus.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for e in &corpus {
        for var in ["x", "y"] {
            let d = differentiate(e, var);
            for _ in 0..10 {
                let pt = Binding::new().with("x", rng.random_range(0.3..1.2)).with("y", rng.random_range(0.3..1.2));
                let exact = eval(&d, &pt).map_err(|err| format!("{e}: {err}"))?;
                let fd = finite_diff(e, var, &pt, DEFAULT_STEP).map_err(|err| format!("{e}: {err}"))?;
                worst = worst.max(relative(exact, fd));
                checks += 1;
            }
        }
    }
    for name in ["hydrogen-1s", "hydrogenlike-2p"] {
        let w = builtin(name).map_err(|e| e.to_string())?;
        let g = build_metric(&w, Convention::default());
        for _ in 0..50 {
            let pt = w
                .bindings()
                .with("r", rng.random_range(0.3..3.0))
                .with("theta", rng.random_range(0.2..2.9))
                .with("phi", rng.random_range(0.0..6.2))
                .with("t", rng.random_range(0.0..3.0));
            for i in 0..4 {
                for j in i..4 {
                    for x in g.chart.coords() {
                        let exact = eval(&differentiate(g.get(i, j), x), &pt).map_err(|e| e.to_string())?;
                        let fd = finite_diff(g.get(i, j), x, &pt, DEFAULT_STEP).map_err(|e| e.to_string())?;
                        worst = worst.max(relative(exact, fd));
                        checks += 1;
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("{checks} derivative checks, worst relative error {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let w = builtin("hydrogen-1s").map_err(|e| e.to_string())?.with_param("C", 1.0 / PI.sqrt());
    let rhs = |params: &PhysicalParams, order: usize| {
        let opts = FieldEqOptions {
            quadrature: QuadratureOptions {
                order,
                ..Default::default()
            },
            ..Default::default()
        };
        field_equation_rhs(&w, params, 0.0, &opts).map_err(|e| e.to_string())
    };
    let base = PhysicalParams::default();
    let a = rhs(&base, 32)?;
    let rr = a.rhs[0][0];
    ensure((rr + 8.0 * PI).abs() < 1e-6, || format!("RHS_rr = {rr}"))?;
    let b = rhs(&base, 64)?;
    let mut spread: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let (x, y) = (a.rhs[i][j], b.rhs[i][j]);
            if x != y {
                spread = spread.max((x - y).abs() / x.abs().max(y.abs()));
            }
        }
    }
    ensure(spread <= 1e-4, || format!("orders 32/64 differ by {spread:e}"))?;
    let c = rhs(&PhysicalParams { hbar: 2.0, ..base }, 32)?;
    let mut scale_err: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            scale_err = scale_err.max((c.rhs[i][j] - 4.0 * a.rhs[i][j]).abs() / a.rhs[i][j].abs().max(1.0));
        }
    }
    ensure(scale_err <= 1e-12, || format!("hbar scaling off by {scale_err:e}"))?;
    Ok(format!("RHS_rr = {rr:.9}, order spread {spread:.1e}, hbar scaling err {scale_err:.1e}"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let templates = ["A*t^2", "A*exp(B*t)", "A + B*sin(t)", "A*sqrt(t)", "A*t/(1 + B*t)"];
    let dom = SampleDomain::new().interval("r", 0.1, 0.9).interval("theta", 0.1, PI - 0.1).interval("t", 0.3, 2.0);
    let opts = EquivOptions::with_domain(dom, 200, 1e-9);
    let mut shown = Vec::new();
    for tpl in templates {
        let (a, b) = (rng.random_range(1..=9), rng.random_range(1..=9));
        let s = p(&tpl.replace('A', &a.to_string()).replace('B', &format!("({b}/10)")));
        let k = Expr::rational(rng.random_range(-9..=9), 10);
        let d = decompose(&frw_metric(&s, &k, &Chart::polar())).map_err(|e| e.to_string())?;
        let s2 = s.powi(2);
        ensure(equiv(&d.k_expr, &k, &opts)?, || format!("{s}: k = {}", d.k_expr))?;
        ensure(equiv(&d.s_sq_from_theta, &s2, &opts)?, || format!("{s}: theta route {}", d.s_sq_from_theta))?;
        ensure(equiv(&d.s_sq_from_phi, &s2, &opts)?, || format!("{s}: phi route {}", d.s_sq_from_phi))?;
        ensure(d.tt_residual.is_zero(), || format!("{s}: tt residual {}", d.tt_residual))?;
        shown.push(format!("S={s} k={k}"));
    }
    Ok(shown.join("; "))
}

const NOT_EXPRESSIONS: [&str; 8] = ["line_element", "line_element_diagonal", "classification", "what", "status", "units", "name", "coordinate"];

fn expression_strings<'a>(v: &'a Value, key: &str, out: &mut Vec<(String, &'a str)>) {
    match v {
        Value::String(s) if !NOT_EXPRESSIONS.contains(&key) => out.push((key.to_string(), s)),
        Value::Array(a) => a.iter().for_each(|x| expression_strings(x, key, out)),
        Value::Object(m) => m.iter().for_each(|(k, x)| expression_strings(x, k, out)),
        _ => {}
    }
}

fn criterion_9() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["frw", "--builtin", "hydrogenlike-2p", "--out", "json"],
        &["singularities", "--builtin", "hydrogenlike-2p"],
        &["metric", "--builtin", "hydrogenlike-2p", "--seed", "7"],
        &["geometry", "--what", "einstein", "--frw-scale", "t^2", "--frw-k", "1"],
        &["fieldeq", "--builtin", "hydrogen-1s", "--frw-scale", "t^2", "--seed", "3"],
        &["builtins"],
    ];
    let mut exprs = 0usize;
    for argv in runs {
        let once = || {
            Command::new(env!("CARGO_BIN_EXE_qgrav"))
                .args(argv)
                .env_remove("QGRAV_SEED")
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (once()?, once()?);
        ensure(a.status.success(), || format!("{argv:?}: {}", String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == b.stdout, || format!("{argv:?}: output differs between runs"))?;
        let doc: Value = serde_json::from_slice(&a.stdout).map_err(|e| format!("{argv:?}: {e}"))?;
        for key in ["tool_version", "config", "seed", "result"] {
            ensure(doc.get(key).is_some(), || format!("{argv:?}: no `{key}`"))?;
        }
        let mut found = Vec::new();
        expression_strings(&doc["result"], "result", &mut found);
        for (key, s) in found {
            parse(s).map_err(|e| format!("{argv:?}: `{key}` = {s:?} does not reparse: {e}"))?;
            exprs += 1;
        }
        if argv[0] == "frw" {
            let shown = &doc["result"]["k_expr"];
            ensure(shown == K_TEXT, || format!("k_expr = {shown}"))?;
            let canonical = p(doc["result"]["k_canonical"].as_str().unwrap_or(""));
            let opts = EquivOptions::with_domain(SampleDomain::new().interval("r", 2.1, 5.0).interval("a0", 0.5, 1.0), 50, 1e-9);
            ensure(equiv(&p(K_TEXT), &canonical, &opts)?, || "k_expr and k_canonical disagree".into())?;
        }
    }
    Ok(format!("6 commands byte-identical across runs, {exprs} expression strings reparse"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("curvature field k(r, theta) of the 2p state", criterion_1),
        ("singularity classification", criterion_2),
        ("scale factor from the theta-theta component", criterion_3),
        ("geometry oracles", criterion_4),
        ("contracted Bianchi identity", criterion_5),
        ("derivative fidelity", criterion_6),
        ("field-equation figure", criterion_7),
        ("FRW round trip", criterion_8),
        ("CLI determinism and reparse", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
