use std::f64::consts::PI;

use qgrav::fieldeq::{field_equation_rhs, inner_product, FieldEqOptions, PhysicalParams};
use qgrav::frw::{classify_singularities, decompose, extract_k, frw_metric, present_k, Classification, SingularityDomain};
use qgrav::numeric::{finite_diff, grid_eval, GridAxis, GridSpec, QuadratureOptions, DEFAULT_STEP};
use qgrav::qmetric::{build_metric, builtin, Chart, Convention};
use qgrav::symexpr::{differentiate, equivalent, eval, Binding, EquivOptions, Expr, SampleDomain};
use qgrav::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn k_domain() -> SampleDomain {
    SampleDomain::new()
        .interval("r", 0.1, 1.9)
        .interval("r", 2.1, 5.0)
        .interval("theta", 0.1, PI - 0.1)
        .interval("a0", 1.0, 1.0 + 1e-12)
}

#[test]
fn curvature_field_of_2p_state() {
    let w = builtin("hydrogenlike-2p").unwrap();
    let k = extract_k(&w).unwrap();
    let want = parse("(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)").unwrap();
    let opts = EquivOptions::with_domain(k_domain(), 200, 1e-9);
    assert!(equivalent(&k, &want, &opts).unwrap().is_equivalent(), "{k}");
    assert_eq!(present_k(&k, &w.chart), "(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)");
}

#[test]
fn curvature_field_scales_with_bohr_radius() {
    let w = builtin("hydrogenlike-2p").unwrap();
    let k = extract_k(&w).unwrap();
    let want = parse("(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)").unwrap();
    let dom = SampleDomain::new()
        .interval("r", 0.1, 3.9)
        .interval("r", 4.1, 9.0)
        .interval("theta", 0.1, PI - 0.1)
        .interval("a0", 2.0, 2.0 + 1e-12);
    assert!(equivalent(&k, &want, &EquivOptions::with_domain(dom, 200, 1e-9)).unwrap().is_equivalent());
}

#[test]
fn singularity_classification() {
    let w = builtin("hydrogenlike-2p").unwrap();
    let k = extract_k(&w).unwrap();
    let rep = classify_singularities(&k, &SingularityDomain::new(w.bindings()));
    let summary: Vec<(String, String, Classification)> = rep
        .loci
        .iter()
        .map(|l| (l.coordinate.clone(), l.value.to_string(), l.classification))
        .collect();
    assert_eq!(
        summary,
        vec![
            ("r".into(), "0".into(), Classification::Coordinate),
            ("theta".into(), "0".into(), Classification::Coordinate),
            ("r".into(), "2*a0".into(), Classification::Physical),
        ]
    );
    let pos = rep.loci[2].numeric_position.expect("numeric position");
    assert!((pos - 2.0).abs() <= 1e-6);
}

#[test]
fn theta_route_scale_factor() {
    let w = builtin("hydrogenlike-2p").unwrap();
    let d = decompose(&build_metric(&w, Convention::default())).unwrap();
    let want = parse("C1^2*cos(theta)^2*cos(phi)^2*exp(-r/a0)*cos(2*omega0*t)").unwrap();
    let opts = EquivOptions::with_domain(SampleDomain::new(), 200, 1e-9);
    assert!(equivalent(&d.s_sq_from_theta, &want, &opts).unwrap().is_equivalent());
    assert!(!d.isotropy_residual.is_zero());
    assert!(!equivalent(&d.isotropy_residual, &Expr::zero(), &opts).unwrap().is_equivalent());
}

#[test]
fn frw_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let templates = ["A*t^2", "A*exp(B*t)", "A + B*sin(t)", "A*sqrt(t)", "A*t/(1 + B*t)"];
    let dom = SampleDomain::new().interval("r", 0.1, 0.9).interval("theta", 0.1, PI - 0.1);
    let opts = EquivOptions::with_domain(dom, 200, 1e-9);
    for tpl in templates {
        let a = rng.random_range(1..=9);
        let b = rng.random_range(1..=9);
        let s = parse(&tpl.replace('A', &a.to_string()).replace('B', &format!("({b}/10)"))).unwrap();
        let k = Expr::rational(rng.random_range(-9..=9), 10);
        let d = decompose(&frw_metric(&s, &k, &Chart::polar())).unwrap();
        let s2 = s.powi(2);
        assert!(equivalent(&d.k_expr, &k, &opts).unwrap().is_equivalent(), "{tpl}: {}", d.k_expr);
        assert!(equivalent(&d.s_sq_from_theta, &s2, &opts).unwrap().is_equivalent());
        assert!(equivalent(&d.s_sq_from_phi, &s2, &opts).unwrap().is_equivalent());
        assert!(d.tt_residual.is_zero());
        assert!(d.isotropy_residual.is_zero());
        assert!(d.offdiag.is_empty());
    }
}

#[test]
fn metric_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["hydrogen-1s", "hydrogenlike-2p"] {
        let w = builtin(name).unwrap();
        let g = build_metric(&w, Convention::default());
        let pts: Vec<Binding<f64>> = (0..50)
            .map(|_| {
                w.bindings()
                    .with("r", rng.random_range(0.3..3.0))
                    .with("theta", rng.random_range(0.2..2.9))
                    .with("phi", rng.random_range(0.0..6.2))
                    .with("t", rng.random_range(0.0..3.0))
            })
            .collect();
        for i in 0..4 {
            for j in i..4 {
                let e = g.get(i, j);
                for x in g.chart.coords() {
                    let d = differentiate(e, x);
                    for pt in &pts {
                        let exact = eval(&d, pt).unwrap();
                        let fd = finite_diff(e, x, pt, DEFAULT_STEP).unwrap();
                        assert!((exact - fd).norm() <= 1e-6 * exact.norm().max(1.0), "{name} g{i}{j} d/d{x}");
                    }
                }
            }
        }
    }
}

fn normalized_1s() -> qgrav::qmetric::WaveFunction {
    builtin("hydrogen-1s").unwrap().with_param("C", 1.0 / PI.sqrt())
}

#[test]
fn radial_rhs_figure() {
    let rep = field_equation_rhs(&normalized_1s(), &PhysicalParams::default(), 0.0, &FieldEqOptions::default()).unwrap();
    assert!((rep.rhs[0][0] + 8.0 * PI).abs() < 1e-6, "{}", rep.rhs[0][0]);
    assert!((rep.psi_norm.value - 1.0).abs() < 1e-9);
    for i in 0..4 {
        assert!(rep.rhs[i][i] <= 0.0);
        for j in 0..4 {
            assert_eq!(rep.rhs[i][j], rep.rhs[j][i]);
        }
    }
}

#[test]
fn quadrature_orders_agree() {
    let w = normalized_1s().with_param("omega0", 0.7);
    let run = |order| {
        let opts = FieldEqOptions {
            quadrature: QuadratureOptions { order, ..Default::default() },
            ..Default::default()
        };
        field_equation_rhs(&w, &PhysicalParams::default(), 0.4, &opts).unwrap()
    };
    let (a, b) = (run(32), run(64));
    for i in 0..4 {
        for j in 0..4 {
            let (x, y) = (a.rhs[i][j], b.rhs[i][j]);
            assert!((x - y).abs() <= 1e-4 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE), "{i}{j}: {x} {y}");
        }
    }
}

#[test]
fn hbar_scaling_law() {
    let w = normalized_1s();
    let opts = FieldEqOptions::default();
    let p1 = PhysicalParams::default();
    let p2 = PhysicalParams { hbar: 2.0, ..p1 };
    let a = field_equation_rhs(&w, &p1, 0.0, &opts).unwrap();
    let b = field_equation_rhs(&w, &p2, 0.0, &opts).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((b.rhs[i][j] - 4.0 * a.rhs[i][j]).abs() <= 1e-12 * a.rhs[i][j].abs().max(1.0));
        }
    }
}

#[test]
fn derivative_inner_products() {
    let w = normalized_1s().with_param("omega0", 1.3).with_param("a0", 0.8).with_param("C", 1.0 / (PI * 0.512f64).sqrt());
    let p = PhysicalParams::default();
    let opts = FieldEqOptions::default();
    let dr = w.covariant_derivative(0);
    let dt = w.covariant_derivative(3);
    let rr = inner_product(&dr, &dr, &w, &p, 0.0, &opts).unwrap();
    let tt = inner_product(&dt, &dt, &w, &p, 0.0, &opts).unwrap();
    assert!((rr.value - 1.0 / 0.64).abs() < 1e-8, "{rr:?}");
    assert!((tt.value - 1.69).abs() < 1e-8, "{tt:?}");
    assert!(rr.tail < 1e-20);
}

#[test]
fn curvature_grid_nulls_on_singular_lines() {
    let k = extract_k(&builtin("hydrogenlike-2p").unwrap()).unwrap();
    let spec = GridSpec::new(vec![GridAxis::linear("r", 0.0, 3.9375, 64), GridAxis::linear("theta", 0.0, PI, 64)]).hold("a0", 1.0);
    let table = grid_eval::<f64>(&k, &spec).unwrap();
    assert_eq!(table.rows.len(), 4096);
    for row in &table.rows {
        let (r, th) = (row.coords[0], row.coords[1]);
        let on_locus = r == 0.0 || r == 2.0 || th == 0.0;
        assert_eq!(row.value.is_none(), on_locus, "r={r} theta={th}");
    }
    assert_eq!(table.null_count(), 64 + 64 + 64 - 2);
}
