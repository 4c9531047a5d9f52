//! Robertson–Walker template, its comparison with a quantum-state metric,
//! and classification of the singular loci of the extracted curvature.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numeric::{scan_singular_candidates, GridAxis, GridSpec, ScanOptions};
use crate::qmetric::{build_metric, Chart, Convention, MetricTensor, WaveFunction};
use crate::symexpr::{
    self, differentiate, equivalent, is_zero_by_sampling, simplify, substitute_one, Binding, EquivOptions, Expr, Func, Node,
    Program,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrwError {
    #[error("metric has no radial component (g_rr vanishes identically)")]
    NoRadialComponent,
    #[error("decomposition needs a 4-coordinate chart with a time coordinate")]
    ChartShape,
}

/// diag(S²/(1 − k r²), S² r², S² r² sin²θ, −c²) over `chart`.
pub fn frw_metric(s: &Expr, k: &Expr, chart: &Chart) -> MetricTensor {
    let r = Expr::sym(chart.coord(0));
    let theta = Expr::sym(chart.coord(1));
    let s2 = s.powi(2);
    let one_minus = Expr::one() - k.clone() * r.powi(2);
    let diag = vec![
        simplify(&(s2.clone() * one_minus.recip())),
        simplify(&(s2.clone() * r.powi(2))),
        simplify(&(s2 * r.powi(2) * symexpr::sin(&theta).powi(2))),
        chart.c().powi(2).neg(),
    ];
    MetricTensor::diagonal(chart.clone(), Binding::new(), diag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrwDecomposition {
    /// g_θθ / r²
    pub s_sq_from_theta: Expr,
    /// g_φφ / (r² sin²θ)
    pub s_sq_from_phi: Expr,
    /// (1/r²)(1 − S²/g_rr) with S² from the θθ route.
    pub k_expr: Expr,
    /// g_tt/(−c²) − 1
    pub tt_residual: Expr,
    /// S²(θ route) − S²(φ route)
    pub isotropy_residual: Expr,
    /// Off-diagonal components (i, j, g_ij) that the diagonal template ignores.
    pub offdiag: Vec<(usize, usize, Expr)>,
}

/// Matches a polar-chart metric against the Robertson–Walker form.
pub fn decompose(g: &MetricTensor) -> Result<FrwDecomposition, FrwError> {
    let chart = &g.chart;
    if chart.dim() != 4 || chart.time_index() != Some(3) {
        return Err(FrwError::ChartShape);
    }
    let grr = g.get(0, 0);
    if grr.is_zero() || is_zero_by_sampling(grr, &EquivOptions::default()).unwrap_or(false) {
        return Err(FrwError::NoRadialComponent);
    }
    let r2 = Expr::sym(chart.coord(0)).powi(2);
    let sin2 = symexpr::sin(&Expr::sym(chart.coord(1))).powi(2);
    let s_theta = simplify(&(g.get(1, 1).clone() * r2.recip()));
    let s_phi = simplify(&(g.get(2, 2).clone() * (r2.clone() * sin2).recip()));
    let k_expr = simplify(&(r2.recip() * (Expr::one() - s_theta.clone() * grr.recip())));
    let tt_residual = simplify(&(g.get(3, 3).clone() * chart.c().powi(2).neg().recip() - Expr::one()));
    let isotropy_residual = simplify(&(s_theta.clone() - s_phi.clone()));
    Ok(FrwDecomposition {
        s_sq_from_theta: s_theta,
        s_sq_from_phi: s_phi,
        k_expr,
        tt_residual,
        isotropy_residual,
        offdiag: g.cross_terms().into_iter().filter(|(_, _, e)| !e.is_zero()).collect(),
    })
}

/// Curvature field k(r, θ) of a wave function's metric.
pub fn extract_k(w: &WaveFunction) -> Result<Expr, FrwError> {
    Ok(decompose(&build_metric(w, Convention::Unconjugated))?.k_expr)
}

/// Prints k as `(1/r^2)*(1 - X)` with X = 1 − r²k, rescaling sums in X so
/// their coordinate-free term is 1. Falls back to the canonical form when X
/// is not a ratio or the rewritten string does not sample equal to `k`.
pub fn present_k(k: &Expr, chart: &Chart) -> String {
    let r2 = Expr::sym(chart.coord(0)).powi(2);
    let x = simplify(&(Expr::one() - r2 * k.clone()));
    let has_denominator = |e: &Expr| match e.node() {
        Node::Mul(fs) => fs.iter().any(|f| f.as_base_exp().1.has_negative_sign()),
        Node::Pow(_, n) => n.has_negative_sign(),
        _ => false,
    };
    if !has_denominator(&x) {
        return k.pretty();
    }
    let x = unit_sums(&x, chart.coords());
    let (sign, mag) = if x.has_negative_sign() { ("+", x.neg()) } else { ("-", x) };
    let text = format!("(1/{}^2)*(1 {sign} {})", chart.coord(0), mag.pretty());
    let same = symexpr::parse(&text).is_ok_and(|p| {
        equivalent(&p, k, &EquivOptions::default()).is_ok_and(|v| v.is_equivalent())
    });
    if same {
        text
    } else {
        k.pretty()
    }
}

fn unit_sums(x: &Expr, coords: &[String]) -> Expr {
    let factors = match x.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![x.clone()],
    };
    let mut out = Vec::new();
    for f in factors {
        let (b, n) = f.as_base_exp();
        let Node::Add(ts) = b.node() else {
            out.push(f);
            continue;
        };
        let free = ts.iter().find(|t| !t.is_number() && coords.iter().all(|c| !t.depends_on(c)));
        match free {
            Some(m) => {
                let scaled = Expr::add_all(ts.iter().map(|t| t.clone() * m.recip()));
                out.push(Expr::pow(&scaled, &n));
                out.push(Expr::pow(m, &n));
            }
            None => out.push(f),
        }
    }
    Expr::mul_all(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Coordinate,
    Physical,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Coordinate => "coordinate",
            Classification::Physical => "physical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Locus {
    pub coordinate: String,
    /// The locus is `coordinate = value`.
    pub value: Expr,
    /// Further roots of the same factor (e.g. θ = π for sin θ).
    pub also: Vec<Expr>,
    /// `coordinate - value`, vanishing on the locus.
    pub constraint: Expr,
    pub classification: Classification,
    pub witness: Binding<f64>,
    /// (distance from the locus, |k|), distance shrinking.
    pub evidence: Vec<(f64, f64)>,
    /// Position refined by the numeric scan, when it found this locus.
    pub numeric_position: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularityReport {
    pub loci: Vec<Locus>,
}

/// Region and parameter values for the singularity search.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityDomain {
    pub r: (String, f64, f64),
    pub theta: (String, f64, f64),
    pub params: Binding<f64>,
    pub samples: usize,
}

impl SingularityDomain {
    pub fn new(params: Binding<f64>) -> Self {
        SingularityDomain {
            r: ("r".into(), 0.05, 5.0),
            theta: ("theta".into(), 0.05, PI - 0.05),
            params,
            samples: 64,
        }
    }

    fn generic(&self, axis: &(String, f64, f64)) -> f64 {
        axis.1 + 0.3 * (axis.2 - axis.1)
    }
}

/// Finds loci from denominator factors of `k`, classifies them by chart
/// degeneracy ({r = 0} ∪ {θ = 0} ∪ {θ = π} are coordinate singularities) and
/// confirms them with a numeric scan.
pub fn classify_singularities(k: &Expr, dom: &SingularityDomain) -> SingularityReport {
    let k = simplify(k);
    let coords = [dom.r.0.as_str(), dom.theta.0.as_str()];
    let mut factors = Vec::new();
    denominator_factors(&k, &mut factors);

    let mut loci: Vec<Locus> = Vec::new();
    for f in factors {
        let Some((coord, roots)) = solve_factor(&f, &coords) else { continue };
        let value = roots[0].clone();
        if loci.iter().any(|l| l.coordinate == coord && (l.value == value || l.also.contains(&value))) {
            continue;
        }
        let is_theta = coord == dom.theta.0;
        let degenerate = roots.iter().all(|v| v.is_zero() || (is_theta && *v == Expr::pi()));
        loci.push(Locus {
            constraint: Expr::sym(&coord) - value.clone(),
            coordinate: coord,
            value,
            also: roots[1..].to_vec(),
            classification: if degenerate {
                Classification::Coordinate
            } else {
                Classification::Physical
            },
            witness: Binding::new(),
            evidence: Vec::new(),
            numeric_position: None,
        });
    }

    let program: Program<f64> = Program::compile_auto(&k);
    let eval_at = |b: &Binding<f64>| -> f64 {
        match program.values_from(b).and_then(|v| program.eval(&v)) {
            Ok(v) => v.norm(),
            Err(_) => f64::INFINITY,
        }
    };
    let mut base = dom.params.clone();
    base.set(&dom.r.0, dom.generic(&dom.r));
    base.set(&dom.theta.0, dom.generic(&dom.theta));

    let scan = GridSpec {
        axes: vec![
            GridAxis::linear(&dom.r.0, dom.r.1, dom.r.2, dom.samples),
            GridAxis::linear(&dom.theta.0, dom.theta.1, dom.theta.2, dom.samples),
        ],
        fixed: dom.params.clone(),
    };
    let candidates = scan_singular_candidates(&k, &scan, &ScanOptions::default()).unwrap_or_default();

    for locus in &mut loci {
        let at = value_of(&locus.value, &dom.params);
        let mut w = base.clone();
        w.set(&locus.coordinate, at);
        locus.witness = w;
        let (lo, hi) = if locus.coordinate == dom.r.0 { (dom.r.1, dom.r.2) } else { (dom.theta.1, dom.theta.2) };
        let scale = if at == 0.0 { 1.0 } else { at.abs() };
        let side = if at + scale / 8.0 < hi || at - scale / 8.0 <= lo.min(0.0) { 1.0 } else { -1.0 };
        locus.evidence = (3..=10)
            .map(|j| {
                let d = scale * 2f64.powi(-j);
                let mut p = base.clone();
                p.set(&locus.coordinate, at + side * d);
                (d, eval_at(&p))
            })
            .collect();
        locus.numeric_position = candidates
            .iter()
            .filter(|c| c.axis == locus.coordinate && !c.boundary)
            .map(|c| c.position)
            .min_by(|a, b| (a - at).abs().total_cmp(&(b - at).abs()))
            .filter(|p| (p - at).abs() < 1e-3 * scale.max(1.0));
    }
    for c in candidates.iter().filter(|c| !c.boundary) {
        let known = loci.iter().any(|l| l.coordinate == c.axis && l.numeric_position == Some(c.position));
        if known {
            continue;
        }
        let mut w = base.clone();
        w.set(&c.axis, c.position);
        loci.push(Locus {
            coordinate: c.axis.clone(),
            value: Expr::float(c.position),
            also: Vec::new(),
            constraint: Expr::sym(&c.axis) - Expr::float(c.position),
            classification: Classification::Physical,
            witness: w,
            evidence: Vec::new(),
            numeric_position: Some(c.position),
        });
    }
    loci.sort_by(|a, b| {
        (a.classification == Classification::Physical)
            .cmp(&(b.classification == Classification::Physical))
            .then(coords.iter().position(|c| *c == a.coordinate).cmp(&coords.iter().position(|c| *c == b.coordinate)))
            .then(value_of(&a.value, &dom.params).total_cmp(&value_of(&b.value, &dom.params)))
    });
    SingularityReport { loci }
}

fn value_of(e: &Expr, params: &Binding<f64>) -> f64 {
    symexpr::eval(e, params).map(|v| v.re).unwrap_or(f64::NAN)
}

/// Bases raised to negative powers anywhere in `e`.
fn denominator_factors(e: &Expr, out: &mut Vec<Expr>) {
    match e.node() {
        Node::Pow(b, x) if x.as_number().is_some_and(|n| n.is_negative()) => {
            match b.node() {
                Node::Mul(fs) => out.extend(fs.iter().cloned()),
                _ => out.push(b.clone()),
            }
            denominator_factors(b, out);
        }
        Node::Func(Func::Tan, u) => out.push(symexpr::cos(u)),
        Node::Func(Func::Cot, u) => out.push(symexpr::sin(u)),
        _ => {
            for c in e.children() {
                denominator_factors(&c, out);
            }
        }
    }
}

/// Roots of a factor in one coordinate: a bare coordinate, sin/cos of it, or
/// a factor linear in it.
fn solve_factor(f: &Expr, coords: &[&str]) -> Option<(String, Vec<Expr>)> {
    let deps: Vec<&str> = coords.iter().copied().filter(|c| f.depends_on(c)).collect();
    let [x] = deps[..] else { return None };
    let sym = Expr::sym(x);
    match f.node() {
        Node::Sym(_) => return Some((x.to_string(), vec![Expr::zero()])),
        Node::Pow(b, e) if e.as_number().is_some_and(|n| !n.is_negative()) => return solve_factor(b, coords),
        Node::Func(Func::Sin, u) if *u == sym => return Some((x.to_string(), vec![Expr::zero(), Expr::pi()])),
        Node::Func(Func::Cos, u) if *u == sym => return Some((x.to_string(), vec![Expr::pi() * Expr::rational(1, 2)])),
        _ => {}
    }
    let slope = simplify(&differentiate(f, x));
    if slope.depends_on(x) || slope.is_zero() {
        return None;
    }
    let at_zero = substitute_one(f, x, &Expr::zero());
    let root = simplify(&(at_zero.neg() * slope.recip()));
    let check = simplify(&substitute_one(f, x, &root));
    let ok = check.is_zero() || equivalent(&check, &Expr::zero(), &EquivOptions::default()).is_ok_and(|v| v.is_equivalent());
    ok.then(|| (x.to_string(), vec![root]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmetric::builtin;
    use crate::symexpr::{parse, SampleDomain};

    fn curvature_domain() -> SampleDomain {
        SampleDomain::new()
            .interval("r", 0.1, 1.9)
            .interval("r", 2.1, 5.0)
            .interval("theta", 0.1, PI - 0.1)
            .interval("a0", 1.0, 1.0 + 1e-12)
    }

    #[test]
    fn template_components() {
        let g = frw_metric(&parse("t^2").unwrap(), &Expr::one(), &Chart::polar());
        assert_eq!(g.get(0, 0), &simplify(&parse("t^4/(1 - r^2)").unwrap()));
        let g = frw_metric(&Expr::sym("S"), &Expr::int(-1), &Chart::polar());
        let at = substitute_one(g.get(0, 0), "r", &Expr::one());
        assert_eq!(at, parse("S^2/2").unwrap());
    }

    #[test]
    fn round_trip_recovers_template() {
        let d = decompose(&frw_metric(&parse("t^2").unwrap(), &Expr::one(), &Chart::polar())).unwrap();
        assert_eq!(d.k_expr, Expr::one());
        assert_eq!(d.s_sq_from_theta, parse("t^4").unwrap());
        assert_eq!(d.s_sq_from_phi, parse("t^4").unwrap());
        assert!(d.tt_residual.is_zero());
    }

    #[test]
    fn p_state_curvature() {
        let k = extract_k(&builtin("hydrogenlike-2p").unwrap()).unwrap();
        let want = parse("(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)").unwrap();
        let opts = EquivOptions::with_domain(curvature_domain(), 200, 1e-9);
        assert!(equivalent(&k, &want, &opts).unwrap().is_equivalent(), "{k}");
        assert_eq!(k.free_symbol_list(), ["a0", "r", "theta"]);
        let quarter = substitute_one(&substitute_one(&k, "theta", &(Expr::pi() * Expr::rational(1, 4))), "r", &Expr::sym("a0"));
        let v = symexpr::eval(&quarter, &Binding::<f64>::new().with("a0", 1.0)).unwrap();
        assert!((v.re + 3.0).abs() < 1e-12);
        let right = substitute_one(&k, "theta", &(Expr::pi() * Expr::rational(1, 2)));
        assert_eq!(simplify(&right), parse("1/r^2").unwrap());
        assert_eq!(present_k(&k, &Chart::polar()), "(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)");
    }

    #[test]
    fn s_state_has_zero_scale_factor() {
        let d = decompose(&build_metric(&builtin("hydrogen-1s").unwrap(), Convention::Unconjugated)).unwrap();
        assert!(d.s_sq_from_theta.is_zero() && d.s_sq_from_phi.is_zero());
        assert_eq!(d.k_expr, parse("1/r^2").unwrap());
    }

    #[test]
    fn p_state_loci() {
        let k = extract_k(&builtin("hydrogenlike-2p").unwrap()).unwrap();
        let rep = classify_singularities(&k, &SingularityDomain::new(Binding::new().with("a0", 1.0)));
        let summary: Vec<(String, String, &str)> = rep
            .loci
            .iter()
            .map(|l| (l.coordinate.clone(), l.value.to_string(), l.classification.name()))
            .collect();
        assert_eq!(
            summary,
            [
                ("r".to_string(), "0".to_string(), "coordinate"),
                ("theta".to_string(), "0".to_string(), "coordinate"),
                ("r".to_string(), "2*a0".to_string(), "physical"),
            ]
        );
        let phys = &rep.loci[2];
        assert!((phys.numeric_position.unwrap() - 2.0).abs() < 1e-6);
        assert!(phys.evidence.windows(2).all(|w| w[1].1 > w[0].1), "{:?}", phys.evidence);
    }

    #[test]
    fn simple_and_empty_reports() {
        let dom = SingularityDomain::new(Binding::new());
        let rep = classify_singularities(&parse("1/r^2").unwrap(), &dom);
        assert_eq!(rep.loci.len(), 1);
        assert_eq!(rep.loci[0].classification, Classification::Coordinate);
        assert!(classify_singularities(&Expr::int(3), &dom).loci.is_empty());
    }
}
