//! Metric of quantum states: g_μν = Re[(D_μΨ)(D_νΨ)] over a chart, its line
//! element, and numeric snapshots.

use std::collections::BTreeSet;

use num_complex::Complex;
use thiserror::Error;

use crate::numeric::linalg::{self, Matrix, RankInfo};
use crate::scalar::Scalar;
use crate::symexpr::{self, differentiate, parse, simplify, Binding, EvalError, Expr, ParseError, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChartError {
    #[error("coordinate `{0}` is repeated")]
    Repeated(String),
    #[error("signature has {signature} entries for {coords} coordinates")]
    SignatureLength { coords: usize, signature: usize },
    #[error("signature entries must be +1 or -1")]
    SignatureValue,
    #[error("time index {0} is out of range")]
    TimeIndex(usize),
    #[error("charts have 1 to 4 coordinates, got {0}")]
    Dimension(usize),
}

/// Ordered coordinates with signature, time slot and light speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coords: Vec<String>,
    signature: Vec<i8>,
    time: Option<usize>,
    c_symbol: String,
    c_value: f64,
}

impl Chart {
    pub fn new(coords: &[&str], signature: &[i8], time: Option<usize>) -> Result<Self, ChartError> {
        if coords.is_empty() || coords.len() > 4 {
            return Err(ChartError::Dimension(coords.len()));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(ChartError::Repeated(c.to_string()));
            }
        }
        if signature.len() != coords.len() {
            return Err(ChartError::SignatureLength {
                coords: coords.len(),
                signature: signature.len(),
            });
        }
        if signature.iter().any(|s| s.abs() != 1) {
            return Err(ChartError::SignatureValue);
        }
        if let Some(t) = time {
            if t >= coords.len() {
                return Err(ChartError::TimeIndex(t));
            }
        }
        Ok(Chart {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            signature: signature.to_vec(),
            time,
            c_symbol: "c".into(),
            c_value: 1.0,
        })
    }

    /// (r, theta, phi, t) with signature (+, +, +, -).
    pub fn polar() -> Self {
        Chart::new(&["r", "theta", "phi", "t"], &[1, 1, 1, -1], Some(3)).expect("valid chart")
    }

    /// Purely spatial chart with all-positive signature.
    pub fn euclidean(coords: &[&str]) -> Result<Self, ChartError> {
        Chart::new(coords, &vec![1; coords.len()], None)
    }

    pub fn with_light_speed(mut self, value: f64) -> Self {
        self.c_value = value;
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time
    }

    pub fn c_symbol(&self) -> &str {
        &self.c_symbol
    }

    pub fn c(&self) -> Expr {
        Expr::sym(&self.c_symbol)
    }

    pub fn c_value(&self) -> f64 {
        self.c_value
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("symbols neither coordinates nor parameters: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("unknown builtin `{name}`; available: {}", BUILTINS.join(", "))]
    UnknownBuiltin { name: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}, column {column}: {source}")]
    Expression {
        line: usize,
        column: usize,
        #[source]
        source: ParseError,
    },
    #[error("no `psi = ...` line")]
    MissingPsi,
}

/// Ψ over a chart with numeric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub psi: Expr,
    pub chart: Chart,
    pub params: Binding<f64>,
}

impl WaveFunction {
    pub fn new(psi: Expr, chart: Chart, params: Binding<f64>) -> Result<Self, WaveError> {
        let w = WaveFunction { psi, chart, params };
        let missing: Vec<String> = w.psi.free_symbols().into_iter().filter(|s| !w.knows(s)).collect();
        if !missing.is_empty() {
            return Err(WaveError::Unbound(missing));
        }
        Ok(w)
    }

    fn knows(&self, s: &str) -> bool {
        self.chart.index_of(s).is_some() || self.params.contains(s) || s == self.chart.c_symbol()
    }

    /// Parameter values plus the chart's light speed (unless overridden).
    pub fn bindings(&self) -> Binding<f64> {
        let mut b = self.params.clone();
        if !b.contains(self.chart.c_symbol()) {
            b.set(self.chart.c_symbol(), self.chart.c_value());
        }
        b
    }

    /// Replaces parameter values; unknown names are added.
    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.set(name, value);
        self
    }

    /// D_μΨ: ∂Ψ/∂x^μ, with the time derivative divided by c.
    pub fn covariant_derivative(&self, mu: usize) -> Expr {
        let d = differentiate(&self.psi, self.chart.coord(mu));
        if Some(mu) == self.chart.time_index() {
            d * self.chart.c().recip()
        } else {
            d
        }
    }
}

pub const BUILTINS: [&str; 4] = ["hydrogen-1s", "hydrogenlike-2p", "plane-wave", "gaussian"];

/// Builtin wave functions over the polar chart.
pub fn builtin(name: &str) -> Result<WaveFunction, WaveError> {
    let (psi, params): (&str, &[&str]) = match name {
        "hydrogen-1s" => ("C*exp(-r/a0)*exp(-i*omega0*t)", &["C", "a0", "omega0"]),
        "hydrogenlike-2p" => (
            "C1*r*sin(theta)*cos(phi)*exp(-r/(2*a0))*exp(-i*omega0*t)",
            &["C1", "a0", "omega0"],
        ),
        "plane-wave" => ("C*exp(i*kz*r*cos(theta))*exp(-i*omega0*t)", &["C", "kz", "omega0"]),
        "gaussian" => ("C*exp(-r^2/(2*sigma^2))*exp(-i*omega0*t)", &["C", "sigma", "omega0"]),
        _ => {
            return Err(WaveError::UnknownBuiltin { name: name.to_string() });
        }
    };
    let mut b = Binding::new();
    for p in params {
        b.set(p, 1.0);
    }
    WaveFunction::new(parse(psi).expect("builtin parses"), Chart::polar(), b)
}

/// Parses the wave-function file format: `param NAME = NUMBER` lines, one
/// `psi = EXPRESSION` line, `#` comments. A `c` parameter sets the chart's
/// light speed.
pub fn parse_wave_file(text: &str) -> Result<WaveFunction, WaveError> {
    let mut params = Binding::new();
    let mut psi: Option<Expr> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some((lhs, rhs)) = body.split_once('=') else {
            return Err(WaveError::Syntax {
                line,
                message: "expected `=`".into(),
            });
        };
        let lhs = lhs.trim();
        let rhs_start = lhs_len(body) + 1;
        if lhs == "psi" {
            if psi.is_some() {
                return Err(WaveError::Syntax {
                    line,
                    message: "second `psi` line".into(),
                });
            }
            let e = parse(rhs).map_err(|source| WaveError::Expression {
                line,
                column: rhs_start + source.offset() + 1,
                source,
            })?;
            psi = Some(e);
        } else if let Some(name) = lhs.strip_prefix("param") {
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') || name == lhs {
                return Err(WaveError::Syntax {
                    line,
                    message: format!("bad parameter name `{name}`"),
                });
            }
            let value: f64 = rhs.trim().parse().map_err(|_| WaveError::Syntax {
                line,
                message: format!("`{}` is not a number", rhs.trim()),
            })?;
            if !value.is_finite() {
                return Err(WaveError::Syntax {
                    line,
                    message: "parameter must be finite".into(),
                });
            }
            if params.insert_real(name, value).is_err() {
                return Err(WaveError::Syntax {
                    line,
                    message: format!("parameter `{name}` given twice"),
                });
            }
        } else {
            return Err(WaveError::Syntax {
                line,
                message: format!("expected `param NAME = NUMBER` or `psi = ...`, found `{lhs}`"),
            });
        }
    }
    let psi = psi.ok_or(WaveError::MissingPsi)?;
    let mut chart = Chart::polar();
    if let Some(c) = params.remove("c") {
        chart = chart.with_light_speed(c.re);
    }
    WaveFunction::new(psi, chart, params)
}

fn lhs_len(body: &str) -> usize {
    body.find('=').unwrap_or(body.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// Re[(D_μΨ)(D_νΨ)]
    #[default]
    Unconjugated,
    /// Re[(D_μΨ)* (D_νΨ)]
    Conjugated,
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unconjugated" => Ok(Convention::Unconjugated),
            "conjugated" => Ok(Convention::Conjugated),
            _ => Err(format!("unknown convention `{s}` (unconjugated|conjugated)")),
        }
    }
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Unconjugated => "unconjugated",
            Convention::Conjugated => "conjugated",
        }
    }
}

/// Symmetric metric over a chart; only μ ≤ ν is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    pub chart: Chart,
    comps: Vec<Expr>,
    /// Numeric parameter values used by evaluation helpers.
    pub params: Binding<f64>,
}

fn tri(i: usize, j: usize, n: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

impl MetricTensor {
    /// Builds from a full (or upper-triangular) component function.
    pub fn from_fn(chart: Chart, params: Binding<f64>, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let n = chart.dim();
        let mut comps = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                comps.push(f(i, j));
            }
        }
        MetricTensor { chart, comps, params }
    }

    pub fn diagonal(chart: Chart, params: Binding<f64>, diag: Vec<Expr>) -> Self {
        assert_eq!(diag.len(), chart.dim());
        MetricTensor::from_fn(chart, params, |i, j| if i == j { diag[i].clone() } else { Expr::zero() })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.comps[tri(i, j, self.dim())]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        MetricTensor {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
            params: self.params.clone(),
        }
    }

    /// Parameters plus light speed.
    pub fn bindings(&self) -> Binding<f64> {
        let mut b = self.params.clone();
        if !b.contains(self.chart.c_symbol()) {
            b.set(self.chart.c_symbol(), self.chart.c_value());
        }
        b
    }

    /// Off-diagonal entries (μ < ν) with their indices.
    pub fn cross_terms(&self) -> Vec<(usize, usize, Expr)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j, self.get(i, j).clone()));
            }
        }
        out
    }

    pub fn is_diagonal(&self) -> bool {
        self.cross_terms().iter().all(|(_, _, e)| e.is_zero())
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        self.comps.iter().flat_map(|e| e.free_symbols()).collect()
    }
}

/// g_μν = s_μν Re[(D_μΨ)(D_νΨ)] with D_t = (1/c)∂_t. Diagonal entries take
/// the signature sign, time entries a factor c per time index, so the line
/// element carries c²dt².
pub fn build_metric(w: &WaveFunction, convention: Convention) -> MetricTensor {
    let n = w.chart.dim();
    let d: Vec<Expr> = (0..n).map(|mu| w.covariant_derivative(mu)).collect();
    let time = w.chart.time_index();
    let c = w.chart.c();
    MetricTensor::from_fn(w.chart.clone(), w.params.clone(), |i, j| {
        let left = match convention {
            Convention::Unconjugated => d[i].clone(),
            Convention::Conjugated => symexpr::conj(&d[i]),
        };
        let mut g = symexpr::re(&(left * d[j].clone()));
        let c_power = [i, j].iter().filter(|&&k| Some(k) == time).count() as i64;
        if c_power > 0 {
            g = g * c.powi(c_power);
        }
        if i == j && w.chart.signature()[i] < 0 {
            g = g.neg();
        }
        simplify(&g)
    })
}

/// ds² split into diagonal terms and cross terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LineElement {
    pub diagonal: Vec<(String, Expr)>,
    pub cross: Vec<(String, String, Expr)>,
}

pub fn line_element(g: &MetricTensor) -> LineElement {
    let n = g.dim();
    let names = g.chart.coords();
    LineElement {
        diagonal: (0..n).map(|i| (names[i].clone(), g.get(i, i).clone())).collect(),
        cross: g
            .cross_terms()
            .into_iter()
            .map(|(i, j, e)| (names[i].clone(), names[j].clone(), e))
            .collect(),
    }
}

impl LineElement {
    /// Full form: diagonal terms then `2*g_ij*dx^i*dx^j` cross terms.
    pub fn render(&self) -> String {
        let mut terms: Vec<(Expr, String)> = self.diagonal.iter().map(|(x, e)| (e.clone(), format!("d{x}^2"))).collect();
        for (a, b, e) in &self.cross {
            terms.push((e.clone() * Expr::int(2), format!("d{a}*d{b}")));
        }
        render_terms(&terms)
    }

    /// Diagonal terms only.
    pub fn render_diagonal(&self) -> String {
        let terms: Vec<(Expr, String)> = self.diagonal.iter().map(|(x, e)| (e.clone(), format!("d{x}^2"))).collect();
        render_terms(&terms)
    }
}

fn render_terms(terms: &[(Expr, String)]) -> String {
    let mut out = String::from("ds^2 =");
    let mut first = true;
    for (coef, diff) in terms {
        if coef.is_zero() {
            continue;
        }
        let negative = coef.has_negative_sign();
        let mag = if negative { coef.neg() } else { coef.clone() };
        let sign = match (first, negative) {
            (true, false) => " ",
            (true, true) => " -",
            (false, false) => " + ",
            (false, true) => " - ",
        };
        out.push_str(sign);
        if !mag.is_one() {
            let text = mag.pretty();
            if matches!(mag.node(), symexpr::Node::Add(_)) {
                out.push('(');
                out.push_str(&text);
                out.push(')');
            } else {
                out.push_str(&text);
            }
            out.push('*');
        }
        out.push_str(diff);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("component g[{i}][{j}] has imaginary residue {residue:e}")]
    ImaginaryResidue { i: usize, j: usize, residue: f64 },
}

/// Metric components compiled against one slot order.
pub struct CompiledMetric<T: Scalar> {
    programs: Vec<Program<T>>,
    slots: Vec<String>,
    defaults: Binding<f64>,
    n: usize,
}

impl<T: Scalar> CompiledMetric<T> {
    pub fn new(g: &MetricTensor) -> Self {
        let mut slots: Vec<String> = g.chart.coords().to_vec();
        for s in g.free_symbols() {
            if !slots.contains(&s) {
                slots.push(s);
            }
        }
        let programs = g
            .comps
            .iter()
            .map(|e| Program::compile(e, &slots).expect("slots cover every component"))
            .collect();
        CompiledMetric {
            programs,
            slots,
            defaults: g.bindings(),
            n: g.dim(),
        }
    }

    pub fn eval(&self, point: &Binding<T>) -> Result<Matrix<T>, MetricError> {
        let mut vals = Vec::with_capacity(self.slots.len());
        let mut missing = Vec::new();
        for s in &self.slots {
            match point.get(s) {
                Some(v) => vals.push(v),
                None => match self.defaults.get(s) {
                    Some(v) => vals.push(Complex::new(T::of(v.re), T::of(v.im))),
                    None => {
                        missing.push(s.clone());
                        vals.push(Complex::new(T::zero(), T::zero()));
                    }
                },
            }
        }
        if !missing.is_empty() {
            return Err(EvalError::Unbound(missing).into());
        }
        let mut m = linalg::zeros(self.n);
        let mut stack = Vec::new();
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.programs[k].eval_with(&vals, &mut stack)?;
                k += 1;
                let scale = T::one().max(v.re.abs());
                if v.im.abs() > T::of(1e-12) * scale {
                    return Err(MetricError::ImaginaryResidue {
                        i,
                        j,
                        residue: v.im.to_f64_lossy(),
                    });
                }
                m[i][j] = v.re;
                m[j][i] = v.re;
            }
        }
        Ok(m)
    }
}

/// Numeric metric at `point`; parameters default to the metric's own.
pub fn metric_at<T: Scalar>(g: &MetricTensor, point: &Binding<T>) -> Result<Matrix<T>, MetricError> {
    CompiledMetric::new(g).eval(point)
}

/// Numeric rank (threshold `tol * max|entry|`) and nullspace at `point`.
pub fn rank_at<T: Scalar>(g: &MetricTensor, point: &Binding<T>, tol: T) -> Result<RankInfo<T>, MetricError> {
    Ok(linalg::rank(&metric_at(g, point)?, tol))
}
