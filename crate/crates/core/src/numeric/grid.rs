use std::fmt::Write as _;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::symexpr::{Binding, EvalError, Expr, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridAxis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        GridAxis {
            name: name.to_string(),
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(name: &str, min: f64, max: f64, count: usize) -> Self {
        GridAxis {
            spacing: Spacing::Log,
            ..Self::linear(name, min, max, count)
        }
    }

    pub fn sample(&self, i: usize) -> f64 {
        let n = (self.count - 1) as f64;
        if i + 1 == self.count {
            return self.max;
        }
        match self.spacing {
            Spacing::Linear => self.min + (self.max - self.min) * i as f64 / n,
            Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * i as f64 / n).exp(),
        }
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.sample(i)).collect()
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    fn validate(&self) -> Result<(), GridError> {
        let bad = |reason: &str| GridError::InvalidAxis {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(bad("min must be below max"));
        }
        if self.count < 2 {
            return Err(bad("at least 2 samples are required"));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(bad("log spacing needs a positive minimum"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis `{name}`: {reason}")]
    InvalidAxis { name: String, reason: String },
    #[error("grid has no axes")]
    NoAxes,
    #[error("axis `{0}` appears twice")]
    DuplicateAxis(String),
    #[error("unbound symbols: {}", .0.join(", "))]
    Unbound(Vec<String>),
}

/// Sampled coordinates plus held bindings for the remaining symbols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    pub fixed: Binding<f64>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        GridSpec { axes, fixed: Binding::new() }
    }

    pub fn hold(mut self, name: &str, value: f64) -> Self {
        self.fixed.set(name, value);
        self
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.axes.is_empty() {
            return Err(GridError::NoAxes);
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(GridError::DuplicateAxis(a.name.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Compiles `e` with the axes as the leading slots and the held values
    /// filled in for the rest.
    pub(crate) fn compile<T: Scalar>(&self, e: &Expr) -> Result<(Program<T>, Vec<Complex<T>>), GridError> {
        self.validate()?;
        let mut slots: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        let mut missing = Vec::new();
        for s in e.free_symbols() {
            if slots.contains(&s) {
                continue;
            }
            if !self.fixed.contains(&s) {
                missing.push(s.clone());
            }
            slots.push(s);
        }
        if !missing.is_empty() {
            return Err(GridError::Unbound(missing));
        }
        let program = Program::compile(e, &slots).map_err(|err| match err {
            EvalError::Unbound(v) => GridError::Unbound(v),
            other => unreachable!("compile only reports unbound symbols: {other}"),
        })?;
        let values = slots
            .iter()
            .map(|s| match self.fixed.get(s) {
                Some(v) => Complex::new(T::of(v.re), T::of(v.im)),
                None => Complex::new(T::zero(), T::zero()),
            })
            .collect();
        Ok((program, values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<T> {
    pub coords: Vec<f64>,
    /// `None` where the expression has a pole.
    pub value: Option<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable<T> {
    pub columns: Vec<String>,
    pub rows: Vec<GridRow<T>>,
}

impl<T: Scalar> GridTable<T> {
    pub fn null_count(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_none()).count()
    }

    /// CSV with header `coord1,...,value`; the value column holds the real
    /// part, empty for poles.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push_str(",value\n");
        for row in &self.rows {
            for c in &row.coords {
                let _ = write!(out, "{},", format_sig17(*c));
            }
            if let Some(v) = row.value {
                out.push_str(&format_sig17(v.re.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Evaluates `e` at every grid point, last axis varying fastest.
pub fn grid_eval<T: Scalar>(e: &Expr, spec: &GridSpec) -> Result<GridTable<T>, GridError> {
    let (program, mut values) = spec.compile::<T>(e)?;
    let samples: Vec<Vec<f64>> = spec.axes.iter().map(GridAxis::samples).collect();
    let mut idx = vec![0usize; samples.len()];
    let mut rows = Vec::with_capacity(spec.len());
    let mut stack = Vec::new();
    loop {
        let coords: Vec<f64> = idx.iter().zip(&samples).map(|(&i, s)| s[i]).collect();
        for (k, c) in coords.iter().enumerate() {
            values[k] = Complex::new(T::of(*c), T::zero());
        }
        let value = program.eval_with(&values, &mut stack).ok();
        rows.push(GridRow { coords, value });
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(GridTable {
                    columns: spec.axes.iter().map(|a| a.name.clone()).collect(),
                    rows,
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < samples[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
