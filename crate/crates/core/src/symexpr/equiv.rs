//! Probabilistic equality of expressions by random sampling.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::binding::Binding;
use super::eval::Program;
use super::expr::Expr;

pub const DEFAULT_SEED: u64 = 0x5_eed0_f9a7;
pub const DEFAULT_INTERVAL: (f64, f64) = (0.3, 1.2);

/// Per-symbol sampling region, each a union of open intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleDomain {
    ranges: BTreeMap<String, Vec<(f64, f64)>>,
    fallback: Option<(f64, f64)>,
}

impl SampleDomain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn interval(mut self, symbol: &str, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty interval for `{symbol}`");
        self.ranges.entry(symbol.to_string()).or_default().push((lo, hi));
        self
    }

    /// Interval used for symbols without an explicit entry.
    pub fn otherwise(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo < hi);
        self.fallback = Some((lo, hi));
        self
    }

    fn draw(&self, symbol: &str, rng: &mut ChaCha8Rng) -> f64 {
        let default = [self.fallback.unwrap_or(DEFAULT_INTERVAL)];
        let parts: &[(f64, f64)] = self.ranges.get(symbol).map(Vec::as_slice).unwrap_or(&default);
        let total: f64 = parts.iter().map(|(a, b)| b - a).sum();
        let mut u = rng.random::<f64>() * total;
        for &(a, b) in parts {
            let w = b - a;
            if u < w {
                return a + u;
            }
            u -= w;
        }
        let (a, b) = parts[parts.len() - 1];
        a + rng.random::<f64>() * (b - a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivOptions {
    pub domain: SampleDomain,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EquivOptions {
    fn default() -> Self {
        EquivOptions {
            domain: SampleDomain::default(),
            trials: 100,
            tol: 1e-10,
            seed: DEFAULT_SEED,
        }
    }
}

impl EquivOptions {
    pub fn with_domain(domain: SampleDomain, trials: usize, tol: f64) -> Self {
        EquivOptions {
            domain,
            trials,
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equivalent { agreed: usize, poles: usize },
    Counterexample { binding: Binding<f64>, lhs: Complex<f64>, rhs: Complex<f64> },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("inconclusive: {poles} of {trials} samples hit a pole")]
    Inconclusive { poles: usize, trials: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

/// Samples both expressions at random points of `opts.domain` and compares.
pub fn equivalent(e1: &Expr, e2: &Expr, opts: &EquivOptions) -> Result<Verdict, EquivError> {
    if opts.trials == 0 {
        return Err(EquivError::NoTrials);
    }
    let mut symbols = e1.free_symbols();
    symbols.extend(e2.free_symbols());
    let slots: Vec<String> = symbols.into_iter().collect();
    let p1: Program<f64> = Program::compile(e1, &slots).expect("slots cover e1");
    let p2: Program<f64> = Program::compile(e2, &slots).expect("slots cover e2");

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut poles = 0;
    let mut values = vec![Complex::new(0.0, 0.0); slots.len()];
    let mut stack = Vec::new();
    for _ in 0..opts.trials {
        for (v, s) in values.iter_mut().zip(&slots) {
            *v = Complex::new(opts.domain.draw(s, &mut rng), 0.0);
        }
        let (a, b) = match (p1.eval_with(&values, &mut stack), p2.eval_with(&values, &mut stack)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                poles += 1;
                continue;
            }
        };
        if (a - b).norm() > opts.tol * (1.0 + a.norm()) {
            let mut binding = Binding::new();
            for (s, v) in slots.iter().zip(&values) {
                binding.set(s, v.re);
            }
            return Ok(Verdict::Counterexample { binding, lhs: a, rhs: b });
        }
    }
    if 2 * poles > opts.trials {
        return Err(EquivError::Inconclusive { poles, trials: opts.trials });
    }
    Ok(Verdict::Equivalent {
        agreed: opts.trials - poles,
        poles,
    })
}

/// Shorthand: `e` samples to zero everywhere on the default domain.
pub fn is_zero_by_sampling(e: &Expr, opts: &EquivOptions) -> Result<bool, EquivError> {
    if e.is_zero() {
        return Ok(true);
    }
    equivalent(e, &Expr::zero(), opts).map(|v| v.is_equivalent())
}
