//! Numeric search for divergence loci along grid lines.

use num_complex::Complex;

use super::grid::{GridError, GridSpec};
use crate::symexpr::{Expr, Program};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Magnitude a refined peak must exceed.
    pub threshold: f64,
    /// Required growth of |e| when the distance to the peak shrinks 8×.
    pub growth: f64,
    /// Edge value over its neighbour for a boundary candidate.
    pub edge_ratio: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            threshold: 1e6,
            growth: 4.0,
            edge_ratio: 2.0,
        }
    }
}

/// A hyperplane `axis = position` on which the expression blows up.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub axis: String,
    pub position: f64,
    /// Blow-up sits at or beyond the edge of the scanned range.
    pub boundary: bool,
    /// Largest |e| seen at the refined positions (infinite for exact poles).
    pub magnitude: f64,
    /// Number of grid lines on which the locus was detected.
    pub lines: usize,
}

struct Line<'a> {
    program: &'a Program<f64>,
    values: Vec<Complex<f64>>,
    slot: usize,
    stack: Vec<Complex<f64>>,
}

impl Line<'_> {
    /// |e| at x; poles are infinite.
    fn mag(&mut self, x: f64) -> f64 {
        self.values[self.slot] = Complex::new(x, 0.0);
        match self.program.eval_with(&self.values, &mut self.stack) {
            Ok(v) => v.norm(),
            Err(_) => f64::INFINITY,
        }
    }

    fn real(&mut self, x: f64) -> Option<f64> {
        self.values[self.slot] = Complex::new(x, 0.0);
        self.program.eval_with(&self.values, &mut self.stack).ok().map(|v| v.re)
    }

    /// Bisection on a sign change of the real part across a pole.
    fn bisect(&mut self, mut a: f64, mut b: f64) -> f64 {
        let Some(mut fa) = self.real(a) else { return a };
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match self.real(m) {
                None => return m,
                Some(fm) if fm.signum() == fa.signum() => {
                    a = m;
                    fa = fm;
                }
                Some(_) => b = m,
            }
        }
        0.5 * (a + b)
    }

    /// Golden-section minimisation of 1/|e| on [a, b].
    fn golden(&mut self, mut a: f64, mut b: f64) -> f64 {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = self.mag(c);
        let mut fd = self.mag(d);
        for _ in 0..300 {
            if fc.is_infinite() {
                return c;
            }
            if fd.is_infinite() {
                return d;
            }
            if b - a <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.mag(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.mag(d);
            }
        }
        0.5 * (a + b)
    }
}

/// Scans every axis-parallel grid line for peaks of |e| that keep growing
/// under refinement, refines their position and clusters them into loci.
pub fn scan_singular_candidates(e: &Expr, spec: &GridSpec, opts: &ScanOptions) -> Result<Vec<Candidate>, GridError> {
    let (program, base) = spec.compile::<f64>(e)?;
    let samples: Vec<Vec<f64>> = spec.axes.iter().map(|a| a.samples()).collect();
    let mut found: Vec<Candidate> = Vec::new();

    for (axis, ax) in spec.axes.iter().enumerate() {
        let others: Vec<usize> = (0..spec.axes.len()).filter(|&k| k != axis).collect();
        let mut idx = vec![0usize; others.len()];
        let xs = &samples[axis];
        let mut hits: Vec<Candidate> = Vec::new();
        loop {
            let mut values = base.clone();
            for (o, &k) in others.iter().enumerate() {
                values[k] = Complex::new(samples[k][idx[o]], 0.0);
            }
            let mut line = Line {
                program: &program,
                values,
                slot: axis,
                stack: Vec::new(),
            };
            let m: Vec<f64> = xs.iter().map(|&x| line.mag(x)).collect();
            let n = m.len();
            for i in 1..n - 1 {
                if !(m[i] >= m[i - 1] && m[i] >= m[i + 1] && m[i] > m[i - 1].min(m[i + 1])) {
                    continue;
                }
                let (a, b) = (xs[i - 1], xs[i + 1]);
                let flip = |line: &mut Line, u: f64, v: f64| match (line.real(u), line.real(v)) {
                    (Some(p), Some(q)) => p.signum() != q.signum() && p != 0.0 && q != 0.0,
                    _ => false,
                };
                let x = if m[i].is_infinite() {
                    xs[i]
                } else if flip(&mut line, a, xs[i]) {
                    line.bisect(a, xs[i])
                } else if flip(&mut line, xs[i], b) {
                    line.bisect(xs[i], b)
                } else {
                    line.golden(a, b)
                };
                let peak = line.mag(x);
                let delta = 0.25 * (b - a) / 2.0;
                let grows = [1.0, -1.0].iter().any(|s| {
                    let far = line.mag(x + s * delta);
                    let near = line.mag(x + s * delta / 8.0);
                    near >= opts.growth * far
                });
                if grows && peak > opts.threshold {
                    hits.push(Candidate {
                        axis: ax.name.clone(),
                        position: x,
                        boundary: false,
                        magnitude: peak,
                        lines: 1,
                    });
                }
            }
            let edges = [(0, 1, ax.min), (n - 1, n - 2, ax.max)];
            let line_max = m.iter().copied().fold(0.0, f64::max);
            for (e, nb, pos) in edges {
                if m[e] > 0.0 && m[e] >= line_max && m[e] >= opts.edge_ratio * m[nb] {
                    hits.push(Candidate {
                        axis: ax.name.clone(),
                        position: pos,
                        boundary: true,
                        magnitude: m[e],
                        lines: 1,
                    });
                }
            }
            if !advance(&mut idx, &others, &samples) {
                break;
            }
        }
        found.extend(cluster(hits, ax.span() / 65536.0));
    }
    Ok(found)
}

fn advance(idx: &mut [usize], others: &[usize], samples: &[Vec<f64>]) -> bool {
    for o in (0..idx.len()).rev() {
        idx[o] += 1;
        if idx[o] < samples[others[o]].len() {
            return true;
        }
        idx[o] = 0;
    }
    false
}

fn cluster(mut hits: Vec<Candidate>, tol: f64) -> Vec<Candidate> {
    hits.sort_by(|a, b| a.position.total_cmp(&b.position).then(a.boundary.cmp(&b.boundary)));
    let mut groups: Vec<Vec<Candidate>> = Vec::new();
    for h in hits {
        match groups.last_mut() {
            Some(g) if g[0].boundary == h.boundary && (h.position - g[g.len() - 1].position).abs() <= tol => g.push(h),
            _ => groups.push(vec![h]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let mut pos: Vec<f64> = g.iter().map(|c| c.position).collect();
            pos.sort_by(f64::total_cmp);
            Candidate {
                axis: g[0].axis.clone(),
                position: pos[pos.len() / 2],
                boundary: g[0].boundary,
                magnitude: g.iter().map(|c| c.magnitude).fold(0.0, f64::max),
                lines: g.len(),
            }
        })
        .collect()
}
