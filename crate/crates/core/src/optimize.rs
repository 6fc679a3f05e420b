//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Optional box bounds are handled by projection: trial points are clipped into the box
//! and convergence is judged on the projected gradient.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Stop when the projected gradient's max-norm drops below this.
    pub gtol: f64,
    /// Stop when the relative decrease stays below this for three consecutive iterations.
    pub ftol: f64,
    pub max_evals: usize,
    pub bounds: Option<(f64, f64)>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 10, gtol: 1e-9, ftol: 1e-16, max_evals: 10_000, bounds: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    FunctionChange,
    MaxEvaluations,
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub evals: usize,
    pub iterations: usize,
    pub termination: Termination,
}

struct Point {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

struct Problem<'a, F> {
    func: &'a mut F,
    bounds: Option<(f64, f64)>,
    evals: usize,
    max_evals: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Problem<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evals += 1;
        let (f, g) = (self.func)(x);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Optimizer(format!("non-finite objective after {} evaluations", self.evals)));
        }
        Ok((f, g))
    }

    fn project(&self, x: &mut [f64]) {
        if let Some((lo, hi)) = self.bounds {
            x.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
    }

    fn probe(&mut self, x0: &[f64], d: &[f64], alpha: f64) -> Result<Point> {
        let mut x: Vec<f64> = x0.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        self.project(&mut x);
        let (f, g) = self.eval(&x)?;
        let slope = dot(&g, d);
        Ok(Point { alpha, f, slope, x, g })
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Minimizer of the cubic through two points with known slopes, or `None` if degenerate.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    prob: &mut Problem<'_, F>,
    x0: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    mut lo: Point,
    mut hi: Point,
) -> Result<Option<Point>> {
    for _ in 0..40 {
        if prob.exhausted() {
            break;
        }
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= 1e-16 * b.max(1.0) {
            break;
        }
        let mut alpha = cubic_min(&lo, &hi).unwrap_or(0.5 * (a + b));
        if alpha < a + 0.1 * width || alpha > b - 0.1 * width {
            alpha = 0.5 * (a + b);
        }
        let cur = prob.probe(x0, d, alpha)?;
        if cur.f > f0 + C1 * alpha * slope0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * slope0 {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    Ok((lo.alpha > 0.0 && lo.f < f0).then_some(lo))
}

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    prob: &mut Problem<'_, F>,
    x0: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
) -> Result<Option<Point>> {
    let slope0 = dot(g0, d);
    let mut prev = Point { alpha: 0.0, f: f0, slope: slope0, x: x0.to_vec(), g: g0.to_vec() };
    let mut alpha = alpha0;
    for i in 0..30 {
        if prob.exhausted() {
            return Ok((prev.alpha > 0.0).then_some(prev));
        }
        let cur = prob.probe(x0, d, alpha)?;
        if cur.f > f0 + C1 * alpha * slope0 || (i > 0 && cur.f >= prev.f) {
            return zoom(prob, x0, d, f0, slope0, prev, cur);
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            return zoom(prob, x0, d, f0, slope0, cur, prev);
        }
        prev = cur;
        alpha *= 2.0;
    }
    Ok((prev.alpha > 0.0).then_some(prev))
}

/// Minimizes `func`, which returns the objective and its gradient.
///
/// Errors only on non-finite objective values; running out of evaluations or a failed
/// line search returns the best point with the corresponding [`Termination`].
pub fn minimize<F>(mut func: F, x0: &[f64], opts: &LbfgsOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if opts.gtol <= 0.0 || opts.memory == 0 {
        return Err(Error::Optimizer("gtol and memory must be positive".into()));
    }
    let mut prob = Problem { func: &mut func, bounds: opts.bounds, evals: 0, max_evals: opts.max_evals.max(1) };
    let mut x = x0.to_vec();
    prob.project(&mut x);
    let (mut f, mut g) = prob.eval(&x)?;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut stalled = 0;

    let projected_norm = |x: &[f64], g: &[f64]| -> f64 {
        match opts.bounds {
            None => inf_norm(g),
            Some((lo, hi)) => x
                .iter()
                .zip(g)
                .map(|(&xi, &gi)| ((xi - gi).clamp(lo, hi) - xi).abs())
                .fold(0.0, f64::max),
        }
    };

    let termination = loop {
        if x.is_empty() || projected_norm(&x, &g) <= opts.gtol {
            break Termination::Gradient;
        }
        if prob.exhausted() {
            break Termination::MaxEvaluations;
        }

        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d = q;
        if dot(&d, &g) >= 0.0 {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
        }

        let alpha0 = if memory.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let step = match line_search(&mut prob, &x, f, &g, &d, alpha0)? {
            Some(p) => p,
            None if !memory.is_empty() => {
                memory.clear();
                continue;
            }
            None => break Termination::LineSearch,
        };

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - step.f;
        x = step.x;
        f = step.f;
        g = step.g;
        iterations += 1;
        if decrease <= opts.ftol * f.abs() {
            stalled += 1;
            if stalled >= 3 && projected_norm(&x, &g) > opts.gtol {
                break Termination::FunctionChange;
            }
        } else {
            stalled = 0;
        }
    };

    let grad_norm = projected_norm(&x, &g);
    Ok(Minimum { x, f, grad_norm, evals: prob.evals, iterations, termination })
}
