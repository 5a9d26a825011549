//! Limited-memory quasi-Newton minimisation with simple bounds.
//!
//! Projected L-BFGS: variables sitting on a bound with the gradient pushing
//! outward are frozen for the iteration, the two-loop recursion acts on the
//! free variables, and the line search runs along the projected path
//! `P(x + α d)` with the strong Wolfe conditions (falling back to Armijo
//! backtracking once a bound is hit). Every accepted step satisfies the
//! sufficient-decrease condition, so the objective never increases.

use std::collections::VecDeque;

/// Per-variable box `lower ≤ x ≤ upper` (infinite entries mean unbounded).
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Bounds { lower: vec![lower; n], upper: vec![upper; n] }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Gradient with outward-pointing components on active bounds removed.
    pub fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| {
                if (xi <= self.lower[i] && gi > 0.0) || (xi >= self.upper[i] && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsbOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient's infinity norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)`
    /// falls below this (0 disables the test).
    pub function_tolerance: f64,
    pub max_line_search: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        LbfgsbOptions {
            memory: 10,
            max_iterations: 2000,
            gradient_tolerance: 1e-10,
            function_tolerance: 0.0,
            max_line_search: 40,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
    Callback,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub gradient: Vec<f64>,
    pub projected_gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::GradientTolerance | Termination::FunctionTolerance)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Evaluator<'a, F> {
    f: &'a mut F,
    count: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Evaluator<'_, F> {
    fn eval(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.count += 1;
        (self.f)(x, g)
    }
}

struct Trial {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Minimises `f` (which returns the value and writes the gradient) from `x0`.
///
/// `callback(iteration, x, f)` is invoked after every accepted step; returning
/// `true` stops the run with [`Termination::Callback`].
pub fn minimize<F, C>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &LbfgsbOptions, mut callback: C) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    C: FnMut(usize, &[f64], f64) -> bool,
{
    let n = x0.len();
    assert_eq!(bounds.len(), n, "bounds dimension mismatch");
    let mut ev = Evaluator { f: &mut f, count: 0 };
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut fx = ev.eval(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    let finish = |x: Vec<f64>, f: f64, g: Vec<f64>, iterations, evaluations, termination| {
        let pg = bounds.projected_gradient(&x, &g);
        Minimum {
            projected_gradient_norm: inf_norm(&pg),
            x,
            f,
            gradient: g,
            iterations,
            evaluations,
            termination,
        }
    };

    loop {
        let pg = bounds.projected_gradient(&x, &g);
        if inf_norm(&pg) < opts.gradient_tolerance {
            return finish(x, fx, g, iterations, ev.count, Termination::GradientTolerance);
        }
        if iterations >= opts.max_iterations {
            return finish(x, fx, g, iterations, ev.count, Termination::MaxIterations);
        }
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, gi)| *p != 0.0 || *gi == 0.0).collect();

        let mut d = two_loop(&pg, &history, &free);
        let slope = dot(&d, &g);
        if !(slope < 0.0 && slope.is_finite()) {
            history.clear();
            d = pg.iter().map(|v| -v).collect();
        }

        let first_step = if history.is_empty() { (1.0 / inf_norm(&d)).min(1.0) } else { 1.0 };
        let trial = match line_search(&mut ev, bounds, &x, fx, &g, &d, first_step, opts) {
            Some(t) => t,
            None if !history.is_empty() => {
                // Retry once along steepest descent with a fresh model.
                history.clear();
                d = pg.iter().map(|v| -v).collect();
                let step = (1.0 / inf_norm(&d)).min(1.0);
                match line_search(&mut ev, bounds, &x, fx, &g, &d, step, opts) {
                    Some(t) => t,
                    None => return finish(x, fx, g, iterations, ev.count, Termination::LineSearchFailed),
                }
            }
            None => return finish(x, fx, g, iterations, ev.count, Termination::LineSearchFailed),
        };

        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > f64::EPSILON * yy && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let decrease = fx - trial.f;
        let scale = fx.abs().max(trial.f.abs()).max(1.0);
        x = trial.x;
        fx = trial.f;
        g = trial.g;
        iterations += 1;

        if callback(iterations, &x, fx) {
            return finish(x, fx, g, iterations, ev.count, Termination::Callback);
        }
        if opts.function_tolerance > 0.0 && decrease <= opts.function_tolerance * scale {
            return finish(x, fx, g, iterations, ev.count, Termination::FunctionTolerance);
        }
    }
}

/// L-BFGS two-loop recursion restricted to the free variables.
fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect() };
    let mut q = mask(grad);
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, (yi, fi)) in q.iter_mut().zip(y.iter().zip(free)) {
            if *fi {
                *qi -= a * yi;
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let ym = mask(y);
        let yy = dot(&ym, &ym);
        if yy > 0.0 {
            let gamma = dot(&mask(s), &ym) / yy;
            if gamma > 0.0 {
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, (si, fi)) in q.iter_mut().zip(s.iter().zip(free)) {
            if *fi {
                *qi += (a - b) * si;
            }
        }
    }
    q.iter().zip(free).map(|(v, &f)| if f { -v } else { 0.0 }).collect()
}

/// Largest step along `d` before some variable reaches its bound.
fn max_feasible_step(bounds: &Bounds, x: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] < 0.0 && bounds.lower[i].is_finite() {
            alpha = alpha.min((bounds.lower[i] - x[i]) / d[i]);
        } else if d[i] > 0.0 && bounds.upper[i].is_finite() {
            alpha = alpha.min((bounds.upper[i] - x[i]) / d[i]);
        }
    }
    alpha.max(0.0)
}

#[allow(clippy::too_many_arguments)]
fn line_search<F: FnMut(&[f64], &mut [f64]) -> f64>(
    ev: &mut Evaluator<'_, F>,
    bounds: &Bounds,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    first_step: f64,
    opts: &LbfgsbOptions,
) -> Option<Trial> {
    let n = x.len();
    let dphi0 = dot(g0, d);
    let alpha_bound = max_feasible_step(bounds, x, d);

    let mut try_step = |ev: &mut Evaluator<'_, F>, alpha: f64| -> Trial {
        let mut xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        bounds.project(&mut xt);
        let mut gt = vec![0.0; n];
        let ft = ev.eval(&xt, &mut gt);
        let dphi = dot(&gt, d);
        Trial { alpha, x: xt, f: ft, g: gt, dphi }
    };
    // Armijo along the projected path uses the actual displacement.
    let armijo = |t: &Trial| -> bool {
        let lin: f64 = g0.iter().zip(t.x.iter().zip(x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        t.f.is_finite() && t.f <= f0 + opts.c1 * lin
    };

    if first_step > alpha_bound {
        // The unit step leaves the box: projected backtracking.
        let mut alpha = first_step;
        for _ in 0..opts.max_line_search {
            let t = try_step(ev, alpha);
            if armijo(&t) && t.f < f0 {
                return Some(t);
            }
            alpha *= 0.5;
        }
        return None;
    }

    // Strong Wolfe bracketing (Nocedal & Wright, Alg. 3.5/3.6) within the box.
    let alpha_max = alpha_bound.min(1e10);
    let mut prev = Trial { alpha: 0.0, x: x.to_vec(), f: f0, g: g0.to_vec(), dphi: dphi0 };
    let mut alpha = first_step;
    for i in 0..opts.max_line_search {
        let t = try_step(ev, alpha);
        if !armijo(&t) || (i > 0 && t.f >= prev.f) {
            return zoom(ev, &mut try_step, &armijo, prev, t, dphi0, opts);
        }
        if t.dphi.abs() <= -opts.c2 * dphi0 {
            return Some(t);
        }
        if t.dphi >= 0.0 {
            return zoom(ev, &mut try_step, &armijo, t, prev, dphi0, opts);
        }
        if alpha >= alpha_max {
            return Some(t);
        }
        let next = (2.0 * alpha).min(alpha_max);
        prev = t;
        alpha = next;
    }
    (prev.alpha > 0.0).then_some(prev)
}

fn zoom<F, S, A>(
    ev: &mut Evaluator<'_, F>,
    try_step: &mut S,
    armijo: &A,
    mut lo: Trial,
    mut hi: Trial,
    dphi0: f64,
    opts: &LbfgsbOptions,
) -> Option<Trial>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    S: FnMut(&mut Evaluator<'_, F>, f64) -> Trial,
    A: Fn(&Trial) -> bool,
{
    for _ in 0..opts.max_line_search {
        let (a, b) = (lo.alpha, hi.alpha);
        let width = (b - a).abs();
        let mut alpha = cubic_minimizer(&lo, &hi).unwrap_or(0.5 * (a + b));
        let (left, right) = (a.min(b), a.max(b));
        if !(alpha > left + 0.1 * width && alpha < right - 0.1 * width) {
            alpha = 0.5 * (a + b);
        }
        if width <= f64::EPSILON * right.max(1e-300) {
            break;
        }
        let t = try_step(ev, alpha);
        if !armijo(&t) || t.f >= lo.f {
            hi = t;
        } else {
            if t.dphi.abs() <= -opts.c2 * dphi0 {
                return Some(t);
            }
            if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, t);
            } else {
                lo = t;
            }
        }
    }
    // `lo` satisfies sufficient decrease whenever it has moved off the start.
    (lo.alpha > 0.0).then_some(lo)
}

fn cubic_minimizer(a: &Trial, b: &Trial) -> Option<f64> {
    let d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let alpha = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
    alpha.is_finite().then_some(alpha)
}
