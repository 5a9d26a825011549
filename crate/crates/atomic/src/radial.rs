//! Hydrogen-like radial functions in effective quantum numbers.
//!
//! `R(r) = n*⁻² sqrt((2Z)³ Γ(k+1) / (2Γ(n*+l*+1))) x^{l*} e^{−x/2} L_k^{2l*+1}(x)`,
//! `x = 2Zr/n*`, `k = n − l − 1 − I(l)`, `Z = 1`, r in Bohr radii.
//! Since `k + l* + 1 = n*` the function is normalised exactly.

use statrs::function::gamma::ln_gamma;

use crate::error::{AtomicError, Result};
use crate::qd::{QdModel, Series};
use crate::quadrature::{integrate, QuadratureOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialState {
    pub n_star: f64,
    pub l_star: f64,
    /// Laguerre degree, equal to the number of radial nodes.
    pub degree: u32,
    ln_norm: f64,
}

impl RadialState {
    pub fn new(model: &QdModel, series: Series, n: u32) -> Result<Self> {
        let delta = model.quantum_defect(series, n)?.delta;
        Self::hydrogenic(n, series.l(), delta, series.wavefunction_shift(n))
    }

    /// General form for principal number `n`, orbital `l`, defect `delta`, shift `shift`.
    pub fn hydrogenic(n: u32, l: u32, delta: f64, shift: u32) -> Result<Self> {
        let degree = n as i64 - l as i64 - 1 - shift as i64;
        if degree < 0 {
            return Err(AtomicError::Parameter(format!(
                "negative Laguerre degree {degree} for n={n}, l={l}, I={shift}"
            )));
        }
        let n_star = n as f64 - delta;
        let l_star = l as f64 - delta + shift as f64;
        if !(l_star > -0.5) || !(n_star > 0.0) {
            return Err(AtomicError::Parameter(format!("n*={n_star}, l*={l_star} outside the admissible range")));
        }
        let ln_norm = 0.5 * (8f64.ln() + ln_gamma(degree as f64 + 1.0) - 2f64.ln() - ln_gamma(n_star + l_star + 1.0))
            - 2.0 * n_star.ln();
        Ok(RadialState { n_star, l_star, degree: degree as u32, ln_norm })
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return if self.l_star == 0.0 { (self.ln_norm).exp() * laguerre(self.degree, 2.0 * self.l_star + 1.0, 0.0) } else { 0.0 };
        }
        let x = 2.0 * r / self.n_star;
        let lag = laguerre(self.degree, 2.0 * self.l_star + 1.0, x);
        if lag == 0.0 {
            return 0.0;
        }
        let ln = self.ln_norm + self.l_star * x.ln() - 0.5 * x + lag.abs().ln();
        lag.signum() * ln.exp()
    }

    /// Upper integration limit, `max(4n*², 2n*² + 30n* + 20)`. The second
    /// form keeps the exponential tail for small `n*`.
    pub fn r_max(&self) -> f64 {
        let n = self.n_star;
        (4.0 * n * n).max(2.0 * n * n + 30.0 * n + 20.0)
    }
}

/// Generalised Laguerre polynomial `L_k^α(x)` by upward recurrence.
pub fn laguerre(k: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for i in 1..k {
        let i = i as f64;
        let next = ((2.0 * i + 1.0 + alpha - x) * cur - (i + alpha) * prev) / (i + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn options(a: &RadialState, b: &RadialState) -> QuadratureOptions {
    QuadratureOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        initial_panels: (4 * (a.degree + b.degree + 4)) as usize,
        max_intervals: 200_000,
    }
}

/// `∫₀^{r_max} R_a R_b r^power dr` over the larger of the two ranges.
///
/// The error target is relative to `∫|R_a R_b| r^power` so that strongly
/// cancelling overlaps still terminate.
pub fn overlap_integral(a: &RadialState, b: &RadialState, power: i32) -> Result<f64> {
    let r_max = a.r_max().max(b.r_max());
    let f = |r: f64| a.value(r) * b.value(r) * r.powi(power);
    let mut opts = options(a, b);
    let scale = integrate(|r| f(r).abs(), 0.0, r_max, &QuadratureOptions { rel_tol: 1e-4, ..opts })?.value;
    opts.abs_tol = 1e-12 * scale;
    Ok(integrate(f, 0.0, r_max, &opts)?.value)
}

/// Sign changes of `R` on a fine grid over `(0, r_max)`.
pub fn count_nodes(state: &RadialState, samples: usize) -> usize {
    let r_max = state.r_max();
    let mut last = 0.0f64;
    let mut count = 0;
    for i in 1..samples {
        let v = state.value(r_max * i as f64 / samples as f64);
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
    }
    count
}
