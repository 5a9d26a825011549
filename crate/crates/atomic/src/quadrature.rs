//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{AtomicError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Equal panels the interval is split into before adapting.
    pub initial_panels: usize,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { rel_tol: 1e-10, abs_tol: 0.0, initial_panels: 16, max_intervals: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    /// `∫|f|`, the scale against which cancellation can be judged.
    pub abs_value: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).abs(), abs_value: abs * h.abs() }
}

/// `∫_a^b f`, refining the panel with the largest error estimate until the
/// summed estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, options: &QuadratureOptions) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(AtomicError::Parameter("integration limits must be finite".into()));
    }
    let panels = options.initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap: BinaryHeap<Panel> = (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            kronrod(&f, lo, hi)
        })
        .collect();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let abs_value: f64 = heap.iter().map(|p| p.abs_value).sum();
        if !value.is_finite() {
            return Err(AtomicError::Quadrature("non-finite integrand".into()));
        }
        if error <= options.abs_tol.max(options.rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, abs_value, intervals: heap.len() });
        }
        if heap.len() >= options.max_intervals {
            return Err(AtomicError::Quadrature(format!(
                "error estimate {error:.3e} above tolerance after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}
