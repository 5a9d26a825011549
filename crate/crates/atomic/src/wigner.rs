//! Wigner 3j and 6j symbols by the Racah formulas.
//!
//! Arguments are angular momenta as reals (integers or half-integers).
//! Symbols violating a selection rule are exactly zero.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

const TABLE: usize = 512;

fn ln_factorial(k: i64) -> f64 {
    static LN_FACT: OnceLock<Vec<f64>> = OnceLock::new();
    let table = LN_FACT.get_or_init(|| {
        let mut t = vec![0.0; TABLE];
        for i in 1..TABLE {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    debug_assert!(k >= 0);
    match usize::try_from(k) {
        Ok(i) if i < TABLE => table[i],
        _ => ln_gamma(k as f64 + 1.0),
    }
}

/// Twice the argument, or `None` unless it is a (half-)integer.
fn doubled(j: f64) -> Option<i64> {
    let d = (2.0 * j).round();
    ((2.0 * j - d).abs() < 1e-9).then_some(d as i64)
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// `ln Δ(abc)` for doubled arguments.
fn ln_delta(a: i64, b: i64, c: i64) -> f64 {
    0.5 * (ln_factorial((a + b - c) / 2) + ln_factorial((a - b + c) / 2) + ln_factorial((-a + b + c) / 2)
        - ln_factorial((a + b + c) / 2 + 1))
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(j1 j2 j3; m1 m2 m3)`.
pub fn wigner_3j(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> f64 {
    let (Some(j1), Some(j2), Some(j3), Some(m1), Some(m2), Some(m3)) =
        (doubled(j1), doubled(j2), doubled(j3), doubled(m1), doubled(m2), doubled(m3))
    else {
        return 0.0;
    };
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return 0.0;
        }
    }
    // Work in integers: all combinations below are even when doubled.
    let h = |x: i64| x / 2;
    let pre = ln_delta(j1, j2, j3)
        + 0.5
            * (ln_factorial(h(j1 + m1))
                + ln_factorial(h(j1 - m1))
                + ln_factorial(h(j2 + m2))
                + ln_factorial(h(j2 - m2))
                + ln_factorial(h(j3 + m3))
                + ln_factorial(h(j3 - m3)));
    let k_min = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let k_max = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let den = ln_factorial(k)
            + ln_factorial(h(j3 - j2 + m1) + k)
            + ln_factorial(h(j3 - j1 - m2) + k)
            + ln_factorial(h(j1 + j2 - j3) - k)
            + ln_factorial(h(j1 - m1) - k)
            + ln_factorial(h(j2 + m2) - k);
        sum += sign(k) * (pre - den).exp();
    }
    sign(h(j1 - j2 - m3)) * sum
}

/// `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j(j1: f64, j2: f64, j3: f64, j4: f64, j5: f64, j6: f64) -> f64 {
    let (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f)) =
        (doubled(j1), doubled(j2), doubled(j3), doubled(j4), doubled(j5), doubled(j6))
    else {
        return 0.0;
    };
    if !(triangle(a, b, c) && triangle(a, e, f) && triangle(d, b, f) && triangle(d, e, c)) {
        return 0.0;
    }
    let pre = ln_delta(a, b, c) + ln_delta(a, e, f) + ln_delta(d, b, f) + ln_delta(d, e, c);
    let t1 = (a + b + c) / 2;
    let t2 = (a + e + f) / 2;
    let t3 = (d + b + f) / 2;
    let t4 = (d + e + c) / 2;
    let u1 = (a + b + d + e) / 2;
    let u2 = (b + c + e + f) / 2;
    let u3 = (c + a + f + d) / 2;
    let t_min = t1.max(t2).max(t3).max(t4);
    let t_max = u1.min(u2).min(u3);
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let ln = ln_factorial(t + 1)
            - ln_factorial(t - t1)
            - ln_factorial(t - t2)
            - ln_factorial(t - t3)
            - ln_factorial(t - t4)
            - ln_factorial(u1 - t)
            - ln_factorial(u2 - t)
            - ln_factorial(u3 - t);
        sum += sign(t) * (pre + ln).exp();
    }
    sum
}

/// `⟨j1 m1; j2 m2 | J M⟩`.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
    let phase = doubled(j1 - j2 + m).map_or(0, |d| d / 2);
    sign(phase) * (2.0 * j + 1.0).sqrt() * wigner_3j(j1, j2, j, m1, m2, -m)
}
