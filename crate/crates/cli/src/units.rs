//! Parsing of angle-valued flags and unit conversions.

use std::f64::consts::{PI, TAU};

/// Parses `3`, `pi`, `2pi`, `2pi*3`, `3*2pi`, `pi/4` or `0.5pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim().replace(['×', ' '], "*").replace('π', "pi");
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), Some(b.to_string())),
        None => (s.clone(), None),
    };
    let mut value = 1.0;
    for factor in num.split('*').filter(|f| !f.is_empty()) {
        value *= parse_factor(factor)?;
    }
    if let Some(d) = den {
        let d = parse_factor(&d)?;
        if d == 0.0 {
            return Err(format!("division by zero in `{s}`"));
        }
        value /= d;
    }
    if !value.is_finite() {
        return Err(format!("`{s}` is not a finite angle"));
    }
    Ok(value)
}

fn parse_factor(f: &str) -> Result<f64, String> {
    let f = f.trim();
    if let Some(prefix) = f.strip_suffix("pi") {
        let k = if prefix.is_empty() { 1.0 } else { prefix.parse::<f64>().map_err(|_| format!("bad factor `{f}`"))? };
        return Ok(k * PI);
    }
    if f == "tau" {
        return Ok(TAU);
    }
    f.parse::<f64>().map_err(|_| format!("bad number `{f}`"))
}

/// `2π × value × 10⁶`: MHz (cyclic) to rad/s.
pub fn mhz(value: f64) -> f64 {
    TAU * value * 1e6
}

/// `2π × value × 10³`: kHz (cyclic) to rad/s.
pub fn khz(value: f64) -> f64 {
    TAU * value * 1e3
}

/// rad/s to cyclic MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// rad/s to cyclic kHz.
pub fn to_khz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

/// C₃ in `2π × MHz μm³` to rad/s · m³.
pub fn c3_from_mhz_um3(value: f64) -> f64 {
    mhz(value) * 1e-18
}

pub fn c3_to_mhz_um3(c3: f64) -> f64 {
    to_mhz(c3) * 1e18
}

/// Integer list `20,40,60`, range `30..70` or stepped range `30..70:5` (inclusive).
pub fn parse_n_list(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, rest)) = part.split_once("..") {
            let (b, step) = match rest.split_once(':') {
                Some((b, st)) => (b, st.parse::<u32>().map_err(|_| format!("bad step in `{part}`"))?),
                None => (rest, 1),
            };
            let a: u32 = a.parse().map_err(|_| format!("bad range `{part}`"))?;
            let b: u32 = b.parse().map_err(|_| format!("bad range `{part}`"))?;
            if step == 0 || b < a {
                return Err(format!("empty range `{part}`"));
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(part.parse().map_err(|_| format!("bad integer `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
