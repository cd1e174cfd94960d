//! Direct-summation metric oracle: plain index loops, nothing shared with
//! the library implementation.

#![allow(dead_code)]

pub fn mape(f: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (f[i] - a[i]).abs() / a[i].abs();
    }
    100.0 / a.len() as f64 * s
}

pub fn smape(f: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - f[i]).abs() / (a[i].abs() + f[i].abs());
    }
    200.0 / a.len() as f64 * s
}

pub fn mase(f: &[f64], a: &[f64], insample: &[f64], m: usize) -> f64 {
    let t = insample.len();
    let mut den = 0.0;
    for i in m..t {
        den += (insample[i] - insample[i - m]).abs();
    }
    den /= (t - m) as f64;
    let mut num = 0.0;
    for i in 0..a.len() {
        num += (a[i] - f[i]).abs();
    }
    num / a.len() as f64 / den
}

pub fn nd(f: &[f64], a: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.len() {
        num += (f[i] - a[i]).abs();
        den += a[i].abs();
    }
    num / den
}

pub fn mda(f: &[f64], a: &[f64], last: f64) -> f64 {
    let mut hits = 0usize;
    for i in 0..a.len() {
        if sign(f[i] - last) == sign(a[i] - last) {
            hits += 1;
        }
    }
    hits as f64 / a.len() as f64
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn owa(s: f64, m: f64, s2: f64, m2: f64) -> f64 {
    0.5 * (s / s2 + m / m2)
}
