//! Modified Bessel functions of the first kind in scaled form, e^{−x}·I_ν(x),
//! and the order ratios I_k(x)/I_0(x) needed for von Mises moments.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 15.0;

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// e^{−x}·I_ν(x) by the ascending power series. Accurate for x < 15.
fn scaled_series(nu: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let half = x / 2.0;
    // log of the leading term (x/2)^ν / ν! absorbs the e^{−x} factor
    let lead = nu as f64 * half.ln() - ln_factorial(nu) - x;
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1usize;
    loop {
        term *= q / (k as f64 * (k + nu) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1;
    }
    (lead + sum.ln()).exp()
}

/// Hankel large-argument series Σ (−1)^j a_j(ν)/x^j, truncated at its
/// smallest term. The scaled function is this sum divided by sqrt(2πx).
fn hankel_sum(nu: usize, x: f64) -> f64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for j in 1..200 {
        let odd = (2 * j - 1) as f64;
        let next = -term * (mu - odd * odd) / (j as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// e^{−x}·I_0(x).
pub fn i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        scaled_series(0, x)
    } else {
        hankel_sum(0, x) / (2.0 * PI * x).sqrt()
    }
}

/// e^{−x}·I_1(x) for x ≥ 0.
pub fn i1_scaled(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        scaled_series(1, x)
    } else {
        hankel_sum(1, x) / (2.0 * PI * x).sqrt()
    }
}

/// ln I_0(x), finite for any x ≥ 0.
pub fn ln_i0(x: f64) -> f64 {
    x.abs() + i0_scaled(x).ln()
}

/// Ratios I_k(x)/I_0(x) for k = 0..=kmax.
///
/// For x ≫ kmax² the Hankel series of each order is used; otherwise the
/// consecutive ratios I_k/I_{k−1} come from a backward recurrence started far
/// enough above kmax that the seed error has decayed below rounding.
pub fn ratios(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    out[0] = 1.0;
    if kmax == 0 || x <= 0.0 {
        return out;
    }
    if (kmax * kmax) as f64 <= x / 20.0 {
        let s0 = hankel_sum(0, x);
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            *o = hankel_sum(k, x) / s0;
        }
        return out;
    }
    let start = kmax + 32 + (40.0 * x).sqrt().ceil() as usize;
    // Amos-type estimate of I_{N+1}/I_N as the seed.
    let nu = (start + 1) as f64;
    let mut r_next = x / (nu - 0.5 + ((nu + 0.5).powi(2) + x * x).sqrt());
    let mut step = vec![0.0; kmax + 1];
    for k in (1..=start).rev() {
        let r = x / (2.0 * k as f64 + x * r_next);
        if k <= kmax {
            step[k] = r;
        }
        r_next = r;
    }
    let mut acc = 1.0;
    for k in 1..=kmax {
        acc *= step[k];
        out[k] = acc;
    }
    out
}

/// A(x) = I_1(x)/I_0(x).
pub fn a_ratio(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < SERIES_LIMIT {
        scaled_series(1, x) / scaled_series(0, x)
    } else {
        1.0 - one_minus_a(x)
    }
}

/// 1 − A(x), accurate even when A(x) rounds to one.
pub fn one_minus_a(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < SERIES_LIMIT {
        return 1.0 - scaled_series(1, x) / scaled_series(0, x);
    }
    // Difference of the two Hankel series, term by term: a_j(0) − a_j(1).
    let mut t0 = 1.0f64;
    let mut t1 = 1.0f64;
    let mut s0 = 1.0;
    let mut diff = 0.0;
    for j in 1..200 {
        let odd = (2 * j - 1) as f64;
        let n0 = -t0 * (0.0 - odd * odd) / (j as f64 * 8.0 * x);
        let n1 = -t1 * (4.0 - odd * odd) / (j as f64 * 8.0 * x);
        if n0.abs() >= t0.abs() {
            break;
        }
        t0 = n0;
        t1 = n1;
        s0 += t0;
        diff += t0 - t1;
        if (t0 - t1).abs() < 1e-18 * diff.abs() {
            break;
        }
    }
    diff / s0
}
