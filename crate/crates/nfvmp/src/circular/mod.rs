//! Von Mises distributions in natural parameters η = κ·e^{jμ}.

pub mod bessel;

use crate::{Error, Result, C64};
use rand::Rng;
use std::f64::consts::PI;

pub use bessel::{a_ratio, ln_i0, one_minus_a};

/// Wrap an angle into [−π, π).
pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct VonMisesParam {
    pub eta: C64,
}

impl VonMisesParam {
    pub fn new(eta: C64) -> Self {
        Self { eta }
    }

    pub fn from_polar(kappa: f64, mu: f64) -> Self {
        Self {
            eta: C64::from_polar(kappa, mu),
        }
    }

    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn kappa(&self) -> f64 {
        self.eta.norm()
    }

    pub fn mu(&self) -> f64 {
        if self.eta == C64::new(0.0, 0.0) {
            0.0
        } else {
            wrap(self.eta.arg())
        }
    }

    /// Circular standard deviation in the small-spread sense, 1/sqrt(κ).
    pub fn std(&self) -> f64 {
        1.0 / self.kappa().sqrt()
    }

    /// E[e^{jkx}] for k = 0..=kmax.
    pub fn moments(&self, kmax: usize) -> Vec<C64> {
        let r = bessel::ratios(kmax, self.kappa());
        let mu = self.mu();
        r.iter()
            .enumerate()
            .map(|(k, &a)| C64::from_polar(a, k as f64 * mu))
            .collect()
    }
}

/// I_k(κ)/I_0(κ).
pub fn bessel_ratio(k: usize, kappa: f64) -> f64 {
    if k == 1 {
        return a_ratio(kappa);
    }
    bessel::ratios(k, kappa)[k]
}

/// Inverse of A(κ) = I_1(κ)/I_0(κ) on [0, 1).
pub fn a_inverse(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::DegenerateConcentration(r));
    }
    if r < 0.5 {
        return Ok(solve_small(r));
    }
    a_inverse_complement(1.0 - r)
}

/// κ with 1 − A(κ) = s, for s ∈ (0, 1]. Keeps precision when A is within
/// rounding of one.
pub fn a_inverse_complement(s: f64) -> Result<f64> {
    if !(s > 0.0) || s > 1.0 || !s.is_finite() {
        return Err(Error::DegenerateConcentration(1.0 - s));
    }
    if s > 0.5 {
        return Ok(solve_small(1.0 - s));
    }
    // Secant iteration in u = ln κ on ln(1 − A(e^u)) − ln s, which is close
    // to linear with slope −1 for large κ, safeguarded by bisection.
    let target = s.ln();
    let h = |u: f64| one_minus_a(u.exp()).ln() - target;
    let seed = 1.0 / (2.0 * s);
    let (mut lo, mut hi) = (seed.ln() - 1.0, seed.ln() + 1.0);
    while h(lo) < 0.0 {
        lo -= 2.0;
    }
    while h(hi) > 0.0 {
        hi += 2.0;
    }
    let (mut u0, mut u1) = (seed.ln(), seed.ln() + 1e-3);
    let (mut h0, mut h1) = (h(u0), h(u1));
    for _ in 0..100 {
        let mut u2 = if h1 != h0 {
            u1 - h1 * (u1 - u0) / (h1 - h0)
        } else {
            0.5 * (lo + hi)
        };
        if !(u2 > lo && u2 < hi) {
            u2 = 0.5 * (lo + hi);
        }
        let h2 = h(u2);
        if h2 > 0.0 {
            lo = u2;
        } else {
            hi = u2;
        }
        u0 = u1;
        h0 = h1;
        u1 = u2;
        h1 = h2;
        if (u1 - u0).abs() < 1e-15 || h2 == 0.0 || hi - lo < 1e-15 {
            break;
        }
    }
    Ok(u1.exp())
}

fn solve_small(r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let mut k = r * (2.0 - r * r) / (1.0 - r * r);
    for _ in 0..50 {
        let a = a_ratio(k);
        let da = 1.0 - a / k - a * a;
        let next = (k - (a - r) / da).max(0.5 * k);
        let done = (next - k).abs() <= 1e-15 * k;
        k = next;
        if done {
            break;
        }
    }
    k
}

pub fn vm_product(a: VonMisesParam, b: VonMisesParam) -> VonMisesParam {
    VonMisesParam::new(a.eta + b.eta)
}

pub fn vm_divide(a: VonMisesParam, b: VonMisesParam) -> VonMisesParam {
    let eta = a.eta - b.eta;
    let scale = a.kappa().max(b.kappa());
    if eta.norm() <= 1e-14 * scale {
        VonMisesParam::uniform()
    } else {
        VonMisesParam::new(eta)
    }
}

/// E[e^{jkx}] = (I_|k|(κ)/I_0(κ))·e^{jkμ}.
pub fn vm_moment(p: VonMisesParam, k: i64) -> C64 {
    let a = bessel_ratio(k.unsigned_abs() as usize, p.kappa());
    C64::from_polar(a, k as f64 * p.mu())
}

pub fn vm_pdf(p: VonMisesParam, x: f64) -> f64 {
    let kappa = p.kappa();
    (kappa * ((x - p.mu()).cos() - 1.0)).exp() / (2.0 * PI * bessel::i0_scaled(kappa))
}

/// Best–Fisher rejection sampler, used by tests.
pub fn sample<R: Rng + ?Sized>(p: VonMisesParam, rng: &mut R) -> f64 {
    let kappa = p.kappa();
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let x = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return wrap(x + p.mu());
        }
    }
}
