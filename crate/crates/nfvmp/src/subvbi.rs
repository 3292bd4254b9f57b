//! Coordinate-ascent variational inference for one transmit/receive subarray
//! pair.
//!
//! The snapshot z = β·a_r(φ)⊗a_t(θ)⊗d(f̃) + n is explained by von Mises
//! posteriors over φ, θ and the normalized Doppler f̃, a complex Gaussian
//! posterior over β, and point estimates of σ and ς.

use crate::circular::{self, a_inverse_complement, ln_i0, VonMisesParam};
use crate::wavefield::SubarraySnapshot;
use crate::{Error, Result, C64};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rearrangement {
    /// (i_t, i_r, l): transmit index outermost.
    P1,
    /// (l, i_r, i_t): pulse index outermost.
    P2,
}

/// Permute a canonical (i_r, i_t, l) snapshot.
pub fn rearrange(s: &SubarraySnapshot, which: Rearrangement) -> Result<Vec<C64>> {
    let (m, l) = (s.m_sub, s.n_pulses);
    if s.data.len() != m * m * l {
        return Err(Error::LengthMismatch {
            expected: m * m * l,
            got: s.data.len(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); s.data.len()];
    for ir in 0..m {
        for it in 0..m {
            for p in 0..l {
                let src = (ir * m + it) * l + p;
                let dst = match which {
                    Rearrangement::P1 => (it * m + ir) * l + p,
                    Rearrangement::P2 => (p * m + ir) * m + it,
                };
                out[dst] = s.data[src];
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Phi,
    Theta,
    Doppler,
}

/// g(x) = Σ_{k≥1} Re[η_k* e^{jkx}], with the prior folded into k = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicObjective {
    /// Natural parameters by harmonic order; slot 0 is unused.
    pub coeffs: Vec<C64>,
}

impl HarmonicObjective {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    /// Objective containing only the prior term.
    pub fn single(eta: C64) -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0), eta],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivs(x).0
    }

    /// (g, g′, g″) at x.
    pub fn derivs(&self, x: f64) -> (f64, f64, f64) {
        let step = C64::from_polar(1.0, x);
        let mut e = step;
        let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let t = c.conj() * e;
            let kf = k as f64;
            g += t.re;
            g1 -= kf * t.im;
            g2 -= kf * kf * t.re;
            e *= step;
        }
        (g, g1, g2)
    }

    fn is_flat(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.norm() == 0.0)
    }
}

/// Finds x̄ = argmax g and converts the curvature there into a von Mises law.
pub struct VmSolver {
    planner: FftPlanner<f64>,
    buf: Vec<Complex<f64>>,
}

impl Default for VmSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl VmSolver {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            buf: Vec::new(),
        }
    }

    pub fn update(&mut self, obj: &HarmonicObjective) -> Result<VonMisesParam> {
        if obj.coeffs.len() < 2 || obj.is_flat() {
            return Err(Error::FlatObjective(0.0));
        }
        let k = obj.coeffs.len();
        let n = (8 * k).max(64);
        self.buf.clear();
        self.buf.resize(n, Complex::new(0.0, 0.0));
        for (i, c) in obj.coeffs.iter().enumerate().skip(1) {
            self.buf[i] = c.conj();
        }
        self.planner.plan_fft_inverse(n).process(&mut self.buf);
        let best = self
            .buf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let cell = 2.0 * PI / n as f64;
        let x0 = best as f64 * cell;
        let mut x = x0;
        for _ in 0..20 {
            let (_, g1, g2) = obj.derivs(x);
            if g2 >= 0.0 {
                break;
            }
            let dx = -g1 / g2;
            // stay inside the lobe found by the grid
            let next = x + dx.clamp(-cell, cell);
            if (next - x0).abs() > 2.0 * cell {
                break;
            }
            x = next;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, g1, g2) = obj.derivs(x);
        if !(g2 < 0.0) {
            return Err(Error::FlatObjective(g2));
        }
        let mu = circular::wrap(x - g1 / g2);
        let s = -(1.0 / (2.0 * g2)).exp_m1();
        let kappa = if s >= 1.0 {
            0.0
        } else {
            a_inverse_complement(s)?
        };
        Ok(VonMisesParam::from_polar(kappa, mu))
    }
}

/// Laplace-style von Mises update from a harmonic objective.
pub fn vm_update(obj: &HarmonicObjective) -> Result<VonMisesParam> {
    VmSolver::new().update(obj)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Priors {
    pub theta: VonMisesParam,
    pub phi: VonMisesParam,
    pub doppler: VonMisesParam,
    /// Prior variance ς of β.
    pub varsigma: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            theta: VonMisesParam::uniform(),
            phi: VonMisesParam::uniform(),
            doppler: VonMisesParam::uniform(),
            varsigma: 1e6,
        }
    }
}

/// How the noise variance is re-estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SigmaRule {
    /// Expected residual power per sample.
    #[default]
    Residual,
    /// 2/(M²L)·(‖z‖² + 2Re(β̂ zᴴμ) + ‖μ‖²(ς̃ + |β̂|²)).
    Verbatim,
}

impl std::str::FromStr for SigmaRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Self::Residual),
            "verbatim" => Ok(Self::Verbatim),
            _ => Err(Error::Config(format!("unknown sigma rule {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaviOptions {
    pub max_iters: usize,
    /// Stop when ‖Δξ‖ < eps·max(1, ‖ξ‖).
    pub eps: f64,
    pub sigma_rule: SigmaRule,
    /// Concentration given to the periodogram initialization.
    pub init_kappa: f64,
    pub sigma_floor: f64,
}

impl Default for CaviOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            eps: 1e-6,
            sigma_rule: SigmaRule::Residual,
            init_kappa: 1.0,
            sigma_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubarrayPosterior {
    pub eta_theta: VonMisesParam,
    pub eta_phi: VonMisesParam,
    /// Posterior over f̃ = 2πT·f.
    pub eta_f: VonMisesParam,
    pub beta_mean: C64,
    pub beta_var: f64,
    pub sigma_hat: f64,
    pub varsigma_hat: f64,
    pub n_iters: usize,
    pub converged: bool,
    /// ELBO surrogate after each sweep.
    pub elbo: Vec<f64>,
}

impl SubarrayPosterior {
    fn xi(&self) -> [f64; 10] {
        [
            self.eta_phi.eta.re,
            self.eta_phi.eta.im,
            self.eta_theta.eta.re,
            self.eta_theta.eta.im,
            self.eta_f.eta.re,
            self.eta_f.eta.im,
            self.beta_mean.re,
            self.beta_mean.im,
            self.beta_var,
            self.sigma_hat,
        ]
    }
}

/// Expected steering factors E[a_r], E[a_t] and E[d] under the current
/// posteriors. Doppler entries are e^{−jlf̃}, hence the conjugate moments.
struct Expected {
    r: Vec<C64>,
    t: Vec<C64>,
    d: Vec<C64>,
}

impl Expected {
    fn of(p: &SubarrayPosterior, m: usize, l: usize) -> Self {
        Self {
            r: p.eta_phi.moments(m - 1),
            t: p.eta_theta.moments(m - 1),
            d: p.eta_f.moments(l - 1).iter().map(|c| c.conj()).collect(),
        }
    }

    fn norm_sqr(&self) -> f64 {
        let s = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        s(&self.r) * s(&self.t) * s(&self.d)
    }

    fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
        a.iter()
            .flat_map(|x| b.iter().map(move |y| x * y))
            .collect()
    }

    /// Full expected steering vector μ in canonical order.
    fn mu(&self) -> Vec<C64> {
        Self::kron(&Self::kron(&self.r, &self.t), &self.d)
    }
}

fn to_natural(c: C64, axis: Axis) -> C64 {
    // Angles enter as e^{+jkx}, Doppler as e^{−jlf̃}.
    match axis {
        Axis::Doppler => c,
        _ => c.conj(),
    }
}

/// Harmonic objective of one axis given the other posteriors. Built from the
/// rearranged snapshot blocks z⟨k⟩ and ĉ = E[β]·(Kronecker product of the
/// other two expected factors in block order).
pub fn conjugate_params(
    snapshot: &SubarraySnapshot,
    axis: Axis,
    current: &SubarrayPosterior,
    sigma: f64,
    prior: VonMisesParam,
) -> Result<HarmonicObjective> {
    let (m, l) = (snapshot.m_sub, snapshot.n_pulses);
    let ex = Expected::of(current, m, l);
    let (z, chat, k) = match axis {
        Axis::Phi => (snapshot.data.clone(), Expected::kron(&ex.t, &ex.d), m),
        Axis::Theta => (
            rearrange(snapshot, Rearrangement::P1)?,
            Expected::kron(&ex.r, &ex.d),
            m,
        ),
        Axis::Doppler => (
            rearrange(snapshot, Rearrangement::P2)?,
            Expected::kron(&ex.r, &ex.t),
            l,
        ),
    };
    let block = chat.len();
    let scale = 2.0 / sigma;
    let mut coeffs = vec![C64::new(0.0, 0.0); k.max(2)];
    for (kk, c) in coeffs.iter_mut().enumerate().take(k).skip(1) {
        let zk = &z[kk * block..(kk + 1) * block];
        let inner: C64 =
            zk.iter().zip(&chat).map(|(a, b)| a.conj() * b).sum::<C64>() * current.beta_mean;
        *c = to_natural(inner * scale, axis);
    }
    coeffs[1] += prior.eta;
    Ok(HarmonicObjective::new(coeffs))
}

/// Complex Gaussian update of β: returns (β̂, ς̃).
pub fn beta_update(
    snapshot: &SubarraySnapshot,
    current: &SubarrayPosterior,
    sigma: f64,
    varsigma: f64,
) -> (C64, f64) {
    let ex = Expected::of(current, snapshot.m_sub, snapshot.n_pulses);
    let mu = ex.mu();
    let mu_h_z: C64 = mu
        .iter()
        .zip(&snapshot.data)
        .map(|(a, b)| a.conj() * b)
        .sum();
    beta_from(mu_h_z, ex.norm_sqr(), sigma, varsigma)
}

fn beta_from(mu_h_z: C64, norm_mu2: f64, sigma: f64, varsigma: f64) -> (C64, f64) {
    let den = sigma + varsigma * norm_mu2;
    (mu_h_z * (varsigma / den), varsigma * sigma / (2.0 * den))
}

/// Noise and amplitude-variance re-estimation: returns (σ̂, ς̂).
pub fn hyper_update(
    snapshot: &SubarraySnapshot,
    current: &SubarrayPosterior,
    rule: SigmaRule,
    floor: f64,
) -> (f64, f64) {
    let ex = Expected::of(current, snapshot.m_sub, snapshot.n_pulses);
    let mu = ex.mu();
    let mu_h_z: C64 = mu
        .iter()
        .zip(&snapshot.data)
        .map(|(a, b)| a.conj() * b)
        .sum();
    hyper_from(
        snapshot.norm_sqr(),
        mu_h_z,
        ex.norm_sqr(),
        snapshot.len() as f64,
        current,
        rule,
        floor,
    )
}

fn hyper_from(
    norm_z2: f64,
    mu_h_z: C64,
    norm_mu2: f64,
    n: f64,
    cur: &SubarrayPosterior,
    rule: SigmaRule,
    floor: f64,
) -> (f64, f64) {
    let b = cur.beta_mean;
    let second = cur.beta_var + b.norm_sqr();
    let sigma = match rule {
        SigmaRule::Residual => (norm_z2 - 2.0 * (b.conj() * mu_h_z).re + n * second) / n,
        SigmaRule::Verbatim => {
            // zᴴμ = conj(μᴴz)
            2.0 / n * (norm_z2 + 2.0 * (b * mu_h_z.conj()).re + norm_mu2 * second)
        }
    };
    (sigma.max(floor), second)
}

fn kl_vm(q: VonMisesParam, p: VonMisesParam) -> f64 {
    let kq = q.kappa();
    let a = circular::a_ratio(kq);
    let mean = C64::from_polar(a, q.mu());
    kq * a - (p.eta.conj() * mean).re - ln_i0(kq) + ln_i0(p.kappa())
}

/// Periodogram initialization: Doppler from the non-coherent spectrum over
/// all elements, then the joint (φ, θ) peak of the Doppler-compensated data.
fn periodogram_init(s: &SubarraySnapshot, planner: &mut FftPlanner<f64>) -> (f64, f64, f64) {
    let (m, l) = (s.m_sub, s.n_pulses);
    let nf = 4 * l;
    let ifft = planner.plan_fft_inverse(nf);
    let mut power = vec![0.0; nf];
    let mut buf = vec![Complex::new(0.0, 0.0); nf];
    for row in s.data.chunks_exact(l) {
        buf[..l].copy_from_slice(row);
        buf[l..]
            .iter_mut()
            .for_each(|c| *c = Complex::new(0.0, 0.0));
        ifft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
    }
    let fi = argmax(&power);
    let f0 = circular::wrap(2.0 * PI * fi as f64 / nf as f64);
    let rot: Vec<C64> = (0..l)
        .map(|p| C64::from_polar(1.0, p as f64 * f0))
        .collect();
    let na = 4 * m;
    let mut grid = vec![Complex::new(0.0, 0.0); na * na];
    for ir in 0..m {
        for it in 0..m {
            let row = &s.data[(ir * m + it) * l..(ir * m + it + 1) * l];
            grid[ir * na + it] = row.iter().zip(&rot).map(|(a, b)| a * b).sum();
        }
    }
    let fft = planner.plan_fft_forward(na);
    for r in grid.chunks_exact_mut(na) {
        fft.process(r);
    }
    let mut col = vec![Complex::new(0.0, 0.0); na];
    for c in 0..na {
        for r in 0..na {
            col[r] = grid[r * na + c];
        }
        fft.process(&mut col);
        for r in 0..na {
            grid[r * na + c] = col[r];
        }
    }
    let pw: Vec<f64> = grid.iter().map(|c| c.norm_sqr()).collect();
    let best = argmax(&pw);
    let (a, b) = (best / na, best % na);
    let phi0 = circular::wrap(2.0 * PI * a as f64 / na as f64);
    let theta0 = circular::wrap(2.0 * PI * b as f64 / na as f64);
    (phi0, theta0, f0)
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Update of one axis inside the sweep. A flat objective leaves the prior.
fn axis_update(
    solver: &mut VmSolver,
    obj: &HarmonicObjective,
    prior: VonMisesParam,
) -> Result<VonMisesParam> {
    match solver.update(obj) {
        Err(Error::FlatObjective(_)) if obj.is_flat() => Ok(prior),
        other => other,
    }
}

/// Starting point of CAVI: periodogram means with concentration
/// `opts.init_kappa`, least-squares β̂ and residual σ̂.
pub fn initialize(
    snapshot: &SubarraySnapshot,
    priors: &Priors,
    opts: &CaviOptions,
) -> Result<SubarrayPosterior> {
    let mut planner = FftPlanner::new();
    init_with(snapshot, priors, opts, &mut planner)
}

fn init_with(
    snapshot: &SubarraySnapshot,
    priors: &Priors,
    opts: &CaviOptions,
    planner: &mut FftPlanner<f64>,
) -> Result<SubarrayPosterior> {
    let (m, l) = (snapshot.m_sub, snapshot.n_pulses);
    let z = &snapshot.data;
    if z.len() != m * m * l || m == 0 || l == 0 {
        return Err(Error::LengthMismatch {
            expected: m * m * l,
            got: z.len(),
        });
    }
    let n = z.len() as f64;
    let (phi0, theta0, f0) = periodogram_init(snapshot, planner);
    let mu0 = crate::wavefield::kron_steering(phi0, theta0, f0, m, l);
    let beta0: C64 = mu0.iter().zip(z).map(|(a, b)| a.conj() * b).sum::<C64>() / n;
    let resid0: f64 = mu0
        .iter()
        .zip(z)
        .map(|(a, b)| (b - beta0 * a).norm_sqr())
        .sum();
    Ok(SubarrayPosterior {
        eta_theta: VonMisesParam::from_polar(opts.init_kappa, theta0),
        eta_phi: VonMisesParam::from_polar(opts.init_kappa, phi0),
        eta_f: VonMisesParam::from_polar(opts.init_kappa, f0),
        beta_mean: beta0,
        beta_var: 0.0,
        sigma_hat: (resid0 / n).max(opts.sigma_floor),
        varsigma_hat: priors.varsigma,
        n_iters: 0,
        converged: false,
        elbo: Vec::new(),
    })
}

/// Algorithm: φ → θ → f̃ → β → (σ, ς) sweeps until ξ stabilizes.
pub fn run_cavi(
    snapshot: &SubarraySnapshot,
    priors: &Priors,
    opts: &CaviOptions,
) -> Result<SubarrayPosterior> {
    let mut planner = FftPlanner::new();
    let mut post = init_with(snapshot, priors, opts, &mut planner)?;
    let (m, l) = (snapshot.m_sub, snapshot.n_pulses);
    let z = &snapshot.data;
    let n = z.len() as f64;
    let norm_z2 = snapshot.norm_sqr();
    let mut solver = VmSolver {
        planner,
        buf: Vec::new(),
    };
    let mut xi_prev = post.xi();
    let mut w = vec![C64::new(0.0, 0.0); m * m];
    let mut v = vec![C64::new(0.0, 0.0); l];
    let zero = C64::new(0.0, 0.0);
    for iter in 1..=opts.max_iters {
        let sigma = post.sigma_hat;
        let scale = 2.0 / sigma;
        let mut ex = Expected::of(&post, m, l);
        // W[i_r][i_t] = Σ_l z·conj(E[d_l]) is shared by the φ and θ updates.
        for (wi, row) in w.iter_mut().zip(z.chunks_exact(l)) {
            *wi = row.iter().zip(&ex.d).map(|(a, b)| a * b.conj()).sum();
        }
        let bconj = post.beta_mean.conj();

        let mut coeffs = vec![zero; m.max(2)];
        for (k, c) in coeffs.iter_mut().enumerate().take(m).skip(1) {
            let u: C64 = (0..m).map(|it| w[k * m + it] * ex.t[it].conj()).sum();
            *c = u * bconj * scale;
        }
        coeffs[1] += priors.phi.eta;
        post.eta_phi = axis_update(&mut solver, &HarmonicObjective::new(coeffs), priors.phi)?;
        ex.r = post.eta_phi.moments(m - 1);

        let mut coeffs = vec![zero; m.max(2)];
        for (k, c) in coeffs.iter_mut().enumerate().take(m).skip(1) {
            let u: C64 = (0..m).map(|ir| w[ir * m + k] * ex.r[ir].conj()).sum();
            *c = u * bconj * scale;
        }
        coeffs[1] += priors.theta.eta;
        post.eta_theta = axis_update(&mut solver, &HarmonicObjective::new(coeffs), priors.theta)?;
        ex.t = post.eta_theta.moments(m - 1);

        v.iter_mut().for_each(|x| *x = zero);
        for ir in 0..m {
            for it in 0..m {
                let c = (ex.r[ir] * ex.t[it]).conj();
                let row = &z[(ir * m + it) * l..(ir * m + it + 1) * l];
                for (vp, zp) in v.iter_mut().zip(row) {
                    *vp += zp * c;
                }
            }
        }
        let mut coeffs = vec![zero; l.max(2)];
        for (k, c) in coeffs.iter_mut().enumerate().take(l).skip(1) {
            *c = post.beta_mean * v[k].conj() * scale;
        }
        coeffs[1] += priors.doppler.eta;
        post.eta_f = axis_update(&mut solver, &HarmonicObjective::new(coeffs), priors.doppler)?;
        ex.d = post.eta_f.moments(l - 1).iter().map(|c| c.conj()).collect();

        let mu_h_z: C64 = v.iter().zip(&ex.d).map(|(a, b)| a * b.conj()).sum();
        let norm_mu2 = ex.norm_sqr();
        let (b, bv) = beta_from(mu_h_z, norm_mu2, sigma, post.varsigma_hat);
        let varsigma_prior = post.varsigma_hat;
        post.beta_mean = b;
        post.beta_var = bv;
        let (s_hat, vs_hat) = hyper_from(
            norm_z2,
            mu_h_z,
            norm_mu2,
            n,
            &post,
            opts.sigma_rule,
            opts.sigma_floor,
        );
        post.sigma_hat = s_hat;
        post.varsigma_hat = vs_hat;
        post.n_iters = iter;

        let xi = post.xi();
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                stage: "cavi",
                iter,
            });
        }
        let e_res = norm_z2 - 2.0 * (b.conj() * mu_h_z).re + n * (bv + b.norm_sqr());
        let kl_beta = (varsigma_prior / bv).ln() + (bv + b.norm_sqr()) / varsigma_prior - 1.0;
        let elbo = -n * (PI * s_hat).ln()
            - e_res / s_hat
            - kl_beta
            - kl_vm(post.eta_phi, priors.phi)
            - kl_vm(post.eta_theta, priors.theta)
            - kl_vm(post.eta_f, priors.doppler);
        post.elbo.push(elbo);

        let diff: f64 = xi
            .iter()
            .zip(&xi_prev)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let size: f64 = xi.iter().map(|a| a * a).sum::<f64>().sqrt();
        xi_prev = xi;
        if diff < opts.eps * size.max(1.0) {
            post.converged = true;
            break;
        }
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rearrange_example() {
        let data: Vec<C64> = (0..8).map(|k| C64::new(k as f64, 0.0)).collect();
        let s = SubarraySnapshot::new(0, 0, 2, 2, data).unwrap();
        let p1: Vec<f64> = rearrange(&s, Rearrangement::P1)
            .unwrap()
            .iter()
            .map(|c| c.re)
            .collect();
        assert_eq!(p1, vec![0.0, 1.0, 4.0, 5.0, 2.0, 3.0, 6.0, 7.0]);
        let one = SubarraySnapshot::new(0, 0, 1, 3, vec![C64::new(1.0, 2.0); 3]).unwrap();
        assert_eq!(rearrange(&one, Rearrangement::P1).unwrap(), one.data);
        let flat = SubarraySnapshot::new(
            0,
            0,
            3,
            1,
            (0..9).map(|k| C64::new(k as f64, 0.0)).collect(),
        )
        .unwrap();
        assert_eq!(rearrange(&flat, Rearrangement::P2).unwrap(), flat.data);
    }

    #[test]
    fn single_harmonic_update() {
        let kappa0 = 7.0;
        let mu0 = 1.1;
        let obj = HarmonicObjective::single(C64::from_polar(kappa0, mu0));
        let q = vm_update(&obj).unwrap();
        assert!((q.mu() - mu0).abs() < 1e-12);
        let want = circular::a_inverse((-1.0 / (2.0 * kappa0)).exp()).unwrap();
        assert!((q.kappa() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn two_harmonic_update() {
        let obj = HarmonicObjective::new(vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        let (_, g1, g2) = obj.derivs(0.0);
        assert!(g1.abs() < 1e-15 && (g2 + 5.0).abs() < 1e-15);
        let q = vm_update(&obj).unwrap();
        assert!(q.mu().abs() < 1e-12);
        let want = circular::a_inverse((-0.1f64).exp()).unwrap();
        assert!((q.kappa() - want).abs() < 1e-9);
    }

    #[test]
    fn flat_objective_is_an_error() {
        let obj = HarmonicObjective::new(vec![C64::new(0.0, 0.0); 4]);
        assert!(matches!(vm_update(&obj), Err(Error::FlatObjective(_))));
    }

    #[test]
    fn beta_update_example() {
        // σ = 1, ς = 1, ‖μ‖² = 4, z = μ
        let (b, v) = beta_from(C64::new(4.0, 0.0), 4.0, 1.0, 1.0);
        assert!((b - C64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((v - 0.1).abs() < 1e-15);
    }
}
