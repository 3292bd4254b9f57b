//! Stage 2: turn per-pair posteriors into messages and estimate location and
//! velocity, either jointly over all pairs or per pair followed by Gaussian
//! fusion.
//!
//! Direction vectors here point from an array reference toward the target.

use crate::circular::{vm_divide, wrap, VonMisesParam};
use crate::geometry::{ArrayConfig, SPEED_OF_LIGHT};
use crate::subvbi::{Priors, SubarrayPosterior};
use crate::{Error, Mat2, Result, Vec2};
use nalgebra::SymmetricEigen;
use std::f64::consts::PI;

/// Mean and covariance of a bivariate Gaussian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianEstimate2D {
    pub mean: Vec2,
    pub cov: Mat2,
}

impl GaussianEstimate2D {
    /// Validates finiteness and positive definiteness.
    pub fn new(mean: Vec2, cov: Mat2) -> Result<Self> {
        let cov = 0.5 * (cov + cov.transpose());
        if !mean.iter().chain(cov.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                stage: "gaussian",
                iter: 0,
            });
        }
        let eig = SymmetricEigen::new(cov).eigenvalues;
        if eig.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Insufficient(
                "covariance not positive definite".into(),
            ));
        }
        Ok(Self { mean, cov })
    }

    /// Covariance as the inverse of a precision matrix, with eigenvalues
    /// clamped at 1e-12.
    pub fn from_precision(mean: Vec2, precision: Mat2) -> Result<Self> {
        let p = 0.5 * (precision + precision.transpose());
        let eig = SymmetricEigen::new(p);
        if eig
            .eigenvalues
            .iter()
            .any(|&e| !(e > 0.0) || !e.is_finite())
        {
            return Err(Error::Insufficient(
                "precision not positive definite".into(),
            ));
        }
        let inv = eig.eigenvalues.map(|e| (1.0 / e).max(1e-12));
        let cov = eig.eigenvectors * Mat2::from_diagonal(&inv) * eig.eigenvectors.transpose();
        Self::new(mean, cov)
    }

    pub fn precision(&self) -> Mat2 {
        self.cov.try_inverse().unwrap_or_else(Mat2::zeros)
    }

    /// Standard deviations along x and y.
    pub fn std(&self) -> Vec2 {
        Vec2::new(self.cov[(0, 0)].sqrt(), self.cov[(1, 1)].sqrt())
    }

    /// Product of Gaussians: C = (Σ C_i⁻¹)⁻¹, m = C Σ C_i⁻¹ m_i.
    pub fn fuse(parts: &[GaussianEstimate2D]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Insufficient("nothing to fuse".into()));
        }
        let mut prec = Mat2::zeros();
        let mut info = Vec2::zeros();
        for g in parts {
            let p = g.precision();
            prec += p;
            info += p * g.mean;
        }
        let cov = prec
            .try_inverse()
            .ok_or_else(|| Error::Insufficient("singular fused precision".into()))?;
        Self::new(cov * info, cov)
    }
}

/// Messages from the subarray posteriors toward the geometric factors.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularMessageSet {
    pub k_t: usize,
    pub k_r: usize,
    pub theta_msgs: Vec<VonMisesParam>,
    pub phi_msgs: Vec<VonMisesParam>,
    /// Row-major over (m, n); uniform when the pair was skipped.
    pub doppler_msgs: Vec<VonMisesParam>,
    pub used: Vec<bool>,
}

impl AngularMessageSet {
    pub fn doppler(&self, m: usize, n: usize) -> VonMisesParam {
        self.doppler_msgs[m * self.k_r + n]
    }

    pub fn is_used(&self, m: usize, n: usize) -> bool {
        self.used[m * self.k_r + n]
    }

    /// Scales every concentration by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[VonMisesParam]| v.iter().map(|p| VonMisesParam::new(p.eta * c)).collect();
        Self {
            theta_msgs: s(&self.theta_msgs),
            phi_msgs: s(&self.phi_msgs),
            doppler_msgs: s(&self.doppler_msgs),
            ..self.clone()
        }
    }
}

/// Sums the pair posteriors of each angle with the prior removed once per
/// posterior. `posteriors` is row-major over (m, n); `None` or
/// non-converged entries are skipped.
pub fn build_messages(
    posteriors: &[Option<SubarrayPosterior>],
    k_t: usize,
    k_r: usize,
    priors: &Priors,
) -> Result<AngularMessageSet> {
    if posteriors.len() != k_t * k_r {
        return Err(Error::LengthMismatch {
            expected: k_t * k_r,
            got: posteriors.len(),
        });
    }
    let mut theta = vec![VonMisesParam::uniform(); k_t];
    let mut phi = vec![VonMisesParam::uniform(); k_r];
    let mut doppler = vec![VonMisesParam::uniform(); k_t * k_r];
    let mut used = vec![false; k_t * k_r];
    let mut skipped = 0;
    for m in 0..k_t {
        for n in 0..k_r {
            let i = m * k_r + n;
            let Some(p) = posteriors[i].as_ref().filter(|p| p.converged) else {
                skipped += 1;
                continue;
            };
            used[i] = true;
            theta[m].eta += vm_divide(p.eta_theta, priors.theta).eta;
            phi[n].eta += vm_divide(p.eta_phi, priors.phi).eta;
            doppler[i] = vm_divide(p.eta_f, priors.doppler);
        }
    }
    if skipped > 0 {
        log::warn!(
            "{skipped} of {} subarray pairs skipped (not converged)",
            k_t * k_r
        );
    }
    Ok(AngularMessageSet {
        k_t,
        k_r,
        theta_msgs: theta,
        phi_msgs: phi,
        doppler_msgs: doppler,
        used,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentOptions {
    pub max_iters: usize,
    /// Step-length tolerance relative to 1 + ‖x‖.
    pub tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-10,
        }
    }
}

/// Result of an iterative maximization with its Laplace covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentReport {
    pub estimate: GaussianEstimate2D,
    pub iters: usize,
    /// Condition number of the negative Hessian at the maximum.
    pub condition: f64,
}

/// Damped Newton ascent with a backtracking gradient fallback where the
/// Hessian is not negative definite.
fn ascend<F>(f: F, x0: Vec2, opts: &AscentOptions, what: &'static str) -> Result<AscentReport>
where
    F: Fn(Vec2) -> (f64, Vec2, Mat2),
{
    let mut x = x0;
    let (mut fx, mut g, mut h) = f(x);
    let mut iters = 0;
    let mut done = false;
    while iters < opts.max_iters {
        iters += 1;
        let eig = SymmetricEigen::new(h);
        let dir = if eig.eigenvalues.iter().all(|&e| e < 0.0) {
            -(h.try_inverse().unwrap_or_else(Mat2::zeros) * g)
        } else {
            let scale = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
            if scale > 0.0 {
                g / scale
            } else {
                g
            }
        };
        if !dir.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                stage: what,
                iter: iters,
            });
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = x + dir * t;
            let cand = f(xn);
            if cand.0 >= fx {
                accepted = Some((xn, cand));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, (fnew, gn, hn))) = accepted else {
            done = true;
            break;
        };
        let step = (xn - x).norm();
        x = xn;
        fx = fnew;
        g = gn;
        h = hn;
        if step < opts.tol * (1.0 + x.norm()) {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::NoConvergence {
            what,
            iters,
            last: [x.x, x.y],
        });
    }
    let neg = -0.5 * (h + h.transpose());
    let eig = SymmetricEigen::new(neg);
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if !(lo > 0.0) {
        return Err(Error::NotLocalMaximum);
    }
    let estimate = GaussianEstimate2D::from_precision(x, neg)?;
    Ok(AscentReport {
        estimate,
        iters,
        condition: hi / lo,
    })
}

/// Unit vector from `from` toward `p`, its range, and its x-component.
fn direction(from: Vec2, p: Vec2) -> Result<(Vec2, f64)> {
    let d = p - from;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::ZeroRange("reference to target"));
    }
    Ok((d / r, r))
}

/// Value, gradient and Hessian of κ·cos(χ·sin(angle at `from`) − μ).
fn angle_term(from: Vec2, p: Vec2, chi: f64, msg: VonMisesParam) -> Result<(f64, Vec2, Mat2)> {
    let kappa = msg.kappa();
    if kappa == 0.0 {
        return Ok((0.0, Vec2::zeros(), Mat2::zeros()));
    }
    let (e, r) = direction(from, p)?;
    let gamma = e.x;
    let ex = Vec2::x();
    let w = (ex - e * gamma) / r;
    let dw = (-(e * ex.transpose()) - ex * e.transpose() + e * e.transpose() * (3.0 * gamma)
        - Mat2::identity() * gamma)
        / (r * r);
    let arg = chi * gamma - msg.mu();
    let (s, c) = arg.sin_cos();
    let val = kappa * c;
    let grad = w * (-kappa * s * chi);
    let hess = w * w.transpose() * (-kappa * c * chi * chi) + dw * (-kappa * s * chi);
    Ok((val, grad, hess))
}

/// f_p(p) = Σ_m κ_θ cos(θ_m(p) − μ_θ) + Σ_n κ_φ cos(φ_n(p) − μ_φ).
pub fn location_objective(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    p: Vec2,
) -> Result<(f64, Vec2, Mat2)> {
    let chi = cfg.chi();
    let mut acc = (0.0, Vec2::zeros(), Mat2::zeros());
    let refs = (0..msgs.k_t)
        .map(|m| (cfg.tx_ref(m), msgs.theta_msgs[m]))
        .chain((0..msgs.k_r).map(|n| (cfg.rx_ref(n), msgs.phi_msgs[n])));
    for (from, msg) in refs {
        let (v, g, h) = angle_term(from, p, chi, msg)?;
        acc.0 += v;
        acc.1 += g;
        acc.2 += h;
    }
    Ok(acc)
}

/// Intersection of the transmit ray of subarray `m` with the receive ray of
/// subarray `n`, from the message means alone.
pub fn triangulate(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    m: usize,
    n: usize,
) -> Result<Vec2> {
    let et = unit_from_electrical(msgs.theta_msgs[m].mu(), cfg.chi())?;
    let er = unit_from_electrical(msgs.phi_msgs[n].mu(), cfg.chi())?;
    // p_t + a·e_t = p_r + b·e_r
    let a = Mat2::from_columns(&[et, -er]);
    let rhs = cfg.rx_ref(n) - cfg.tx_ref(m);
    let sol = a
        .try_inverse()
        .ok_or_else(|| Error::Insufficient("parallel rays".into()))?
        * rhs;
    if !(sol[0] > 0.0 && sol[1] > 0.0) {
        return Err(Error::Insufficient(
            "rays do not meet in front of the arrays".into(),
        ));
    }
    Ok(cfg.tx_ref(m) + et * sol[0])
}

fn unit_from_electrical(mu: f64, chi: f64) -> Result<Vec2> {
    let s = mu / chi;
    if !(s.abs() <= 1.0) {
        return Err(Error::InvalidSine);
    }
    Ok(Vec2::new(s, (1.0 - s * s).sqrt()))
}

/// Starting point from the strongest transmit and receive messages.
pub fn default_location_init(msgs: &AngularMessageSet, cfg: &ArrayConfig) -> Result<Vec2> {
    let strongest = |v: &[VonMisesParam]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.kappa().total_cmp(&b.1.kappa()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    triangulate(
        msgs,
        cfg,
        strongest(&msgs.theta_msgs),
        strongest(&msgs.phi_msgs),
    )
}

/// System-level location: maximize f_p from `init`.
pub fn centralized_location(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    init: Vec2,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let active = msgs
        .theta_msgs
        .iter()
        .chain(&msgs.phi_msgs)
        .filter(|m| m.kappa() > 0.0)
        .count();
    if active < 2 {
        return Err(Error::Insufficient(
            "need at least two angular messages".into(),
        ));
    }
    let f = |p: Vec2| {
        location_objective(msgs, cfg, p).unwrap_or((
            f64::NEG_INFINITY,
            Vec2::zeros(),
            Mat2::zeros(),
        ))
    };
    let rep = ascend(f, init, opts, "location ascent")?;
    if rep.condition > 1e8 {
        log::warn!(
            "location Hessian ill-conditioned (condition {:.3e})",
            rep.condition
        );
    }
    Ok(rep)
}

/// Receive-side closed-form location of pair (m, n) from the two angle
/// means and the bistatic delay.
fn closed_form(
    cfg: &ArrayConfig,
    m: usize,
    n: usize,
    mu_t: f64,
    mu_r: f64,
    tau: f64,
) -> Result<(Vec2, Vec2)> {
    let chi = cfg.chi();
    let et = unit_from_electrical(mu_t, chi)?;
    let er = unit_from_electrical(mu_r, chi)?;
    let (ct, cr) = (et.y, er.y);
    if !(ct + cr > 0.0) {
        return Err(Error::InvalidSine);
    }
    let range = SPEED_OF_LIGHT * tau;
    let rx = cfg.rx_ref(n) + er * (range * ct / (ct + cr));
    let tx = cfg.tx_ref(m) + et * (range * cr / (ct + cr));
    Ok((rx, tx))
}

/// Closed-form location of pair (m, n) from its angle means and delay, with
/// the mismatch between the receive-side and transmit-side expressions (m).
pub fn pair_closed_form(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    m: usize,
    n: usize,
    tau: f64,
) -> Result<(Vec2, f64)> {
    let (rx, tx) = closed_form(
        cfg,
        m,
        n,
        msgs.theta_msgs[m].mu(),
        msgs.phi_msgs[n].mu(),
        tau,
    )?;
    Ok((rx, (rx - tx).norm()))
}

/// Per-pair location: the maximizer of the pair's two angle factors, which
/// is the intersection of its transmit and receive rays, with the Laplace
/// covariance there. Each angle message is shared by every pair on its
/// subarray, so a pair takes 1/K_r of κ_θ and 1/K_t of κ_φ and the fused
/// product counts every message once.
pub fn pair_location(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    m: usize,
    n: usize,
) -> Result<GaussianEstimate2D> {
    let mean = triangulate(msgs, cfg, m, n)?;
    let chi = cfg.chi();
    let mt = VonMisesParam::new(msgs.theta_msgs[m].eta / msgs.k_r as f64);
    let mr = VonMisesParam::new(msgs.phi_msgs[n].eta / msgs.k_t as f64);
    let (_, _, ht) = angle_term(cfg.tx_ref(m), mean, chi, mt)?;
    let (_, _, hr) = angle_term(cfg.rx_ref(n), mean, chi, mr)?;
    GaussianEstimate2D::from_precision(mean, -(ht + hr))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributedLocation {
    /// Row-major over (m, n); `None` for skipped pairs.
    pub per_pair: Vec<Option<GaussianEstimate2D>>,
    /// Closed-form locations, same layout.
    pub closed_form: Vec<Option<Vec2>>,
    pub fused: GaussianEstimate2D,
}

/// Subarray-level location: per-pair estimates fused as a product of
/// Gaussians, plus the delay-based closed forms. `tau_hat` is row-major
/// over (m, n) in seconds. Pairs whose rays do not meet are skipped.
pub fn distributed_location(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    tau_hat: &[f64],
) -> Result<DistributedLocation> {
    if tau_hat.len() != msgs.k_t * msgs.k_r {
        return Err(Error::LengthMismatch {
            expected: msgs.k_t * msgs.k_r,
            got: tau_hat.len(),
        });
    }
    let mut per_pair = vec![None; tau_hat.len()];
    let mut closed_form = vec![None; tau_hat.len()];
    let mut mismatched = 0;
    for m in 0..msgs.k_t {
        for n in 0..msgs.k_r {
            let i = m * msgs.k_r + n;
            if !msgs.used[i] {
                continue;
            }
            match pair_closed_form(msgs, cfg, m, n, tau_hat[i]) {
                Ok((cf, mis)) => {
                    if mis > 1e-6 * cf.norm() {
                        mismatched += 1;
                    }
                    closed_form[i] = Some(cf);
                }
                Err(e) => log::debug!("pair ({m},{n}) closed form: {e}"),
            }
            match pair_location(msgs, cfg, m, n) {
                Ok(g) => per_pair[i] = Some(g),
                Err(e) => log::debug!("pair ({m},{n}) skipped: {e}"),
            }
        }
    }
    if mismatched > 0 {
        log::debug!("{mismatched} pairs with angle/delay mismatch");
    }
    let parts: Vec<_> = per_pair.iter().flatten().copied().collect();
    if parts.is_empty() {
        return Err(Error::Insufficient("no pair produced a location".into()));
    }
    let fused = GaussianEstimate2D::fuse(&parts)?;
    Ok(DistributedLocation {
        per_pair,
        closed_form,
        fused,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityOptions {
    pub ascent: AscentOptions,
    /// μ_f = doppler_sign·ζ·vᵀu with u = e(θ_m) + e(φ_n) pointing from the
    /// target toward the arrays.
    pub doppler_sign: f64,
    /// Largest condition number of E_ω accepted in the subarray-level mode.
    pub cond_gate: f64,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        Self {
            ascent: AscentOptions::default(),
            doppler_sign: -1.0,
            cond_gate: 1e4,
        }
    }
}

/// Pair-wise direction sums u_mn (target toward arrays) at location `p`.
pub fn direction_sums(cfg: &ArrayConfig, k_t: usize, k_r: usize, p: Vec2) -> Result<Vec<Vec2>> {
    let mut out = Vec::with_capacity(k_t * k_r);
    for m in 0..k_t {
        let (et, _) = direction(p, cfg.tx_ref(m))?;
        for n in 0..k_r {
            let (er, _) = direction(p, cfg.rx_ref(n))?;
            out.push(et + er);
        }
    }
    Ok(out)
}

fn zeta(cfg: &ArrayConfig, pri: f64) -> f64 {
    2.0 * PI * pri / cfg.lambda
}

/// Doppler means unwrapped against the most concentrated used pair.
fn unwrapped_means(msgs: &AngularMessageSet) -> Vec<f64> {
    let reference = (0..msgs.doppler_msgs.len())
        .filter(|&i| msgs.used[i])
        .max_by(|&a, &b| {
            msgs.doppler_msgs[a]
                .kappa()
                .total_cmp(&msgs.doppler_msgs[b].kappa())
        });
    let Some(r) = reference else {
        return vec![0.0; msgs.doppler_msgs.len()];
    };
    let mu_ref = msgs.doppler_msgs[r].mu();
    msgs.doppler_msgs
        .iter()
        .map(|d| mu_ref + wrap(d.mu() - mu_ref))
        .collect()
}

/// System-level velocity: maximize f_v(v) = Σ κ_f cos(s·ζ·vᵀu − μ_f).
pub fn centralized_velocity(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    pri: f64,
    p0_hat: Vec2,
    opts: &VelocityOptions,
) -> Result<AscentReport> {
    let u = direction_sums(cfg, msgs.k_t, msgs.k_r, p0_hat)?;
    let z = zeta(cfg, pri) * opts.doppler_sign;
    let idx: Vec<usize> = (0..u.len())
        .filter(|&i| msgs.used[i] && msgs.doppler_msgs[i].kappa() > 0.0)
        .collect();
    if idx.len() < 2 {
        return Err(Error::VelocityUnobservable);
    }
    // weighted least squares on unwrapped means as the starting point
    let mu = unwrapped_means(msgs);
    let mut a = Mat2::zeros();
    let mut b = Vec2::zeros();
    for &i in &idx {
        let k = msgs.doppler_msgs[i].kappa();
        a += u[i] * u[i].transpose() * (k * z * z);
        b += u[i] * (k * z * mu[i]);
    }
    let eig = SymmetricEigen::new(a).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-12 * hi) {
        return Err(Error::VelocityUnobservable);
    }
    let init = a.try_inverse().ok_or(Error::VelocityUnobservable)? * b;
    let f = |v: Vec2| {
        let mut acc = (0.0, Vec2::zeros(), Mat2::zeros());
        for &i in &idx {
            let msg = msgs.doppler_msgs[i];
            let k = msg.kappa();
            let (s, c) = (z * v.dot(&u[i]) - msg.mu()).sin_cos();
            acc.0 += k * c;
            acc.1 += u[i] * (-k * s * z);
            acc.2 += u[i] * u[i].transpose() * (-k * c * z * z);
        }
        acc
    };
    ascend(f, init, &opts.ascent, "velocity ascent")
}

/// Configurations ω = {(m,n), (p,q)} used by the subarray-level velocity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairConfigSet {
    pub omega: Vec<((usize, usize), (usize, usize))>,
}

impl PairConfigSet {
    /// Neighbours along either subarray index.
    pub fn adjacent(k_t: usize, k_r: usize) -> Self {
        let mut omega = Vec::new();
        for m in 0..k_t {
            for n in 0..k_r {
                if n + 1 < k_r {
                    omega.push(((m, n), (m, n + 1)));
                }
                if m + 1 < k_t {
                    omega.push(((m, n), (m + 1, n)));
                }
            }
        }
        Self { omega }
    }

    /// Every unordered pair of distinct subarray pairs.
    pub fn all(k_t: usize, k_r: usize) -> Self {
        let pairs: Vec<_> = (0..k_t)
            .flat_map(|m| (0..k_r).map(move |n| (m, n)))
            .collect();
        let mut omega = Vec::new();
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                omega.push((pairs[i], pairs[j]));
            }
        }
        Self { omega }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributedVelocity {
    /// One entry per configuration; `None` when it was gated out.
    pub per_config: Vec<Option<GaussianEstimate2D>>,
    pub fused: GaussianEstimate2D,
}

/// Subarray-level velocity: solve each 2×2 configuration exactly, then fuse.
pub fn distributed_velocity(
    msgs: &AngularMessageSet,
    cfg: &ArrayConfig,
    pri: f64,
    p0_hat: Vec2,
    pairs: &PairConfigSet,
    opts: &VelocityOptions,
) -> Result<DistributedVelocity> {
    let u = direction_sums(cfg, msgs.k_t, msgs.k_r, p0_hat)?;
    let z = zeta(cfg, pri) * opts.doppler_sign;
    let mut per_config = Vec::with_capacity(pairs.omega.len());
    let mut gated = 0;
    for &((m, n), (p, q)) in &pairs.omega {
        let (i, j) = (m * msgs.k_r + n, p * msgs.k_r + q);
        if !(msgs.used[i] && msgs.used[j]) {
            per_config.push(None);
            continue;
        }
        let e = Mat2::from_columns(&[u[i], u[j]]);
        let sv = e.singular_values();
        let cond = sv.max() / sv.min();
        if !(cond <= opts.cond_gate) {
            gated += 1;
            per_config.push(None);
            continue;
        }
        let (di, dj) = (msgs.doppler_msgs[i], msgs.doppler_msgs[j]);
        let mu_i = di.mu();
        let mu_j = mu_i + wrap(dj.mu() - mu_i);
        let et_inv = e
            .transpose()
            .try_inverse()
            .ok_or(Error::VelocityUnobservable)?;
        let mean = et_inv * Vec2::new(mu_i, mu_j) / z;
        let prec =
            (u[i] * u[i].transpose() * di.kappa() + u[j] * u[j].transpose() * dj.kappa()) * (z * z);
        per_config.push(GaussianEstimate2D::from_precision(mean, prec).ok());
    }
    if gated > 0 {
        log::warn!(
            "{gated} velocity configurations exceed the condition gate {}",
            opts.cond_gate
        );
    }
    let parts: Vec<_> = per_config.iter().flatten().copied().collect();
    if parts.is_empty() {
        return Err(Error::VelocityUnobservable);
    }
    let fused = GaussianEstimate2D::fuse(&parts)?;
    Ok(DistributedVelocity { per_config, fused })
}
