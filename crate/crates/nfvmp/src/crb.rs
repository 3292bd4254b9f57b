//! Cramér-Rao bounds for location and velocity.
//!
//! Intermediate parameters ρ = [θ (K_t), φ (K_r), f (K_t·K_r, Hz),
//! Re β (K_t·K_r), Im β (K_t·K_r)]; target parameters η = [x0, y0, vx, vy,
//! Re β…, Im β…]. Pairs are ordered row-major over (m, n).

use crate::geometry::{self, ArrayConfig, PulseConfig, TargetState};
use crate::wavefield::{kron_steering, ChannelGain, Scenario};
use crate::{Error, Result, Vec2, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Which closed form to use for ∂(βμ)/∂θ, ∂φ and ∂f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivativeForm {
    /// θ, φ and f as independent coordinates of the signal model.
    #[default]
    Independent,
    /// Variant carrying velocity-coupled tan(·) terms inside ∂/∂θ, ∂/∂φ and
    /// ∂/∂f. Kept for auditing against the finite-difference oracle.
    Coupled,
}

/// Index helpers for the ρ vector.
#[derive(Clone, Copy, Debug)]
pub struct RhoLayout {
    pub k_t: usize,
    pub k_r: usize,
}

impl RhoLayout {
    pub fn pairs(&self) -> usize {
        self.k_t * self.k_r
    }
    pub fn dim(&self) -> usize {
        self.k_t + self.k_r + 3 * self.pairs()
    }
    pub fn theta(&self, m: usize) -> usize {
        m
    }
    pub fn phi(&self, n: usize) -> usize {
        self.k_t + n
    }
    pub fn f(&self, m: usize, n: usize) -> usize {
        self.k_t + self.k_r + m * self.k_r + n
    }
    pub fn re_beta(&self, m: usize, n: usize) -> usize {
        self.k_t + self.k_r + self.pairs() + m * self.k_r + n
    }
    pub fn im_beta(&self, m: usize, n: usize) -> usize {
        self.k_t + self.k_r + 2 * self.pairs() + m * self.k_r + n
    }
    /// Dimension of η.
    pub fn eta_dim(&self) -> usize {
        4 + 2 * self.pairs()
    }
}

/// Derivative vectors of β·μ_mn with respect to (θ_m, φ_n, f_mn, Re β, Im β),
/// each of length M²L in canonical order.
fn pair_derivatives(
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    target: &TargetState,
    beta: C64,
    m: usize,
    n: usize,
    form: DerivativeForm,
) -> Result<[Vec<C64>; 5]> {
    let ang = geometry::subarray_angles(cfg, target.p0)?;
    let f = geometry::bistatic_doppler(cfg, target, m, n)?;
    let (ms, l) = (cfg.m_sub, pulse.n_pulses);
    let fnorm = 2.0 * PI * pulse.pri * f;
    let mu = kron_steering(ang.phi[n], ang.theta[m], fnorm, ms, l);
    let j = C64::new(0.0, 1.0);
    let mut out: [Vec<C64>; 5] = Default::default();
    for v in out.iter_mut() {
        v.reserve(mu.len());
    }
    let (vx, vy) = (target.v0.x, target.v0.y);
    let tan_t = ang.theta_tilde[m].tan();
    let tan_r = ang.phi_tilde[n].tan();
    for ir in 0..ms {
        for it in 0..ms {
            for k in 0..l {
                let u = mu[(ir * ms + it) * l + k];
                let t = pulse.time(k);
                let (ci, ct) = (ir as f64, it as f64);
                let (dt, dr, df) = match form {
                    DerivativeForm::Independent => (
                        j * beta * ct * u,
                        j * beta * ci * u,
                        j * beta * (-2.0 * PI * t) * u,
                    ),
                    DerivativeForm::Coupled => {
                        let lam = cfg.lambda;
                        let dt = j * beta * (ct + 2.0 * PI * t / lam * (tan_t * vx - vy)) * u;
                        let dr = j * beta * (ci + 2.0 * PI * t / lam * (tan_r * vx - vy)) * u;
                        let df = j
                            * beta
                            * (lam * ci / (vy - tan_r * vx) - 2.0 * PI * t
                                + lam * ct / (vy - tan_t * vx))
                            * u;
                        (dt, dr, df)
                    }
                };
                out[0].push(dt);
                out[1].push(dr);
                out[2].push(df);
                out[3].push(u);
                out[4].push(j * u);
            }
        }
    }
    Ok(out)
}

fn re_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Inner products of the per-axis weightings {1, j·k} (angles) and
/// {1, −j2πT·l} (Doppler) in closed form: returns [[Σ1, Σq], [Σq̄, Σ|q|²]]
/// as complex numbers.
fn axis_table(q: impl Iterator<Item = C64>) -> [[C64; 2]; 2] {
    let mut t = [[C64::new(0.0, 0.0); 2]; 2];
    for qk in q {
        t[0][0] += 1.0;
        t[0][1] += qk;
        t[1][0] += qk.conj();
        t[1][1] += qk.norm_sqr();
    }
    t
}

/// 5×5 Fisher block of one pair in (θ, φ, f, Re β, Im β) using the
/// Kronecker factorization of every inner product.
fn pair_block(ms: usize, pulse: &PulseConfig, beta: C64, sigma: f64) -> [[f64; 5]; 5] {
    let j = C64::new(0.0, 1.0);
    let ang = axis_table((0..ms).map(|k| j * k as f64));
    let dop = axis_table((0..pulse.n_pulses).map(|k| -j * 2.0 * PI * pulse.time(k)));
    // (coefficient, weight on a_r, weight on a_t, weight on d)
    let terms: [(C64, usize, usize, usize); 5] = [
        (beta, 0, 1, 0),
        (beta, 1, 0, 0),
        (beta, 0, 0, 1),
        (C64::new(1.0, 0.0), 0, 0, 0),
        (j, 0, 0, 0),
    ];
    let mut out = [[0.0; 5]; 5];
    for (a, sa) in terms.iter().enumerate() {
        for (b, sb) in terms.iter().enumerate() {
            let v = sa.0.conj() * sb.0 * ang[sa.1][sb.1] * ang[sa.2][sb.2] * dop[sa.3][sb.3];
            out[a][b] = 2.0 / sigma * v.re;
        }
    }
    out
}

fn scatter(f: &mut DMatrix<f64>, idx: &[usize; 5], block: &[[f64; 5]; 5]) {
    for a in 0..5 {
        for b in 0..5 {
            f[(idx[a], idx[b])] += block[a][b];
        }
    }
}

fn pair_index(lay: &RhoLayout, m: usize, n: usize) -> [usize; 5] {
    [
        lay.theta(m),
        lay.phi(n),
        lay.f(m, n),
        lay.re_beta(m, n),
        lay.im_beta(m, n),
    ]
}

/// Fisher information for ρ.
pub fn fim_rho(
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    target: &TargetState,
    gains: &ChannelGain,
    sigma: f64,
    form: DerivativeForm,
) -> Result<DMatrix<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Config("noise variance must be positive".into()));
    }
    let lay = RhoLayout {
        k_t: cfg.k_t(),
        k_r: cfg.k_r(),
    };
    let mut f = DMatrix::zeros(lay.dim(), lay.dim());
    for m in 0..lay.k_t {
        for n in 0..lay.k_r {
            let beta = gains.get(m, n);
            let block = match form {
                DerivativeForm::Independent => pair_block(cfg.m_sub, pulse, beta, sigma),
                DerivativeForm::Coupled => {
                    let d = pair_derivatives(cfg, pulse, target, beta, m, n, form)?;
                    let mut b = [[0.0; 5]; 5];
                    for a in 0..5 {
                        for c in 0..5 {
                            b[a][c] = 2.0 / sigma * re_inner(&d[a], &d[c]);
                        }
                    }
                    b
                }
            };
            scatter(&mut f, &pair_index(&lay, m, n), &block);
        }
    }
    Ok(f)
}

/// Mean signal of one pair as a function of its own ρ entries.
fn pair_signal(
    ms: usize,
    pulse: &PulseConfig,
    theta: f64,
    phi: f64,
    f: f64,
    beta: C64,
) -> Vec<C64> {
    let mut v = kron_steering(phi, theta, 2.0 * PI * pulse.pri * f, ms, pulse.n_pulses);
    v.iter_mut().for_each(|x| *x *= beta);
    v
}

/// Central-difference Fisher information for ρ.
pub fn fim_rho_numeric(
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    target: &TargetState,
    gains: &ChannelGain,
    sigma: f64,
    step: f64,
) -> Result<DMatrix<f64>> {
    let lay = RhoLayout {
        k_t: cfg.k_t(),
        k_r: cfg.k_r(),
    };
    let ang = geometry::subarray_angles(cfg, target.p0)?;
    let mut f = DMatrix::zeros(lay.dim(), lay.dim());
    for m in 0..lay.k_t {
        for n in 0..lay.k_r {
            let fd = geometry::bistatic_doppler(cfg, target, m, n)?;
            let beta = gains.get(m, n);
            let base = [ang.theta[m], ang.phi[n], fd, beta.re, beta.im];
            let cols: Vec<Vec<C64>> = (0..5)
                .map(|k| {
                    let eval = |d: f64| {
                        let mut p = base;
                        p[k] += d;
                        pair_signal(cfg.m_sub, pulse, p[0], p[1], p[2], C64::new(p[3], p[4]))
                    };
                    let (a, b) = (eval(step), eval(-step));
                    a.iter()
                        .zip(&b)
                        .map(|(x, y)| (x - y) / (2.0 * step))
                        .collect()
                })
                .collect();
            let mut block = [[0.0; 5]; 5];
            for a in 0..5 {
                for c in 0..5 {
                    block[a][c] = 2.0 / sigma * re_inner(&cols[a], &cols[c]);
                }
            }
            scatter(&mut f, &pair_index(&lay, m, n), &block);
        }
    }
    Ok(f)
}

/// Jacobian ∂ρ/∂η.
pub fn jacobian_psi(cfg: &ArrayConfig, target: &TargetState) -> Result<DMatrix<f64>> {
    let lay = RhoLayout {
        k_t: cfg.k_t(),
        k_r: cfg.k_r(),
    };
    let chi = cfg.chi();
    let p = target.p0;
    let v = target.v0;
    let mut psi = DMatrix::zeros(lay.dim(), lay.eta_dim());
    let geo = |from: Vec2| -> Result<(Vec2, f64)> {
        let d = p - from;
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::ZeroRange("subarray to target"));
        }
        Ok((d / r, r))
    };
    let w = |e: Vec2, r: f64| (Vec2::x() - e * e.x) / r;
    let proj = |e: Vec2, r: f64| (v - e * e.dot(&v)) / r;
    let mut tx = Vec::new();
    for m in 0..lay.k_t {
        let (e, r) = geo(cfg.tx_ref(m))?;
        let g = w(e, r) * chi;
        psi[(lay.theta(m), 0)] = g.x;
        psi[(lay.theta(m), 1)] = g.y;
        tx.push((e, r));
    }
    let mut rx = Vec::new();
    for n in 0..lay.k_r {
        let (e, r) = geo(cfg.rx_ref(n))?;
        let g = w(e, r) * chi;
        psi[(lay.phi(n), 0)] = g.x;
        psi[(lay.phi(n), 1)] = g.y;
        rx.push((e, r));
    }
    let lam = cfg.lambda;
    for (m, &(et, rt)) in tx.iter().enumerate() {
        for (n, &(er, rr)) in rx.iter().enumerate() {
            let row = lay.f(m, n);
            let dp = (proj(et, rt) + proj(er, rr)) / lam;
            let dv = (et + er) / lam;
            psi[(row, 0)] = dp.x;
            psi[(row, 1)] = dp.y;
            psi[(row, 2)] = dv.x;
            psi[(row, 3)] = dv.y;
        }
    }
    for i in 0..2 * lay.pairs() {
        psi[(lay.k_t + lay.k_r + lay.pairs() + i, 4 + i)] = 1.0;
    }
    Ok(psi)
}

/// Central differences of the geometric maps, for auditing `jacobian_psi`.
pub fn jacobian_psi_numeric(
    cfg: &ArrayConfig,
    target: &TargetState,
    step: f64,
) -> Result<DMatrix<f64>> {
    let lay = RhoLayout {
        k_t: cfg.k_t(),
        k_r: cfg.k_r(),
    };
    let rho_geo = |t: &TargetState| -> Result<Vec<f64>> {
        let ang = geometry::subarray_angles(cfg, t.p0)?;
        let mut out = Vec::with_capacity(lay.k_t + lay.k_r + lay.pairs());
        out.extend_from_slice(&ang.theta);
        out.extend_from_slice(&ang.phi);
        for m in 0..lay.k_t {
            for n in 0..lay.k_r {
                out.push(geometry::bistatic_doppler(cfg, t, m, n)?);
            }
        }
        Ok(out)
    };
    let mut psi = DMatrix::zeros(lay.dim(), lay.eta_dim());
    for k in 0..4 {
        let shift = |d: f64| {
            let mut t = *target;
            match k {
                0 => t.p0.x += d,
                1 => t.p0.y += d,
                2 => t.v0.x += d,
                _ => t.v0.y += d,
            }
            t
        };
        let a = rho_geo(&shift(step))?;
        let b = rho_geo(&shift(-step))?;
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            psi[(i, k)] = (x - y) / (2.0 * step);
        }
    }
    for i in 0..2 * lay.pairs() {
        psi[(lay.k_t + lay.k_r + lay.pairs() + i, 4 + i)] = 1.0;
    }
    Ok(psi)
}

/// Fisher information for η computed directly by differencing the full
/// mean signal with respect to η.
pub fn fim_eta_numeric(
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    target: &TargetState,
    gains: &ChannelGain,
    sigma: f64,
    step: f64,
) -> Result<DMatrix<f64>> {
    let lay = RhoLayout {
        k_t: cfg.k_t(),
        k_r: cfg.k_r(),
    };
    let mut f = DMatrix::zeros(lay.eta_dim(), lay.eta_dim());
    for m in 0..lay.k_t {
        for n in 0..lay.k_r {
            let beta = gains.get(m, n);
            let signal = |t: &TargetState, b: C64| -> Result<Vec<C64>> {
                let ang = geometry::subarray_angles(cfg, t.p0)?;
                let fd = geometry::bistatic_doppler(cfg, t, m, n)?;
                Ok(pair_signal(
                    cfg.m_sub,
                    pulse,
                    ang.theta[m],
                    ang.phi[n],
                    fd,
                    b,
                ))
            };
            let mut cols = Vec::with_capacity(6);
            for k in 0..6 {
                let eval = |d: f64| {
                    let mut t = *target;
                    let mut b = beta;
                    match k {
                        0 => t.p0.x += d,
                        1 => t.p0.y += d,
                        2 => t.v0.x += d,
                        3 => t.v0.y += d,
                        4 => b.re += d,
                        _ => b.im += d,
                    }
                    signal(&t, b)
                };
                let (a, b) = (eval(step)?, eval(-step)?);
                cols.push(
                    a.iter()
                        .zip(&b)
                        .map(|(x, y)| (x - y) / (2.0 * step))
                        .collect::<Vec<C64>>(),
                );
            }
            let p = m * lay.k_r + n;
            let idx = [0, 1, 2, 3, 4 + p, 4 + lay.pairs() + p];
            for a in 0..6 {
                for c in 0..6 {
                    f[(idx[a], idx[c])] += 2.0 / sigma * re_inner(&cols[a], &cols[c]);
                }
            }
        }
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherReport {
    pub f_rho: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub f_eta: DMatrix<f64>,
    /// Bound on E‖p̂ − p0‖² (m²).
    pub crb_p: f64,
    /// Bound on E‖v̂ − v0‖² ((m/s)²).
    pub crb_v: f64,
    /// True when F_η was singular and a pseudo-inverse was used.
    pub rank_deficient: bool,
}

impl FisherReport {
    /// Root bounds in m and m/s.
    pub fn root(&self) -> (f64, f64) {
        (self.crb_p.sqrt(), self.crb_v.sqrt())
    }

    /// 10·log10 of the root bounds.
    pub fn db(&self) -> (f64, f64) {
        let (p, v) = self.root();
        (10.0 * p.log10(), 10.0 * v.log10())
    }
}

/// Inverse (or pseudo-inverse) of a symmetric PSD matrix after Jacobi
/// scaling. Returns the inverse and whether it was rank deficient.
pub fn psd_inverse(f: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = f.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let x = f[(i, i)];
            if x > 0.0 {
                1.0 / x.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut g = f.clone();
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] *= d[i] * d[j];
        }
    }
    let g = 0.5 * (&g + g.transpose());
    let eig = SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e));
    let tol = top * 1e-12 * n as f64;
    let mut deficient = d.contains(&0.0);
    let inv_vals = eig.eigenvalues.map(|e| {
        if e > tol {
            1.0 / e
        } else {
            deficient = true;
            0.0
        }
    });
    let q = &eig.eigenvectors;
    let mut inv = q * DMatrix::from_diagonal(&inv_vals) * q.transpose();
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] *= d[i] * d[j];
        }
    }
    (inv, deficient)
}

/// F_η = Ψᵀ F_ρ Ψ and the location/velocity bounds.
pub fn crb_eta(f_rho: DMatrix<f64>, psi: DMatrix<f64>) -> Result<FisherReport> {
    if f_rho.nrows() != psi.nrows() || psi.ncols() < 4 {
        return Err(Error::LengthMismatch {
            expected: f_rho.nrows(),
            got: psi.nrows(),
        });
    }
    let f_eta = psi.transpose() * &f_rho * &psi;
    let f_eta = 0.5 * (&f_eta + f_eta.transpose());
    let (inv, rank_deficient) = psd_inverse(&f_eta);
    if rank_deficient {
        log::warn!("Fisher information for η is singular; using a pseudo-inverse");
    }
    Ok(FisherReport {
        crb_p: inv[(0, 0)] + inv[(1, 1)],
        crb_v: inv[(2, 2)] + inv[(3, 3)],
        f_rho,
        psi,
        f_eta,
        rank_deficient,
    })
}

/// Bounds for a scenario with the given gains and per-sample noise variance.
pub fn scenario_crb(scn: &Scenario, gains: &ChannelGain, sigma: f64) -> Result<FisherReport> {
    let f = fim_rho(
        &scn.array,
        &scn.pulse,
        &scn.target,
        gains,
        sigma,
        DerivativeForm::Independent,
    )?;
    let psi = jacobian_psi(&scn.array, &scn.target)?;
    crb_eta(f, psi)
}

/// Largest entry-wise discrepancy normalized by sqrt(A_ii·A_jj).
pub fn normalized_discrepancy(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let scale = (a[(i, i)].abs() * a[(j, j)].abs()).sqrt();
            if scale > 0.0 {
                worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / scale);
            } else if b[(i, j)] != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    worst
}

/// A ρ block whose closed form disagrees with the finite-difference FIM.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiscrepancy {
    pub rows: &'static str,
    pub cols: &'static str,
    pub worst: f64,
}

/// Compares a closed-form F_ρ with the finite-difference oracle block by
/// block and lists blocks above `tol`.
pub fn audit_fim(
    analytic: &DMatrix<f64>,
    numeric: &DMatrix<f64>,
    lay: RhoLayout,
    tol: f64,
) -> Vec<BlockDiscrepancy> {
    let p = lay.pairs();
    let blocks: [(&'static str, std::ops::Range<usize>); 5] = [
        ("theta", 0..lay.k_t),
        ("phi", lay.k_t..lay.k_t + lay.k_r),
        ("f", lay.k_t + lay.k_r..lay.k_t + lay.k_r + p),
        ("re_beta", lay.k_t + lay.k_r + p..lay.k_t + lay.k_r + 2 * p),
        ("im_beta", lay.k_t + lay.k_r + 2 * p..lay.dim()),
    ];
    let mut out = Vec::new();
    for (rn, rr) in &blocks {
        for (cn, cr) in &blocks {
            let mut worst = 0.0f64;
            for i in rr.clone() {
                for j in cr.clone() {
                    let scale = (numeric[(i, i)].abs() * numeric[(j, j)].abs()).sqrt();
                    if scale > 0.0 {
                        worst = worst.max((analytic[(i, j)] - numeric[(i, j)]).abs() / scale);
                    }
                }
            }
            if worst > tol {
                out.push(BlockDiscrepancy {
                    rows: rn,
                    cols: cn,
                    worst,
                });
            }
        }
    }
    out
}
