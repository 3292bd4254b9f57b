//! Reference estimators: concentrated maximum likelihood, a grid search with
//! 2D MUSIC for velocity, and unweighted averaging of per-pair closed forms.

use crate::fusion::{DistributedLocation, DistributedVelocity};
use crate::geometry::{self, ArrayConfig, PulseConfig, TargetState};
use crate::wavefield::SubarraySnapshot;
use crate::{Error, Result, Vec2, C64};
use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen, Vector4};
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineResult {
    pub p_hat: Vec2,
    pub v_hat: Vec2,
    pub objective: f64,
    /// Iterations (ML) or grid points evaluated (grid search).
    pub iters: usize,
    pub runtime_s: f64,
}

/// Pulse-domain sums Σ_l z·e^{jlf̃} for every (i_r, i_t) of one snapshot.
fn demodulate(s: &SubarraySnapshot, f_norm: f64) -> Vec<C64> {
    let rot: Vec<C64> = (0..s.n_pulses)
        .map(|l| C64::from_polar(1.0, l as f64 * f_norm))
        .collect();
    s.data
        .chunks_exact(s.n_pulses)
        .map(|row| row.iter().zip(&rot).map(|(a, b)| a * b).sum())
        .collect()
}

/// |a_r(φ)ᴴ Y a_t(θ)*|² for an M×M demodulated block Y.
fn beam_power(y: &[C64], m: usize, theta: f64, phi: f64) -> f64 {
    let at: Vec<C64> = (0..m)
        .map(|k| C64::from_polar(1.0, -(k as f64) * theta))
        .collect();
    let mut acc = C64::new(0.0, 0.0);
    for ir in 0..m {
        let row = &y[ir * m..(ir + 1) * m];
        let inner: C64 = row.iter().zip(&at).map(|(a, b)| a * b).sum();
        acc += inner * C64::from_polar(1.0, -(ir as f64) * phi);
    }
    acc.norm_sqr()
}

fn check_snapshots(
    snaps: &[SubarraySnapshot],
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
) -> Result<()> {
    if snaps.len() != cfg.n_pairs() {
        return Err(Error::LengthMismatch {
            expected: cfg.n_pairs(),
            got: snaps.len(),
        });
    }
    if snaps
        .iter()
        .any(|s| s.m_sub != cfg.m_sub || s.n_pulses != pulse.n_pulses)
    {
        return Err(Error::Config(
            "snapshot dimensions disagree with the configuration".into(),
        ));
    }
    Ok(())
}

/// Negative concentrated log-likelihood up to constants, normalized by Σ‖z‖²:
/// −Σ |μ_mnᴴ z_mn|² / (‖μ_mn‖² Σ‖z‖²).
pub fn ml_objective(
    snaps: &[SubarraySnapshot],
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    p: Vec2,
    v: Vec2,
) -> Result<f64> {
    let target = TargetState { p0: p, v0: v };
    let ang = geometry::subarray_angles(cfg, p)?;
    let total: f64 = snaps.iter().map(|s| s.norm_sqr()).sum();
    let norm_mu = (cfg.m_sub * cfg.m_sub * pulse.n_pulses) as f64;
    let mut acc = 0.0;
    for s in snaps {
        let f = 2.0 * PI * pulse.pri * geometry::bistatic_doppler(cfg, &target, s.m, s.n)?;
        let y = demodulate(s, f);
        acc += beam_power(&y, cfg.m_sub, ang.theta[s.m], ang.phi[s.n]);
    }
    Ok(-acc / (norm_mu * total.max(f64::MIN_POSITIVE)))
}

/// Step rule of [`ml_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MlSolver {
    /// Steepest descent with a doubling/halving step length.
    Gradient,
    /// Gradient scaled by an inverse finite-difference Hessian.
    Newton,
}

impl std::str::FromStr for MlSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Self::Gradient),
            "newton" => Ok(Self::Newton),
            _ => Err(Error::Config(format!("unknown ml solver {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlOptions {
    pub solver: MlSolver,
    pub max_iters: usize,
    /// Central-difference steps for position (m) and velocity (m/s).
    pub h_p: f64,
    pub h_v: f64,
    /// Relative objective decrease (gradient) or Newton decrement (newton)
    /// below which iteration stops.
    pub tol: f64,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            solver: MlSolver::Gradient,
            max_iters: 200,
            h_p: 1e-5,
            h_v: 1e-4,
            tol: 1e-12,
        }
    }
}

/// Minimizes the concentrated ML objective from `init` using
/// central-difference derivatives and Armijo backtracking.
pub fn ml_estimate(
    snaps: &[SubarraySnapshot],
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    init: (Vec2, Vec2),
    opts: &MlOptions,
) -> Result<BaselineResult> {
    check_snapshots(snaps, cfg, pulse)?;
    let start = Instant::now();
    let eval = |x: &Vector4<f64>| {
        ml_objective(
            snaps,
            cfg,
            pulse,
            Vec2::new(x[0], x[1]),
            Vec2::new(x[2], x[3]),
        )
    };
    let h = Vector4::new(opts.h_p, opts.h_p, opts.h_v, opts.h_v);
    let x0 = Vector4::new(init.0.x, init.0.y, init.1.x, init.1.y);
    let (x, fx, iters) = match opts.solver {
        MlSolver::Gradient => gradient_descent(&eval, x0, &h, opts)?,
        MlSolver::Newton => newton_descent(&eval, x0, &h, opts)?,
    };
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            stage: "ml",
            iter: iters,
        });
    }
    Ok(BaselineResult {
        p_hat: Vec2::new(x[0], x[1]),
        v_hat: Vec2::new(x[2], x[3]),
        objective: fx,
        iters,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

type Solution = (Vector4<f64>, f64, usize);

fn gradient<F>(eval: &F, x: &Vector4<f64>, h: &Vector4<f64>, it: usize) -> Result<Vector4<f64>>
where
    F: Fn(&Vector4<f64>) -> Result<f64>,
{
    let mut g = Vector4::zeros();
    for k in 0..4 {
        let e = Vector4::ith(k, h[k]);
        g[k] = (eval(&(x + e))? - eval(&(x - e))?) / (2.0 * h[k]);
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite {
            stage: "ml gradient",
            iter: it,
        })
    }
}

fn gradient_descent<F>(
    eval: &F,
    mut x: Vector4<f64>,
    h: &Vector4<f64>,
    opts: &MlOptions,
) -> Result<Solution>
where
    F: Fn(&Vector4<f64>) -> Result<f64>,
{
    let mut fx = eval(&x)?;
    let mut t = f64::NAN;
    let mut iters = 0;
    for it in 1..=opts.max_iters {
        iters = it;
        let g = gradient(eval, &x, h, it)?;
        let gn2 = g.norm_squared();
        if gn2 == 0.0 {
            break;
        }
        if t.is_nan() {
            // first trial step moves about one centimetre
            t = 1e-2 / gn2.sqrt();
        }
        let mut accepted = false;
        for _ in 0..50 {
            let xn = x - g * t;
            let fnew = eval(&xn).unwrap_or(f64::INFINITY);
            if fnew <= fx - 1e-4 * t * gn2 {
                let gain = fx - fnew;
                x = xn;
                fx = fnew;
                accepted = true;
                t *= 2.0;
                if gain <= opts.tol * fx.abs() {
                    return Ok((x, fx, iters));
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, fx, iters))
}

fn newton_descent<F>(
    eval: &F,
    mut x: Vector4<f64>,
    h: &Vector4<f64>,
    opts: &MlOptions,
) -> Result<Solution>
where
    F: Fn(&Vector4<f64>) -> Result<f64>,
{
    let mut fx = eval(&x)?;
    let mut iters = 0;
    for it in 1..=opts.max_iters {
        iters = it;
        let g = gradient(eval, &x, h, it)?;
        let hess = hessian(eval, &x, fx, &(h * 10.0))?;
        if !hess.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                stage: "ml hessian",
                iter: it,
            });
        }
        let eig = SymmetricEigen::new(hess);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            break;
        }
        let floor = top * 1e-10;
        let inv = Vector4::from_iterator(eig.eigenvalues.iter().map(|v| 1.0 / v.abs().max(floor)));
        let d =
            -(eig.eigenvectors * Matrix4::from_diagonal(&inv) * eig.eigenvectors.transpose() * g);
        let slope = d.dot(&g);
        if -0.5 * slope <= opts.tol * fx.abs() {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let xn = x + d * t;
            let fnew = eval(&xn).unwrap_or(f64::INFINITY);
            if fnew <= fx + 1e-4 * t * slope {
                x = xn;
                fx = fnew;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, fx, iters))
}

/// Central-difference Hessian with step `h`.
fn hessian<F>(eval: &F, x: &Vector4<f64>, fx: f64, h: &Vector4<f64>) -> Result<Matrix4<f64>>
where
    F: Fn(&Vector4<f64>) -> Result<f64>,
{
    let e = |k: usize| Vector4::ith(k, h[k]);
    let mut hess = Matrix4::zeros();
    for i in 0..4 {
        hess[(i, i)] = (eval(&(x + e(i)))? - 2.0 * fx + eval(&(x - e(i)))?) / (h[i] * h[i]);
        for j in 0..i {
            let (di, dj) = (e(i), e(j));
            let v = (eval(&(x + di + dj))? - eval(&(x + di - dj))? - eval(&(x - di + dj))?
                + eval(&(x - di - dj))?)
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Regular 2D grid: `center + offset + step·(i, j)` for |i|, |j| ≤ half/step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub center: Vec2,
    pub half_width: f64,
    pub step: f64,
}

impl Grid2D {
    pub fn points(&self) -> Result<Vec<Vec2>> {
        if !(self.step > 0.0) || !(self.half_width >= 0.0) {
            return Err(Error::EmptyGrid);
        }
        let k = (self.half_width / self.step).round() as i64;
        let mut out = Vec::with_capacity(((2 * k + 1) * (2 * k + 1)) as usize);
        for i in -k..=k {
            for j in -k..=k {
                out.push(self.center + Vec2::new(i as f64, j as f64) * self.step);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MusicGrids {
    pub location: Grid2D,
    pub velocity: Grid2D,
}

/// Normalized Doppler of every pair from the non-coherent slow-time FFT peak.
fn doppler_peaks(snaps: &[SubarraySnapshot], l: usize) -> Vec<f64> {
    let nf = 4 * l;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(nf);
    let mut buf = vec![C64::new(0.0, 0.0); nf];
    snaps
        .iter()
        .map(|s| {
            let mut power = vec![0.0; nf];
            for row in s.data.chunks_exact(l) {
                buf[..l].copy_from_slice(row);
                buf[l..].iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
                ifft.process(&mut buf);
                for (p, c) in power.iter_mut().zip(&buf) {
                    *p += c.norm_sqr();
                }
            }
            let best = power
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            crate::circular::wrap(2.0 * PI * best as f64 / nf as f64)
        })
        .collect()
}

/// Stage 1 of the grid method: location maximizing the non-coherent
/// beamforming power with Doppler fixed at each pair's FFT peak.
pub fn grid_location(
    snaps: &[SubarraySnapshot],
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    grid: &Grid2D,
) -> Result<(Vec2, f64, usize)> {
    check_snapshots(snaps, cfg, pulse)?;
    let peaks = doppler_peaks(snaps, pulse.n_pulses);
    let blocks: Vec<Vec<C64>> = snaps
        .iter()
        .zip(&peaks)
        .map(|(s, &f)| demodulate(s, f))
        .collect();
    let pts = grid.points()?;
    let mut best = (Vec2::zeros(), f64::NEG_INFINITY);
    for &p in &pts {
        let Ok(ang) = geometry::subarray_angles(cfg, p) else {
            continue;
        };
        let power: f64 = snaps
            .iter()
            .zip(&blocks)
            .map(|(s, y)| beam_power(y, cfg.m_sub, ang.theta[s.m], ang.phi[s.n]))
            .sum();
        if power > best.1 {
            best = (p, power);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::EmptyGrid);
    }
    Ok((best.0, best.1, pts.len()))
}

/// Principal eigenvector of the forward-smoothed slow-time covariance of
/// the data beamformed toward `p`.
fn signal_subspace(
    s: &SubarraySnapshot,
    cfg: &ArrayConfig,
    theta: f64,
    phi: f64,
    w: usize,
) -> DVector<C64> {
    let (m, l) = (cfg.m_sub, s.n_pulses);
    let mut y = vec![C64::new(0.0, 0.0); l];
    for ir in 0..m {
        for it in 0..m {
            let c = C64::from_polar(1.0, -(ir as f64 * phi + it as f64 * theta));
            let row = &s.data[(ir * m + it) * l..(ir * m + it + 1) * l];
            for (yk, zk) in y.iter_mut().zip(row) {
                *yk += c * zk;
            }
        }
    }
    let mut r = DMatrix::<C64>::zeros(w, w);
    for start in 0..=l - w {
        let seg = DVector::from_column_slice(&y[start..start + w]);
        r += &seg * seg.adjoint();
    }
    let eig = r.symmetric_eigen();
    let best = eig.eigenvalues.imax();
    eig.eigenvectors.column(best).into_owned()
}

/// Grid location followed by a MUSIC scan over velocity.
pub fn grid_music(
    snaps: &[SubarraySnapshot],
    cfg: &ArrayConfig,
    pulse: &PulseConfig,
    grids: &MusicGrids,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let (p_hat, _, n_loc) = grid_location(snaps, cfg, pulse, &grids.location)?;
    let ang = geometry::subarray_angles(cfg, p_hat)?;
    let w = (pulse.n_pulses / 2).max(1);
    let subspaces: Vec<DVector<C64>> = snaps
        .iter()
        .map(|s| signal_subspace(s, cfg, ang.theta[s.m], ang.phi[s.n], w))
        .collect();
    let vpts = grids.velocity.points()?;
    let mut best = (Vec2::zeros(), f64::INFINITY);
    for &v in &vpts {
        let target = TargetState { p0: p_hat, v0: v };
        let mut cost = 0.0;
        for (s, u) in snaps.iter().zip(&subspaces) {
            let f = 2.0 * PI * pulse.pri * geometry::bistatic_doppler(cfg, &target, s.m, s.n)?;
            let proj: C64 = u
                .iter()
                .enumerate()
                .map(|(k, uk)| uk.conj() * C64::from_polar(1.0, -(k as f64) * f))
                .sum();
            cost += w as f64 - proj.norm_sqr();
        }
        if cost < best.1 {
            best = (v, cost);
        }
    }
    Ok(BaselineResult {
        p_hat,
        v_hat: best.0,
        objective: best.1,
        iters: n_loc + vpts.len(),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Unweighted means of the per-pair locations and per-configuration
/// velocities.
pub fn subarray_average(
    loc: &DistributedLocation,
    vel: &DistributedVelocity,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let mean = |v: Vec<Vec2>| -> Result<Vec2> {
        if v.is_empty() {
            return Err(Error::Insufficient("no per-pair estimates".into()));
        }
        Ok(v.iter().sum::<Vec2>() / v.len() as f64)
    };
    let p_hat = mean(loc.closed_form.iter().flatten().copied().collect())?;
    let v_hat = mean(vel.per_config.iter().flatten().map(|g| g.mean).collect())?;
    Ok(BaselineResult {
        p_hat,
        v_hat,
        objective: 0.0,
        iters: loc.per_pair.len(),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_centered() {
        let g = Grid2D {
            center: Vec2::new(1.0, 2.0),
            half_width: 0.2,
            step: 0.1,
        };
        let p = g.points().unwrap();
        assert_eq!(p.len(), 25);
        assert!((p[12] - Vec2::new(1.0, 2.0)).norm() < 1e-15);
        let bad = Grid2D { step: 0.0, ..g };
        assert!(matches!(bad.points(), Err(Error::EmptyGrid)));
    }
}
