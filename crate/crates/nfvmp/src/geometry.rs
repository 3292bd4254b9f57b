//! Array layout, subarray partition and the geometric maps from target state
//! to angles, Doppler shifts and delays.
//!
//! The transmit array extends toward +x from `d0/2`, the receive array toward
//! −x from `−d0/2`. Subarray references are the first antenna of each
//! subarray.

use crate::{Error, Result, Vec2};
use std::f64::consts::PI;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Antennas per subarray (M).
    pub m_sub: usize,
    pub d_spacing: f64,
    /// Transmit/receive array separation (m).
    pub d0: f64,
    pub lambda: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced arrays.
    pub fn new(n_tx: usize, n_rx: usize, m_sub: usize, lambda: f64, d0: f64) -> Result<Self> {
        let cfg = Self {
            n_tx,
            n_rx,
            m_sub,
            d_spacing: lambda / 2.0,
            d0,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_sub == 0 || self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Config("array sizes must be positive".into()));
        }
        if !self.n_tx.is_multiple_of(self.m_sub) || !self.n_rx.is_multiple_of(self.m_sub) {
            return Err(Error::Config(format!(
                "array sizes {}/{} not divisible by subarray size {}",
                self.n_tx, self.n_rx, self.m_sub
            )));
        }
        if !(self.d_spacing > 0.0 && self.lambda > 0.0 && self.d0 >= 0.0) {
            return Err(Error::Config(
                "spacing and wavelength must be positive, d0 non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn k_t(&self) -> usize {
        self.n_tx / self.m_sub
    }

    pub fn k_r(&self) -> usize {
        self.n_rx / self.m_sub
    }

    pub fn n_pairs(&self) -> usize {
        self.k_t() * self.k_r()
    }

    /// Electrical angle scale χ = 2πd/λ.
    pub fn chi(&self) -> f64 {
        2.0 * PI * self.d_spacing / self.lambda
    }

    pub fn tx_antenna(&self, i: usize) -> Vec2 {
        Vec2::new(self.d0 / 2.0 + i as f64 * self.d_spacing, 0.0)
    }

    pub fn rx_antenna(&self, j: usize) -> Vec2 {
        Vec2::new(-self.d0 / 2.0 - j as f64 * self.d_spacing, 0.0)
    }

    /// Reference position p_m^t of transmit subarray `m`.
    pub fn tx_ref(&self, m: usize) -> Vec2 {
        self.tx_antenna(m * self.m_sub)
    }

    /// Reference position p_n^r of receive subarray `n`.
    pub fn rx_ref(&self, n: usize) -> Vec2 {
        self.rx_antenna(n * self.m_sub)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetState {
    pub p0: Vec2,
    pub v0: Vec2,
}

impl TargetState {
    pub fn new(x0: f64, y0: f64, vx: f64, vy: f64) -> Self {
        Self {
            p0: Vec2::new(x0, y0),
            v0: Vec2::new(vx, vy),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0.y > 0.0) {
            return Err(Error::Config(
                "target must lie in front of the arrays (y0 > 0)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseConfig {
    /// Pulse repetition interval T (s).
    pub pri: f64,
    pub n_pulses: usize,
    pub fc: f64,
    pub bandwidth: f64,
}

impl PulseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pri > 0.0) || self.n_pulses < 2 || !(self.fc > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::Config(
                "pulse config needs pri > 0, n_pulses >= 2, fc > 0, bandwidth > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    pub fn time(&self, l: usize) -> f64 {
        l as f64 * self.pri
    }
}

/// Physical (`*_tilde`) and electrical subarray angles.
#[derive(Clone, Debug, PartialEq)]
pub struct SubarrayAngles {
    pub theta_tilde: Vec<f64>,
    pub phi_tilde: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

fn azimuth(p0: Vec2, p: Vec2) -> f64 {
    ((p0.x - p.x) / (p0.y - p.y)).atan()
}

pub fn subarray_angles(cfg: &ArrayConfig, p0: Vec2) -> Result<SubarrayAngles> {
    if p0.y == 0.0 {
        return Err(Error::TargetInArrayPlane);
    }
    let chi = cfg.chi();
    let theta_tilde: Vec<f64> = (0..cfg.k_t()).map(|m| azimuth(p0, cfg.tx_ref(m))).collect();
    let phi_tilde: Vec<f64> = (0..cfg.k_r()).map(|n| azimuth(p0, cfg.rx_ref(n))).collect();
    Ok(SubarrayAngles {
        theta: theta_tilde.iter().map(|a| chi * a.sin()).collect(),
        phi: phi_tilde.iter().map(|a| chi * a.sin()).collect(),
        theta_tilde,
        phi_tilde,
    })
}

fn range_to(p: Vec2, p0: Vec2, what: &'static str) -> Result<f64> {
    let r = (p - p0).norm();
    if r == 0.0 {
        Err(Error::ZeroRange(what))
    } else {
        Ok(r)
    }
}

/// Unit vectors from the target toward the transmit and receive references,
/// e = (p − p0)/‖p − p0‖.
pub fn unit_vectors(cfg: &ArrayConfig, p0: Vec2, m: usize, n: usize) -> Result<(Vec2, Vec2)> {
    let pt = cfg.tx_ref(m);
    let pr = cfg.rx_ref(n);
    let rt = range_to(pt, p0, "transmit reference")?;
    let rr = range_to(pr, p0, "receive reference")?;
    Ok(((pt - p0) / rt, (pr - p0) / rr))
}

/// Bistatic Doppler shift (Hz) of pair (m, n):
/// f = −(1/λ)·v0ᵀ(e_t + e_r) with target-to-array unit vectors.
pub fn bistatic_doppler(
    cfg: &ArrayConfig,
    target: &TargetState,
    m: usize,
    n: usize,
) -> Result<f64> {
    let (et, er) = unit_vectors(cfg, target.p0, m, n)?;
    Ok(-(et + er).dot(&target.v0) / cfg.lambda)
}

/// Doppler shift between two arbitrary element positions, same convention.
pub fn element_doppler(lambda: f64, target: &TargetState, pt: Vec2, pr: Vec2) -> Result<f64> {
    let rt = range_to(pt, target.p0, "transmit element")?;
    let rr = range_to(pr, target.p0, "receive element")?;
    let s = (pt - target.p0) / rt + (pr - target.p0) / rr;
    Ok(-s.dot(&target.v0) / lambda)
}

pub fn bistatic_delay(cfg: &ArrayConfig, p0: Vec2, m: usize, n: usize) -> Result<f64> {
    let rt = range_to(cfg.tx_ref(m), p0, "transmit reference")?;
    let rr = range_to(cfg.rx_ref(n), p0, "receive reference")?;
    Ok((rt + rr) / SPEED_OF_LIGHT)
}

fn rayleigh(n: usize, d: f64, lambda: f64) -> f64 {
    let a = (n.saturating_sub(1)) as f64 * d;
    2.0 * a * a / lambda
}

/// Full-array Rayleigh distance min over the two arrays.
pub fn rayleigh_distance(cfg: &ArrayConfig) -> f64 {
    rayleigh(cfg.n_tx, cfg.d_spacing, cfg.lambda).min(rayleigh(cfg.n_rx, cfg.d_spacing, cfg.lambda))
}

pub fn subarray_rayleigh(cfg: &ArrayConfig) -> f64 {
    rayleigh(cfg.m_sub, cfg.d_spacing, cfg.lambda)
}

/// Logs when the target sits outside the near-field regime or inside the
/// subarray near field, where the piecewise model degrades.
pub fn check_regime(cfg: &ArrayConfig, target: &TargetState) {
    let r_full = rayleigh_distance(cfg);
    let r_sub = subarray_rayleigh(cfg);
    for m in 0..cfg.k_t() {
        for n in 0..cfg.k_r() {
            let rt = (cfg.tx_ref(m) - target.p0).norm();
            let rr = (cfg.rx_ref(n) - target.p0).norm();
            if rt.min(rr) >= r_full {
                log::warn!("pair ({m},{n}) beyond the full-array Rayleigh distance {r_full:.2} m");
                return;
            }
            if rt.min(rr) <= r_sub {
                log::warn!("pair ({m},{n}) inside the subarray Rayleigh distance {r_sub:.2} m");
                return;
            }
        }
    }
}
