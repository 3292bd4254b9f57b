//! Snapshot synthesis for every transmit/receive subarray pair.

pub mod nfz;

use crate::geometry::{self, ArrayConfig, PulseConfig, TargetState};
use crate::rng;
use crate::{Error, Result, C64};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Transmit power and antenna gains in linear units, plus RCS variance.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarPower {
    pub pt_w: f64,
    pub g_t: f64,
    pub g_r: f64,
    pub sigma_s2: f64,
}

impl RadarPower {
    pub fn from_db(pt_dbm: f64, gt_db: f64, gr_db: f64, sigma_s2: f64) -> Self {
        Self {
            pt_w: 10f64.powf((pt_dbm - 30.0) / 10.0),
            g_t: 10f64.powf(gt_db / 10.0),
            g_r: 10f64.powf(gr_db / 10.0),
            sigma_s2,
        }
    }
}

/// Everything needed to synthesize one coherent processing interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub pulse: PulseConfig,
    pub target: TargetState,
    pub power: RadarPower,
}

impl Scenario {
    /// Desk-scale profile: 64-element arrays, 16-element subarrays, 100 pulses.
    pub fn desk() -> Self {
        let mut s = Self::table2();
        s.array.n_tx = 64;
        s.array.n_rx = 64;
        s.array.m_sub = 16;
        s.pulse.n_pulses = 100;
        s
    }

    /// Full-scale profile of the reference simulation settings.
    pub fn table2() -> Self {
        let pulse = PulseConfig {
            pri: 10e-6,
            n_pulses: 600,
            fc: 28e9,
            bandwidth: 200e6,
        };
        let lambda = pulse.lambda();
        Self {
            array: ArrayConfig {
                n_tx: 256,
                n_rx: 256,
                m_sub: 32,
                d_spacing: lambda / 2.0,
                d0: 1.0,
                lambda,
            },
            pulse,
            target: TargetState::new(15.0, 20.7, 10.0, 10.2),
            power: RadarPower::from_db(30.0, 15.0, 15.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.pulse.validate()?;
        self.target.validate()?;
        if (self.array.lambda - self.pulse.lambda()).abs() > 1e-12 * self.array.lambda {
            return Err(Error::Config(
                "array wavelength disagrees with carrier frequency".into(),
            ));
        }
        Ok(())
    }

    /// Snapshot length M²L.
    pub fn snapshot_len(&self) -> usize {
        self.array.m_sub * self.array.m_sub * self.pulse.n_pulses
    }

    /// Normalized Doppler f̃ = 2πT·f of pair (m, n).
    pub fn normalized_doppler(&self, m: usize, n: usize) -> Result<f64> {
        let f = geometry::bistatic_doppler(&self.array, &self.target, m, n)?;
        Ok(2.0 * PI * self.pulse.pri * f)
    }
}

pub fn steering_tx(theta: f64, m: usize) -> Vec<C64> {
    (0..m)
        .map(|k| C64::from_polar(1.0, k as f64 * theta))
        .collect()
}

pub fn steering_rx(phi: f64, m: usize) -> Vec<C64> {
    steering_tx(phi, m)
}

/// d(f) = [1, e^{−j2πfT}, …, e^{−j2πf(L−1)T}].
pub fn doppler_vec(f: f64, pri: f64, l: usize) -> Vec<C64> {
    (0..l)
        .map(|k| C64::from_polar(1.0, -2.0 * PI * f * pri * k as f64))
        .collect()
}

/// a_r(φ) ⊗ a_t(θ) ⊗ d with d given in phase form e^{−j l f̃}.
pub fn kron_steering(phi: f64, theta: f64, f_norm: f64, m: usize, l: usize) -> Vec<C64> {
    let ar = steering_rx(phi, m);
    let at = steering_tx(theta, m);
    let d: Vec<C64> = (0..l)
        .map(|k| C64::from_polar(1.0, -f_norm * k as f64))
        .collect();
    let mut out = Vec::with_capacity(m * m * l);
    for r in &ar {
        for t in &at {
            let rt = r * t;
            out.extend(d.iter().map(|x| rt * x));
        }
    }
    out
}

/// Per-pair complex amplitudes β_mn and their prior variances ς_mn,
/// stored row-major over (m, n).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGain {
    pub k_t: usize,
    pub k_r: usize,
    pub beta: Vec<C64>,
    pub varsigma: Vec<f64>,
}

impl ChannelGain {
    /// β_mn = sqrt(P_T G_T G_R)·α/(r_t r_r) for a given RCS amplitude α.
    pub fn radar_equation(scn: &Scenario, alpha: C64) -> Result<Self> {
        let cfg = &scn.array;
        let p = &scn.power;
        let amp = (p.pt_w * p.g_t * p.g_r).sqrt();
        let mut beta = Vec::with_capacity(cfg.n_pairs());
        let mut varsigma = Vec::with_capacity(cfg.n_pairs());
        for m in 0..cfg.k_t() {
            for n in 0..cfg.k_r() {
                let rt = (cfg.tx_ref(m) - scn.target.p0).norm();
                let rr = (cfg.rx_ref(n) - scn.target.p0).norm();
                if rt == 0.0 || rr == 0.0 {
                    return Err(Error::ZeroRange("subarray reference"));
                }
                beta.push(alpha * amp / (rt * rr));
                varsigma.push(amp * amp * p.sigma_s2 / (rt * rt * rr * rr));
            }
        }
        Ok(Self {
            k_t: cfg.k_t(),
            k_r: cfg.k_r(),
            beta,
            varsigma,
        })
    }

    /// Swerling-I draw, α ~ CN(0, σ_s²), constant over the interval.
    pub fn swerling(scn: &Scenario, seed: u64) -> Result<Self> {
        let mut g = rng::stream(seed, &[rng::TAG_GAIN]);
        let s = (scn.power.sigma_s2 / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut g);
        let im: f64 = StandardNormal.sample(&mut g);
        Self::radar_equation(scn, C64::new(re * s, im * s))
    }

    /// Gains at the RMS amplitude |α|² = σ_s², used for bounds.
    pub fn nominal(scn: &Scenario) -> Result<Self> {
        Self::radar_equation(scn, C64::new(scn.power.sigma_s2.sqrt(), 0.0))
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.beta[m * self.k_r + n]
    }

    pub fn mean_power(&self) -> f64 {
        self.beta.iter().map(|b| b.norm_sqr()).sum::<f64>() / self.beta.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Per-sample complex noise variance σ.
    pub sigma: f64,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise variance must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma, rng_seed })
    }
}

/// SNR = 10·log10(mean |β|² / σ).
pub fn snr_of(gain: &ChannelGain, noise: &NoiseModel) -> Result<f64> {
    if gain.beta.is_empty() {
        return Err(Error::Insufficient("no subarray pairs".into()));
    }
    let p = gain.mean_power();
    if p == 0.0 {
        return Err(Error::ZeroGain);
    }
    Ok(10.0 * (p / noise.sigma).log10())
}

pub fn set_snr(gain: &ChannelGain, snr_db: f64, rng_seed: u64) -> Result<NoiseModel> {
    if gain.beta.is_empty() {
        return Err(Error::Insufficient("no subarray pairs".into()));
    }
    let p = gain.mean_power();
    if p == 0.0 {
        return Err(Error::ZeroGain);
    }
    NoiseModel::new(p / 10f64.powf(snr_db / 10.0), rng_seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubarraySnapshot {
    pub m: usize,
    pub n: usize,
    pub m_sub: usize,
    pub n_pulses: usize,
    /// Flat index ((i_r·M) + i_t)·L + l.
    pub data: Vec<C64>,
}

impl SubarraySnapshot {
    pub fn new(m: usize, n: usize, m_sub: usize, n_pulses: usize, data: Vec<C64>) -> Result<Self> {
        let expected = m_sub * m_sub * n_pulses;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("non-finite snapshot entry".into()));
        }
        Ok(Self {
            m,
            n,
            m_sub,
            n_pulses,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SynthesisMode {
    /// Piecewise-far-field subarray model.
    #[default]
    SubarrayExact,
    /// Exact per-antenna spherical phases, regrouped into subarray snapshots.
    AntennaExact,
}

impl std::str::FromStr for SynthesisMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subarray-exact" => Ok(Self::SubarrayExact),
            "antenna-exact" => Ok(Self::AntennaExact),
            _ => Err(Error::Config(format!("unknown synthesis mode {s:?}"))),
        }
    }
}

fn check_aliasing(scn: &Scenario) -> Result<()> {
    for m in 0..scn.array.k_t() {
        for n in 0..scn.array.k_r() {
            let f = scn.normalized_doppler(m, n)?;
            if !(-PI..PI).contains(&f) {
                return Err(Error::DopplerAliasing { m, n, value: f });
            }
        }
    }
    Ok(())
}

/// Noise-free snapshot β·μ of pair (m, n).
pub fn mean_snapshot(
    scn: &Scenario,
    gain: &ChannelGain,
    mode: SynthesisMode,
    m: usize,
    n: usize,
) -> Result<Vec<C64>> {
    let cfg = &scn.array;
    let ms = cfg.m_sub;
    let l = scn.pulse.n_pulses;
    let beta = gain.get(m, n);
    match mode {
        SynthesisMode::SubarrayExact => {
            let ang = geometry::subarray_angles(cfg, scn.target.p0)?;
            let f = scn.normalized_doppler(m, n)?;
            if !(-PI..PI).contains(&f) {
                return Err(Error::DopplerAliasing { m, n, value: f });
            }
            let mut v = kron_steering(ang.phi[n], ang.theta[m], f, ms, l);
            v.iter_mut().for_each(|x| *x *= beta);
            Ok(v)
        }
        SynthesisMode::AntennaExact => {
            // The receive array grows toward −x, so its far-field phase
            // progression runs opposite to the transmit side. Receive elements
            // are therefore listed outermost-first; the constant phase this
            // introduces folds into the pair gain.
            let p0 = scn.target.p0;
            let k0 = 2.0 * PI / cfg.lambda;
            let r_ref = (cfg.tx_ref(m) - p0).norm() + (cfg.rx_ref(n) - p0).norm();
            let mut out = Vec::with_capacity(ms * ms * l);
            for ir in 0..ms {
                let pr = cfg.rx_antenna(n * ms + (ms - 1 - ir));
                for it in 0..ms {
                    let pt = cfg.tx_antenna(m * ms + it);
                    let r = (pt - p0).norm() + (pr - p0).norm();
                    let f = geometry::element_doppler(cfg.lambda, &scn.target, pt, pr)?;
                    for k in 0..l {
                        let t = scn.pulse.time(k);
                        // exp(−j(2π/λ)Φ) with Φ = range sum + λ·t·f
                        let phase = -k0 * (r - r_ref) - 2.0 * PI * f * t;
                        out.push(beta * C64::from_polar(1.0, phase));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// One noisy snapshot. The noise stream depends only on (seed, m, n).
pub fn synthesize_snapshot(
    scn: &Scenario,
    gain: &ChannelGain,
    noise: &NoiseModel,
    mode: SynthesisMode,
    m: usize,
    n: usize,
) -> Result<SubarraySnapshot> {
    let mut data = mean_snapshot(scn, gain, mode, m, n)?;
    let mut g = rng::stream(noise.rng_seed, &[rng::TAG_NOISE, m as u64, n as u64]);
    let s = (noise.sigma / 2.0).sqrt();
    for z in data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut g);
        let im: f64 = StandardNormal.sample(&mut g);
        *z += C64::new(re * s, im * s);
    }
    SubarraySnapshot::new(m, n, scn.array.m_sub, scn.pulse.n_pulses, data)
}

/// All K_t·K_r snapshots in row-major (m, n) order.
pub fn synthesize_all(
    scn: &Scenario,
    gain: &ChannelGain,
    noise: &NoiseModel,
    mode: SynthesisMode,
) -> Result<Vec<SubarraySnapshot>> {
    check_aliasing(scn)?;
    let cfg = &scn.array;
    let mut out = Vec::with_capacity(cfg.n_pairs());
    for m in 0..cfg.k_t() {
        for n in 0..cfg.k_r() {
            out.push(synthesize_snapshot(scn, gain, noise, mode, m, n)?);
        }
    }
    Ok(out)
}
