//! Quick oracle checks runnable from the command line.

use super::{pipeline, run_methods, synthesize_trial, ExperimentConfig, Method};
use crate::circular::{a_inverse, bessel_ratio, wrap};
use crate::crb::{self, DerivativeForm};
use crate::subvbi::{run_cavi, CaviOptions, Priors};
use crate::wavefield::{self, ChannelGain, Scenario, SubarraySnapshot, SynthesisMode};
use crate::{rng, C64};
use rand::Rng;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Brute-force maximizer of |μ(θ,φ,f̃)ᴴz|² on an n³ grid over [−π, π)³.
pub fn map_grid(s: &SubarraySnapshot, n: usize) -> [f64; 3] {
    let (m, l) = (s.m_sub, s.n_pulses);
    let ang = |k: usize| -PI + 2.0 * PI * k as f64 / n as f64;
    // e^{−j i x} for every grid angle and element index
    let table: Vec<C64> = (0..n)
        .flat_map(|k| (0..m).map(move |i| C64::from_polar(1.0, -(i as f64) * ang(k))))
        .collect();
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    let mut rows = vec![C64::new(0.0, 0.0); m * n];
    for kf in 0..n {
        let f = ang(kf);
        let y: Vec<C64> = s
            .data
            .chunks_exact(l)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, z)| z * C64::from_polar(1.0, i as f64 * f))
                    .sum()
            })
            .collect();
        for kt in 0..n {
            let at = &table[kt * m..(kt + 1) * m];
            for ir in 0..m {
                rows[kt * m + ir] = (0..m).map(|it| y[ir * m + it] * at[it]).sum();
            }
        }
        for kt in 0..n {
            let r = &rows[kt * m..(kt + 1) * m];
            for kp in 0..n {
                let ar = &table[kp * m..(kp + 1) * m];
                let v: C64 = r.iter().zip(ar).map(|(a, b)| a * b).sum();
                let p = v.norm_sqr();
                if p > best.0 {
                    best = (p, [ang(kt), ang(kp), f]);
                }
            }
        }
    }
    best.1
}

fn vm_toolkit() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let k = 50.0 * i as f64 / 1000.0;
        let r = bessel_ratio(1, k);
        let back = a_inverse(r)
            .map(|x| (x - k).abs() / k.max(1.0))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(back);
    }
    check(
        "a_inverse(A(k)) = k",
        worst < 1e-8,
        format!("worst relative error {worst:.2e}"),
    )
}

fn cavi_vs_grid(seed: u64, trials: usize) -> Check {
    let cell = 2.0 * PI / 64.0;
    let mut hits = 0;
    for t in 0..trials {
        let mut g = rng::stream(seed, &[99, t as u64]);
        let theta = g.random_range(-2.5..2.5);
        let phi = g.random_range(-2.5..2.5);
        let f = g.random_range(-2.5..2.5);
        let beta = C64::from_polar(1.0, g.random_range(0.0..2.0 * PI));
        let mut data = wavefield::kron_steering(phi, theta, f, 4, 8);
        let sd = (0.01f64 / 2.0).sqrt();
        for z in data.iter_mut() {
            let (a, b): (f64, f64) = (
                g.sample(rand_distr::StandardNormal),
                g.sample(rand_distr::StandardNormal),
            );
            *z = *z * beta + C64::new(a, b) * sd;
        }
        let Ok(s) = SubarraySnapshot::new(0, 0, 4, 8, data) else {
            continue;
        };
        let Ok(post) = run_cavi(&s, &Priors::default(), &CaviOptions::default()) else {
            continue;
        };
        let map = map_grid(&s, 64);
        let got = [post.eta_theta.mu(), post.eta_phi.mu(), post.eta_f.mu()];
        if got.iter().zip(&map).all(|(a, b)| wrap(a - b).abs() <= cell) {
            hits += 1;
        }
    }
    let ok = hits as f64 >= 0.95 * trials as f64;
    check(
        "CAVI means match grid MAP",
        ok,
        format!("{hits}/{trials} within one cell"),
    )
}

fn fim_oracle() -> Check {
    let mut scn = Scenario::desk();
    scn.array.m_sub = 4;
    scn.array.n_tx = 8;
    scn.array.n_rx = 8;
    scn.pulse.n_pulses = 8;
    let res = (|| -> crate::Result<(f64, f64)> {
        let g = ChannelGain::nominal(&scn)?;
        let s = g.mean_power();
        let a = crb::fim_rho(
            &scn.array,
            &scn.pulse,
            &scn.target,
            &g,
            s,
            DerivativeForm::Independent,
        )?;
        let n = crb::fim_rho_numeric(&scn.array, &scn.pulse, &scn.target, &g, s, 1e-6)?;
        let pa = crb::jacobian_psi(&scn.array, &scn.target)?;
        let pn = crb::jacobian_psi_numeric(&scn.array, &scn.target, 1e-5)?;
        let mut psi_err: f64 = 0.0;
        for i in 0..pa.nrows() {
            let scale = pa.row(i).abs().max().max(f64::MIN_POSITIVE);
            for j in 0..pa.ncols() {
                psi_err = psi_err.max((pa[(i, j)] - pn[(i, j)]).abs() / scale);
            }
        }
        Ok((crb::normalized_discrepancy(&n, &a), psi_err))
    })();
    match res {
        Ok((f, p)) => check(
            "Fisher information vs finite differences",
            f < 1e-4 && p < 1e-6,
            format!("F_rho {f:.2e}, Psi {p:.2e}"),
        ),
        Err(e) => check(
            "Fisher information vs finite differences",
            false,
            e.to_string(),
        ),
    }
}

fn noiseless_round_trip(seed: u64) -> Check {
    let mut cfg = ExperimentConfig::desk();
    cfg.delay_std = 0.0;
    cfg.methods = vec![Method::VmpSystem, Method::VmpSubarray];
    let scn = cfg.scenario.clone();
    let res = synthesize_trial(&scn, 120.0, 0.0, SynthesisMode::SubarrayExact, seed)
        .map(|d| run_methods(&cfg, &scn, &d, seed));
    let mut detail = Vec::new();
    let mut ok = true;
    match res {
        Ok(rows) => {
            for (m, r) in rows {
                match r {
                    Ok(e) => {
                        let (ep, ev) = (
                            (e.p_hat - scn.target.p0).norm(),
                            (e.v_hat - scn.target.v0).norm(),
                        );
                        ok &= ep < 1e-2 && ev < 1e-2;
                        detail.push(format!("{m} err_p {ep:.1e} err_v {ev:.1e}"));
                    }
                    Err(e) => {
                        ok = false;
                        detail.push(format!("{m} failed: {e}"));
                    }
                }
            }
        }
        Err(e) => {
            ok = false;
            detail.push(e.to_string());
        }
    }
    check("noiseless end-to-end", ok, detail.join("; "))
}

fn parallel_matches_sequential(seed: u64) -> Check {
    let scn = Scenario::desk();
    let res = (|| -> crate::Result<bool> {
        let d = synthesize_trial(&scn, 10.0, 0.0, SynthesisMode::SubarrayExact, seed)?;
        let opts = pipeline::VmpOptions::default();
        let par = pipeline::stage1(&d.snapshots, &scn.array, &opts)?;
        let seq: Vec<_> = d
            .snapshots
            .iter()
            .map(|s| run_cavi(s, &opts.priors, &opts.cavi).ok())
            .collect();
        Ok(par.posteriors == seq)
    })();
    let ok = matches!(res, Ok(true));
    check("parallel stage 1 equals sequential", ok, format!("{res:?}"))
}

fn bound_anchor() -> Check {
    let scn = Scenario::desk();
    let res = (|| -> crate::Result<(f64, f64)> {
        let g = ChannelGain::nominal(&scn)?;
        let lo = crb::scenario_crb(&scn, &g, wavefield::set_snr(&g, 0.0, 0)?.sigma)?.root();
        let hi = crb::scenario_crb(&scn, &g, wavefield::set_snr(&g, 10.0, 0)?.sigma)?.root();
        Ok((lo.0 / hi.0, lo.1 / hi.1))
    })();
    let ok = matches!(res, Ok((a, b)) if (a - 10f64.sqrt()).abs() < 1e-6 && (b - 10f64.sqrt()).abs() < 1e-6);
    check("bounds scale as 1/sqrt(SNR)", ok, format!("{res:?}"))
}

/// Runs every check; the whole suite takes a few seconds.
pub fn run(seed: u64) -> Vec<Check> {
    vec![
        vm_toolkit(),
        cavi_vs_grid(seed, 20),
        fim_oracle(),
        bound_anchor(),
        parallel_matches_sequential(seed),
        noiseless_round_trip(seed),
    ]
}
