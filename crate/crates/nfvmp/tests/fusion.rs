use nfvmp::fusion::*;
use nfvmp::geometry::{bistatic_delay, subarray_angles};
use nfvmp::subvbi::{run_cavi, CaviOptions, Priors};
use nfvmp::wavefield::{synthesize_all, ChannelGain, NoiseModel, Scenario, SynthesisMode};

fn messages(scn: &Scenario, sigma: f64, seed: u64) -> AngularMessageSet {
    let g = ChannelGain::nominal(scn).unwrap();
    let noise = NoiseModel::new(sigma * g.mean_power(), seed).unwrap();
    let snaps = synthesize_all(scn, &g, &noise, SynthesisMode::SubarrayExact).unwrap();
    let opts = CaviOptions {
        max_iters: 200,
        ..CaviOptions::default()
    };
    let post: Vec<_> = snaps
        .iter()
        .map(|s| Some(run_cavi(s, &Priors::default(), &opts).unwrap()))
        .collect();
    build_messages(&post, scn.array.k_t(), scn.array.k_r(), &Priors::default()).unwrap()
}

#[test]
fn noiseless_pipeline_recovers_state() {
    let scn = Scenario::desk();
    let msgs = messages(&scn, 1e-12, 1);
    assert!(msgs.used.iter().all(|&u| u));
    let cfg = &scn.array;
    let init = default_location_init(&msgs, cfg).unwrap();
    let loc = centralized_location(&msgs, cfg, init, &AscentOptions::default()).unwrap();
    eprintln!(
        "init {init:?} loc {:?} cond {}",
        loc.estimate.mean, loc.condition
    );
    assert!((loc.estimate.mean - scn.target.p0).norm() < 1e-3);
    let vel = centralized_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        loc.estimate.mean,
        &VelocityOptions::default(),
    )
    .unwrap();
    eprintln!("vel {:?}", vel.estimate.mean);
    assert!((vel.estimate.mean - scn.target.v0).norm() < 1e-2);
    let tau: Vec<f64> = (0..cfg.k_t())
        .flat_map(|m| (0..cfg.k_r()).map(move |n| (m, n)))
        .map(|(m, n)| bistatic_delay(cfg, scn.target.p0, m, n).unwrap())
        .collect();
    let d = distributed_location(&msgs, cfg, &tau).unwrap();
    eprintln!("dist {:?}", d.fused.mean);
    assert!((d.fused.mean - scn.target.p0).norm() < 1e-3);
    let dv = distributed_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        d.fused.mean,
        &PairConfigSet::adjacent(4, 4),
        &VelocityOptions::default(),
    )
    .unwrap();
    eprintln!("dvel {:?}", dv.fused.mean);
    assert!((dv.fused.mean - scn.target.v0).norm() < 1e-2);
}

#[test]
fn noisy_messages_cover_true_angles() {
    let scn = Scenario::desk();
    let ang = subarray_angles(&scn.array, scn.target.p0).unwrap();
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..10 {
        let msgs = messages(&scn, 0.1, 100 + seed);
        for m in 0..4 {
            let t = msgs.theta_msgs[m];
            total += 1;
            if (t.mu() - ang.theta[m]).abs() < 3.0 * t.std() {
                inside += 1;
            }
        }
    }
    eprintln!("coverage {inside}/{total}");
    // mean-field posteriors are overconfident by roughly sqrt(Σk²/Σ(k−k̄)²)
    assert!(inside as f64 >= 0.75 * total as f64);
}

/// Messages whose means are the true angles and Doppler phases.
fn perfect(scn: &Scenario, kappa: f64) -> AngularMessageSet {
    use nfvmp::circular::VonMisesParam;
    let cfg = &scn.array;
    let ang = subarray_angles(cfg, scn.target.p0).unwrap();
    let (kt, kr) = (cfg.k_t(), cfg.k_r());
    AngularMessageSet {
        k_t: kt,
        k_r: kr,
        theta_msgs: ang
            .theta
            .iter()
            .map(|&t| VonMisesParam::from_polar(kappa, t))
            .collect(),
        phi_msgs: ang
            .phi
            .iter()
            .map(|&p| VonMisesParam::from_polar(kappa, p))
            .collect(),
        doppler_msgs: (0..kt)
            .flat_map(|m| (0..kr).map(move |n| (m, n)))
            .map(|(m, n)| VonMisesParam::from_polar(kappa, scn.normalized_doppler(m, n).unwrap()))
            .collect(),
        used: vec![true; kt * kr],
    }
}

fn true_delays(scn: &Scenario) -> Vec<f64> {
    let cfg = &scn.array;
    (0..cfg.k_t())
        .flat_map(|m| (0..cfg.k_r()).map(move |n| (m, n)))
        .map(|(m, n)| bistatic_delay(cfg, scn.target.p0, m, n).unwrap())
        .collect()
}

#[test]
fn perfect_messages_give_the_truth() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = perfect(&scn, 1e6);
    let init = scn.target.p0 + nfvmp::Vec2::new(0.3, -0.2);
    let loc = centralized_location(&msgs, cfg, init, &AscentOptions::default()).unwrap();
    assert!((loc.estimate.mean - scn.target.p0).norm() < 1e-3);
    let vel = centralized_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        scn.target.p0,
        &VelocityOptions::default(),
    )
    .unwrap();
    assert!((vel.estimate.mean - scn.target.v0).norm() < 1e-3);
}

#[test]
fn symmetric_target_is_centered() {
    let mut scn = Scenario::desk();
    scn.target.p0 = nfvmp::Vec2::new(0.0, 12.0);
    let cfg = &scn.array;
    let msgs = perfect(&scn, 50.0);
    let init = default_location_init(&msgs, cfg).unwrap();
    let loc = centralized_location(&msgs, cfg, init, &AscentOptions::default()).unwrap();
    assert!(
        loc.estimate.mean.x.abs() < loc.estimate.std().x.max(1e-9),
        "{:?}",
        loc.estimate
    );
}

#[test]
fn single_pair_location_is_ill_conditioned() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let mut msgs = perfect(&scn, 100.0);
    msgs.k_t = 1;
    msgs.k_r = 1;
    msgs.theta_msgs.truncate(1);
    msgs.phi_msgs.truncate(1);
    let all = perfect(&scn, 100.0);
    let one = centralized_location(&msgs, cfg, scn.target.p0, &AscentOptions::default()).unwrap();
    let many = centralized_location(&all, cfg, scn.target.p0, &AscentOptions::default()).unwrap();
    assert!(one.condition > 100.0, "{}", one.condition);
    assert!(one.condition > many.condition);
}

#[test]
fn scaling_concentrations_keeps_the_maximizers() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = messages(&scn, 0.1, 7);
    let init = default_location_init(&msgs, cfg).unwrap();
    let opts = AscentOptions::default();
    let base = centralized_location(&msgs, cfg, init, &opts).unwrap();
    let vbase = centralized_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        base.estimate.mean,
        &VelocityOptions::default(),
    )
    .unwrap();
    for c in [0.25, 4.0, 37.0] {
        let s = msgs.scaled(c);
        let loc = centralized_location(&s, cfg, init, &opts).unwrap();
        assert!((loc.estimate.mean - base.estimate.mean).norm() < 1e-8);
        assert!(
            (loc.estimate.cov * c - base.estimate.cov).abs().max()
                < 1e-6 * base.estimate.cov.abs().max()
        );
        let v = centralized_velocity(
            &s,
            cfg,
            scn.pulse.pri,
            base.estimate.mean,
            &VelocityOptions::default(),
        )
        .unwrap();
        assert!((v.estimate.mean - vbase.estimate.mean).norm() < 1e-8);
        assert!(
            (v.estimate.cov * c - vbase.estimate.cov).abs().max()
                < 1e-6 * vbase.estimate.cov.abs().max()
        );
    }
}

#[test]
fn exact_delays_invert_to_the_truth() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = perfect(&scn, 100.0);
    let tau = true_delays(&scn);
    for m in 0..cfg.k_t() {
        for n in 0..cfg.k_r() {
            let (p, mismatch) = pair_closed_form(&msgs, cfg, m, n, tau[m * cfg.k_r() + n]).unwrap();
            assert!((p - scn.target.p0).norm() < 1e-9, "pair ({m},{n}): {p:?}");
            assert!(mismatch < 1e-6 * p.norm());
        }
    }
}

#[test]
fn half_resolution_delay_error_moves_the_pair_estimate() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = perfect(&scn, 100.0);
    let ang = subarray_angles(cfg, scn.target.p0).unwrap();
    let dtau = 0.5 / scn.pulse.bandwidth;
    let c = 299_792_458.0;
    for (i, tau) in true_delays(&scn).into_iter().enumerate() {
        let (m, n) = (i / cfg.k_r(), i % cfg.k_r());
        let (p, _) = pair_closed_form(&msgs, cfg, m, n, tau + dtau).unwrap();
        let (ct, cr) = (ang.theta_tilde[m].cos(), ang.phi_tilde[n].cos());
        let expected = c * dtau * ct / (ct + cr);
        let err = (p - scn.target.p0).norm();
        assert!((err - expected).abs() < 1e-6, "{err} vs {expected}");
        assert!((err - 0.375).abs() < 0.02 * 0.375, "{err}");
    }
}

#[test]
fn perfect_doppler_messages_solve_every_configuration() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = perfect(&scn, 1e3);
    let dv = distributed_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        scn.target.p0,
        &PairConfigSet::adjacent(4, 4),
        &VelocityOptions::default(),
    )
    .unwrap();
    for g in dv.per_config.iter().flatten() {
        assert!((g.mean - scn.target.v0).norm() < 1e-6, "{:?}", g.mean);
    }
    assert!((dv.fused.mean - scn.target.v0).norm() < 1e-6);
}

#[test]
fn doppler_near_pi_wraps_correctly() {
    let mut scn = Scenario::desk();
    let cfg = scn.array.clone();
    let u = direction_sums(&cfg, 4, 4, scn.target.p0).unwrap();
    // radial speed that puts pair (0,0) at f̃ = π − 0.01
    let zeta = 2.0 * std::f64::consts::PI * scn.pulse.pri / cfg.lambda;
    let dir = -u[0] / u[0].norm();
    let speed = (std::f64::consts::PI - 0.01) / (zeta * u[0].norm());
    scn.target.v0 = dir * speed;
    let f00 = scn.normalized_doppler(0, 0).unwrap();
    assert!((f00 - (std::f64::consts::PI - 0.01)).abs() < 1e-9);
    let msgs = messages(&scn, 1e-6, 3);
    let vel = centralized_velocity(
        &msgs,
        &cfg,
        scn.pulse.pri,
        scn.target.p0,
        &VelocityOptions::default(),
    )
    .unwrap();
    let radial = -vel.estimate.mean.dot(&u[0]) * zeta;
    assert!((radial / f00 - 1.0).abs() < 0.01, "{radial} vs {f00}");
}

#[test]
fn four_times_doppler_concentration_quarters_the_covariance() {
    let scn = Scenario::desk();
    let cfg = &scn.array;
    let msgs = messages(&scn, 0.1, 11);
    let mut strong = msgs.clone();
    strong.doppler_msgs.iter_mut().for_each(|d| d.eta *= 4.0);
    let a = centralized_velocity(
        &msgs,
        cfg,
        scn.pulse.pri,
        scn.target.p0,
        &VelocityOptions::default(),
    )
    .unwrap();
    let b = centralized_velocity(
        &strong,
        cfg,
        scn.pulse.pri,
        scn.target.p0,
        &VelocityOptions::default(),
    )
    .unwrap();
    assert!((a.estimate.mean - b.estimate.mean).norm() < 1e-8);
    assert!(
        (b.estimate.cov * 4.0 - a.estimate.cov).abs().max() < 1e-6 * a.estimate.cov.abs().max()
    );
}

#[test]
fn equal_covariances_fuse_to_the_average() {
    let c = nfvmp::Mat2::new(0.04, 0.01, 0.01, 0.09);
    let a = GaussianEstimate2D::new(nfvmp::Vec2::new(1.0, 2.0), c).unwrap();
    let b = GaussianEstimate2D::new(nfvmp::Vec2::new(3.0, -2.0), c).unwrap();
    let f = GaussianEstimate2D::fuse(&[a, b]).unwrap();
    assert!((f.mean - nfvmp::Vec2::new(2.0, 0.0)).norm() < 1e-12);
    assert!((f.cov - c / 2.0).abs().max() < 1e-12);
}

fn location_modes(
    scn: &Scenario,
    snr_db: f64,
    seed: u64,
) -> (GaussianEstimate2D, GaussianEstimate2D) {
    use nfvmp::harness::{pipeline, synthesize_trial};
    let d = synthesize_trial(scn, snr_db, 0.0, SynthesisMode::SubarrayExact, seed).unwrap();
    let s1 = pipeline::stage1(&d.snapshots, &scn.array, &pipeline::VmpOptions::default()).unwrap();
    let init = default_location_init(&s1.messages, &scn.array).unwrap();
    let sys =
        centralized_location(&s1.messages, &scn.array, init, &AscentOptions::default()).unwrap();
    let sub = distributed_location(&s1.messages, &scn.array, &d.tau_hat).unwrap();
    (sys.estimate, sub.fused)
}

#[test]
fn system_and_subarray_modes_agree_at_high_snr() {
    let scn = Scenario::desk();
    let mut agree = 0;
    for seed in 0..50 {
        let (sys, sub) = location_modes(&scn, 15.0, 500 + seed);
        let tol = sys.std().sup(&sub.std()) * 3.0;
        let diff = (sys.mean - sub.mean).abs();
        if diff.x < tol.x && diff.y < tol.y {
            agree += 1;
        }
    }
    assert_eq!(agree, 50);
}

/// The 90% ellipse from C_G covers the truth far less than 90% of the time.
/// Steering vectors are referenced to the first element, so the gain phase
/// and the angle are correlated by Σk/√(M·Σk²) and the factorized posterior
/// understates the angle variance by r = 2(2M−1)/(M+1) (3.65 at M = 16).
/// Raw coverage follows 1 − exp(−q/(2r)) and the inflated ellipse is
/// calibrated.
#[test]
fn ellipse_coverage_follows_the_mean_field_factor() {
    let scn = Scenario::desk();
    let m = scn.array.m_sub as f64;
    let r = 2.0 * (2.0 * m - 1.0) / (m + 1.0);
    let q = 4.605_170_185_988_091; // χ²(2) 90% quantile
    let trials = 200;
    let (mut raw, mut inflated) = (0, 0);
    for seed in 0..trials {
        let (sys, _) = location_modes(&scn, 10.0, 1000 + seed);
        let e = sys.mean - scn.target.p0;
        let d2 = e.dot(&(sys.precision() * e));
        raw += (d2 <= q) as usize;
        inflated += (d2 / r <= q) as usize;
    }
    let predicted = 1.0 - (-q / (2.0 * r)).exp();
    let raw_rate = raw as f64 / trials as f64;
    eprintln!(
        "coverage raw {raw}/{trials} (predicted {predicted:.3}), inflated {inflated}/{trials}"
    );
    assert!((raw_rate - predicted).abs() < 0.1);
    assert!(inflated as f64 >= 0.75 * trials as f64);
}
