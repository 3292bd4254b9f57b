//! The two-stage VMP estimator: per-pair CAVI, then system-level or
//! subarray-level fusion.

use crate::fusion::{
    self, AngularMessageSet, AscentOptions, DistributedLocation, DistributedVelocity,
    PairConfigSet, VelocityOptions,
};
use crate::geometry::ArrayConfig;
use crate::subvbi::{run_cavi, CaviOptions, Priors, SubarrayPosterior};
use crate::wavefield::SubarraySnapshot;
use crate::{Result, Vec2};
use rayon::prelude::*;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq)]
pub struct VmpOptions {
    pub cavi: CaviOptions,
    pub priors: Priors,
    pub ascent: AscentOptions,
    pub velocity: VelocityOptions,
}

impl Default for VmpOptions {
    fn default() -> Self {
        Self {
            cavi: CaviOptions {
                max_iters: 100,
                ..CaviOptions::default()
            },
            priors: Priors::default(),
            ascent: AscentOptions::default(),
            velocity: VelocityOptions::default(),
        }
    }
}

/// Point estimate with the wall time spent producing it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub p_hat: Vec2,
    pub v_hat: Vec2,
    pub runtime_s: f64,
}

/// Stage 1 output shared by both fusion modes.
#[derive(Clone, Debug)]
pub struct Stage1 {
    pub posteriors: Vec<Option<SubarrayPosterior>>,
    pub messages: AngularMessageSet,
    pub runtime_s: f64,
}

/// Runs CAVI on every pair concurrently. Snapshots must be row-major over
/// (m, n). Pairs whose CAVI errors are dropped.
pub fn stage1(snaps: &[SubarraySnapshot], cfg: &ArrayConfig, opts: &VmpOptions) -> Result<Stage1> {
    let start = Instant::now();
    let posteriors: Vec<Option<SubarrayPosterior>> = snaps
        .par_iter()
        .map(|s| match run_cavi(s, &opts.priors, &opts.cavi) {
            Ok(p) => Some(p),
            Err(e) => {
                log::debug!("pair ({},{}) dropped: {e}", s.m, s.n);
                None
            }
        })
        .collect();
    let messages = fusion::build_messages(&posteriors, cfg.k_t(), cfg.k_r(), &opts.priors)?;
    Ok(Stage1 {
        posteriors,
        messages,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// System-level fusion.
pub fn vmp_system(s1: &Stage1, cfg: &ArrayConfig, pri: f64, opts: &VmpOptions) -> Result<Estimate> {
    let start = Instant::now();
    let init = fusion::default_location_init(&s1.messages, cfg)?;
    let loc = fusion::centralized_location(&s1.messages, cfg, init, &opts.ascent)?;
    let p_hat = loc.estimate.mean;
    let vel = fusion::centralized_velocity(&s1.messages, cfg, pri, p_hat, &opts.velocity)?;
    Ok(Estimate {
        p_hat,
        v_hat: vel.estimate.mean,
        runtime_s: s1.runtime_s + start.elapsed().as_secs_f64(),
    })
}

/// Subarray-level fusion; also returns the per-pair parts for averaging.
pub fn vmp_subarray(
    s1: &Stage1,
    cfg: &ArrayConfig,
    pri: f64,
    tau_hat: &[f64],
    opts: &VmpOptions,
) -> Result<(Estimate, DistributedLocation, DistributedVelocity)> {
    let start = Instant::now();
    let loc = fusion::distributed_location(&s1.messages, cfg, tau_hat)?;
    let p_hat = loc.fused.mean;
    let pairs = PairConfigSet::adjacent(cfg.k_t(), cfg.k_r());
    let vel = fusion::distributed_velocity(&s1.messages, cfg, pri, p_hat, &pairs, &opts.velocity)?;
    let est = Estimate {
        p_hat,
        v_hat: vel.fused.mean,
        runtime_s: s1.runtime_s + start.elapsed().as_secs_f64(),
    };
    Ok((est, loc, vel))
}
