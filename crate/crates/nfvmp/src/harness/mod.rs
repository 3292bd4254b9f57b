//! Monte Carlo experiment runner: seeded trials over a sweep, RMSE and
//! bound aggregation, CSV output.

pub mod config;
pub mod pipeline;
pub mod selftest;

pub use config::ExperimentConfig;
pub use pipeline::{Estimate, Stage1, VmpOptions};

use crate::baselines::{self, Grid2D, MlOptions, MusicGrids};
use crate::crb;
use crate::fusion::{self, PairConfigSet};
use crate::geometry::{self, ArrayConfig};
use crate::rng;
use crate::subvbi::CaviOptions;
use crate::wavefield::{self, ChannelGain, Scenario, SubarraySnapshot};
use crate::{Error, Result, Vec2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    VmpSystem,
    VmpSubarray,
    Ml,
    GridMusic,
    SubarrayAvg,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::VmpSystem,
        Method::VmpSubarray,
        Method::Ml,
        Method::GridMusic,
        Method::SubarrayAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::VmpSystem => "vmp-system",
            Method::VmpSubarray => "vmp-subarray",
            Method::Ml => "ml",
            Method::GridMusic => "grid-music",
            Method::SubarrayAvg => "subarray-avg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    SnrDb,
    Speed,
    Distance,
    MSub,
    L,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SnrDb => "snr_db",
            SweepParam::Speed => "speed",
            SweepParam::Distance => "distance",
            SweepParam::MSub => "m_sub",
            SweepParam::L => "L",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::SnrDb,
            SweepParam::Speed,
            SweepParam::Distance,
            SweepParam::MSub,
            SweepParam::L,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown sweep parameter {s:?}")))
    }
}

/// Scenario and SNR for one sweep value.
pub fn apply_sweep(cfg: &ExperimentConfig, value: f64) -> Result<(Scenario, f64)> {
    let mut scn = cfg.scenario.clone();
    let mut snr = cfg.snr_db;
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!(
                "sweep value {v} is not a positive integer"
            )))
        }
    };
    match cfg.sweep_param {
        SweepParam::SnrDb => snr = value,
        SweepParam::Speed => {
            let n = scn.target.v0.norm();
            if n == 0.0 {
                return Err(Error::Config(
                    "speed sweep needs a nonzero velocity direction".into(),
                ));
            }
            scn.target.v0 *= value / n;
        }
        SweepParam::Distance => {
            if !(value > 0.0) {
                return Err(Error::Config(format!("distance {value} must be positive")));
            }
            scn.target.p0 *= value / scn.target.p0.norm();
        }
        SweepParam::MSub => scn.array.m_sub = as_count(value)?,
        SweepParam::L => scn.pulse.n_pulses = as_count(value)?,
    }
    scn.validate()?;
    Ok((scn, snr))
}

/// One method on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub sweep_value: f64,
    pub trial: usize,
    pub p_hat: Vec2,
    pub v_hat: Vec2,
    /// Euclidean errors; NaN when the method failed.
    pub err_p: f64,
    pub err_v: f64,
    pub runtime_s: f64,
    pub converged: bool,
}

/// Aggregate over the trials of one (method, sweep value) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub sweep_param: SweepParam,
    pub sweep_value: f64,
    pub trials: usize,
    pub rmse_p_m: f64,
    pub rmse_v_mps: f64,
    pub crb_p_m: f64,
    pub crb_v_mps: f64,
    pub median_runtime_s: f64,
    pub fail_rate: f64,
}

impl CellSummary {
    /// More than half the trials failed.
    pub fn flagged(&self) -> bool {
        self.fail_rate > 0.5
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResults {
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

/// sqrt(mean(e²)) over the finite entries; NaN if there are none.
pub fn rmse(errors: &[f64]) -> f64 {
    let ok: Vec<f64> = errors.iter().copied().filter(|e| e.is_finite()).collect();
    if ok.is_empty() {
        return f64::NAN;
    }
    (ok.iter().map(|e| e * e).sum::<f64>() / ok.len() as f64).sqrt()
}

/// Median of the finite entries; NaN if there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|e| e.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Data and side information of one trial.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub snapshots: Vec<SubarraySnapshot>,
    /// Noisy bistatic delays, row-major over (m, n).
    pub tau_hat: Vec<f64>,
    pub sigma: f64,
}

/// Seed of trial `t`; shared by every sweep value so that cells are
/// compared on common random numbers.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive_seed(seed, &[rng::TAG_TRIAL, trial as u64])
}

pub fn synthesize_trial(
    scn: &Scenario,
    snr_db: f64,
    delay_std: f64,
    mode: wavefield::SynthesisMode,
    seed: u64,
) -> Result<TrialData> {
    let gain = ChannelGain::swerling(scn, seed)?;
    let noise = wavefield::set_snr(&gain, snr_db, seed)?;
    let snapshots = wavefield::synthesize_all(scn, &gain, &noise, mode)?;
    let tau_hat = noisy_delays(&scn.array, scn.target.p0, delay_std, seed)?;
    Ok(TrialData {
        snapshots,
        tau_hat,
        sigma: noise.sigma,
    })
}

/// τ_mn + N(0, delay_std²), one stream per pair.
pub fn noisy_delays(cfg: &ArrayConfig, p0: Vec2, delay_std: f64, seed: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.n_pairs());
    for m in 0..cfg.k_t() {
        for n in 0..cfg.k_r() {
            let mut g = rng::stream(seed, &[rng::TAG_DELAY, m as u64, n as u64]);
            let e: f64 = StandardNormal.sample(&mut g);
            out.push(geometry::bistatic_delay(cfg, p0, m, n)? + delay_std * e);
        }
    }
    Ok(out)
}

/// Search grids centered on the truth, offset by a random sub-cell shift
/// when dithering is enabled.
pub fn music_grids(cfg: &ExperimentConfig, scn: &Scenario, seed: u64) -> MusicGrids {
    let mut g = rng::stream(seed, &[rng::TAG_GRID]);
    let mut shift = |step: f64| -> Vec2 {
        if cfg.grid_dither {
            Vec2::new(g.random_range(-0.5..0.5), g.random_range(-0.5..0.5)) * step
        } else {
            Vec2::zeros()
        }
    };
    MusicGrids {
        location: Grid2D {
            center: scn.target.p0 + shift(cfg.grid_step),
            half_width: cfg.grid_half_width,
            step: cfg.grid_step,
        },
        velocity: Grid2D {
            center: scn.target.v0 + shift(cfg.vgrid_step),
            half_width: cfg.vgrid_half_width,
            step: cfg.vgrid_step,
        },
    }
}

pub fn vmp_options(cfg: &ExperimentConfig) -> VmpOptions {
    VmpOptions {
        cavi: CaviOptions {
            max_iters: cfg.cavi_max_iters,
            sigma_rule: cfg.sigma_rule,
            ..CaviOptions::default()
        },
        ..VmpOptions::default()
    }
}

/// Runs every configured method on one set of trial data.
pub fn run_methods(
    cfg: &ExperimentConfig,
    scn: &Scenario,
    data: &TrialData,
    seed: u64,
) -> Vec<(Method, Result<Estimate>)> {
    let array = &scn.array;
    let pri = scn.pulse.pri;
    let opts = vmp_options(cfg);
    let wants = |m: Method| cfg.methods.contains(&m);
    let needs_stage1 =
        wants(Method::VmpSystem) || wants(Method::VmpSubarray) || wants(Method::SubarrayAvg);
    let s1 = needs_stage1.then(|| pipeline::stage1(&data.snapshots, array, &opts));
    let grids = music_grids(cfg, scn, seed);
    let mut grid_result: Option<Result<Estimate>> = None;
    let run_grid = || -> Result<Estimate> {
        let r = baselines::grid_music(&data.snapshots, array, &scn.pulse, &grids)?;
        Ok(Estimate {
            p_hat: r.p_hat,
            v_hat: r.v_hat,
            runtime_s: r.runtime_s,
        })
    };
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let res = match method {
            Method::VmpSystem => match &s1 {
                Some(Ok(s)) => pipeline::vmp_system(s, array, pri, &opts),
                Some(Err(e)) => Err(Error::Insufficient(e.to_string())),
                None => unreachable!(),
            },
            Method::VmpSubarray => match &s1 {
                Some(Ok(s)) => {
                    pipeline::vmp_subarray(s, array, pri, &data.tau_hat, &opts).map(|r| r.0)
                }
                Some(Err(e)) => Err(Error::Insufficient(e.to_string())),
                None => unreachable!(),
            },
            Method::SubarrayAvg => match &s1 {
                Some(Ok(s)) => subarray_avg(s, array, pri, &data.tau_hat, &opts),
                Some(Err(e)) => Err(Error::Insufficient(e.to_string())),
                None => unreachable!(),
            },
            Method::GridMusic => {
                let r = run_grid();
                grid_result = Some(
                    r.as_ref()
                        .map(|e| *e)
                        .map_err(|e| Error::Insufficient(e.to_string())),
                );
                r
            }
            Method::Ml => {
                let init = match grid_result.take() {
                    Some(r) => r,
                    None => run_grid(),
                };
                init.and_then(|g| {
                    let ml_opts = MlOptions {
                        max_iters: cfg.ml_max_iters,
                        solver: cfg.ml_solver,
                        ..MlOptions::default()
                    };
                    let r = baselines::ml_estimate(
                        &data.snapshots,
                        array,
                        &scn.pulse,
                        (g.p_hat, g.v_hat),
                        &ml_opts,
                    )?;
                    Ok(Estimate {
                        p_hat: r.p_hat,
                        v_hat: r.v_hat,
                        runtime_s: g.runtime_s + r.runtime_s,
                    })
                })
            }
        };
        out.push((method, res));
    }
    out
}

/// Equal-weight averaging of the per-pair closed forms.
fn subarray_avg(
    s1: &Stage1,
    array: &ArrayConfig,
    pri: f64,
    tau_hat: &[f64],
    opts: &VmpOptions,
) -> Result<Estimate> {
    let start = Instant::now();
    let loc = fusion::distributed_location(&s1.messages, array, tau_hat)?;
    let parts: Vec<Vec2> = loc.closed_form.iter().flatten().copied().collect();
    let p_avg = parts.iter().sum::<Vec2>() / parts.len() as f64;
    let pairs = PairConfigSet::adjacent(array.k_t(), array.k_r());
    let vel =
        fusion::distributed_velocity(&s1.messages, array, pri, p_avg, &pairs, &opts.velocity)?;
    let r = baselines::subarray_average(&loc, &vel)?;
    Ok(Estimate {
        p_hat: r.p_hat,
        v_hat: r.v_hat,
        runtime_s: s1.runtime_s + start.elapsed().as_secs_f64(),
    })
}

fn records_for(
    scn: &Scenario,
    sweep_value: f64,
    trial: usize,
    results: Vec<(Method, Result<Estimate>)>,
) -> Vec<TrialRecord> {
    results
        .into_iter()
        .map(|(method, r)| match r {
            Ok(e) if e.p_hat.iter().chain(e.v_hat.iter()).all(|x| x.is_finite()) => TrialRecord {
                method,
                sweep_value,
                trial,
                p_hat: e.p_hat,
                v_hat: e.v_hat,
                err_p: (e.p_hat - scn.target.p0).norm(),
                err_v: (e.v_hat - scn.target.v0).norm(),
                runtime_s: e.runtime_s,
                converged: true,
            },
            other => {
                if let Err(e) = other {
                    log::debug!("{method} failed on trial {trial}: {e}");
                }
                TrialRecord {
                    method,
                    sweep_value,
                    trial,
                    p_hat: Vec2::repeat(f64::NAN),
                    v_hat: Vec2::repeat(f64::NAN),
                    err_p: f64::NAN,
                    err_v: f64::NAN,
                    runtime_s: f64::NAN,
                    converged: false,
                }
            }
        })
        .collect()
}

/// Runs the full sweep. Deterministic in everything except wall times.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for &value in &cfg.sweep_values {
        let (scn, snr) = apply_sweep(cfg, value)?;
        let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<TrialRecord>> {
                let seed = trial_seed(cfg.seed, t);
                let data = synthesize_trial(&scn, snr, cfg.delay_std, cfg.synthesis, seed)?;
                Ok(records_for(
                    &scn,
                    value,
                    t,
                    run_methods(cfg, &scn, &data, seed),
                ))
            })
            .collect::<Result<_>>()?;
        let flat: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
        let nominal = ChannelGain::nominal(&scn)?;
        let sigma = wavefield::set_snr(&nominal, snr, 0)?.sigma;
        let bound = crb::scenario_crb(&scn, &nominal, sigma)?;
        let (crb_p, crb_v) = bound.root();
        for &method in &cfg.methods {
            let rows: Vec<&TrialRecord> = flat.iter().filter(|r| r.method == method).collect();
            let errs_p: Vec<f64> = rows.iter().map(|r| r.err_p).collect();
            let errs_v: Vec<f64> = rows.iter().map(|r| r.err_v).collect();
            let times: Vec<f64> = rows.iter().map(|r| r.runtime_s).collect();
            let fails = rows.iter().filter(|r| !r.converged).count();
            let cell = CellSummary {
                method,
                sweep_param: cfg.sweep_param,
                sweep_value: value,
                trials: rows.len(),
                rmse_p_m: rmse(&errs_p),
                rmse_v_mps: rmse(&errs_v),
                crb_p_m: crb_p,
                crb_v_mps: crb_v,
                median_runtime_s: median(&times),
                fail_rate: fails as f64 / rows.len() as f64,
            };
            if cell.flagged() {
                log::warn!(
                    "{method} at {}={value}: {:.0}% of trials failed",
                    cfg.sweep_param,
                    100.0 * cell.fail_rate
                );
            }
            cells.push(cell);
        }
        records.extend(flat);
    }
    Ok(ExperimentResults { records, cells })
}

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "sweep_param",
    "sweep_value",
    "trials",
    "rmse_p_m",
    "rmse_v_mps",
    "crb_p_m",
    "crb_v_mps",
    "median_runtime_s",
    "fail_rate",
];

pub const TRIALS_HEADER: [&str; 11] = [
    "method",
    "sweep_value",
    "trial",
    "x_hat",
    "y_hat",
    "vx_hat",
    "vy_hat",
    "err_p_m",
    "err_v_mps",
    "runtime_s",
    "converged",
];

/// Writes one row per (method, sweep value).
pub fn write_csv<W: std::io::Write>(cells: &[CellSummary], w: W) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::Insufficient("no results to write".into()));
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for c in cells {
        wr.write_record([
            c.method.name().to_string(),
            c.sweep_param.name().to_string(),
            c.sweep_value.to_string(),
            c.trials.to_string(),
            c.rmse_p_m.to_string(),
            c.rmse_v_mps.to_string(),
            c.crb_p_m.to_string(),
            c.crb_v_mps.to_string(),
            c.median_runtime_s.to_string(),
            c.fail_rate.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn emit_csv(cells: &[CellSummary], path: &Path) -> Result<()> {
    write_csv(cells, std::fs::File::create(path)?)
}

/// Parses a summary CSV written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<CellSummary>> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Format("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Format(format!("bad number {:?}", &rec[i])))
        };
        out.push(CellSummary {
            method: rec[0].parse()?,
            sweep_param: rec[1].parse()?,
            sweep_value: f(2)?,
            trials: rec[3]
                .parse()
                .map_err(|_| Error::Format("bad trial count".into()))?,
            rmse_p_m: f(4)?,
            rmse_v_mps: f(5)?,
            crb_p_m: f(6)?,
            crb_v_mps: f(7)?,
            median_runtime_s: f(8)?,
            fail_rate: f(9)?,
        });
    }
    Ok(out)
}

/// Long-format per-trial table.
pub fn write_trials<W: std::io::Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRIALS_HEADER)?;
    for r in records {
        wr.write_record([
            r.method.name().to_string(),
            r.sweep_value.to_string(),
            r.trial.to_string(),
            r.p_hat.x.to_string(),
            r.p_hat.y.to_string(),
            r.v_hat.x.to_string(),
            r.v_hat.y.to_string(),
            r.err_p.to_string(),
            r.err_v.to_string(),
            r.runtime_s.to_string(),
            r.converged.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
