//! Flat `key = value` experiment configuration.

use super::{Method, SweepParam};
use crate::baselines::MlSolver;
use crate::geometry::{ArrayConfig, PulseConfig, TargetState};
use crate::subvbi::SigmaRule;
use crate::wavefield::{RadarPower, Scenario, SynthesisMode};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Keys accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "preset",
    "n_tx",
    "n_rx",
    "m_sub",
    "d0",
    "fc",
    "pri",
    "n_pulses",
    "bandwidth",
    "x0",
    "y0",
    "vx",
    "vy",
    "pt_dbm",
    "gt_db",
    "gr_db",
    "sigma_s2",
    "snr_db",
    "delay_std",
    "synthesis",
    "sigma_rule",
    "cavi_max_iters",
    "grid_step",
    "grid_half_width",
    "vgrid_step",
    "vgrid_half_width",
    "grid_dither",
    "ml_max_iters",
    "ml_solver",
    "methods",
    "sweep_param",
    "sweep_values",
    "trials",
    "seed",
    "threads",
    "out",
    "trials_out",
];

/// Scenario keys that must be present unless a preset supplies them.
const SCENARIO_KEYS: &[&str] = &[
    "n_tx",
    "n_rx",
    "m_sub",
    "fc",
    "pri",
    "n_pulses",
    "bandwidth",
    "x0",
    "y0",
    "vx",
    "vy",
];

/// Parses the raw text into a key map. Blank lines and `#` comments are
/// skipped; duplicate and unknown keys are rejected.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key `{k}`", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{k}`",
                no + 1
            )));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse {v:?}")))
}

/// Comma-separated list of numbers.
pub fn parse_values(v: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("sweep_values", s))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Config("sweep values are empty".into()));
    }
    Ok(vals)
}

pub fn parse_methods(v: &str) -> Result<Vec<Method>> {
    let m: Vec<Method> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if m.is_empty() {
        return Err(Error::Config("method list is empty".into()));
    }
    Ok(m)
}

/// Full description of a Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub snr_db: f64,
    /// Standard deviation of the delay estimate error (s).
    pub delay_std: f64,
    pub synthesis: SynthesisMode,
    pub sigma_rule: SigmaRule,
    pub cavi_max_iters: usize,
    pub grid_step: f64,
    pub grid_half_width: f64,
    pub vgrid_step: f64,
    pub vgrid_half_width: f64,
    /// Random sub-cell offset of the search grids per trial.
    pub grid_dither: bool,
    pub ml_max_iters: usize,
    pub ml_solver: MlSolver,
    pub methods: Vec<Method>,
    pub sweep_param: SweepParam,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub trials_out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults around a scenario: SNR 10 dB, delay error 1/(2B), every method.
    pub fn with_scenario(scenario: Scenario) -> Self {
        let delay_std = 0.5 / scenario.pulse.bandwidth;
        Self {
            scenario,
            snr_db: 10.0,
            delay_std,
            synthesis: SynthesisMode::SubarrayExact,
            sigma_rule: SigmaRule::Residual,
            cavi_max_iters: 50,
            grid_step: 0.1,
            grid_half_width: 2.0,
            vgrid_step: 0.2,
            vgrid_half_width: 4.0,
            grid_dither: true,
            ml_max_iters: 200,
            ml_solver: MlSolver::Gradient,
            methods: Method::ALL.to_vec(),
            sweep_param: SweepParam::SnrDb,
            sweep_values: vec![10.0],
            trials: 50,
            seed: 0,
            threads: 0,
            out: None,
            trials_out: None,
        }
    }

    pub fn desk() -> Self {
        Self::with_scenario(Scenario::desk())
    }

    pub fn table2() -> Self {
        Self {
            trials: 20,
            ..Self::with_scenario(Scenario::table2())
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_pairs(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| kv.get(k).map(String::as_str);
        let base = match get("preset") {
            None => None,
            Some("desk") => Some(Scenario::desk()),
            Some("table2") => Some(Scenario::table2()),
            Some(other) => {
                return Err(Error::Config(format!(
                    "key `preset`: unknown preset {other:?}"
                )))
            }
        };
        if base.is_none() {
            if let Some(missing) = SCENARIO_KEYS.iter().find(|k| !kv.contains_key(**k)) {
                return Err(Error::Config(format!("missing required key `{missing}`")));
            }
        }
        let base = base.unwrap_or_else(Scenario::desk);
        let num = |k: &str, d: f64| -> Result<f64> { get(k).map_or(Ok(d), |v| parse(k, v)) };
        let int = |k: &str, d: usize| -> Result<usize> { get(k).map_or(Ok(d), |v| parse(k, v)) };

        let pulse = PulseConfig {
            pri: num("pri", base.pulse.pri)?,
            n_pulses: int("n_pulses", base.pulse.n_pulses)?,
            fc: num("fc", base.pulse.fc)?,
            bandwidth: num("bandwidth", base.pulse.bandwidth)?,
        };
        pulse.validate()?;
        let array = ArrayConfig::new(
            int("n_tx", base.array.n_tx)?,
            int("n_rx", base.array.n_rx)?,
            int("m_sub", base.array.m_sub)?,
            pulse.lambda(),
            num("d0", base.array.d0)?,
        )?;
        let target = TargetState::new(
            num("x0", base.target.p0.x)?,
            num("y0", base.target.p0.y)?,
            num("vx", base.target.v0.x)?,
            num("vy", base.target.v0.y)?,
        );
        let power = if ["pt_dbm", "gt_db", "gr_db", "sigma_s2"]
            .iter()
            .any(|k| kv.contains_key(*k))
        {
            RadarPower::from_db(
                num("pt_dbm", 30.0)?,
                num("gt_db", 15.0)?,
                num("gr_db", 15.0)?,
                num("sigma_s2", 1.0)?,
            )
        } else {
            base.power.clone()
        };
        let scenario = Scenario {
            array,
            pulse,
            target,
            power,
        };
        scenario.validate()?;

        let mut cfg = if get("preset") == Some("table2") {
            Self::table2()
        } else {
            Self::desk()
        };
        cfg.delay_std = 0.5 / scenario.pulse.bandwidth;
        cfg.scenario = scenario;
        cfg.snr_db = num("snr_db", cfg.snr_db)?;
        cfg.delay_std = num("delay_std", cfg.delay_std)?;
        if let Some(v) = get("synthesis") {
            cfg.synthesis = v.parse()?;
        }
        if let Some(v) = get("sigma_rule") {
            cfg.sigma_rule = v.parse()?;
        }
        cfg.cavi_max_iters = int("cavi_max_iters", cfg.cavi_max_iters)?;
        cfg.grid_step = num("grid_step", cfg.grid_step)?;
        cfg.grid_half_width = num("grid_half_width", cfg.grid_half_width)?;
        cfg.vgrid_step = num("vgrid_step", cfg.vgrid_step)?;
        cfg.vgrid_half_width = num("vgrid_half_width", cfg.vgrid_half_width)?;
        if let Some(v) = get("grid_dither") {
            cfg.grid_dither = parse("grid_dither", v)?;
        }
        cfg.ml_max_iters = int("ml_max_iters", cfg.ml_max_iters)?;
        if let Some(v) = get("ml_solver") {
            cfg.ml_solver = v.parse()?;
        }
        if let Some(v) = get("methods") {
            cfg.methods = parse_methods(v)?;
        }
        if let Some(v) = get("sweep_param") {
            cfg.sweep_param = v.parse()?;
        }
        if let Some(v) = get("sweep_values") {
            cfg.sweep_values = parse_values(v)?;
        }
        cfg.trials = int("trials", cfg.trials)?;
        cfg.seed = get("seed").map_or(Ok(cfg.seed), |v| parse("seed", v))?;
        cfg.threads = int("threads", cfg.threads)?;
        cfg.out = get("out").map(PathBuf::from);
        cfg.trials_out = get("trials_out").map(PathBuf::from);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep values are empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if !(self.delay_std >= 0.0) {
            return Err(Error::Config("delay_std must be non-negative".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if self.cavi_max_iters == 0 {
            return Err(Error::Config("cavi_max_iters must be positive".into()));
        }
        for (k, v) in [
            ("grid_step", self.grid_step),
            ("vgrid_step", self.vgrid_step),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("`{k}` must be positive")));
            }
        }
        for (k, v) in [
            ("grid_half_width", self.grid_half_width),
            ("vgrid_half_width", self.vgrid_half_width),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("`{k}` must be non-negative")));
            }
        }
        Ok(())
    }
}
