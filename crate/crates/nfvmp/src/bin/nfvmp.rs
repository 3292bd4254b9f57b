use clap::{Args, Parser, Subcommand};
use nfvmp::harness::{self, config, selftest, ExperimentConfig, Method};
use nfvmp::wavefield::nfz::{self, NfzFile};
use nfvmp::{crb, wavefield, Error, Result};
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nfvmp",
    version,
    about = "Near-field MIMO radar simulation and estimation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize one interval of snapshots into an NFZ1 file.
    Simulate(Common),
    /// Run one method on an NFZ1 file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Snapshot file to read.
        input: PathBuf,
    },
    /// Print the Cramér-Rao bounds of a scenario.
    Crb(Common),
    /// Monte Carlo sweep written as CSV.
    Sweep(Common),
    /// Run the built-in oracle checks.
    Selftest(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    param: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::desk(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(m) = &self.method {
            cfg.methods = config::parse_methods(m)?;
        }
        if let Some(p) = &self.param {
            cfg.sweep_param = p.parse()?;
        }
        if let Some(v) = &self.values {
            cfg.sweep_values = config::parse_values(v)?;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = c.experiment()?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("simulate needs --out".into()))?;
    let scn = &cfg.scenario;
    let data = harness::synthesize_trial(scn, cfg.snr_db, cfg.delay_std, cfg.synthesis, cfg.seed)?;
    let file = NfzFile {
        m_sub: scn.array.m_sub as u32,
        n_pulses: scn.pulse.n_pulses as u32,
        k_t: scn.array.k_t() as u32,
        k_r: scn.array.k_r() as u32,
        sigma: data.sigma,
        snapshots: data.snapshots,
    };
    let mut w = BufWriter::new(std::fs::File::create(&out)?);
    nfz::write(&mut w, &file)?;
    w.flush()?;
    println!("wrote {} pairs to {}", file.snapshots.len(), out.display());
    Ok(())
}

fn estimate(c: &Common, input: &PathBuf) -> Result<()> {
    let mut cfg = c.experiment()?;
    let method: Method = match &c.method {
        Some(m) => m.parse()?,
        None => Method::VmpSystem,
    };
    cfg.methods = vec![method];
    let scn = cfg.scenario.clone();
    let file = nfz::read(&mut BufReader::new(std::fs::File::open(input)?))?;
    if file.m_sub as usize != scn.array.m_sub
        || file.n_pulses as usize != scn.pulse.n_pulses
        || file.k_t as usize != scn.array.k_t()
        || file.k_r as usize != scn.array.k_r()
    {
        return Err(Error::Config(
            "snapshot file dimensions disagree with the configuration".into(),
        ));
    }
    // Delays are not carried in the file; they are drawn around the
    // configured target like in the harness.
    let tau_hat = harness::noisy_delays(&scn.array, scn.target.p0, cfg.delay_std, cfg.seed)?;
    let data = harness::TrialData {
        snapshots: file.snapshots,
        tau_hat,
        sigma: file.sigma,
    };
    let (_, res) = harness::run_methods(&cfg, &scn, &data, cfg.seed)
        .pop()
        .expect("one method requested");
    let e = res?;
    println!("{{");
    println!("  method: {method}");
    println!("  x_hat: {}", e.p_hat.x);
    println!("  y_hat: {}", e.p_hat.y);
    println!("  vx_hat: {}", e.v_hat.x);
    println!("  vy_hat: {}", e.v_hat.y);
    println!("  err_p_m: {}", (e.p_hat - scn.target.p0).norm());
    println!("  err_v_mps: {}", (e.v_hat - scn.target.v0).norm());
    println!("  runtime_s: {}", e.runtime_s);
    println!("}}");
    Ok(())
}

fn bounds(c: &Common) -> Result<()> {
    let cfg = c.experiment()?;
    let scn = &cfg.scenario;
    let gains = wavefield::ChannelGain::nominal(scn)?;
    let sigma = wavefield::set_snr(&gains, cfg.snr_db, 0)?.sigma;
    let rep = crb::scenario_crb(scn, &gains, sigma)?;
    let (p, v) = rep.root();
    println!("snr_db: {}", cfg.snr_db);
    println!("sqrt_crb_p_m: {p:.6e}");
    println!("sqrt_crb_v_mps: {v:.6e}");
    if rep.rank_deficient {
        println!("warning: Fisher information is rank deficient");
    }
    Ok(())
}

fn sweep(c: &Common) -> Result<()> {
    let cfg = c.experiment()?;
    let res = harness::run_experiment(&cfg)?;
    match &cfg.out {
        Some(p) => harness::emit_csv(&res.cells, p)?,
        None => harness::write_csv(&res.cells, std::io::stdout().lock())?,
    }
    if let Some(p) = &cfg.trials_out {
        harness::write_trials(&res.records, std::fs::File::create(p)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Simulate(c) => simulate(c),
        Cmd::Estimate { common, input } => estimate(common, input),
        Cmd::Crb(c) => bounds(c),
        Cmd::Sweep(c) => sweep(c),
        Cmd::Selftest(c) => {
            let seed = c.seed.unwrap_or(0);
            let checks = selftest::run(seed);
            let mut ok = true;
            for ch in &checks {
                println!(
                    "{} {}: {}",
                    if ch.passed { "PASS" } else { "FAIL" },
                    ch.name,
                    ch.detail
                );
                ok &= ch.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Error::Insufficient("self test failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
