//! `baq` command-line front end. Every flag mirrors a config-file key and
//! overrides the file given with `--config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::agent::{Agent, AgentParams};
use super::bench::{bc_config, grid_sweep, Workbench};
use super::config::ExperimentConfig;
use super::finetune::run_finetune;
use super::offline::{load_configured_dataset, run_offline};
use super::plot::emit_plot;
use super::record::RunRecord;
use crate::bc::train_bc;
use crate::envs::{generate_dataset, EnvKind, QualityTier};
use crate::error::{Error, Result};
use crate::mdp::dataset_save;
use crate::nn::{load_policy, save_policy};

#[derive(Parser, Debug)]
#[command(
    name = "baq",
    version,
    about = "Offline-to-online RL with behavior-adaptive Q-learning"
)]
pub struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an offline dataset from a behavior-policy tier.
    GenData(GenData),
    /// Train the behavior-cloning reference policy.
    TrainBc(TrainBc),
    /// Offline pretraining of CQL or IQL.
    Pretrain(Pretrain),
    /// Online fine-tuning from a pretrained checkpoint.
    Finetune(Finetune),
    /// Grid sweep over k_q and k_rho.
    Sweep(Sweep),
    /// Plot evaluation curves from run directories.
    Plot(Plot),
}

#[derive(Args, Debug)]
pub struct GenData {
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub tier: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainBc {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Pretrain {
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for checkpoints and the run record.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Finetune {
    #[arg(long)]
    pub algo: Option<String>,
    /// Directory written by `pretrain`.
    #[arg(long)]
    pub from: PathBuf,
    /// Behavior-cloning checkpoint written by `train-bc`.
    #[arg(long)]
    pub bc: Option<PathBuf>,
    /// Offline dataset for the replay buffer; defaults to the one used by `pretrain`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub kq: Option<f64>,
    #[arg(long)]
    pub krho: Option<f64>,
    #[arg(long = "alpha-p")]
    pub alpha_p: Option<f64>,
    /// Comma-separated seed list.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long = "eval-every")]
    pub eval_every: Option<usize>,
    /// Output directory; one subdirectory per seed.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Sweep {
    #[arg(long = "kq-list")]
    pub kq_list: String,
    #[arg(long = "krho-list")]
    pub krho_list: String,
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub tier: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long = "offline-steps")]
    pub offline_steps: Option<usize>,
    #[arg(long = "online-steps")]
    pub online_steps: Option<usize>,
    #[arg(long = "bc-steps")]
    pub bc_steps: Option<usize>,
    #[arg(long = "eval-every")]
    pub eval_every: Option<usize>,
    /// Heatmap CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Plot {
    /// Run directories, or parents of run directories.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// SVG output path; the backing CSV is written alongside.
    #[arg(long)]
    pub out: PathBuf,
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn set_opt<T: ToString>(cfg: &mut ExperimentConfig, key: &str, value: &Option<T>) -> Result<()> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn set_path(cfg: &mut ExperimentConfig, key: &str, value: &Option<PathBuf>) -> Result<()> {
    match value {
        Some(p) => cfg.set(key, &p.display().to_string()),
        None => Ok(()),
    }
}

/// Explicit flag, then `BAQ_SEED`, then the configured fallback.
fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var("BAQ_SEED") {
        return v
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("BAQ_SEED is not an integer: '{v}'")));
    }
    Ok(fallback)
}

/// Network, data and learning settings come from the pretraining snapshot;
/// settings resolved from the pretraining algo tag are cleared, then the
/// `--config` file is layered on top.
fn inherit_pretrain(snapshot: &Path, file: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(snapshot)?;
    cfg.k_q = None;
    cfg.k_rho = None;
    cfg.sampling = None;
    cfg.weighted = None;
    cfg.so2_beta = None;
    if let Some(p) = file {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        cfg.apply_text(&text)?;
    }
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn collect_runs(path: &Path, out: &mut Vec<RunRecord>) -> Result<()> {
    if path.join("run.txt").is_file() {
        out.push(RunRecord::load(path)?);
        return Ok(());
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for d in dirs {
        collect_runs(&d, out)?;
    }
    Ok(())
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::config(e.to_string()))?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::GenData(a) => {
            set_opt(&mut cfg, "env", &a.env)?;
            set_opt(&mut cfg, "tier", &a.tier)?;
            set_opt(&mut cfg, "dataset-size", &a.n)?;
            let seed = resolve_seed(a.seed, cfg.data_seed)?;
            let kind = EnvKind::by_name(&cfg.env)?;
            let n = if cfg.dataset_size == 0 {
                QualityTier::default_size(cfg.tier)
            } else {
                cfg.dataset_size
            };
            let ds = generate_dataset(&kind, &QualityTier::for_tier(cfg.tier), n, seed)?;
            dataset_save(&ds, &a.out)?;
            println!(
                "wrote {} {} transitions ({}) to {}",
                ds.len(),
                cfg.env,
                cfg.tier,
                a.out.display()
            );
        }
        Command::TrainBc(a) => {
            set_path(&mut cfg, "data", &a.data)?;
            set_opt(&mut cfg, "env", &a.env)?;
            set_opt(&mut cfg, "bc-steps", &a.steps)?;
            let seed = resolve_seed(a.seed, cfg.seeds[0])?;
            let ds = load_configured_dataset(&cfg)?;
            let outcome = train_bc(&ds, &bc_config(&cfg)?, seed)?;
            save_policy(&outcome.policy, &a.out)?;
            for (step, loss) in &outcome.loss_log {
                println!("step {step}: nll {loss:.5}");
            }
            println!("wrote behavior-cloning policy to {}", a.out.display());
        }
        Command::Pretrain(a) => {
            set_opt(&mut cfg, "algo", &a.algo)?;
            set_path(&mut cfg, "data", &a.data)?;
            set_opt(&mut cfg, "env", &a.env)?;
            set_opt(&mut cfg, "offline-steps", &a.steps)?;
            let seed = resolve_seed(a.seed, cfg.seeds[0])?;
            let outcome = run_offline(&cfg, seed)?;
            ensure_dir(&a.out)?;
            let mut record = outcome.record;
            record.checkpoints = outcome.agent.save(&a.out)?;
            record.save(&a.out)?;
            let last = record.series.last().expect("offline evaluation");
            println!(
                "{} offline: return {:.3}, normalized {:.2}; checkpoints in {}",
                cfg.algo.base.as_str(),
                last.mean_return,
                last.normalized_score,
                a.out.display()
            );
        }
        Command::Finetune(a) => {
            let snapshot = a.from.join("config.txt");
            if snapshot.is_file() {
                cfg = inherit_pretrain(&snapshot, cli.config.as_deref())?;
            }
            set_opt(&mut cfg, "algo", &a.algo)?;
            set_path(&mut cfg, "data", &a.data)?;
            set_opt(&mut cfg, "env", &a.env)?;
            set_opt(&mut cfg, "online-steps", &a.steps)?;
            set_opt(&mut cfg, "kq", &a.kq)?;
            set_opt(&mut cfg, "krho", &a.krho)?;
            set_opt(&mut cfg, "alpha-p", &a.alpha_p)?;
            set_opt(&mut cfg, "seeds", &a.seeds)?;
            set_opt(&mut cfg, "eval-every", &a.eval_every)?;
            if a.seeds.is_none() {
                if let Ok(s) = std::env::var("BAQ_SEED") {
                    cfg.set("seeds", &s)?;
                }
            }
            cfg.validate()?;
            let ds = load_configured_dataset(&cfg)?;
            let spec = EnvKind::by_name(&cfg.env)?.spec()?;
            let params = AgentParams::from_config(&cfg, &spec);
            let agent = Agent::load(&a.from, cfg.algo.base, spec, params)?;
            let bc = a.bc.as_ref().map(load_policy).transpose()?;
            ensure_dir(&a.out)?;
            for &seed in &cfg.seeds {
                let outcome = run_finetune(&cfg, agent.clone(), bc.as_ref(), &ds, seed)?;
                let dir = a.out.join(format!("{}-seed{seed}", cfg.algo));
                outcome.record.save(&dir)?;
                println!(
                    "{} seed {seed}: final normalized score {:.2} ({} batches) -> {}",
                    cfg.algo,
                    outcome.record.final_score().unwrap_or(f64::NAN),
                    outcome.batches_consumed,
                    dir.display()
                );
            }
        }
        Command::Sweep(a) => {
            set_opt(&mut cfg, "algo", &a.algo)?;
            set_opt(&mut cfg, "env", &a.env)?;
            set_opt(&mut cfg, "tier", &a.tier)?;
            set_path(&mut cfg, "data", &a.data)?;
            set_opt(&mut cfg, "seeds", &a.seeds)?;
            set_opt(&mut cfg, "offline-steps", &a.offline_steps)?;
            set_opt(&mut cfg, "online-steps", &a.online_steps)?;
            set_opt(&mut cfg, "bc-steps", &a.bc_steps)?;
            set_opt(&mut cfg, "eval-every", &a.eval_every)?;
            let kq: Vec<f64> = parse_floats("kq-list", &a.kq_list)?;
            let krho: Vec<f64> = parse_floats("krho-list", &a.krho_list)?;
            let mut bench = Workbench::new();
            let map = grid_sweep(&mut bench, &cfg, &kq, &krho)?;
            map.write_csv(&a.out)?;
            print!("{}", map.to_csv());
        }
        Command::Plot(a) => {
            let mut records = Vec::new();
            for p in &a.runs {
                collect_runs(p, &mut records)?;
            }
            let csv = emit_plot(&records, &a.out)?;
            println!(
                "plotted {} runs to {} ({})",
                records.len(),
                a.out.display(),
                csv.display()
            );
        }
    }
    Ok(())
}

fn parse_floats(key: &str, list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::config(format!("invalid number '{s}' in --{key}")))
        })
        .collect()
}
