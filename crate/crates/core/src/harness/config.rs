use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{So2Params, SufParams};
use crate::error::{Error, Result};
use crate::losses::{CqlParams, IqlParams};
use crate::mdp::Tier;
use crate::nn::{DEFAULT_HIDDEN, DEFAULT_POLYAK};

/// Offline RL algorithm underneath every variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseAlgo {
    Cql,
    Iql,
}

impl BaseAlgo {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseAlgo::Cql => "cql",
            BaseAlgo::Iql => "iql",
        }
    }
}

/// Fine-tuning strategy applied on top of a base algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Base,
    Baq,
    So2,
    Suf,
    /// Priority sampling only.
    OursS,
    /// Weighted losses only.
    OursQ,
}

impl Variant {
    fn prefix(self) -> &'static str {
        match self {
            Variant::Base => "",
            Variant::Baq => "baq-",
            Variant::So2 => "so2-",
            Variant::Suf => "suf-",
            Variant::OursS => "ours-s-",
            Variant::OursQ => "ours-q-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Algo {
    pub variant: Variant,
    pub base: BaseAlgo,
}

impl Algo {
    pub const fn new(variant: Variant, base: BaseAlgo) -> Self {
        Self { variant, base }
    }

    pub fn weighted_by_default(self) -> bool {
        matches!(self.variant, Variant::Baq | Variant::OursQ)
    }

    pub fn prioritized_by_default(self) -> bool {
        matches!(self.variant, Variant::Baq | Variant::OursS)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.variant.prefix(), self.base.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rest, base) = if let Some(r) = s.strip_suffix("cql") {
            (r, BaseAlgo::Cql)
        } else if let Some(r) = s.strip_suffix("iql") {
            (r, BaseAlgo::Iql)
        } else {
            return Err(Error::config(format!("unknown algo tag '{s}'")));
        };
        let variant = match rest {
            "" => Variant::Base,
            "baq-" => Variant::Baq,
            "so2-" => Variant::So2,
            "suf-" => Variant::Suf,
            "ours-s-" => Variant::OursS,
            "ours-q-" => Variant::OursQ,
            _ => return Err(Error::config(format!("unknown algo tag '{s}'"))),
        };
        Ok(Self { variant, base })
    }
}

/// How fine-tuning minibatches are drawn from the replay buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Uniform,
    Priority,
}

/// `(k_q, k_rho)` by dataset regime: large datasets `(1, 2)`, small replay
/// datasets `(2, 1)`, medium `(2, 0.5)` for CQL and `(0.5, 0.5)` for IQL.
pub fn default_kq_krho(tier: Tier, base: BaseAlgo) -> (f64, f64) {
    match (tier, base) {
        (Tier::MediumReplay, _) => (2.0, 1.0),
        (Tier::Medium, BaseAlgo::Cql) => (2.0, 0.5),
        (Tier::Medium, BaseAlgo::Iql) => (0.5, 0.5),
        _ => (1.0, 2.0),
    }
}

/// Every knob of one offline-to-online experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub tier: Tier,
    pub algo: Algo,
    /// 0 selects the tier's default size.
    pub dataset_size: usize,
    pub data_seed: u64,
    pub data_path: Option<PathBuf>,
    pub bc_steps: usize,
    pub offline_steps: usize,
    pub online_steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub k_q: Option<f64>,
    pub k_rho: Option<f64>,
    pub alpha_p: f64,
    pub sampling: Option<Sampling>,
    pub weighted: Option<bool>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub polyak: f64,
    pub gamma: Option<f64>,
    pub cql: CqlParams,
    pub iql: IqlParams,
    pub so2: So2Params,
    /// `None` uses the branch default: CQL's entropy coefficient, 0 for IQL.
    pub so2_beta: Option<f64>,
    pub suf: SufParams,
    /// `None` sizes the buffer to hold the dataset plus every online step.
    pub buffer_capacity: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "point-mass".into(),
            tier: Tier::Medium,
            algo: Algo::new(Variant::Baq, BaseAlgo::Cql),
            dataset_size: 0,
            data_seed: 0,
            data_path: None,
            bc_steps: 100_000,
            offline_steps: 100_000,
            online_steps: 30_000,
            eval_every: 1000,
            eval_episodes: 10,
            seeds: vec![0, 1, 2, 3],
            k_q: None,
            k_rho: None,
            alpha_p: 1.0,
            sampling: None,
            weighted: None,
            batch_size: 256,
            learning_rate: 3e-4,
            hidden: DEFAULT_HIDDEN.to_vec(),
            polyak: DEFAULT_POLYAK,
            gamma: None,
            cql: CqlParams::default(),
            iql: IqlParams::default(),
            so2: So2Params::default(),
            so2_beta: None,
            suf: SufParams::default(),
            buffer_capacity: None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Small networks and budgets that run the full protocol on one core in
    /// minutes rather than hours.
    pub fn desk(env: &str, tier: Tier, algo: Algo) -> Self {
        Self {
            env: env.into(),
            tier,
            algo,
            bc_steps: 5_000,
            offline_steps: 10_000,
            batch_size: 32,
            hidden: vec![32, 32],
            cql: CqlParams {
                n_action_samples: 4,
                ..CqlParams::default()
            },
            ..Self::default()
        }
    }

    pub fn k_q(&self) -> f64 {
        self.k_q
            .unwrap_or_else(|| default_kq_krho(self.tier, self.algo.base).0)
    }

    pub fn k_rho(&self) -> f64 {
        self.k_rho
            .unwrap_or_else(|| default_kq_krho(self.tier, self.algo.base).1)
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
            .unwrap_or(if self.algo.prioritized_by_default() {
                Sampling::Priority
            } else {
                Sampling::Uniform
            })
    }

    pub fn weighted(&self) -> bool {
        self.weighted.unwrap_or(self.algo.weighted_by_default())
    }

    /// SO2 parameters with the branch's entropy coefficient filled in.
    pub fn so2_params(&self) -> So2Params {
        let beta = self.so2_beta.unwrap_or(match self.algo.base {
            BaseAlgo::Cql => self.cql.entropy_coeff,
            BaseAlgo::Iql => 0.0,
        });
        So2Params { beta, ..self.so2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.online_steps == 0 && self.offline_steps == 0 && self.bc_steps == 0 {
            return Err(Error::config("at least one training phase must have steps"));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.batch_size == 0 {
            return Err(Error::config(
                "eval_every, eval_episodes and batch_size must be positive",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seed list must be non-empty"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer sizes must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.polyak > 0.0 && self.polyak <= 1.0) {
            return Err(Error::config(
                "learning rate must be positive and polyak in (0, 1]",
            ));
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::config(format!("gamma must lie in [0, 1), got {g}")));
            }
        }
        if !(self.k_q() > 0.0) || !(self.k_rho() > 0.0) || !(self.alpha_p > 0.0) {
            return Err(Error::config("k_q, k_rho and alpha_p must be positive"));
        }
        self.cql.validate()?;
        self.iql.validate()?;
        self.so2_params().validate()?;
        self.suf.validate()
    }

    /// Applies one `key = value` setting. Dashes and underscores in keys are
    /// interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        let k = key.as_str();
        match k {
            "env" => self.env = v.to_string(),
            "tier" => self.tier = parse(k, v)?,
            "algo" => self.algo = v.parse()?,
            "dataset-size" | "n" => self.dataset_size = parse(k, v)?,
            "data-seed" => self.data_seed = parse(k, v)?,
            "data" => self.data_path = Some(PathBuf::from(v)),
            "bc-steps" => self.bc_steps = parse(k, v)?,
            "offline-steps" => self.offline_steps = parse(k, v)?,
            "online-steps" | "steps" => self.online_steps = parse(k, v)?,
            "eval-every" => self.eval_every = parse(k, v)?,
            "eval-episodes" => self.eval_episodes = parse(k, v)?,
            "seeds" => self.seeds = parse_list(k, v)?,
            "kq" | "k-q" => self.k_q = Some(parse(k, v)?),
            "krho" | "k-rho" => self.k_rho = Some(parse(k, v)?),
            "alpha-p" => self.alpha_p = parse(k, v)?,
            "sampling" => {
                self.sampling = Some(match v {
                    "uniform" => Sampling::Uniform,
                    "priority" => Sampling::Priority,
                    _ => return Err(Error::config(format!("invalid sampling '{v}'"))),
                })
            }
            "weighted" => self.weighted = Some(parse(k, v)?),
            "batch-size" => self.batch_size = parse(k, v)?,
            "lr" | "learning-rate" => self.learning_rate = parse(k, v)?,
            "hidden" => self.hidden = parse_list(k, v)?,
            "polyak" => self.polyak = parse(k, v)?,
            "gamma" => self.gamma = Some(parse(k, v)?),
            "cql-alpha" => self.cql.alpha = parse(k, v)?,
            "cql-samples" => self.cql.n_action_samples = parse(k, v)?,
            "entropy-coeff" => self.cql.entropy_coeff = parse(k, v)?,
            "iql-tau" | "tau" => self.iql.tau = parse(k, v)?,
            "awr-lambda" => self.iql.awr_lambda = parse(k, v)?,
            "awr-clip" => self.iql.awr_clip = parse(k, v)?,
            "so2-sigma" => self.so2.sigma = parse(k, v)?,
            "so2-clip" => self.so2.clip_c = parse(k, v)?,
            "so2-nupc" => self.so2.n_upc = parse(k, v)?,
            "so2-beta" => self.so2_beta = Some(parse(k, v)?),
            "suf-gc" => self.suf.g_critic = parse(k, v)?,
            "suf-ga" => self.suf.g_actor = parse(k, v)?,
            "capacity" => self.buffer_capacity = Some(parse(k, v)?),
            "out" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    n + 1
                ))
            })?;
            self.set(k, v)
                .map_err(|e| Error::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Every setting as `key = value` lines, readable by [`Self::apply_text`].
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("env = {}", self.env),
            format!("tier = {}", self.tier),
            format!("algo = {}", self.algo),
            format!("dataset-size = {}", self.dataset_size),
            format!("data-seed = {}", self.data_seed),
        ];
        if let Some(p) = &self.data_path {
            lines.push(format!("data = {}", p.display()));
        }
        lines.extend([
            format!("bc-steps = {}", self.bc_steps),
            format!("offline-steps = {}", self.offline_steps),
            format!("online-steps = {}", self.online_steps),
            format!("eval-every = {}", self.eval_every),
            format!("eval-episodes = {}", self.eval_episodes),
            format!("seeds = {}", join(&self.seeds)),
            format!("kq = {}", self.k_q()),
            format!("krho = {}", self.k_rho()),
            format!("alpha-p = {}", self.alpha_p),
            format!(
                "sampling = {}",
                match self.sampling() {
                    Sampling::Uniform => "uniform",
                    Sampling::Priority => "priority",
                }
            ),
            format!("weighted = {}", self.weighted()),
            format!("batch-size = {}", self.batch_size),
            format!("lr = {}", self.learning_rate),
            format!("hidden = {}", join(&self.hidden)),
            format!("polyak = {}", self.polyak),
        ]);
        if let Some(g) = self.gamma {
            lines.push(format!("gamma = {g}"));
        }
        lines.extend([
            format!("cql-alpha = {}", self.cql.alpha),
            format!("cql-samples = {}", self.cql.n_action_samples),
            format!("entropy-coeff = {}", self.cql.entropy_coeff),
            format!("iql-tau = {}", self.iql.tau),
            format!("awr-lambda = {}", self.iql.awr_lambda),
            format!("awr-clip = {}", self.iql.awr_clip),
            format!("so2-sigma = {}", self.so2.sigma),
            format!("so2-clip = {}", self.so2.clip_c),
            format!("so2-nupc = {}", self.so2.n_upc),
            format!("so2-beta = {}", self.so2_params().beta),
            format!("suf-gc = {}", self.suf.g_critic),
            format!("suf-ga = {}", self.suf.g_actor),
        ]);
        if let Some(c) = self.buffer_capacity {
            lines.push(format!("capacity = {c}"));
        }
        lines.push(format!("out = {}", self.out_dir.display()));
        lines.join("\n") + "\n"
    }
}
