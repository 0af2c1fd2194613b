use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::config::{BaseAlgo, ExperimentConfig};
use crate::baselines::{perturb_actions, So2Params};
use crate::error::{Error, Result};
use crate::losses::{
    awr_policy_loss, cql_loss, expectile_value_loss, iql_q_loss, min_q, sac_actor_loss,
    soft_bellman_targets, CqlParams, IqlParams, PenaltyActions,
};
use crate::mdp::{Actor, Batch, EnvSpec, Prng};
use crate::nn::{
    load_net, load_policy, save_net, save_policy, soft_update, Activation, Adam, DenseNet,
    GaussianPolicy,
};

/// Learning hyperparameters shared by both base algorithms.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    pub gamma: f64,
    pub polyak: f64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub cql: CqlParams,
    pub iql: IqlParams,
}

impl AgentParams {
    pub fn from_config(cfg: &ExperimentConfig, spec: &EnvSpec) -> Self {
        Self {
            gamma: cfg.gamma.unwrap_or(spec.gamma),
            polyak: cfg.polyak,
            learning_rate: cfg.learning_rate,
            hidden: cfg.hidden.clone(),
            cql: cfg.cql,
            iql: cfg.iql,
        }
    }
}

/// Losses observed in one critic update (the value loss is IQL only).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CriticStats {
    pub critic_loss: f64,
    pub value_loss: f64,
}

/// Actor, twin critics with Polyak targets and, for IQL, a state-value network.
#[derive(Clone, Debug)]
pub struct Agent {
    pub base: BaseAlgo,
    pub spec: EnvSpec,
    pub params: AgentParams,
    pub policy: GaussianPolicy,
    pub critics: [DenseNet; 2],
    pub targets: [DenseNet; 2],
    pub value: Option<DenseNet>,
    policy_opt: Adam,
    critic_opts: [Adam; 2],
    value_opt: Option<Adam>,
}

const FILES: [&str; 6] = [
    "policy.baqn",
    "q1.baqn",
    "q2.baqn",
    "q1_target.baqn",
    "q2_target.baqn",
    "value.baqn",
];

impl Agent {
    /// CQL gets a tanh-squashed actor; IQL an unsquashed one, since its
    /// weighted likelihood is evaluated at dataset actions on the box edge.
    pub fn new(base: BaseAlgo, spec: EnvSpec, params: AgentParams, rng: &mut Prng) -> Result<Self> {
        spec.validate()?;
        let squash = base == BaseAlgo::Cql;
        let policy = GaussianPolicy::new(
            spec.state_dim,
            &params.hidden,
            spec.action_low.clone(),
            spec.action_high.clone(),
            squash,
            rng,
        )?;
        let mut q_sizes = vec![spec.state_dim + spec.action_dim];
        q_sizes.extend(&params.hidden);
        q_sizes.push(1);
        let q1 = DenseNet::new(&q_sizes, Activation::Relu, rng)?;
        let q2 = DenseNet::new(&q_sizes, Activation::Relu, rng)?;
        let value = match base {
            BaseAlgo::Cql => None,
            BaseAlgo::Iql => {
                let mut v_sizes = vec![spec.state_dim];
                v_sizes.extend(&params.hidden);
                v_sizes.push(1);
                Some(DenseNet::new(&v_sizes, Activation::Relu, rng)?)
            }
        };
        Ok(Self::assemble(
            base,
            spec,
            params,
            policy,
            [q1.clone(), q2.clone()],
            [q1, q2],
            value,
        ))
    }

    fn assemble(
        base: BaseAlgo,
        spec: EnvSpec,
        params: AgentParams,
        policy: GaussianPolicy,
        critics: [DenseNet; 2],
        targets: [DenseNet; 2],
        value: Option<DenseNet>,
    ) -> Self {
        let lr = params.learning_rate;
        Self {
            policy_opt: Adam::new(&policy, lr),
            critic_opts: [Adam::new(&critics[0], lr), Adam::new(&critics[1], lr)],
            value_opt: value.as_ref().map(|v| Adam::new(v, lr)),
            base,
            spec,
            params,
            policy,
            critics,
            targets,
            value,
        }
    }

    fn value_net(&self) -> Result<&DenseNet> {
        self.value
            .as_ref()
            .ok_or_else(|| Error::State("iql agent without a value network".into()))
    }

    /// One gradient step on both critics (and the value network for IQL),
    /// followed by a Polyak step on the targets. `weights` scale the TD or
    /// value residuals; `noise` perturbs the bootstrap actions.
    pub fn critic_update(
        &mut self,
        batch: &Batch,
        weights: Option<&[f64]>,
        noise: Option<&So2Params>,
        rng: &mut Prng,
    ) -> Result<CriticStats> {
        let mut stats = CriticStats::default();
        match self.base {
            BaseAlgo::Cql => {
                let beta = noise.map_or(self.params.cql.entropy_coeff, |p| p.beta);
                let targets = soft_bellman_targets(
                    &[&self.targets[0], &self.targets[1]],
                    &self.policy,
                    batch,
                    self.params.gamma,
                    beta,
                    &self.spec,
                    noise,
                    rng,
                )?;
                let penalty = PenaltyActions::draw(
                    &self.policy,
                    batch.states.view(),
                    self.params.cql.n_action_samples,
                    &self.spec,
                    rng,
                )?;
                for k in 0..2 {
                    let loss = cql_loss(
                        &self.critics[k],
                        batch,
                        &targets,
                        &penalty,
                        self.params.cql.alpha,
                        weights,
                    )?;
                    self.critic_opts[k].step(&mut self.critics[k], &loss.grads)?;
                    stats.critic_loss += loss.total / 2.0;
                }
            }
            BaseAlgo::Iql => {
                let q_vals = match noise {
                    Some(p) => {
                        let mut a = batch.actions.clone();
                        perturb_actions(&mut a, p, &self.spec, rng);
                        min_q(
                            &[&self.targets[0], &self.targets[1]],
                            batch.states.view(),
                            a.view(),
                        )?
                    }
                    None => min_q(
                        &[&self.targets[0], &self.targets[1]],
                        batch.states.view(),
                        batch.actions.view(),
                    )?,
                };
                let (v_loss, v_grads) = expectile_value_loss(
                    self.value_net()?,
                    batch.states.view(),
                    &q_vals,
                    self.params.iql.tau,
                    weights,
                )?;
                let value = self.value.as_mut().expect("checked above");
                self.value_opt
                    .as_mut()
                    .expect("iql optimizer")
                    .step(value, &v_grads)?;
                stats.value_loss = v_loss;
                let value = self.value.as_ref().expect("checked above");
                for k in 0..2 {
                    let (loss, grads) =
                        iql_q_loss(&self.critics[k], value, batch, self.params.gamma, weights)?;
                    self.critic_opts[k].step(&mut self.critics[k], &grads)?;
                    stats.critic_loss += loss / 2.0;
                }
            }
        }
        for k in 0..2 {
            soft_update(&mut self.targets[k], &self.critics[k], self.params.polyak);
        }
        Ok(stats)
    }

    /// One policy step: reparameterized soft actor loss for CQL, advantage
    /// weighted regression for IQL. Returns the loss.
    pub fn actor_update(&mut self, batch: &Batch, rng: &mut Prng) -> Result<f64> {
        let (loss, grads) = match self.base {
            BaseAlgo::Cql => sac_actor_loss(
                &self.policy,
                &[&self.critics[0], &self.critics[1]],
                batch.states.view(),
                self.params.cql.entropy_coeff,
                rng,
            )?,
            BaseAlgo::Iql => awr_policy_loss(
                &self.policy,
                &[&self.targets[0], &self.targets[1]],
                self.value_net()?,
                batch,
                &self.params.iql,
            )?,
        };
        self.policy_opt.step(&mut self.policy, &grads)?;
        self.policy.project();
        Ok(loss)
    }

    /// `min_k Q_k(s, a)` for a batch of states and actions.
    pub fn q_values(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Result<Vec<f64>> {
        min_q(
            &[&self.critics[0], &self.critics[1]],
            states.view(),
            actions.view(),
        )
    }

    /// Writes every network into `dir` and returns the file paths.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths: Vec<PathBuf> = FILES.iter().map(|f| dir.join(f)).collect();
        save_policy(&self.policy, &paths[0])?;
        save_net(&self.critics[0], &paths[1])?;
        save_net(&self.critics[1], &paths[2])?;
        save_net(&self.targets[0], &paths[3])?;
        save_net(&self.targets[1], &paths[4])?;
        let mut written = paths[..5].to_vec();
        if let Some(v) = &self.value {
            save_net(v, &paths[5])?;
            written.push(paths[5].clone());
        }
        Ok(written)
    }

    /// Restores networks saved by [`Agent::save`], with fresh optimizer state.
    pub fn load(
        dir: impl AsRef<Path>,
        base: BaseAlgo,
        spec: EnvSpec,
        params: AgentParams,
    ) -> Result<Self> {
        let dir = dir.as_ref();
        let policy = load_policy(dir.join(FILES[0]))?;
        if policy.state_dim() != spec.state_dim || policy.action_dim() != spec.action_dim {
            return Err(Error::config(format!(
                "checkpoint policy is {}->{}, environment is {}->{}",
                policy.state_dim(),
                policy.action_dim(),
                spec.state_dim,
                spec.action_dim
            )));
        }
        if policy.squash() != (base == BaseAlgo::Cql) {
            return Err(Error::config(format!(
                "checkpoint in {} was not trained by {}",
                dir.display(),
                base.as_str()
            )));
        }
        let critics = [load_net(dir.join(FILES[1]))?, load_net(dir.join(FILES[2]))?];
        let targets = [load_net(dir.join(FILES[3]))?, load_net(dir.join(FILES[4]))?];
        let value_path = dir.join(FILES[5]);
        let value = match base {
            BaseAlgo::Iql => Some(load_net(&value_path)?),
            BaseAlgo::Cql => None,
        };
        for q in critics.iter().chain(&targets) {
            if q.input_dim() != spec.state_dim + spec.action_dim || q.output_dim() != 1 {
                return Err(Error::config(
                    "checkpoint critic shape does not match the environment",
                ));
            }
        }
        Ok(Self::assemble(
            base, spec, params, policy, critics, targets, value,
        ))
    }
}

impl Actor for Agent {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        self.policy.act(state, deterministic, rng)
    }
}
