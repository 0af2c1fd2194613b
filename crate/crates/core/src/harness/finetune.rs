use std::time::Instant;

use super::agent::Agent;
use super::config::{ExperimentConfig, Sampling, Variant};
use super::record::{at_step, derive_seed, evaluate, RunRecord, STREAM_EVAL, STREAM_ONLINE};
use crate::baselines::suf_schedule;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::losses::{behavior_weights, WeightParams};
use crate::mdp::{seeded, Actor, Dataset, MetricsRow, Transition};
use crate::nn::GaussianPolicy;
use crate::replay::{PriorityBuffer, PriorityParams};

/// Fine-tuned agent, its evaluation record and update accounting.
#[derive(Clone, Debug)]
pub struct FinetuneOutcome {
    pub agent: Agent,
    pub record: RunRecord,
    pub batches_consumed: u64,
    pub critic_updates: u64,
    pub actor_updates: u64,
}

/// Online fine-tuning from an offline-pretrained agent.
///
/// Each environment step stores the new transition (with its BC-divergence
/// priority when prioritized), then runs the variant's critic and actor
/// updates on minibatches drawn from the mixed offline/online buffer,
/// weighting residuals by `w(s, a)` when enabled. The deterministic policy is
/// evaluated at step 0 and every `eval_every` steps on a fixed evaluation seed.
pub fn run_finetune(
    cfg: &ExperimentConfig,
    mut agent: Agent,
    pi_bc: Option<&GaussianPolicy>,
    ds: &Dataset,
    seed: u64,
) -> Result<FinetuneOutcome> {
    cfg.validate()?;
    let kind = EnvKind::by_name(&cfg.env)?;
    let mut env = kind.make()?;
    let spec = env.spec().clone();
    if agent.base != cfg.algo.base {
        return Err(Error::config(format!(
            "pretrained agent is {}, config asks for {}",
            agent.base.as_str(),
            cfg.algo
        )));
    }
    if (agent.spec.state_dim, agent.spec.action_dim) != (spec.state_dim, spec.action_dim)
        || (ds.state_dim, ds.action_dim) != (spec.state_dim, spec.action_dim)
    {
        return Err(Error::config(format!(
            "agent, dataset and environment {} disagree on dimensions",
            cfg.env
        )));
    }
    let weighted = cfg.weighted();
    let prioritized = cfg.sampling() == Sampling::Priority;
    let pi_bc = if weighted || prioritized {
        let p = pi_bc.ok_or_else(|| {
            Error::config(format!("{} needs a behavior-cloning policy", cfg.algo))
        })?;
        if (p.state_dim(), p.action_dim()) != (spec.state_dim, spec.action_dim) {
            return Err(Error::config(
                "behavior-cloning policy does not match the environment",
            ));
        }
        Some(p)
    } else {
        None
    };
    let wp = WeightParams::new(cfg.k_q())?;
    let pp = PriorityParams::new(cfg.k_rho(), cfg.alpha_p)?;
    let so2 = cfg.so2_params();
    let noise = (cfg.algo.variant == Variant::So2).then_some(&so2);

    let started = Instant::now();
    let capacity = cfg
        .buffer_capacity
        .unwrap_or(ds.len() + cfg.online_steps + 1);
    let mut buffer = PriorityBuffer::new(capacity)?;
    buffer.push_offline(ds)?;

    let anchors = kind.anchors()?;
    let eval_seed = derive_seed(seed, STREAM_EVAL);
    let mut series = vec![MetricsRow::new(
        0,
        &evaluate(&agent, &kind, cfg.eval_episodes, eval_seed, &anchors)?,
    )];

    let mut rng = seeded(derive_seed(seed, STREAM_ONLINE));
    let mut batches_consumed = 0;
    let mut critic_updates = 0;
    let mut actor_updates = 0;
    let mut state = env.reset(&mut rng);
    let mut t = 0;
    for step in 0..cfg.online_steps {
        let action = spec.canonical_action(&agent.policy.act(&state, false, &mut rng));
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::numeric(
                format!("online step {step}"),
                "policy produced a non-finite action",
            ));
        }
        let out = env.step(&action, &mut rng);
        let transition = Transition {
            state: std::mem::take(&mut state),
            action,
            reward: out.reward,
            next_state: out.next_state.clone(),
            done: out.terminal,
        };
        match (prioritized, pi_bc) {
            (true, Some(p)) => {
                buffer.push_online(transition, p, &pp)?;
            }
            _ => buffer.push_with_priority(transition, 1.0)?,
        }
        t += 1;
        if out.terminal || t == spec.max_episode_steps {
            state = env.reset(&mut rng);
            t = 0;
        } else {
            state = out.next_state;
        }

        let (n_critic, do_actor) = match cfg.algo.variant {
            Variant::So2 => (so2.n_upc, true),
            Variant::Suf => suf_schedule(step as u64, &cfg.suf),
            _ => (1, true),
        };
        let mut last = None;
        for _ in 0..n_critic {
            let idx = if prioritized {
                buffer.sample_indices(cfg.batch_size, &mut rng)?
            } else {
                buffer.sample_uniform_indices(cfg.batch_size, &mut rng)?
            };
            let batch = buffer.batch(&idx)?;
            batches_consumed += 1;
            let weights = match (weighted, pi_bc) {
                (true, Some(p)) => Some(behavior_weights(
                    p,
                    batch.states.view(),
                    batch.actions.view(),
                    &wp,
                )?),
                _ => None,
            };
            agent
                .critic_update(&batch, weights.as_deref(), noise, &mut rng)
                .map_err(|e| at_step(e, "online", step))?;
            critic_updates += 1;
            last = Some(batch);
        }
        if do_actor {
            if let Some(batch) = &last {
                agent
                    .actor_update(batch, &mut rng)
                    .map_err(|e| at_step(e, "online", step))?;
                actor_updates += 1;
            }
        }
        if (step + 1) % cfg.eval_every == 0 {
            let report = evaluate(&agent, &kind, cfg.eval_episodes, eval_seed, &anchors)?;
            series.push(MetricsRow::new(step as u64 + 1, &report));
        }
    }
    let record = RunRecord {
        label: cfg.algo.to_string(),
        seed,
        config: cfg.to_text(),
        series,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        checkpoints: Vec::new(),
    };
    Ok(FinetuneOutcome {
        agent,
        record,
        batches_consumed,
        critic_updates,
        actor_updates,
    })
}
