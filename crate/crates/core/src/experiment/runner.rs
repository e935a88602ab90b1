use std::sync::Arc;

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EpisodeRecord, EvalRecord, ExperimentConfig, ExperimentError, Mode, PartnerSource, RunLog};
use crate::distral::{shaping_term, DistilledPolicy};
use crate::grid::{Action, GridEnv, GridMap, Observation};
use crate::ot::{build_atoms, proxy_rewards, sinkhorn, AtomSet, ProxyRewardConfig};
use crate::sac::{Experience, SacAgent, SacConfig};
use crate::trajectory::{Trajectory, Transition};

const EVAL_STREAM: u64 = 1 << 32;
const PARTNER_STREAM: u64 = 1 << 40;
const DISTRAL_STREAM: u64 = (1 << 40) + 1;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "OT_DISTILL_THREADS";

/// Random stream `stream` of `seed`. Task `i` trains on stream `i`, so its
/// randomness does not depend on how many other tasks exist.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trained state of one seed.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub agents: Vec<SacAgent>,
    pub default_policy: Option<DistilledPolicy>,
}

/// Records plus the trained agents of every seed.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    pub seeds: Vec<SeedOutcome>,
}

struct Worker {
    env: GridEnv,
    agent: SacAgent,
    rng: ChaCha8Rng,
    eval_rng: ChaCha8Rng,
    steps: usize,
    episodes: usize,
    next_eval: usize,
}

/// Samples one episode with the current stochastic policy.
pub fn rollout<R: Rng + ?Sized>(agent: &SacAgent, env: &mut GridEnv, rng: &mut R) -> Result<Trajectory, ExperimentError> {
    let mut traj = Trajectory::new(env.task());
    let mut obs = env.reset(rng);
    while !env.is_done() {
        let a = agent.act(&obs.to_array(), rng, false)?;
        let action = Action::from_index(a).expect("policy has four outputs");
        let step = env.step(action).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
        traj.steps.push(Transition {
            obs,
            action,
            reward: step.reward,
            next_obs: step.obs,
            terminal: step.terminal,
            done: step.done,
        });
        obs = step.obs;
    }
    Ok(traj)
}

fn greedy_episode(agent: &SacAgent, env: &mut GridEnv, mut obs: Observation) -> Result<f64, ExperimentError> {
    let mut ret = 0.0;
    while !env.is_done() {
        let a = agent.greedy(&obs.to_array())?;
        let step = env.step(Action::from_index(a).expect("four actions")).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
        ret += step.reward;
        obs = step.obs;
    }
    Ok(ret)
}

/// Mean and sample standard deviation of greedy returns over `episodes`
/// episodes from random starts.
pub fn evaluate<R: Rng + ?Sized>(
    agent: &SacAgent,
    env: &GridEnv,
    episodes: usize,
    rng: &mut R,
) -> Result<(f64, f64), ExperimentError> {
    if episodes == 0 {
        return Err(ExperimentError::Config("evaluation needs at least one episode".into()));
    }
    let mut env = env.clone();
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let obs = env.reset(rng);
        returns.push(greedy_episode(agent, &mut env, obs)?);
    }
    Ok(mean_std(&returns))
}

/// Greedy return averaged exactly over the uniform start distribution.
pub fn evaluate_all_starts(agent: &SacAgent, env: &GridEnv) -> Result<f64, ExperimentError> {
    let mut env = env.clone();
    let starts = env.start_states().to_vec();
    if starts.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in &starts {
        let obs = env.reset_to(*s);
        total += greedy_episode(agent, &mut env, obs)?;
    }
    Ok(total / starts.len() as f64)
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn proxy_config(cfg: &ExperimentConfig) -> ProxyRewardConfig {
    ProxyRewardConfig {
        sigma: cfg.proxy.sigma,
        beta: cfg.proxy.beta,
        horizon: cfg.horizon,
        state_dim: Observation::DIM,
        action_dim: Action::COUNT,
    }
}

fn ot_shaping(
    cfg: &ExperimentConfig,
    task: usize,
    traj: &Trajectory,
    latest: &[Option<Trajectory>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, ExperimentError> {
    let numeric = |e: crate::ot::OtError| ExperimentError::Numeric(e.to_string());
    let reward_cfg = proxy_config(cfg);
    let source = build_atoms(traj).map_err(numeric)?;
    let others: Vec<usize> = (0..latest.len()).filter(|&j| j != task && latest[j].is_some()).collect();
    if others.is_empty() {
        return Err(ExperimentError::Config(format!("task {task} has no partner trajectory")));
    }
    let partner_atoms = |j: usize| build_atoms(latest[j].as_ref().expect("filtered")).map_err(numeric);
    let targets: Vec<AtomSet> = match cfg.sharing.partner_source {
        PartnerSource::Random => {
            let k = cfg.sharing.partners.min(others.len());
            index::sample(rng, others.len(), k)
                .into_iter()
                .map(|p| partner_atoms(others[p]))
                .collect::<Result<_, _>>()?
        }
        PartnerSource::Aggregate => {
            let sets = others.iter().map(|&j| partner_atoms(j)).collect::<Result<Vec<_>, _>>()?;
            vec![AtomSet::pooled(&sets).map_err(numeric)?]
        }
    };
    let mut total = vec![0.0; traj.len()];
    for target in &targets {
        let plan = sinkhorn(&source, target, &cfg.sinkhorn).map_err(numeric)?;
        let (c, _) = plan.contributions();
        for (t, s) in total.iter_mut().zip(proxy_rewards(&c, &reward_cfg)) {
            *t += s;
        }
    }
    if targets.len() > 1 {
        let k = targets.len() as f64;
        total.iter_mut().for_each(|t| *t /= k);
    }
    Ok(total)
}

fn distral_shaping(
    cfg: &ExperimentConfig,
    agent: &SacAgent,
    p0: &DistilledPolicy,
    traj: &Trajectory,
) -> Result<Vec<f64>, ExperimentError> {
    let x = Array2::from_shape_fn((traj.len(), 2), |(i, j)| traj.steps[i].obs.to_array()[j]);
    let lp = agent.log_probs(x.view())?;
    let lp0 = p0.log_probs(&x).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
    Ok(traj
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let a = s.action.index();
            shaping_term(lp[[i, a]] as f64, lp0[[i, a]] as f64, &cfg.distral)
        })
        .collect())
}

fn distill_step(workers: &[Worker], p0: &mut DistilledPolicy, batch: usize, rng: &mut ChaCha8Rng) -> Result<(), ExperimentError> {
    if workers.iter().any(|w| w.agent.buffer.is_empty()) {
        return Ok(());
    }
    let mut obs = Vec::with_capacity(batch);
    let mut actions = Vec::with_capacity(batch);
    for _ in 0..batch {
        let w = &workers[rng.random_range(0..workers.len())];
        let e = w.agent.buffer.sample(1, rng)?[0];
        obs.push(e.obs);
        actions.push(e.action);
    }
    p0.distill_update(&obs, &actions).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
    Ok(())
}

/// Trains every task of one seed to `cfg.timesteps` environment steps.
pub fn run_seed(cfg: &ExperimentConfig, map: &Arc<GridMap>, seed: u64) -> Result<(Vec<EpisodeRecord>, Vec<EvalRecord>, SeedOutcome), ExperimentError> {
    let n = cfg.task_count(map);
    let scheme = cfg.reward_scheme(map);
    let sac_cfg = match cfg.mode {
        // the entropy bonus lives in the shaped reward instead
        Mode::Distral => SacConfig { alpha: 0.0, ..cfg.sac },
        _ => cfg.sac,
    };
    let mut workers = Vec::with_capacity(n);
    for task in 0..n {
        let mut rng = stream_rng(seed, task as u64);
        let agent = SacAgent::new(sac_cfg, Observation::DIM, Action::COUNT, &mut rng)?;
        let env = GridEnv::new(map.clone(), task, scheme, cfg.horizon).map_err(|e| ExperimentError::Config(e.to_string()))?;
        workers.push(Worker {
            env,
            agent,
            rng,
            eval_rng: stream_rng(seed, EVAL_STREAM + task as u64),
            steps: 0,
            episodes: 0,
            next_eval: cfg.eval_cadence,
        });
    }
    let mut partner_rng = stream_rng(seed, PARTNER_STREAM);
    let mut distral_rng = stream_rng(seed, DISTRAL_STREAM);
    let mut p0 = match cfg.mode {
        Mode::Distral => {
            let dims = cfg.sac.layer_dims(Observation::DIM, Action::COUNT);
            Some(DistilledPolicy::new(&dims, cfg.distral.distill_lr, &mut distral_rng).map_err(|e| ExperimentError::Numeric(e.to_string()))?)
        }
        _ => None,
    };
    let mut latest: Vec<Option<Trajectory>> = vec![None; n];
    let mut episodes = Vec::new();
    let mut evals = Vec::new();

    loop {
        let active: Vec<usize> = (0..n).filter(|&i| workers[i].steps < cfg.timesteps).collect();
        if active.is_empty() {
            break;
        }
        // rollout phase
        let mut collected: Vec<(usize, Trajectory)> = Vec::new();
        for &i in &active {
            let w = &mut workers[i];
            for _ in 0..cfg.sharing.rollouts {
                if w.steps >= cfg.timesteps {
                    break;
                }
                let traj = rollout(&w.agent, &mut w.env, &mut w.rng)?;
                w.steps += traj.len();
                latest[i] = Some(traj.clone());
                collected.push((i, traj));
            }
        }
        // shaping phase, against immutable snapshots
        let mut shaped = Vec::with_capacity(collected.len());
        for (i, traj) in collected {
            let proxy = match cfg.mode {
                Mode::NoSharing => vec![0.0; traj.len()],
                Mode::OtSharing => ot_shaping(cfg, i, &traj, &latest, &mut partner_rng)?,
                Mode::Distral => distral_shaping(cfg, &workers[i].agent, p0.as_ref().expect("distral"), &traj)?,
            };
            shaped.push((i, traj, proxy));
        }
        // update phase
        for (i, traj, proxy) in shaped {
            let w = &mut workers[i];
            for (s, p) in traj.steps.iter().zip(&proxy) {
                w.agent.store(Experience {
                    obs: s.obs.to_array(),
                    action: s.action.index(),
                    reward: s.reward + p,
                    next_obs: s.next_obs.to_array(),
                    terminal: s.terminal,
                });
            }
            let (mut critic, mut policy, mut entropy) = (0.0, 0.0, 0.0);
            let mut updates = 0;
            for _ in 0..traj.len() {
                if !w.agent.ready() {
                    continue;
                }
                let st = w.agent.update(&mut w.rng)?;
                critic += 0.5 * (st.critic1_loss + st.critic2_loss);
                policy += st.policy_loss;
                entropy += st.entropy;
                updates += 1;
            }
            let per = |v: f64| if updates > 0 { v / updates as f64 } else { 0.0 };
            episodes.push(EpisodeRecord {
                seed,
                task: i,
                episode: w.episodes,
                env_steps: w.steps,
                ret: traj.env_return(),
                proxy_mean: proxy.iter().sum::<f64>() / traj.len() as f64,
                length: traj.len(),
                reached_goal: traj.reached_goal(),
                updates,
                critic_loss: per(critic),
                policy_loss: per(policy),
                entropy: per(entropy),
            });
            w.episodes += 1;
            while cfg.eval_cadence > 0 && w.steps >= w.next_eval {
                let (mean_return, std_return) = evaluate(&w.agent, &w.env, cfg.eval_episodes, &mut w.eval_rng)?;
                evals.push(EvalRecord { seed, task: i, env_steps: w.next_eval, mean_return, std_return });
                w.next_eval += cfg.eval_cadence;
            }
        }
        // distillation phase, single writer
        if let Some(p0) = p0.as_mut() {
            for _ in &active {
                distill_step(&workers, p0, cfg.distral.distill_batch, &mut distral_rng)?;
            }
        }
    }
    episodes.sort_by_key(|e| (e.task, e.episode));
    evals.sort_by_key(|e| (e.task, e.env_steps));
    let outcome = SeedOutcome { seed, agents: workers.into_iter().map(|w| w.agent).collect(), default_policy: p0 };
    Ok((episodes, evals, outcome))
}

/// Thread pool sized by [`THREADS_ENV`] when set, otherwise by rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ExperimentError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))
}

/// Runs `cfg.mode` over all seeds, in parallel across seeds. The result does
/// not depend on the number of threads.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let map = Arc::new(cfg.load_map()?);
    cfg.validate_with_map(&map)?;
    let pool = thread_pool()?;
    let results: Vec<_> = pool.install(|| cfg.seeds.par_iter().map(|&s| run_seed(cfg, &map, s)).collect());
    let mut log = RunLog::default();
    let mut seeds = Vec::new();
    for r in results {
        let (eps, evs, outcome) = r?;
        log.episodes.extend(eps);
        log.evals.extend(evs);
        seeds.push(outcome);
    }
    Ok(RunOutput { log, seeds })
}

fn require_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<(), ExperimentError> {
    if cfg.mode != mode {
        return Err(ExperimentError::Config(format!("config mode is {}, expected {}", cfg.mode.name(), mode.name())));
    }
    Ok(())
}

/// Trajectory-level OT sharing between tasks.
pub fn run_ot_sharing(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    require_mode(cfg, Mode::OtSharing)?;
    run(cfg)
}

/// Independent learners, same loop without shaping.
pub fn run_no_sharing(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    require_mode(cfg, Mode::NoSharing)?;
    run(cfg)
}

/// KL-regularized sharing through a distilled default policy.
pub fn run_distral(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    require_mode(cfg, Mode::Distral)?;
    run(cfg)
}
