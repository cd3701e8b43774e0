//! Run execution under a fixed step budget.
//!
//! The harness owns everything the environments and agents deliberately do
//! not: episode cutoffs, the step budget, seed-stream bookkeeping, online
//! and offline performance recording, and batch fan-out. Results are a pure
//! function of `(spec, base_seed, run_index)` at any parallelism level.

mod record;

pub use record::{
    batch_file_name, eval_record_to_string, read_batch, read_record, record_from_str,
    record_to_string, write_batch, write_eval_record, write_record,
};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::agents::{make_agent, Agent, Algorithm, CutoffMode, HyperConfig, Transition};
use crate::envs::{make_env, EnvParams, Environment};
use crate::error::{Error, Result};
use crate::seed::{derive_stream, fold_seed, RngStream, StreamLabel};

/// Hard per-episode step limit for offline evaluation rollouts. Keeps a
/// degenerate greedy policy from looping forever; generous next to any
/// optimal episode length in the shipped environments.
pub const EVAL_EPISODE_CAP: usize = 10_000;

/// How seed streams relate across different experiment specs.
///
/// Under `RepeatedMeasures`, run `i` of every spec shares the same
/// environment stream, so two algorithms face identical start states and
/// environment noise and their per-run metrics can be paired. Under
/// `Independent`, each spec's fingerprint is folded into the base seed
/// first, giving every spec its own seed space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    Independent,
    RepeatedMeasures,
}

impl PairingMode {
    pub fn id(self) -> &'static str {
        match self {
            PairingMode::Independent => "independent",
            PairingMode::RepeatedMeasures => "repeated-measures",
        }
    }
}

impl FromStr for PairingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(PairingMode::Independent),
            "repeated-measures" => Ok(PairingMode::RepeatedMeasures),
            other => Err(Error::Config(format!("unknown pairing mode `{other}`"))),
        }
    }
}

impl fmt::Display for PairingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Identity of one run's randomness. The seed is an experiment input like
/// any other, fixed up front; there is deliberately no API for filtering or
/// re-rolling runs by outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub base_seed: u64,
    pub run_index: u64,
    pub pairing: PairingMode,
}

/// Whether performance is recorded from the learning interactions
/// themselves or from periodic frozen-policy rollouts on the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Online,
    Offline { interval: usize, rollouts: usize },
}

/// A fully-specified experiment: everything needed to reproduce a batch,
/// and nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub env: String,
    pub env_params: EnvParams,
    pub algorithm: Algorithm,
    pub config: HyperConfig,
    pub step_budget: usize,
    /// In-episode step limit. Reaching it teleports the agent to a reset
    /// state with `truncated` set; it never counts as termination.
    pub cutoff: Option<usize>,
    pub cutoff_mode: CutoffMode,
    pub eval: EvalMode,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.step_budget == 0 {
            return Err(Error::InvalidSpec("step_budget must be at least 1".into()));
        }
        if self.cutoff == Some(0) {
            return Err(Error::InvalidSpec(
                "cutoff must be at least 1 when set".into(),
            ));
        }
        if let EvalMode::Offline { interval, rollouts } = self.eval {
            if interval == 0 || rollouts == 0 {
                return Err(Error::InvalidSpec(
                    "offline evaluation needs interval >= 1 and rollouts >= 1".into(),
                ));
            }
        }
        // Building the pieces is the real check: env params, algorithm and
        // hyperparameter compatibility all surface here.
        let env = make_env(&self.env, &self.env_params)?;
        let mut probe_rng = derive_stream(0, 0, StreamLabel::Agent);
        make_agent(
            self.algorithm,
            &self.config,
            env.descriptor(),
            &env.observation_bounds(),
            &mut probe_rng,
        )?;
        Ok(())
    }

    /// Canonical one-line form of the learning problem. Two specs with the
    /// same canonical string produce bit-identical records given the same
    /// seed plan. Evaluation mode is deliberately excluded: offline probes
    /// never touch the learning trajectory, so they must not change its
    /// identity (or, under independent pairing, its seed space).
    pub fn canonical_string(&self) -> String {
        let cutoff = match self.cutoff {
            Some(c) => c.to_string(),
            None => "none".to_string(),
        };
        format!(
            "env={};params={};algorithm={};config={};step_budget={};cutoff={};cutoff_mode={}",
            self.env,
            self.env_params.canonical_string(),
            self.algorithm.id(),
            self.config.canonical_string(),
            self.step_budget,
            cutoff,
            self.cutoff_mode.id(),
        )
    }

    fn digest8(&self) -> [u8; 8] {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        digest[..8].try_into().expect("sha256 yields 32 bytes")
    }

    /// 16-hex-digit identity stamped on every record and output table.
    pub fn fingerprint(&self) -> String {
        self.digest8().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn fingerprint_salt(&self) -> u64 {
        u64::from_be_bytes(self.digest8())
    }
}

/// One run's complete result: the per-step online return curve, episode
/// bookkeeping, and enough identity to regenerate it from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub fingerprint: String,
    pub env_id: String,
    pub env_params: EnvParams,
    pub algorithm: Algorithm,
    pub config: HyperConfig,
    pub base_seed: u64,
    pub run_index: u64,
    pub pairing: PairingMode,
    pub step_budget: usize,
    pub discount: f64,
    pub cutoff: Option<usize>,
    pub cutoff_mode: CutoffMode,
    /// Value at step t is the realized discounted return of the episode
    /// containing t; piecewise constant over each episode's steps.
    pub per_step_return: Vec<f64>,
    pub episode_starts: Vec<usize>,
    pub episode_returns: Vec<f64>,
    /// True where the episode ended at a genuine terminal state, false for
    /// cutoff teleports and the budget-end partial episode.
    pub episode_terminated: Vec<bool>,
    /// True when the last episode was still in progress at budget end; its
    /// recorded return is the partial realized return.
    pub final_episode_partial: bool,
}

/// Frozen-policy evaluation returns recorded alongside a learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub fingerprint: String,
    pub base_seed: u64,
    pub run_index: u64,
    pub interval: usize,
    pub rollouts: usize,
    /// Learning step counts at which evaluation happened, always including
    /// 0 (before any update) and the final budget step.
    pub eval_steps: Vec<usize>,
    pub mean_returns: Vec<f64>,
}

/// Discounted return of one episode's reward sequence: the first reward is
/// discounted once, so a 15-step success with a single final +1 under 0.99
/// scores 0.99^15.
pub fn discounted_return(rewards: &[f64], discount: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |g, r| discount * (r + g))
}

/// The base seed actually used for stream derivation. Repeated measures
/// keeps it as given so specs share environment streams run-for-run;
/// independent pairing folds the spec identity in first.
pub fn effective_base_seed(spec: &ExperimentSpec, plan: &SeedPlan) -> u64 {
    match plan.pairing {
        PairingMode::RepeatedMeasures => plan.base_seed,
        PairingMode::Independent => fold_seed(plan.base_seed, spec.fingerprint_salt()),
    }
}

struct RunTrace {
    per_step_return: Vec<f64>,
    episode_starts: Vec<usize>,
    episode_returns: Vec<f64>,
    episode_terminated: Vec<bool>,
    final_episode_partial: bool,
}

/// Core interaction loop: exactly `step_budget` agent-environment steps.
///
/// The observer fires before the interaction at each step index and once
/// more with `step_budget` after the loop; online runs pass a no-op.
#[allow(clippy::too_many_arguments)]
fn drive(
    env: &mut dyn Environment,
    agent: &mut dyn Agent,
    discount: f64,
    step_budget: usize,
    cutoff: Option<usize>,
    cutoff_mode: CutoffMode,
    env_rng: &mut RngStream,
    agent_rng: &mut RngStream,
    observer: &mut dyn FnMut(usize, &dyn Agent) -> Result<()>,
) -> Result<RunTrace> {
    let mut per_step_return = vec![0.0; step_budget];
    let mut episode_starts = Vec::new();
    let mut episode_returns = Vec::new();
    let mut episode_terminated = Vec::new();

    let mut obs = env.reset(env_rng);
    let mut episode_rewards: Vec<f64> = Vec::new();
    let mut episode_start = 0usize;

    for t in 0..step_budget {
        observer(t, &*agent)?;
        let action = agent.select_action(&obs, agent_rng);
        let out = env.step(action, env_rng)?;
        // Termination wins when the cutoff lands on the same step; a
        // truncation flag must never mask a real terminal outcome.
        let truncated = !out.terminal && cutoff == Some(episode_rewards.len() + 1);
        agent.update(
            &Transition {
                obs,
                action,
                reward: out.reward,
                next_obs: out.next_obs.clone(),
                terminal: out.terminal,
                truncated,
            },
            cutoff_mode,
            agent_rng,
        );
        episode_rewards.push(out.reward);
        if out.terminal || truncated {
            let g = discounted_return(&episode_rewards, discount);
            per_step_return[episode_start..=t].fill(g);
            episode_starts.push(episode_start);
            episode_returns.push(g);
            episode_terminated.push(out.terminal);
            episode_rewards.clear();
            episode_start = t + 1;
            obs = env.reset(env_rng);
        } else {
            obs = out.next_obs;
        }
    }
    observer(step_budget, &*agent)?;

    // An episode still open at budget end contributes its partial realized
    // return and is flagged so metrics can exclude it.
    let final_episode_partial = !episode_rewards.is_empty();
    if final_episode_partial {
        let g = discounted_return(&episode_rewards, discount);
        per_step_return[episode_start..].fill(g);
        episode_starts.push(episode_start);
        episode_returns.push(g);
        episode_terminated.push(false);
    }

    Ok(RunTrace {
        per_step_return,
        episode_starts,
        episode_returns,
        episode_terminated,
        final_episode_partial,
    })
}

fn assemble(spec: &ExperimentSpec, plan: &SeedPlan, discount: f64, trace: RunTrace) -> RunRecord {
    RunRecord {
        fingerprint: spec.fingerprint(),
        env_id: spec.env.clone(),
        env_params: spec.env_params.clone(),
        algorithm: spec.algorithm,
        config: spec.config.clone(),
        base_seed: plan.base_seed,
        run_index: plan.run_index,
        pairing: plan.pairing,
        step_budget: spec.step_budget,
        discount,
        cutoff: spec.cutoff,
        cutoff_mode: spec.cutoff_mode,
        per_step_return: trace.per_step_return,
        episode_starts: trace.episode_starts,
        episode_returns: trace.episode_returns,
        episode_terminated: trace.episode_terminated,
        final_episode_partial: trace.final_episode_partial,
    }
}

/// Executes one learning run, recording online returns.
pub fn run_online(spec: &ExperimentSpec, plan: &SeedPlan) -> Result<RunRecord> {
    spec.validate()?;
    let base = effective_base_seed(spec, plan);
    let mut env_rng = derive_stream(base, plan.run_index, StreamLabel::Env);
    let mut agent_rng = derive_stream(base, plan.run_index, StreamLabel::Agent);
    let mut env = make_env(&spec.env, &spec.env_params)?;
    let discount = env.descriptor().discount;
    let bounds = env.observation_bounds();
    let mut agent = {
        let descriptor = env.descriptor().clone();
        make_agent(
            spec.algorithm,
            &spec.config,
            &descriptor,
            &bounds,
            &mut agent_rng,
        )?
    };
    let trace = drive(
        env.as_mut(),
        agent.as_mut(),
        discount,
        spec.step_budget,
        spec.cutoff,
        spec.cutoff_mode,
        &mut env_rng,
        &mut agent_rng,
        &mut |_, _| Ok(()),
    )?;
    Ok(assemble(spec, plan, discount, trace))
}

fn greedy_rollout(
    env: &mut dyn Environment,
    agent: &dyn Agent,
    discount: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut obs = env.reset(rng);
    let mut rewards = Vec::new();
    for _ in 0..EVAL_EPISODE_CAP {
        let action = agent.greedy_action(&obs, rng);
        let out = env.step(action, rng)?;
        rewards.push(out.reward);
        if out.terminal {
            break;
        }
        obs = out.next_obs;
    }
    Ok(discounted_return(&rewards, discount))
}

/// Executes one learning run while periodically evaluating the frozen
/// greedy policy on a separate environment instance and rng stream.
///
/// The learning record is bit-identical to what [`run_online`] produces for
/// the same spec and plan: evaluation consumes nothing from the agent or
/// environment streams and never advances the learning environment.
pub fn run_offline_eval(spec: &ExperimentSpec, plan: &SeedPlan) -> Result<(RunRecord, EvalRecord)> {
    let EvalMode::Offline { interval, rollouts } = spec.eval else {
        return Err(Error::InvalidSpec(
            "run_offline_eval needs an offline evaluation mode".into(),
        ));
    };
    spec.validate()?;
    let base = effective_base_seed(spec, plan);
    let mut env_rng = derive_stream(base, plan.run_index, StreamLabel::Env);
    let mut agent_rng = derive_stream(base, plan.run_index, StreamLabel::Agent);
    let mut eval_rng = derive_stream(base, plan.run_index, StreamLabel::Eval);
    let mut env = make_env(&spec.env, &spec.env_params)?;
    let mut eval_env = make_env(&spec.env, &spec.env_params)?;
    let discount = env.descriptor().discount;
    let bounds = env.observation_bounds();
    let mut agent = {
        let descriptor = env.descriptor().clone();
        make_agent(
            spec.algorithm,
            &spec.config,
            &descriptor,
            &bounds,
            &mut agent_rng,
        )?
    };

    let mut eval_steps = Vec::new();
    let mut mean_returns = Vec::new();
    let step_budget = spec.step_budget;
    let mut observer = |t: usize, frozen: &dyn Agent| -> Result<()> {
        if !t.is_multiple_of(interval) && t != step_budget {
            return Ok(());
        }
        let mut total = 0.0;
        for _ in 0..rollouts {
            total += greedy_rollout(eval_env.as_mut(), frozen, discount, &mut eval_rng)?;
        }
        eval_steps.push(t);
        mean_returns.push(total / rollouts as f64);
        Ok(())
    };

    let trace = drive(
        env.as_mut(),
        agent.as_mut(),
        discount,
        spec.step_budget,
        spec.cutoff,
        spec.cutoff_mode,
        &mut env_rng,
        &mut agent_rng,
        &mut observer,
    )?;
    let eval = EvalRecord {
        fingerprint: spec.fingerprint(),
        base_seed: plan.base_seed,
        run_index: plan.run_index,
        interval,
        rollouts,
        eval_steps,
        mean_returns,
    };
    Ok((assemble(spec, plan, discount, trace), eval))
}

/// Runs `n_runs` independent runs of the spec, fanned out over a private
/// thread pool. Records come back ordered by run index and are identical
/// at any parallelism level.
pub fn run_batch(
    spec: &ExperimentSpec,
    n_runs: usize,
    base_seed: u64,
    pairing: PairingMode,
    parallelism: usize,
) -> Result<Vec<RunRecord>> {
    if n_runs == 0 {
        return Err(Error::InvalidSpec("n_runs must be at least 1".into()));
    }
    if parallelism == 0 {
        return Err(Error::InvalidSpec("parallelism must be at least 1".into()));
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..n_runs as u64)
            .into_par_iter()
            .map(|run_index| {
                run_online(
                    spec,
                    &SeedPlan {
                        base_seed,
                        run_index,
                        pairing,
                    },
                )
            })
            .collect()
    })
}

/// Batch variant of [`run_offline_eval`]; same ordering and determinism
/// guarantees as [`run_batch`].
pub fn run_batch_eval(
    spec: &ExperimentSpec,
    n_runs: usize,
    base_seed: u64,
    pairing: PairingMode,
    parallelism: usize,
) -> Result<Vec<(RunRecord, EvalRecord)>> {
    if n_runs == 0 {
        return Err(Error::InvalidSpec("n_runs must be at least 1".into()));
    }
    if parallelism == 0 {
        return Err(Error::InvalidSpec("parallelism must be at least 1".into()));
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..n_runs as u64)
            .into_par_iter()
            .map(|run_index| {
                run_offline_eval(
                    spec,
                    &SeedPlan {
                        base_seed,
                        run_index,
                        pairing,
                    },
                )
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvDescriptor, Observation, StepOutcome};

    // Terminates with reward 1.0 on every step, episode length fixed at
    // `len` steps. Discount in the descriptor is 0.5 so hand arithmetic
    // stays exact in binary.
    struct FixedLengthEnv {
        descriptor: EnvDescriptor,
        len: usize,
        pos: usize,
        started: bool,
    }

    impl FixedLengthEnv {
        fn new(len: usize) -> Self {
            FixedLengthEnv {
                descriptor: EnvDescriptor {
                    id: "fixed-length".into(),
                    action_count: 1,
                    discount: 0.5,
                    optimal_return: None,
                    worst_return: None,
                },
                len,
                pos: 0,
                started: false,
            }
        }
    }

    impl Environment for FixedLengthEnv {
        fn descriptor(&self) -> &EnvDescriptor {
            &self.descriptor
        }

        fn observation_bounds(&self) -> Vec<(f64, f64)> {
            vec![(0.0, self.len as f64)]
        }

        fn reset(&mut self, _rng: &mut RngStream) -> Observation {
            self.pos = 0;
            self.started = true;
            Observation::new(vec![0.0])
        }

        fn step(&mut self, _action: usize, _rng: &mut RngStream) -> Result<StepOutcome> {
            assert!(self.started, "step before reset");
            self.pos += 1;
            Ok(StepOutcome {
                reward: 1.0,
                next_obs: Observation::new(vec![self.pos as f64]),
                terminal: self.pos == self.len,
                truncated: false,
            })
        }
    }

    struct NullAgent {
        weights: Vec<f64>,
    }

    impl Agent for NullAgent {
        fn select_action(&mut self, _obs: &Observation, _rng: &mut RngStream) -> usize {
            0
        }

        fn greedy_action(&self, _obs: &Observation, _rng: &mut RngStream) -> usize {
            0
        }

        fn update(&mut self, _tr: &Transition, _mode: CutoffMode, _rng: &mut RngStream) {}

        fn weights(&self) -> &[f64] {
            &self.weights
        }

        fn weights_mut(&mut self) -> &mut [f64] {
            &mut self.weights
        }
    }

    fn drive_fixed(len: usize, budget: usize, cutoff: Option<usize>) -> RunTrace {
        let mut env = FixedLengthEnv::new(len);
        let mut agent = NullAgent { weights: vec![] };
        let mut env_rng = derive_stream(0, 0, StreamLabel::Env);
        let mut agent_rng = derive_stream(0, 0, StreamLabel::Agent);
        drive(
            &mut env,
            &mut agent,
            0.5,
            budget,
            cutoff,
            CutoffMode::Bootstrap,
            &mut env_rng,
            &mut agent_rng,
            &mut |_, _| Ok(()),
        )
        .unwrap()
    }

    #[test]
    fn episodes_backfill_their_realized_return() {
        // Episode length 3 at discount 0.5: G = 0.5 + 0.25 + 0.125.
        let trace = drive_fixed(3, 9, None);
        assert_eq!(trace.episode_starts, vec![0, 3, 6]);
        assert_eq!(trace.episode_returns, vec![0.875; 3]);
        assert_eq!(trace.episode_terminated, vec![true; 3]);
        assert!(!trace.final_episode_partial);
        assert_eq!(trace.per_step_return, vec![0.875; 9]);
    }

    #[test]
    fn budget_end_partial_episode_is_flagged() {
        let trace = drive_fixed(3, 10, None);
        assert_eq!(trace.episode_starts, vec![0, 3, 6, 9]);
        assert_eq!(trace.episode_returns, vec![0.875, 0.875, 0.875, 0.5]);
        assert_eq!(
            trace.episode_terminated,
            vec![true, true, true, false]
        );
        assert!(trace.final_episode_partial);
        assert_eq!(trace.per_step_return[9], 0.5);
        assert_eq!(trace.per_step_return[8], 0.875);
    }

    #[test]
    fn cutoff_truncates_without_terminal_flags() {
        // Episodes would run 5 steps; the cutoff teleports after 2.
        let trace = drive_fixed(5, 8, Some(2));
        assert_eq!(trace.episode_starts, vec![0, 2, 4, 6]);
        assert_eq!(trace.episode_returns, vec![0.75; 4]);
        assert_eq!(trace.episode_terminated, vec![false; 4]);
        assert!(!trace.final_episode_partial);
    }

    #[test]
    fn cutoff_of_one_truncates_every_step() {
        let trace = drive_fixed(5, 6, Some(1));
        assert_eq!(trace.episode_starts, vec![0, 1, 2, 3, 4, 5]);
        assert!(trace.episode_terminated.iter().all(|t| !t));
        assert_eq!(trace.episode_returns, vec![0.5; 6]);
    }

    #[test]
    fn terminal_wins_when_cutoff_lands_on_the_same_step() {
        let trace = drive_fixed(3, 9, Some(3));
        assert_eq!(trace.episode_terminated, vec![true; 3]);
    }

    #[test]
    fn per_step_curve_is_piecewise_constant_over_episodes() {
        let trace = drive_fixed(4, 50, None);
        for (i, &start) in trace.episode_starts.iter().enumerate() {
            let end = trace
                .episode_starts
                .get(i + 1)
                .copied()
                .unwrap_or(trace.per_step_return.len());
            for t in start..end {
                assert_eq!(trace.per_step_return[t], trace.episode_returns[i]);
            }
        }
    }

    fn maze_spec(step_budget: usize) -> ExperimentSpec {
        ExperimentSpec {
            env: "simple-maze".into(),
            env_params: EnvParams::new(),
            algorithm: Algorithm::Esarsa,
            config: HyperConfig::new()
                .set("alpha", 0.1)
                .set("epsilon", 0.2)
                .set("gamma_agent", 0.99)
                .set("tiles", 4.0)
                .set("tilings", 8.0),
            step_budget,
            cutoff: None,
            cutoff_mode: CutoffMode::Bootstrap,
            eval: EvalMode::Online,
        }
    }

    #[test]
    fn validate_rejects_degenerate_budgets_and_cutoffs() {
        let mut spec = maze_spec(0);
        assert!(spec.validate().is_err());
        spec.step_budget = 100;
        assert!(spec.validate().is_ok());
        spec.cutoff = Some(0);
        assert!(spec.validate().is_err());
        spec.cutoff = None;
        spec.eval = EvalMode::Offline {
            interval: 0,
            rollouts: 1,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn validate_catches_incompatible_algorithm_and_env() {
        let mut spec = maze_spec(100);
        // The importance-sampling TD agent only fits the eight-feature
        // counterexample observations.
        spec.algorithm = Algorithm::OffPolicyTd;
        spec.config = HyperConfig::new().set("alpha", 0.1).set("gamma_agent", 0.99);
        assert!(spec.validate().is_err());
        spec.env = "bairds".into();
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn fingerprint_tracks_learning_identity_only() {
        let spec = maze_spec(100);
        assert_eq!(spec.fingerprint().len(), 16);
        assert_eq!(spec.fingerprint(), spec.fingerprint());

        let mut other = maze_spec(100);
        other.eval = EvalMode::Offline {
            interval: 10,
            rollouts: 2,
        };
        assert_eq!(spec.fingerprint(), other.fingerprint());

        other.step_budget = 101;
        assert_ne!(spec.fingerprint(), other.fingerprint());
        let mut other = maze_spec(100);
        other.cutoff = Some(50);
        assert_ne!(spec.fingerprint(), other.fingerprint());
        let mut other = maze_spec(100);
        other.config = other.config.set("alpha", 0.2);
        assert_ne!(spec.fingerprint(), other.fingerprint());
    }

    #[test]
    fn repeated_measures_shares_seed_space_and_independent_splits_it() {
        let esarsa = maze_spec(100);
        let mut sarsa = maze_spec(100);
        sarsa.algorithm = Algorithm::SarsaLambda;
        sarsa.config = sarsa.config.set("lambda", 0.9);

        let paired = SeedPlan {
            base_seed: 77,
            run_index: 4,
            pairing: PairingMode::RepeatedMeasures,
        };
        assert_eq!(effective_base_seed(&esarsa, &paired), paired.base_seed);
        assert_eq!(effective_base_seed(&sarsa, &paired), paired.base_seed);

        let split = SeedPlan {
            pairing: PairingMode::Independent,
            ..paired
        };
        let a = effective_base_seed(&esarsa, &split);
        let b = effective_base_seed(&sarsa, &split);
        assert_ne!(a, b);
        assert_ne!(a, split.base_seed);
    }

    #[test]
    fn same_plan_reproduces_the_record_exactly() {
        let spec = maze_spec(400);
        let plan = SeedPlan {
            base_seed: 11,
            run_index: 2,
            pairing: PairingMode::RepeatedMeasures,
        };
        let a = run_online(&spec, &plan).unwrap();
        let b = run_online(&spec, &plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_step_return.len(), 400);
    }

    #[test]
    fn batch_results_are_parallelism_invariant_and_ordered() {
        // Long enough that every run finds the goal at its own pace, so
        // the cross-run difference check below is meaningful.
        let spec = maze_spec(3000);
        let serial = run_batch(&spec, 6, 5, PairingMode::RepeatedMeasures, 1).unwrap();
        let parallel = run_batch(&spec, 6, 5, PairingMode::RepeatedMeasures, 8).unwrap();
        assert_eq!(serial, parallel);
        for (i, record) in serial.iter().enumerate() {
            assert_eq!(record.run_index, i as u64);
        }
        assert_ne!(serial[0].per_step_return, serial[1].per_step_return);
    }

    #[test]
    fn offline_eval_leaves_the_learning_trajectory_untouched() {
        let mut spec = maze_spec(2000);
        spec.eval = EvalMode::Offline {
            interval: 500,
            rollouts: 2,
        };
        let plan = SeedPlan {
            base_seed: 3,
            run_index: 0,
            pairing: PairingMode::RepeatedMeasures,
        };
        let (with_eval, eval) = run_offline_eval(&spec, &plan).unwrap();
        let mut online = spec.clone();
        online.eval = EvalMode::Online;
        let plain = run_online(&online, &plan).unwrap();
        assert_eq!(with_eval, plain);
        assert_eq!(eval.eval_steps, vec![0, 500, 1000, 1500, 2000]);
        assert_eq!(eval.mean_returns.len(), 5);
    }

    #[test]
    fn offline_eval_improves_with_learning_on_the_maze() {
        let mut spec = maze_spec(20_000);
        spec.eval = EvalMode::Offline {
            interval: 20_000,
            rollouts: 3,
        };
        let plan = SeedPlan {
            base_seed: 1,
            run_index: 0,
            pairing: PairingMode::RepeatedMeasures,
        };
        let (_, eval) = run_offline_eval(&spec, &plan).unwrap();
        assert_eq!(eval.eval_steps, vec![0, 20_000]);
        // Untrained greedy play ties everywhere and random-walks down the
        // corridor, reaching the goal only after heavy discounting. Trained
        // play should be close to the optimal 0.99^15.
        assert!(eval.mean_returns[0] < 0.3, "{:?}", eval.mean_returns);
        assert!(eval.mean_returns[1] > 0.5, "{:?}", eval.mean_returns);
        assert!(
            eval.mean_returns[1] - eval.mean_returns[0] > 0.3,
            "{:?}",
            eval.mean_returns
        );
    }

    #[test]
    fn online_spec_rejects_offline_entry_point() {
        let spec = maze_spec(100);
        let plan = SeedPlan {
            base_seed: 0,
            run_index: 0,
            pairing: PairingMode::RepeatedMeasures,
        };
        assert!(run_offline_eval(&spec, &plan).is_err());
    }
}
