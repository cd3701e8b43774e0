//! Benchmark environments.
//!
//! Four small tasks with fully deterministic dynamics given an RNG stream:
//! a continuous-state maze, the classic underpowered car on a cosine hill,
//! a seven-state off-policy divergence counterexample, and a six-state
//! chain with a misleading small reward on the easy side.
//!
//! Environments never truncate episodes themselves. Time limits are the
//! harness's job, which is why [`StepOutcome::truncated`] is always false
//! as returned from [`Environment::step`].

pub(crate) mod bairds;
mod mountain_car;
mod riverswim;
mod simple_maze;

pub use bairds::Bairds;
pub use mountain_car::MountainCar;
pub use riverswim::Riverswim;
pub use simple_maze::SimpleMaze;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::seed::RngStream;

/// Feature vector observed by the agent. The length is fixed per
/// environment and every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
}

impl Observation {
    pub fn new(features: Vec<f64>) -> Self {
        debug_assert!(features.iter().all(|v| v.is_finite()));
        Observation { features }
    }
}

/// Result of one interaction. `terminal` marks a real episode end inside
/// the task. `truncated` marks an external cutoff and is only ever set by
/// the harness; the two are never both true.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reward: f64,
    pub next_obs: Observation,
    pub terminal: bool,
    pub truncated: bool,
}

/// Static facts about a task, used for seeding-independent bookkeeping,
/// performance normalization, and agent construction.
#[derive(Debug, Clone)]
pub struct EnvDescriptor {
    pub id: String,
    pub action_count: usize,
    /// Problem discount used when turning reward sequences into returns.
    pub discount: f64,
    /// Best achievable episodic return, when known.
    pub optimal_return: Option<f64>,
    /// Return of a known weak reference policy, when known. Strictly below
    /// `optimal_return` whenever both are present.
    pub worst_return: Option<f64>,
}

pub trait Environment: Send {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Per-dimension observation bounds, used by tile-coding agents.
    fn observation_bounds(&self) -> Vec<(f64, f64)>;

    /// Starts a new episode and returns the first observation.
    fn reset(&mut self, rng: &mut RngStream) -> Observation;

    /// Advances one step. Errors on an out-of-range action, on a step
    /// after a terminal outcome without an intervening reset, and on a
    /// step before the first reset.
    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<StepOutcome>;
}

/// Environment construction parameters. Only keys known to the target
/// environment are accepted; anything else is rejected so that a typo in a
/// config file cannot silently run the default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvParams {
    values: BTreeMap<String, f64>,
}

impl EnvParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.values.iter()
    }

    pub(crate) fn from_map(values: BTreeMap<String, f64>) -> Self {
        EnvParams { values }
    }

    /// Sorted `key=value` form, stable across runs, used in spec
    /// fingerprints and record headers. Empty string when no overrides.
    pub fn canonical_string(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Errors unless every provided key is in `known`.
    fn reject_unknown(&self, env_id: &str, known: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::InvalidParams(format!(
                    "`{key}` is not a parameter of {env_id}"
                )));
            }
        }
        Ok(())
    }
}

pub const ENV_IDS: [&str; 4] = ["simple-maze", "mountain-car", "bairds", "riverswim"];

/// Builds an environment by id. Parameters beyond what the environment
/// understands, or with out-of-range values, are an error.
pub fn make_env(id: &str, params: &EnvParams) -> Result<Box<dyn Environment>> {
    match id {
        "simple-maze" => {
            params.reject_unknown(id, &["noise_scale"])?;
            Ok(Box::new(SimpleMaze::new(params)?))
        }
        "mountain-car" => {
            params.reject_unknown(id, &[])?;
            Ok(Box::new(MountainCar::new()))
        }
        "bairds" => {
            params.reject_unknown(id, &[])?;
            Ok(Box::new(Bairds::new()))
        }
        "riverswim" => {
            params.reject_unknown(id, &[])?;
            Ok(Box::new(Riverswim::new()))
        }
        other => Err(Error::UnknownEnv(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_stream, StreamLabel};

    #[test]
    fn unknown_id_is_an_error() {
        let err = make_env("gridworld", &EnvParams::new()).err().unwrap();
        assert!(matches!(err, Error::UnknownEnv(_)));
    }

    #[test]
    fn unknown_param_is_an_error() {
        let params = EnvParams::new().set("wind", 0.1);
        let err = make_env("mountain-car", &params).err().unwrap();
        assert!(matches!(err, Error::InvalidParams(_)));
    }

    #[test]
    fn descriptors_are_consistent() {
        for id in ENV_IDS {
            let env = make_env(id, &EnvParams::new()).unwrap();
            let d = env.descriptor();
            assert_eq!(d.id, id);
            assert!(d.action_count >= 2);
            assert!(d.discount > 0.0 && d.discount <= 1.0);
            if let (Some(hi), Some(lo)) = (d.optimal_return, d.worst_return) {
                assert!(hi > lo);
            }
            assert!(!env.observation_bounds().is_empty());
        }
    }

    #[test]
    fn step_before_reset_is_an_error() {
        let mut rng = derive_stream(0, 0, StreamLabel::Env);
        for id in ENV_IDS {
            let mut env = make_env(id, &EnvParams::new()).unwrap();
            let err = env.step(0, &mut rng).unwrap_err();
            assert!(matches!(err, Error::StepBeforeReset), "{id}");
        }
    }

    #[test]
    fn out_of_range_action_is_an_error() {
        let mut rng = derive_stream(0, 0, StreamLabel::Env);
        for id in ENV_IDS {
            let mut env = make_env(id, &EnvParams::new()).unwrap();
            let n = env.descriptor().action_count;
            env.reset(&mut rng);
            let err = env.step(n, &mut rng).unwrap_err();
            assert!(matches!(err, Error::ActionOutOfRange { .. }), "{id}");
        }
    }

    #[test]
    fn same_stream_same_trajectory() {
        // Bit-for-bit determinism of dynamics given identical streams.
        for id in ENV_IDS {
            let run = |seed: u64| -> Vec<(f64, Vec<f64>)> {
                let mut env = make_env(id, &EnvParams::new()).unwrap();
                let mut env_rng = derive_stream(seed, 3, StreamLabel::Env);
                let mut act_rng = derive_stream(seed, 3, StreamLabel::Agent);
                let mut obs = env.reset(&mut env_rng);
                let mut log = Vec::new();
                for _ in 0..200 {
                    let a = (rand::Rng::random_range(&mut act_rng, 0..env.descriptor().action_count as u32)) as usize;
                    let out = env.step(a, &mut env_rng).unwrap();
                    log.push((out.reward, out.next_obs.features.clone()));
                    obs = if out.terminal {
                        env.reset(&mut env_rng)
                    } else {
                        out.next_obs
                    };
                }
                let _ = obs;
                log
            };
            let a = run(41);
            let b = run(41);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                assert!(x.0 == y.0 && x.1 == y.1, "{id} diverged");
            }
        }
    }
}
