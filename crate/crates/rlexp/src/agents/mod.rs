//! Learning agents.
//!
//! Two on-policy control agents over tile-coded features (Expected SARSA
//! and SARSA(lambda)) and an off-policy linear TD(0) evaluator with an
//! optional heavy-ball momentum term, built for the divergence
//! counterexample task. All agents draw exploration and tie-breaking
//! randomness from the agent stream passed in by the caller and hold no
//! other nondeterminism.

mod esarsa;
mod offpolicy_td;
mod sarsa_lambda;
mod tile_coding;

pub use esarsa::Esarsa;
pub use offpolicy_td::OffPolicyTd;
pub use sarsa_lambda::SarsaLambda;
pub use tile_coding::tile_code;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::envs::{EnvDescriptor, Observation};
use crate::error::{Error, Result};
use crate::seed::RngStream;

/// Hyperparameter bundle. Canonical keys: `alpha` (stepsize), `epsilon`
/// (exploration), `tiles`, `tilings`, `lambda` (trace decay), `beta`
/// (momentum), `gamma_agent` (agent discount). Keys outside this set are
/// rejected rather than ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyperConfig {
    values: BTreeMap<String, f64>,
}

const CANONICAL_KEYS: [&str; 7] = [
    "alpha",
    "epsilon",
    "tiles",
    "tilings",
    "lambda",
    "beta",
    "gamma_agent",
];

impl HyperConfig {
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

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.values.iter()
    }

    pub fn from_map(values: BTreeMap<String, f64>) -> Self {
        HyperConfig { values }
    }

    /// Sorted `key=value` form used in record headers and fingerprints.
    pub fn canonical_string(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn require(&self, algorithm: Algorithm, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::MissingHyper {
            algorithm: algorithm.id().to_string(),
            key: key.to_string(),
        })
    }

    fn positive_int(&self, key: &str) -> Result<usize> {
        let v = self.get(key).expect("checked by require");
        if v < 1.0 || v.fract() != 0.0 || v > 1e9 {
            return Err(Error::InvalidHyper {
                key: key.to_string(),
                value: v,
                reason: "must be a positive integer".to_string(),
            });
        }
        Ok(v as usize)
    }

    /// Range-checks every provided value and rejects unknown keys.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, value: f64, reason: &str| {
            Err(Error::InvalidHyper {
                key: key.to_string(),
                value,
                reason: reason.to_string(),
            })
        };
        for (key, &v) in &self.values {
            if !CANONICAL_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidHyper {
                    key: key.clone(),
                    value: v,
                    reason: "not a recognized hyperparameter".to_string(),
                });
            }
            if !v.is_finite() {
                return bad(key, v, "must be finite");
            }
            match key.as_str() {
                "alpha" if v <= 0.0 => return bad(key, v, "stepsize must be positive"),
                "epsilon" if !(0.0..=1.0).contains(&v) => {
                    return bad(key, v, "exploration rate must be in [0, 1]")
                }
                "tiles" | "tilings" if v < 1.0 || v.fract() != 0.0 => {
                    return bad(key, v, "must be a positive integer")
                }
                "lambda" if !(0.0..=1.0).contains(&v) => {
                    return bad(key, v, "trace decay must be in [0, 1]")
                }
                "beta" if !(0.0..1.0).contains(&v) => {
                    return bad(key, v, "momentum must be in [0, 1)")
                }
                "gamma_agent" if v <= 0.0 || v > 1.0 => {
                    return bad(key, v, "agent discount must be in (0, 1]")
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Esarsa,
    SarsaLambda,
    OffPolicyTd,
    OffPolicyTdMomentum,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Esarsa => "esarsa",
            Algorithm::SarsaLambda => "sarsa-lambda",
            Algorithm::OffPolicyTd => "offpolicy-td",
            Algorithm::OffPolicyTdMomentum => "offpolicy-td-momentum",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esarsa" => Ok(Algorithm::Esarsa),
            "sarsa-lambda" => Ok(Algorithm::SarsaLambda),
            "offpolicy-td" => Ok(Algorithm::OffPolicyTd),
            "offpolicy-td-momentum" => Ok(Algorithm::OffPolicyTdMomentum),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// How an agent treats a transition cut off by the harness time limit.
/// `Discard` drops the transition entirely; `Bootstrap` updates as if the
/// episode were continuing, bootstrapping off the final state. Treating a
/// cutoff as terminal is deliberately not offered: the cutoff is a
/// measurement device, not part of the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffMode {
    Discard,
    Bootstrap,
}

impl CutoffMode {
    pub fn id(self) -> &'static str {
        match self {
            CutoffMode::Discard => "discard",
            CutoffMode::Bootstrap => "bootstrap",
        }
    }
}

impl FromStr for CutoffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" => Ok(CutoffMode::Discard),
            "bootstrap" => Ok(CutoffMode::Bootstrap),
            other => Err(Error::Config(format!("unknown cutoff mode `{other}`"))),
        }
    }
}

/// One interaction as seen by the learner. `terminal` and `truncated` are
/// never both true.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Observation,
    pub terminal: bool,
    pub truncated: bool,
}

pub trait Agent: Send {
    /// Behavior-policy action for the current observation.
    fn select_action(&mut self, obs: &Observation, rng: &mut RngStream) -> usize;

    /// Target/greedy-policy action with learning frozen; used by offline
    /// evaluation rollouts. Must not mutate the agent.
    fn greedy_action(&self, obs: &Observation, rng: &mut RngStream) -> usize;

    fn update(&mut self, transition: &Transition, cutoff_mode: CutoffMode, rng: &mut RngStream);

    fn weights(&self) -> &[f64];

    fn weights_mut(&mut self) -> &mut [f64];

    fn max_abs_weight(&self) -> f64 {
        self.weights().iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Builds an agent for the given task. The RNG is reserved for algorithms
/// with randomized initialization; none of the current ones draw from it.
pub fn make_agent(
    algorithm: Algorithm,
    config: &HyperConfig,
    descriptor: &EnvDescriptor,
    bounds: &[(f64, f64)],
    _rng: &mut RngStream,
) -> Result<Box<dyn Agent>> {
    config.validate()?;
    match algorithm {
        Algorithm::Esarsa => Ok(Box::new(Esarsa::new(config, descriptor, bounds)?)),
        Algorithm::SarsaLambda => Ok(Box::new(SarsaLambda::new(config, descriptor, bounds)?)),
        Algorithm::OffPolicyTd => Ok(Box::new(OffPolicyTd::new(
            Algorithm::OffPolicyTd,
            config,
            bounds,
        )?)),
        Algorithm::OffPolicyTdMomentum => Ok(Box::new(OffPolicyTd::new(
            Algorithm::OffPolicyTdMomentum,
            config,
            bounds,
        )?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for algo in [
            Algorithm::Esarsa,
            Algorithm::SarsaLambda,
            Algorithm::OffPolicyTd,
            Algorithm::OffPolicyTdMomentum,
        ] {
            assert_eq!(algo.id().parse::<Algorithm>().unwrap(), algo);
        }
        assert!("dqn".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation_catches_ranges() {
        let cases = [
            ("alpha", 0.0),
            ("alpha", -0.5),
            ("epsilon", 1.5),
            ("tiles", 2.5),
            ("tilings", 0.0),
            ("lambda", -0.1),
            ("beta", 1.0),
            ("gamma_agent", 0.0),
            ("gamma_agent", 1.2),
        ];
        for (key, value) in cases {
            let cfg = HyperConfig::new().set(key, value);
            assert!(cfg.validate().is_err(), "{key}={value} should fail");
        }
        assert!(HyperConfig::new().set("learning_rate", 0.1).validate().is_err());
        let ok = HyperConfig::new()
            .set("alpha", 0.1)
            .set("epsilon", 0.0)
            .set("beta", 0.0)
            .set("gamma_agent", 1.0);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn canonical_string_is_sorted_and_stable() {
        let cfg = HyperConfig::new()
            .set("tilings", 8.0)
            .set("alpha", 0.1)
            .set("tiles", 4.0);
        assert_eq!(cfg.canonical_string(), "alpha=0.1,tiles=4,tilings=8");
    }
}
