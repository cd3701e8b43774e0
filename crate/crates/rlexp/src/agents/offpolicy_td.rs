//! Off-policy linear TD(0) with importance-ratio corrections, plus an
//! optional heavy-ball momentum term.
//!
//! Built for the seven-state counterexample task: the agent behaves with
//! the canonical dashed-heavy policy and evaluates the solid-only target
//! policy, so the importance ratio is 7 on solid steps and 0 on dashed
//! ones. State values are linear in the task's eight raw features.
//!
//! Weights start at the canonical demonstration point (all ones except a
//! 10 on the lower state's own feature). Starting at zero would sit on a
//! fixed point of the zero-reward dynamics and show nothing; the standard
//! nonzero start is what makes the instability visible. The momentum
//! accumulator starts at zero, so with `beta` 0 this is plain TD(0),
//! reproduced bit for bit.

use super::{Agent, Algorithm, CutoffMode, HyperConfig, Transition};
use crate::envs::bairds::{BEHAVIOR_SOLID_PROB, FEATURE_DIM, LOWER_STATE, SOLID};
use crate::envs::Observation;
use crate::error::{Error, Result};
use crate::seed::RngStream;

pub struct OffPolicyTd {
    weights: Vec<f64>,
    momentum: Vec<f64>,
    alpha: f64,
    gamma: f64,
    beta: f64,
}

fn canonical_start() -> Vec<f64> {
    let mut w = vec![1.0; FEATURE_DIM];
    w[LOWER_STATE] = 10.0;
    w
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

impl OffPolicyTd {
    pub fn new(algorithm: Algorithm, config: &HyperConfig, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != FEATURE_DIM {
            return Err(Error::InvalidSpec(format!(
                "{} expects the {FEATURE_DIM}-feature counterexample observations, got {} dimensions",
                algorithm.id(),
                bounds.len()
            )));
        }
        let alpha = config.require(algorithm, "alpha")?;
        let gamma = config.require(algorithm, "gamma_agent")?;
        let beta = match algorithm {
            Algorithm::OffPolicyTdMomentum => config.require(algorithm, "beta")?,
            _ => 0.0,
        };
        Ok(OffPolicyTd {
            weights: canonical_start(),
            momentum: vec![0.0; FEATURE_DIM],
            alpha,
            gamma,
            beta,
        })
    }

    pub fn value(&self, obs: &Observation) -> f64 {
        dot(&self.weights, &obs.features)
    }
}

impl Agent for OffPolicyTd {
    fn select_action(&mut self, _obs: &Observation, rng: &mut RngStream) -> usize {
        if rand::Rng::random::<f64>(rng) < BEHAVIOR_SOLID_PROB {
            SOLID
        } else {
            1 - SOLID
        }
    }

    fn greedy_action(&self, _obs: &Observation, _rng: &mut RngStream) -> usize {
        SOLID
    }

    fn update(&mut self, tr: &Transition, cutoff_mode: CutoffMode, _rng: &mut RngStream) {
        if tr.truncated && cutoff_mode == CutoffMode::Discard {
            return;
        }
        // Target probability mass sits entirely on the solid action.
        let rho = if tr.action == SOLID {
            1.0 / BEHAVIOR_SOLID_PROB
        } else {
            0.0
        };
        let v = dot(&self.weights, &tr.obs.features);
        let v_next = if tr.terminal {
            0.0
        } else {
            dot(&self.weights, &tr.next_obs.features)
        };
        let delta = tr.reward + self.gamma * v_next - v;
        for i in 0..FEATURE_DIM {
            let direction = rho * delta * tr.obs.features[i];
            self.momentum[i] = self.beta * self.momentum[i] + direction;
            self.weights[i] += self.alpha * self.momentum[i];
        }
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }
}
