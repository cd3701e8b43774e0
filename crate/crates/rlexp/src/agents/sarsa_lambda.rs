//! SARSA(lambda) with replacing eligibility traces over tile-coded
//! features.
//!
//! The target bootstraps off the action that will actually be taken next,
//! so the agent commits to that action during the update and replays it on
//! the following `select_action` call. Traces are zeroed whenever an
//! episode ends, whether by a terminal outcome or by a harness cutoff.

use super::tile_coding::{epsilon_greedy, greedy_tie_break, TiledQ};
use super::{Agent, Algorithm, CutoffMode, HyperConfig, Transition};
use crate::envs::{EnvDescriptor, Observation};
use crate::error::Result;
use crate::seed::RngStream;

const TRACE_FLOOR: f64 = 1e-8;

pub struct SarsaLambda {
    q: TiledQ,
    alpha: f64,
    epsilon: f64,
    gamma: f64,
    lambda: f64,
    trace: Vec<f64>,
    live_trace: Vec<usize>,
    pending_action: Option<usize>,
}

impl SarsaLambda {
    pub fn new(
        config: &HyperConfig,
        descriptor: &EnvDescriptor,
        bounds: &[(f64, f64)],
    ) -> Result<Self> {
        let algo = Algorithm::SarsaLambda;
        let alpha = config.require(algo, "alpha")?;
        let epsilon = config.require(algo, "epsilon")?;
        let gamma = config.require(algo, "gamma_agent")?;
        let lambda = config.require(algo, "lambda")?;
        config.require(algo, "tiles")?;
        config.require(algo, "tilings")?;
        let tiles = config.positive_int("tiles")?;
        let tilings = config.positive_int("tilings")?;
        let q = TiledQ::new(tiles, tilings, bounds.to_vec(), descriptor.action_count);
        let trace = vec![0.0; q.weights.len()];
        Ok(SarsaLambda {
            q,
            alpha,
            epsilon,
            gamma,
            lambda,
            trace,
            live_trace: Vec::new(),
            pending_action: None,
        })
    }

    fn end_episode(&mut self) {
        for &i in &self.live_trace {
            self.trace[i] = 0.0;
        }
        self.live_trace.clear();
        self.pending_action = None;
    }
}

impl Agent for SarsaLambda {
    fn select_action(&mut self, obs: &Observation, rng: &mut RngStream) -> usize {
        if let Some(a) = self.pending_action.take() {
            return a;
        }
        let active = self.q.active(&obs.features);
        epsilon_greedy(&self.q.q_all(&active), self.epsilon, rng)
    }

    fn greedy_action(&self, obs: &Observation, rng: &mut RngStream) -> usize {
        let active = self.q.active(&obs.features);
        greedy_tie_break(&self.q.q_all(&active), rng)
    }

    fn update(&mut self, tr: &Transition, cutoff_mode: CutoffMode, rng: &mut RngStream) {
        if tr.truncated && cutoff_mode == CutoffMode::Discard {
            self.end_episode();
            return;
        }
        let active = self.q.active(&tr.obs.features);
        let q_sa = self.q.q(&active, tr.action);
        let (target, next_action) = if tr.terminal {
            (tr.reward, None)
        } else {
            let next_active = self.q.active(&tr.next_obs.features);
            let next_q = self.q.q_all(&next_active);
            let a = epsilon_greedy(&next_q, self.epsilon, rng);
            (tr.reward + self.gamma * self.q.q(&next_active, a), Some(a))
        };
        let delta = target - q_sa;

        let decay = self.gamma * self.lambda;
        self.live_trace.retain(|&i| {
            let z = self.trace[i] * decay;
            if z < TRACE_FLOOR {
                self.trace[i] = 0.0;
                false
            } else {
                self.trace[i] = z;
                true
            }
        });
        for &i in &active {
            let w = self.q.weight_index(tr.action, i);
            if self.trace[w] == 0.0 {
                self.live_trace.push(w);
            }
            self.trace[w] = 1.0; // replacing traces
        }
        let step = self.alpha / self.q.tilings() as f64 * delta;
        for &i in &self.live_trace {
            self.q.weights[i] += step * self.trace[i];
        }

        if tr.terminal || tr.truncated {
            self.end_episode();
        } else {
            // Next select_action must return the action the target used.
            self.pending_action = next_action;
        }
    }

    fn weights(&self) -> &[f64] {
        &self.q.weights
    }

    fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.q.weights
    }
}
