//! Expected SARSA over tile-coded features.
//!
//! The bootstrap target averages next-state action values under the
//! current epsilon-greedy policy instead of sampling the next action, so
//! updates need no memory of what will be done next and no traces. The
//! listed stepsize is divided by the number of tilings, putting it on the
//! scale of the value estimate rather than of a single weight.

use super::tile_coding::{epsilon_greedy, expected_value, greedy_tie_break, TiledQ};
use super::{Agent, Algorithm, CutoffMode, HyperConfig, Transition};
use crate::envs::{EnvDescriptor, Observation};
use crate::error::Result;
use crate::seed::RngStream;

pub struct Esarsa {
    q: TiledQ,
    alpha: f64,
    epsilon: f64,
    gamma: f64,
}

impl Esarsa {
    pub fn new(
        config: &HyperConfig,
        descriptor: &EnvDescriptor,
        bounds: &[(f64, f64)],
    ) -> Result<Self> {
        let algo = Algorithm::Esarsa;
        let alpha = config.require(algo, "alpha")?;
        let epsilon = config.require(algo, "epsilon")?;
        let gamma = config.require(algo, "gamma_agent")?;
        let tiles = {
            config.require(algo, "tiles")?;
            config.positive_int("tiles")?
        };
        let tilings = {
            config.require(algo, "tilings")?;
            config.positive_int("tilings")?
        };
        Ok(Esarsa {
            q: TiledQ::new(tiles, tilings, bounds.to_vec(), descriptor.action_count),
            alpha,
            epsilon,
            gamma,
        })
    }
}

impl Agent for Esarsa {
    fn select_action(&mut self, obs: &Observation, rng: &mut RngStream) -> usize {
        let active = self.q.active(&obs.features);
        epsilon_greedy(&self.q.q_all(&active), self.epsilon, rng)
    }

    fn greedy_action(&self, obs: &Observation, rng: &mut RngStream) -> usize {
        let active = self.q.active(&obs.features);
        greedy_tie_break(&self.q.q_all(&active), rng)
    }

    fn update(&mut self, tr: &Transition, cutoff_mode: CutoffMode, _rng: &mut RngStream) {
        if tr.truncated && cutoff_mode == CutoffMode::Discard {
            return;
        }
        let active = self.q.active(&tr.obs.features);
        let q_sa = self.q.q(&active, tr.action);
        let target = if tr.terminal {
            tr.reward
        } else {
            let next_active = self.q.active(&tr.next_obs.features);
            let next_q = self.q.q_all(&next_active);
            tr.reward + self.gamma * expected_value(&next_q, self.epsilon)
        };
        let step = self.alpha / self.q.tilings() as f64 * (target - q_sa);
        for &i in &active {
            let w = self.q.weight_index(tr.action, i);
            self.q.weights[w] += step;
        }
    }

    fn weights(&self) -> &[f64] {
        &self.q.weights
    }

    fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.q.weights
    }
}
