//! Seven-state, two-action counterexample for off-policy bootstrapping.
//!
//! Six "upper" states and one "lower" state. The dashed action jumps to a
//! uniformly random upper state, the solid action always enters the lower
//! state. Rewards are identically zero and the task never terminates, so
//! the only interesting signal is what a learner's weights do.
//!
//! Observations are the canonical over-parameterized features: upper state
//! s has feature value 2 at component s plus 1 at the shared component,
//! the lower state has 1 at its own component plus 2 at the shared one.
//! True values are all zero yet the feature matrix lets linear TD's
//! expected update spiral when the update distribution (dashed-heavy
//! behavior) mismatches the bootstrap distribution (solid-only target).

use rand::Rng;

use super::{EnvDescriptor, Environment, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::seed::RngStream;

pub const DASHED: usize = 0;
pub const SOLID: usize = 1;
pub const STATE_COUNT: usize = 7;
pub const FEATURE_DIM: usize = 8;
/// Index of the lower state, the one the solid action enters.
pub const LOWER_STATE: usize = 6;
/// Probability the canonical dashed-heavy behavior policy picks solid.
pub const BEHAVIOR_SOLID_PROB: f64 = 1.0 / 7.0;

pub fn features(state: usize) -> Vec<f64> {
    let mut f = vec![0.0; FEATURE_DIM];
    if state == LOWER_STATE {
        f[LOWER_STATE] = 1.0;
        f[FEATURE_DIM - 1] = 2.0;
    } else {
        f[state] = 2.0;
        f[FEATURE_DIM - 1] = 1.0;
    }
    f
}

pub struct Bairds {
    descriptor: EnvDescriptor,
    state: Option<usize>,
}

impl Bairds {
    pub fn new() -> Self {
        Bairds {
            descriptor: EnvDescriptor {
                id: "bairds".to_string(),
                action_count: 2,
                discount: 0.99,
                optimal_return: None,
                worst_return: None,
            },
            state: None,
        }
    }
}

impl Default for Bairds {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Bairds {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn observation_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 2.0); FEATURE_DIM]
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        let s = rng.random_range(0..STATE_COUNT);
        self.state = Some(s);
        Observation::new(features(s))
    }

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<StepOutcome> {
        let _ = self.state.ok_or(Error::StepBeforeReset)?;
        if action >= self.descriptor.action_count {
            return Err(Error::ActionOutOfRange {
                action,
                action_count: self.descriptor.action_count,
            });
        }
        let next = match action {
            DASHED => rng.random_range(0..LOWER_STATE),
            _ => LOWER_STATE,
        };
        self.state = Some(next);
        Ok(StepOutcome {
            reward: 0.0,
            next_obs: Observation::new(features(next)),
            terminal: false,
            truncated: false,
        })
    }
}
