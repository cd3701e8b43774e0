//! Six-state chain where swimming upstream is hard but worth it.
//!
//! Swimming left always succeeds and pays a token trickle at the leftmost
//! state. Swimming right only advances with probability 0.3 and tends to
//! wash the agent back, but taking the right action at the rightmost state
//! pays a reward three orders of magnitude larger. Greedy short-horizon
//! learners latch onto the trickle; that is the point of the task.
//! Continuing (never terminal); episode boundaries come from the harness.

use rand::Rng;

use super::{EnvDescriptor, Environment, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::seed::RngStream;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const STATE_COUNT: usize = 6;
/// Paid every step the left action is taken at the left bank.
pub const LEFT_BANK_REWARD: f64 = 0.005;
/// Paid every step the right action is taken at the right bank.
pub const RIGHT_BANK_REWARD: f64 = 1.0;
/// Chance a rightward stroke actually advances.
pub const RIGHT_SUCCESS: f64 = 0.3;
const RIGHT_DRIFT_BACK: f64 = 0.1;

pub struct Riverswim {
    descriptor: EnvDescriptor,
    state: Option<usize>,
}

impl Riverswim {
    pub fn new() -> Self {
        Riverswim {
            descriptor: EnvDescriptor {
                id: "riverswim".to_string(),
                action_count: 2,
                discount: 0.99,
                optimal_return: None,
                worst_return: None,
            },
            state: None,
        }
    }
}

impl Default for Riverswim {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Riverswim {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn observation_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, (STATE_COUNT - 1) as f64)]
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        // Start in the left region, one or two strokes from the bank.
        let s = rng.random_range(1..3usize);
        self.state = Some(s);
        Observation::new(vec![s as f64])
    }

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<StepOutcome> {
        let s = self.state.ok_or(Error::StepBeforeReset)?;
        if action >= self.descriptor.action_count {
            return Err(Error::ActionOutOfRange {
                action,
                action_count: self.descriptor.action_count,
            });
        }
        let (next, reward) = match action {
            LEFT => (
                s.saturating_sub(1),
                if s == 0 { LEFT_BANK_REWARD } else { 0.0 },
            ),
            RIGHT => {
                let u: f64 = rng.random();
                let next = if s == 0 {
                    if u < RIGHT_SUCCESS {
                        1
                    } else {
                        0
                    }
                } else if s == STATE_COUNT - 1 {
                    if u < RIGHT_SUCCESS {
                        s - 1
                    } else {
                        s
                    }
                } else if u < RIGHT_SUCCESS {
                    s + 1
                } else if u < RIGHT_SUCCESS + RIGHT_DRIFT_BACK {
                    s - 1
                } else {
                    s
                };
                let reward = if s == STATE_COUNT - 1 {
                    RIGHT_BANK_REWARD
                } else {
                    0.0
                };
                (next, reward)
            }
            _ => unreachable!("action range checked above"),
        };
        self.state = Some(next);
        Ok(StepOutcome {
            reward,
            next_obs: Observation::new(vec![next as f64]),
            terminal: false,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_stream, StreamLabel};

    #[test]
    fn starts_in_left_region() {
        let mut env = Riverswim::new();
        for seed in 0..100 {
            let mut rng = derive_stream(seed, 0, StreamLabel::Env);
            let obs = env.reset(&mut rng);
            assert!(obs.features[0] == 1.0 || obs.features[0] == 2.0);
        }
    }

    // The misleading incentive: committing to left yields strictly positive
    // reward per step once the bank is reached.
    #[test]
    fn always_left_collects_positive_reward() {
        let mut env = Riverswim::new();
        let mut rng = derive_stream(5, 0, StreamLabel::Env);
        env.reset(&mut rng);
        let mut total = 0.0;
        for _ in 0..100 {
            total += env.step(LEFT, &mut rng).unwrap().reward;
        }
        assert!(total > 0.0);
        // After at most two strokes the agent sits on the bank forever.
        assert!(total >= 98.0 * LEFT_BANK_REWARD);
    }

    // Persistent right strokes reach the right bank with probability one;
    // checked by Monte Carlo over many independent streams.
    #[test]
    fn persistent_right_reaches_right_bank() {
        for seed in 0..200 {
            let mut env = Riverswim::new();
            let mut rng = derive_stream(seed, 0, StreamLabel::Env);
            env.reset(&mut rng);
            let mut reached = false;
            for _ in 0..2000 {
                let out = env.step(RIGHT, &mut rng).unwrap();
                if out.reward == RIGHT_BANK_REWARD {
                    reached = true;
                    break;
                }
            }
            assert!(reached, "seed {seed} never reached the right bank");
        }
    }

    #[test]
    fn right_success_rate_matches_constant() {
        let mut env = Riverswim::new();
        let mut rng = derive_stream(9, 0, StreamLabel::Env);
        env.reset(&mut rng);
        let mut advances = 0;
        let trials = 20_000;
        for _ in 0..trials {
            env.state = Some(2);
            let out = env.step(RIGHT, &mut rng).unwrap();
            if out.next_obs.features[0] == 3.0 {
                advances += 1;
            }
        }
        let rate = f64::from(advances) / f64::from(trials);
        assert!((rate - RIGHT_SUCCESS).abs() < 0.02, "rate {rate}");
    }
}
