//! Underpowered car in a valley, the classic cosine-hill formulation.
//!
//! State is (position, velocity). Three actions apply reverse, zero, or
//! forward throttle; gravity follows the hill profile. Every step pays -1
//! until the car escapes on the right, so returns measure time to goal.

use rand::Rng;

use super::{EnvDescriptor, Environment, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::seed::RngStream;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;
const START_LOW: f64 = -0.6;
const START_HIGH: f64 = -0.4;

pub struct MountainCar {
    descriptor: EnvDescriptor,
    position: f64,
    velocity: f64,
    started: bool,
    terminal: bool,
}

impl MountainCar {
    pub fn new() -> Self {
        MountainCar {
            descriptor: EnvDescriptor {
                id: "mountain-car".to_string(),
                action_count: 3,
                discount: 0.99,
                optimal_return: None,
                worst_return: None,
            },
            position: 0.0,
            velocity: 0.0,
            started: false,
            terminal: false,
        }
    }

    fn observe(&self) -> Observation {
        Observation::new(vec![self.position, self.velocity])
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCar {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn observation_bounds(&self) -> Vec<(f64, f64)> {
        vec![(MIN_POSITION, MAX_POSITION), (-MAX_SPEED, MAX_SPEED)]
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        self.position = rng.random_range(START_LOW..START_HIGH);
        self.velocity = 0.0;
        self.started = true;
        self.terminal = false;
        self.observe()
    }

    fn step(&mut self, action: usize, _rng: &mut RngStream) -> Result<StepOutcome> {
        if !self.started {
            return Err(Error::StepBeforeReset);
        }
        if self.terminal {
            return Err(Error::StepAfterTerminal);
        }
        if action >= self.descriptor.action_count {
            return Err(Error::ActionOutOfRange {
                action,
                action_count: self.descriptor.action_count,
            });
        }
        let throttle = action as f64 - 1.0;
        self.velocity += FORCE * throttle - GRAVITY * (3.0 * self.position).cos();
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position += self.velocity;
        self.position = self.position.clamp(MIN_POSITION, MAX_POSITION);
        if self.position <= MIN_POSITION {
            // Hitting the left wall kills all momentum.
            self.velocity = 0.0;
        }
        let terminal = self.position >= GOAL_POSITION;
        self.terminal = terminal;
        Ok(StepOutcome {
            reward: -1.0,
            next_obs: self.observe(),
            terminal,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_stream, StreamLabel};
    use approx::assert_relative_eq;

    #[test]
    fn start_state_distribution() {
        let mut env = MountainCar::new();
        for seed in 0..200 {
            let mut rng = derive_stream(seed, 0, StreamLabel::Env);
            let obs = env.reset(&mut rng);
            assert!(obs.features[0] >= START_LOW && obs.features[0] < START_HIGH);
            assert_eq!(obs.features[1], 0.0);
        }
    }

    // One step of the dynamics from (-0.5, 0) under full throttle, checked
    // against a hand evaluation of the update equations.
    #[test]
    fn single_step_hand_check() {
        let mut env = MountainCar::new();
        let mut rng = derive_stream(0, 0, StreamLabel::Env);
        env.reset(&mut rng);
        env.position = -0.5;
        env.velocity = 0.0;
        let out = env.step(2, &mut rng).unwrap();
        let expect_v = 0.001 - 0.0025 * (-1.5f64).cos();
        assert_relative_eq!(out.next_obs.features[1], expect_v, max_relative = 1e-12);
        assert_relative_eq!(out.next_obs.features[0], -0.5 + expect_v, max_relative = 1e-12);
        assert_eq!(out.reward, -1.0);
        assert!(!out.terminal);
    }

    #[test]
    fn reward_is_minus_one_until_goal() {
        let mut env = MountainCar::new();
        let mut rng = derive_stream(11, 0, StreamLabel::Env);
        env.reset(&mut rng);
        for _ in 0..500 {
            let out = env.step(1, &mut rng).unwrap();
            assert_eq!(out.reward, -1.0);
            assert!(!out.terminal, "coasting alone must not reach the goal");
        }
    }

    // A bang-bang policy that pushes along the velocity sign rocks out of
    // the valley; this pins the physics producing an escape at all.
    #[test]
    fn energy_pumping_reaches_goal() {
        let mut env = MountainCar::new();
        let mut rng = derive_stream(2, 0, StreamLabel::Env);
        let mut obs = env.reset(&mut rng);
        let mut steps = 0;
        loop {
            let a = if obs.features[1] >= 0.0 { 2 } else { 0 };
            let out = env.step(a, &mut rng).unwrap();
            steps += 1;
            assert!(steps <= 500, "pumping should escape well inside 500 steps");
            if out.terminal {
                break;
            }
            obs = out.next_obs;
        }
        assert!(steps >= 50, "escape cannot be instant, took {steps}");
    }

    #[test]
    fn left_wall_zeroes_velocity() {
        let mut env = MountainCar::new();
        let mut rng = derive_stream(0, 0, StreamLabel::Env);
        env.reset(&mut rng);
        env.position = MIN_POSITION + 0.001;
        env.velocity = -MAX_SPEED;
        let out = env.step(0, &mut rng).unwrap();
        assert_eq!(out.next_obs.features[0], MIN_POSITION);
        assert_eq!(out.next_obs.features[1], 0.0);
    }
}
