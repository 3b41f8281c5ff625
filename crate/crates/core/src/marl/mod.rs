//! Bidding agents: observations, deterministic actors with Gaussian
//! exploration, centralized critics, replay and target networks.

mod adam;
pub mod checkpoint;
mod learner;
mod net;
mod replay;

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub use adam::Adam;
pub use learner::{CriticScope, Learner, LearnerConfig};
pub use net::{Mlp, OutputActivation, Trace};
pub use replay::{ReplayBuffer, Transition};

use crate::error::{Error, Result};
use crate::rng::StreamLabel;

/// What an agent sees before bidding: its effective bids of the previous
/// round and the budget it had left after that round.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub g_prev: Vec<f64>,
    pub rb_prev: f64,
}

impl Observation {
    /// Observation at the start of an iteration.
    pub fn initial(l: usize, budget: f64) -> Self {
        Observation {
            g_prev: vec![0.0; l],
            rb_prev: budget,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.g_prev.clone();
        v.push(self.rb_prev);
        v
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let (last, g) = values.split_last().expect("observation has a budget slot");
        Observation {
            g_prev: g.to_vec(),
            rb_prev: *last,
        }
    }

    /// Network features: every entry divided by the agent's budget.
    pub fn features(&self, budget: f64) -> Vec<f64> {
        self.g_prev
            .iter()
            .chain(std::iter::once(&self.rb_prev))
            .map(|v| v / budget)
            .collect()
    }
}

/// Bids of one agent: the actor's squashed output scaled by the budget, plus
/// Gaussian noise with standard deviation `noise_std * budget`, clipped to
/// `[0, budget]`.
pub fn act(
    actor: &Mlp,
    obs: &Observation,
    budget: f64,
    noise_std: f64,
    label: StreamLabel,
) -> Vec<f64> {
    assert!(noise_std >= 0.0, "noise_std must be non-negative");
    let raw = actor.forward(&obs.features(budget));
    if noise_std == 0.0 {
        return raw.iter().map(|r| r * budget).collect();
    }
    let noise = Normal::new(0.0, noise_std * budget).expect("finite noise scale");
    let mut rng = label.rng();
    raw.iter()
        .map(|r| (r * budget + noise.sample(&mut rng)).clamp(0.0, budget))
        .collect()
}

/// Q-value of a critic for a joint observation and joint action.
pub fn critic_eval(critic: &Mlp, joint_obs: &[f64], joint_action: &[f64]) -> Result<f64> {
    let width = joint_obs.len() + joint_action.len();
    if width != critic.input_dim() {
        return Err(Error::ShapeMismatch {
            what: "critic input",
            expected: critic.input_dim(),
            got: width,
        });
    }
    let mut input = Vec::with_capacity(width);
    input.extend_from_slice(joint_obs);
    input.extend_from_slice(joint_action);
    Ok(critic.forward(&input)[0])
}

/// Polyak averaging: `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(online: &Mlp, target: &mut Mlp, tau: f64) -> Result<()> {
    if !online.same_shape(target) {
        return Err(Error::ShapeMismatch {
            what: "target network",
            expected: online.params().len(),
            got: target.params().len(),
        });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (0, 1]")));
    }
    for (t, o) in target.params_mut().iter_mut().zip(online.params()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

/// Uniform bids on `[0, budget]`, the random baseline.
pub fn random_policy(budget: f64, l: usize, label: StreamLabel) -> Vec<f64> {
    let mut rng = label.rng();
    (0..l).map(|_| rng.random::<f64>() * budget).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    fn label() -> StreamLabel {
        StreamLabel::new(5, Purpose::Exploration).at(1, 2)
    }

    #[test]
    fn zero_actor_bids_half_budget() {
        let actor = Mlp::zeros(&[4, 8, 8, 3], OutputActivation::Logistic);
        let obs = Observation::initial(3, 3.0);
        assert_eq!(act(&actor, &obs, 3.0, 0.0, label()), vec![1.5; 3]);
    }

    #[test]
    fn noisy_bids_are_clipped_and_reproducible() {
        let mut rng = StreamLabel::new(1, Purpose::ParamInit).rng();
        let actor = Mlp::random(&[6, 16, 5], OutputActivation::Logistic, &mut rng);
        let obs = Observation {
            g_prev: vec![0.0, 1.2, 0.0, 0.0, 2.0],
            rb_prev: 0.4,
        };
        let a = act(&actor, &obs, 3.0, 2.0, label());
        let b = act(&actor, &obs, 3.0, 2.0, label());
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (0.0..=3.0).contains(x)));
        assert!(
            a.iter().any(|&x| x == 0.0 || x == 3.0),
            "huge noise should clip"
        );
        let quiet = act(&actor, &obs, 3.0, 0.0, label());
        assert_eq!(quiet, act(&actor, &obs, 3.0, 0.0, label()));
    }

    #[test]
    fn zero_critic_evaluates_to_zero() {
        let critic = Mlp::zeros(&[10, 8, 1], OutputActivation::Identity);
        assert_eq!(critic_eval(&critic, &[1.0; 6], &[2.0; 4]).unwrap(), 0.0);
        assert!(critic_eval(&critic, &[1.0; 6], &[2.0; 3]).is_err());
    }

    #[test]
    fn soft_update_cases() {
        let shape = [2, 3, 1];
        let ones = Mlp::from_params(&shape, OutputActivation::Identity, vec![1.0; 13]).unwrap();
        let mut zeros = Mlp::zeros(&shape, OutputActivation::Identity);
        soft_update(&ones, &mut zeros, 0.5).unwrap();
        assert!(zeros.params().iter().all(|&p| p == 0.5));

        let mut copy = zeros.clone();
        soft_update(&ones, &mut copy, 1.0).unwrap();
        assert_eq!(copy, ones);

        let mut same = ones.clone();
        soft_update(&ones, &mut same, 0.01).unwrap();
        assert_eq!(same, ones);

        let mut other = Mlp::zeros(&[2, 4, 1], OutputActivation::Identity);
        assert!(soft_update(&ones, &mut other, 0.5).is_err());
        assert!(soft_update(&ones, &mut zeros, 0.0).is_err());
    }

    #[test]
    fn random_policy_range_and_mean() {
        let bids = random_policy(3.0, 100_000, label());
        assert!(bids.iter().all(|b| (0.0..=3.0).contains(b)));
        let mean = bids.iter().sum::<f64>() / bids.len() as f64;
        assert!((mean - 1.5).abs() <= 0.015, "mean {mean}");
        assert_eq!(
            random_policy(3.0, 5, label()),
            random_policy(3.0, 5, label())
        );
    }

    #[test]
    fn observation_round_trip() {
        let obs = Observation {
            g_prev: vec![1.0, 0.0],
            rb_prev: 2.0,
        };
        assert_eq!(Observation::from_slice(&obs.to_vec()), obs);
        assert_eq!(obs.features(2.0), vec![0.5, 0.0, 1.0]);
    }
}
