use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamLabel};

use super::{soft_update, Adam, Mlp, Observation, OutputActivation, Transition};

/// What each agent's critic is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticScope {
    /// Every agent's observation and action (centralized training).
    Joint,
    /// Only the agent's own observation and action (independent learners).
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Multiplier applied to raw spreads before they enter a TD target.
    pub reward_scale: f64,
    pub scope: CriticScope,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            hidden: vec![64, 64],
            lr: 0.01,
            gamma: 0.95,
            tau: 0.01,
            reward_scale: 1.0,
            scope: CriticScope::Joint,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl AgentNets {
    pub(crate) fn new(
        actor: Mlp,
        critic: Mlp,
        target_actor: Mlp,
        target_critic: Mlp,
        lr: f64,
    ) -> Self {
        AgentNets {
            actor_opt: Adam::new(actor.params().len(), lr),
            critic_opt: Adam::new(critic.params().len(), lr),
            actor,
            critic,
            target_actor,
            target_critic,
        }
    }
}

/// Actors, critics, their target copies and optimizers for `k` agents.
///
/// Networks see budget-relative values: observation entries and bids are
/// divided by the owning agent's budget before entering any network, so an
/// actor's logistic output is directly the bid as a fraction of budget.
#[derive(Debug, Clone)]
pub struct Learner {
    k: usize,
    l: usize,
    budgets: Vec<f64>,
    config: LearnerConfig,
    pub(crate) agents: Vec<AgentNets>,
}

impl Learner {
    /// Randomly initialized networks; targets start as exact copies.
    pub fn new(l: usize, budgets: Vec<f64>, config: LearnerConfig, master: u64) -> Result<Self> {
        Self::build(l, budgets, config, |sizes, out, agent, which| {
            let label = StreamLabel::new(master, Purpose::ParamInit)
                .at(0, which)
                .agent(agent as u64);
            Mlp::random(sizes, out, &mut label.rng())
        })
    }

    /// All parameters zero.
    pub fn zeroed(l: usize, budgets: Vec<f64>, config: LearnerConfig) -> Result<Self> {
        Self::build(l, budgets, config, |sizes, out, _, _| {
            Mlp::zeros(sizes, out)
        })
    }

    fn build(
        l: usize,
        budgets: Vec<f64>,
        config: LearnerConfig,
        mut init: impl FnMut(&[usize], OutputActivation, usize, u64) -> Mlp,
    ) -> Result<Self> {
        let k = budgets.len();
        if k == 0 || l == 0 {
            return Err(Error::invalid(
                "learner needs at least one agent and one seed",
            ));
        }
        if budgets.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::invalid("budgets must be positive"));
        }
        let critic_in = match config.scope {
            CriticScope::Joint => k * (l + 1) + k * l,
            CriticScope::Local => (l + 1) + l,
        };
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden);
            s.push(output);
            s
        };
        let actor_sizes = sizes(l + 1, l);
        let critic_sizes = sizes(critic_in, 1);
        let agents = (0..k)
            .map(|i| {
                let actor = init(&actor_sizes, OutputActivation::Logistic, i, 0);
                let critic = init(&critic_sizes, OutputActivation::Identity, i, 1);
                AgentNets::new(actor.clone(), critic.clone(), actor, critic, config.lr)
            })
            .collect();
        Ok(Learner {
            k,
            l,
            budgets,
            config,
            agents,
        })
    }

    pub(crate) fn from_parts(
        l: usize,
        budgets: Vec<f64>,
        config: LearnerConfig,
        agents: Vec<AgentNets>,
    ) -> Self {
        Learner {
            k: budgets.len(),
            l,
            budgets,
            config,
            agents,
        }
    }

    pub fn agents(&self) -> usize {
        self.k
    }

    pub fn seeds(&self) -> usize {
        self.l
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn actor(&self, i: usize) -> &Mlp {
        &self.agents[i].actor
    }

    pub fn critic(&self, i: usize) -> &Mlp {
        &self.agents[i].critic
    }

    pub fn target_actor(&self, i: usize) -> &Mlp {
        &self.agents[i].target_actor
    }

    pub fn target_critic(&self, i: usize) -> &Mlp {
        &self.agents[i].target_critic
    }

    pub fn actor_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.agents[i].actor
    }

    /// Replaces agent `i`'s critic (and its target and optimizer state).
    pub fn set_critic(&mut self, i: usize, critic: Mlp) -> Result<()> {
        let expected = self.agents[i].critic.input_dim();
        if critic.input_dim() != expected || critic.output_dim() != 1 {
            return Err(Error::ShapeMismatch {
                what: "critic input",
                expected,
                got: critic.input_dim(),
            });
        }
        let nets = &mut self.agents[i];
        nets.critic_opt = Adam::new(critic.params().len(), self.config.lr);
        nets.target_critic = critic.clone();
        nets.critic = critic;
        Ok(())
    }

    pub fn critic_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.agents[i].critic
    }

    pub fn is_finite(&self) -> bool {
        self.agents.iter().all(|a| {
            a.actor.is_finite()
                && a.critic.is_finite()
                && a.target_actor.is_finite()
                && a.target_critic.is_finite()
        })
    }

    /// Budget-relative input of agent `i`'s critic.
    pub fn critic_input(&self, i: usize, joint_obs: &[f64], joint_action: &[f64]) -> Vec<f64> {
        let w = self.l + 1;
        let scale_obs = |j: usize| {
            joint_obs[j * w..(j + 1) * w]
                .iter()
                .map(move |v| v / self.budgets[j])
        };
        let scale_act = |j: usize| {
            joint_action[j * self.l..(j + 1) * self.l]
                .iter()
                .map(move |v| v / self.budgets[j])
        };
        match self.config.scope {
            CriticScope::Joint => (0..self.k)
                .flat_map(scale_obs)
                .chain((0..self.k).flat_map(scale_act))
                .collect(),
            CriticScope::Local => scale_obs(i).chain(scale_act(i)).collect(),
        }
    }

    /// Offset of agent `i`'s own action inside its critic input.
    fn own_action_offset(&self, i: usize) -> usize {
        match self.config.scope {
            CriticScope::Joint => self.k * (self.l + 1) + i * self.l,
            CriticScope::Local => self.l + 1,
        }
    }

    fn obs_features(&self, j: usize, joint_obs: &[f64]) -> Vec<f64> {
        let w = self.l + 1;
        Observation::from_slice(&joint_obs[j * w..(j + 1) * w]).features(self.budgets[j])
    }

    /// Q-value of agent `i`'s online critic for a stored joint observation
    /// and joint action.
    pub fn q_value(&self, i: usize, joint_obs: &[f64], joint_action: &[f64]) -> f64 {
        self.agents[i]
            .critic
            .forward(&self.critic_input(i, joint_obs, joint_action))[0]
    }

    /// TD target of agent `i`: scaled reward plus the discounted target
    /// critic's value of the next joint observation under the target actors.
    pub fn td_target(&self, i: usize, t: &Transition) -> f64 {
        let r = t.rewards[i] * self.config.reward_scale;
        if t.terminal {
            return r;
        }
        let next_action: Vec<f64> = (0..self.k)
            .flat_map(|j| {
                let frac = self.agents[j]
                    .target_actor
                    .forward(&self.obs_features(j, &t.joint_next_obs));
                let b = self.budgets[j];
                frac.into_iter().map(move |f| f * b)
            })
            .collect();
        let input = self.critic_input(i, &t.joint_next_obs, &next_action);
        r + self.config.gamma * self.agents[i].target_critic.forward(&input)[0]
    }

    /// Mean squared TD error of agent `i`'s critic over `batch`, and its
    /// gradient with respect to the critic parameters.
    pub fn critic_loss_and_grad(&self, i: usize, batch: &[&Transition]) -> (f64, Vec<f64>) {
        assert!(!batch.is_empty(), "empty batch");
        let critic = &self.agents[i].critic;
        let n = batch.len() as f64;
        let mut grad = vec![0.0; critic.params().len()];
        let mut loss = 0.0;
        for t in batch {
            let y = self.td_target(i, t);
            let trace = critic.forward_trace(&self.critic_input(i, &t.joint_obs, &t.joint_action));
            let diff = trace.output[0] - y;
            loss += diff * diff;
            critic.backward(&trace, &[2.0 * diff / n], Some(&mut grad));
        }
        (loss / n, grad)
    }

    /// One optimizer step on agent `i`'s critic; returns the loss before it.
    pub fn critic_update(&mut self, i: usize, batch: &[&Transition]) -> f64 {
        let (loss, grad) = self.critic_loss_and_grad(i, batch);
        let nets = &mut self.agents[i];
        nets.critic_opt.step(nets.critic.params_mut(), &grad);
        loss
    }

    /// Mean Q of agent `i` with its own action slot replaced by its online
    /// actor's noiseless output, and the gradient of that mean with respect
    /// to the actor parameters.
    pub fn actor_objective_and_grad(&self, i: usize, batch: &[&Transition]) -> (f64, Vec<f64>) {
        assert!(!batch.is_empty(), "empty batch");
        let nets = &self.agents[i];
        let n = batch.len() as f64;
        let offset = self.own_action_offset(i);
        let mut grad = vec![0.0; nets.actor.params().len()];
        let mut objective = 0.0;
        for t in batch {
            let actor_trace = nets
                .actor
                .forward_trace(&self.obs_features(i, &t.joint_obs));
            let mut input = self.critic_input(i, &t.joint_obs, &t.joint_action);
            input[offset..offset + self.l].copy_from_slice(&actor_trace.output);
            let critic_trace = nets.critic.forward_trace(&input);
            objective += critic_trace.output[0];
            let d_input = nets.critic.backward(&critic_trace, &[1.0 / n], None);
            nets.actor.backward(
                &actor_trace,
                &d_input[offset..offset + self.l],
                Some(&mut grad),
            );
        }
        (objective / n, grad)
    }

    /// One ascent step on agent `i`'s actor; returns the objective before it.
    pub fn actor_update(&mut self, i: usize, batch: &[&Transition]) -> f64 {
        let (objective, mut grad) = self.actor_objective_and_grad(i, batch);
        for g in &mut grad {
            *g = -*g;
        }
        let nets = &mut self.agents[i];
        nets.actor_opt.step(nets.actor.params_mut(), &grad);
        objective
    }

    /// Polyak update of agent `i`'s target actor and critic.
    pub fn soft_update_targets(&mut self, i: usize) -> Result<()> {
        let tau = self.config.tau;
        let nets = &mut self.agents[i];
        soft_update(&nets.actor, &mut nets.target_actor, tau)?;
        soft_update(&nets.critic, &mut nets.target_critic, tau)
    }

    /// Critic then actor step for every agent, followed by target updates.
    /// Every agent's step reads the same target networks, so the agent order
    /// does not matter.
    pub fn update_all(&mut self, batches: &[Vec<&Transition>]) -> Result<Vec<(f64, f64)>> {
        let mut stats = Vec::with_capacity(self.k);
        for (i, batch) in batches.iter().enumerate() {
            let loss = self.critic_update(i, batch);
            let objective = self.actor_update(i, batch);
            stats.push((loss, objective));
        }
        for i in 0..self.k {
            self.soft_update_targets(i)?;
        }
        if !self.is_finite() {
            return Err(Error::NumericFailure("a learning step".into()));
        }
        Ok(stats)
    }
}
