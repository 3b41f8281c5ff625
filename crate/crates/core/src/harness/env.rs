use std::time::Instant;

use crate::auction::{
    adjust_prices, contribution_degrees, fairness_index, initial_prices, run_auction,
    AuctionOutcome, AuctionState, BidMatrix,
};
use crate::diffusion::{degree_proxy_spreads, diffuse_clt, single_seed_spreads, Allocation};
use crate::error::{Error, Result};
use crate::graph::{sample_thresholds, SeedSet, WeightedGraph};
use crate::marl::{act, random_policy, Learner, Observation, Transition};
use crate::rng::{Purpose, StreamLabel};

use super::config::RewardMode;
use super::metrics::EpisodeRecord;

/// Produces one agent's bids for a round.
pub trait Bidder {
    /// `label` identifies the round and agent; implementations draw any
    /// randomness they need from it.
    fn bids(&self, agent: usize, obs: &Observation, budget: f64, label: StreamLabel) -> Vec<f64>;
}

impl<F> Bidder for F
where
    F: Fn(usize, &Observation, f64, StreamLabel) -> Vec<f64>,
{
    fn bids(&self, agent: usize, obs: &Observation, budget: f64, label: StreamLabel) -> Vec<f64> {
        self(agent, obs, budget, label)
    }
}

/// Uniform random bids on `[0, budget]`.
#[derive(Debug, Clone, Copy)]
pub struct RandomBidder {
    pub l: usize,
}

impl Bidder for RandomBidder {
    fn bids(&self, _agent: usize, _obs: &Observation, budget: f64, label: StreamLabel) -> Vec<f64> {
        let label = StreamLabel {
            purpose: Purpose::RandomBids,
            ..label
        };
        random_policy(budget, self.l, label)
    }
}

/// Online actors of a [`Learner`] with Gaussian exploration.
#[derive(Debug, Clone, Copy)]
pub struct ActorBidder<'a> {
    pub learner: &'a Learner,
    /// Noise standard deviation as a fraction of budget.
    pub noise: f64,
}

impl Bidder for ActorBidder<'_> {
    fn bids(&self, agent: usize, obs: &Observation, budget: f64, label: StreamLabel) -> Vec<f64> {
        act(self.learner.actor(agent), obs, budget, self.noise, label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSettings {
    pub budgets: Vec<f64>,
    pub kappa: f64,
    pub omega: f64,
    pub rho: f64,
    pub t_up: usize,
    pub rounds_per_iteration: usize,
    pub reward_mode: RewardMode,
    pub master: u64,
}

/// Everything a round produced.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub record: EpisodeRecord,
    pub transition: Transition,
    pub outcome: AuctionOutcome,
    pub seed_spreads: Vec<usize>,
    pub contribution: Vec<f64>,
}

/// The bidding environment: graph, seeds, starting prices and the agents'
/// observations.
#[derive(Debug, Clone)]
pub struct Environment {
    graph: WeightedGraph,
    seeds: SeedSet,
    settings: EnvSettings,
    state: AuctionState,
    observations: Vec<Observation>,
    iteration: u64,
    round: u64,
}

impl Environment {
    pub fn new(graph: WeightedGraph, seeds: SeedSet, settings: EnvSettings) -> Result<Self> {
        if settings.budgets.len() < 2 {
            return Err(Error::invalid("at least two competitors are required"));
        }
        if settings.t_up == 0 || settings.rounds_per_iteration == 0 {
            return Err(Error::invalid(
                "t_up and rounds per iteration must be positive",
            ));
        }
        let state = AuctionState::new(settings.budgets.clone(), seeds.len())?;
        let mut env = Environment {
            graph,
            seeds,
            settings,
            state,
            observations: Vec::new(),
            iteration: 0,
            round: 1,
        };
        env.reset(0)?;
        Ok(env)
    }

    /// Starts iteration `iteration`: prices back to their initial values,
    /// observations back to zero bids and full budgets.
    pub fn reset(&mut self, iteration: u64) -> Result<()> {
        let l = self.seeds.len();
        self.state.prices = initial_prices(&self.settings.budgets, l)?;
        self.state.round_index = 1;
        self.observations = self
            .settings
            .budgets
            .iter()
            .map(|&b| Observation::initial(l, b))
            .collect();
        self.iteration = iteration;
        self.round = 1;
        Ok(())
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn seeds(&self) -> &SeedSet {
        &self.seeds
    }

    pub fn settings(&self) -> &EnvSettings {
        &self.settings
    }

    pub fn prices(&self) -> &[f64] {
        &self.state.prices
    }

    pub fn set_prices(&mut self, prices: Vec<f64>) -> Result<()> {
        if prices.len() != self.seeds.len() || prices.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::invalid("prices must be positive, one per seed"));
        }
        self.state.prices = prices;
        Ok(())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// One-based round within the current iteration.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Plays one bidding round: agents bid, seeds are auctioned, the round's
    /// thresholds are drawn, spreads are computed with unsold seeds blocked,
    /// prices are adjusted for the next round and observations advance.
    pub fn run_round(&mut self, bidder: &dyn Bidder) -> Result<RoundOutput> {
        let started = Instant::now();
        let k = self.settings.budgets.len();
        let l = self.seeds.len();
        let master = self.settings.master;

        let mut rows = Vec::with_capacity(k);
        for (i, obs) in self.observations.iter().enumerate() {
            let label = StreamLabel::new(master, Purpose::Exploration)
                .at(self.iteration, self.round)
                .agent(i as u64);
            let budget = self.settings.budgets[i];
            let bids = bidder.bids(i, obs, budget, label);
            if bids.len() != l {
                return Err(Error::ShapeMismatch {
                    what: "agent bids",
                    expected: l,
                    got: bids.len(),
                });
            }
            rows.push(bids.into_iter().map(|b| b.clamp(0.0, budget)).collect());
        }
        let bids = BidMatrix::from_rows(&rows)?;
        let prices_before = self.state.prices.clone();
        let outcome = run_auction(&self.state, &bids);

        let alloc = Allocation::new(outcome.winner.clone(), k)?;
        let (rewards, seed_spreads) = match self.settings.reward_mode {
            RewardMode::ExactClt => {
                let thresholds = sample_thresholds(&self.graph, master, self.iteration, self.round);
                let result = diffuse_clt(
                    &self.graph,
                    &thresholds,
                    &self.seeds,
                    &alloc,
                    self.settings.t_up,
                );
                let per_seed =
                    single_seed_spreads(&self.graph, &thresholds, &self.seeds, self.settings.t_up);
                (result.spreads(), per_seed)
            }
            RewardMode::DegreeProxy => {
                let per_seed = self
                    .seeds
                    .nodes()
                    .iter()
                    .map(|&s| 1 + self.graph.seed_degree(s))
                    .collect();
                (
                    degree_proxy_spreads(&self.graph, &self.seeds, &alloc),
                    per_seed,
                )
            }
        };
        let rewards: Vec<f64> = rewards.into_iter().map(|r| r as f64).collect();

        let contribution = contribution_degrees(&seed_spreads);
        self.state.prices = adjust_prices(
            &self.state.prices,
            &outcome.sold(),
            &contribution,
            self.settings.kappa,
        )?;
        let ge = fairness_index(&rewards, &outcome.costs, self.settings.omega)?;

        let remaining = outcome.remaining_budgets(&self.settings.budgets);
        let next_obs: Vec<Observation> = (0..k)
            .map(|i| Observation {
                g_prev: outcome.effective_prices[i].clone(),
                rb_prev: remaining[i],
            })
            .collect();
        let terminal = self.round as usize >= self.settings.rounds_per_iteration;
        let transition = Transition {
            joint_obs: self
                .observations
                .iter()
                .flat_map(Observation::to_vec)
                .collect(),
            joint_action: rows.iter().flatten().copied().collect(),
            rewards: rewards.clone(),
            joint_next_obs: next_obs.iter().flat_map(Observation::to_vec).collect(),
            terminal,
        };

        let revenue = rewards.iter().sum();
        let record = EpisodeRecord {
            iteration: self.iteration,
            round: self.round,
            prices: prices_before,
            rewards,
            costs: outcome.costs.clone(),
            budgets: self.settings.budgets.clone(),
            effective_prices: outcome.effective_prices.clone(),
            ge,
            all_sold: outcome.all_sold,
            fair: ge <= self.settings.rho,
            revenue,
            wall_time_us: started.elapsed().as_micros() as u64,
        };

        self.observations = next_obs;
        self.round += 1;
        self.state.round_index = self.round;
        Ok(RoundOutput {
            record,
            transition,
            outcome,
            seed_spreads,
            contribution,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(budgets: Vec<f64>) -> EnvSettings {
        EnvSettings {
            budgets,
            kappa: 0.3,
            omega: 2.0,
            rho: 0.1,
            t_up: 100,
            rounds_per_iteration: 4,
            reward_mode: RewardMode::ExactClt,
            master: 17,
        }
    }

    fn small_env() -> Environment {
        let graph = crate::graph::preferential_attachment(40, 2, 1).unwrap();
        let seeds = crate::graph::select_seeds_by_degree(&graph, 3).unwrap();
        Environment::new(graph, seeds, settings(vec![2.0, 2.0])).unwrap()
    }

    fn zero_bidder(_: usize, _: &Observation, _: f64, _: StreamLabel) -> Vec<f64> {
        vec![0.0; 3]
    }

    #[test]
    fn idle_round_decays_prices() {
        let mut env = small_env();
        let start = env.prices().to_vec();
        let out = env.run_round(&zero_bidder).unwrap();
        assert!(!out.record.all_sold);
        assert_eq!(out.record.revenue, 0.0);
        assert_eq!(out.record.ge, 0.0);
        for (after, before) in env.prices().iter().zip(&start) {
            assert!((after - before * 0.7).abs() < 1e-12);
        }
        assert_eq!(env.observations()[0], Observation::initial(3, 2.0));
    }

    #[test]
    fn same_inputs_same_round() {
        let mut a = small_env();
        let mut b = small_env();
        let bidder = RandomBidder { l: 3 };
        for _ in 0..3 {
            let ra = a.run_round(&bidder).unwrap().record;
            let rb = b.run_round(&bidder).unwrap().record;
            assert_eq!(
                EpisodeRecord {
                    wall_time_us: 0,
                    ..ra
                },
                EpisodeRecord {
                    wall_time_us: 0,
                    ..rb
                }
            );
        }
    }

    #[test]
    fn terminal_flag_on_last_round() {
        let mut env = small_env();
        let flags: Vec<bool> = (0..4)
            .map(|_| env.run_round(&zero_bidder).unwrap().transition.terminal)
            .collect();
        assert_eq!(flags, vec![false, false, false, true]);
        env.reset(1).unwrap();
        assert_eq!(env.round(), 1);
        assert_eq!(env.iteration(), 1);
        assert!(env.prices().iter().all(|&p| (p - 4.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn observations_carry_effective_bids_and_leftover_budget() {
        let mut env = small_env();
        // prices start at 4/3; agent 0 bids 1.5 on every seed, agent 1 nothing
        let bidder = |i: usize, _: &Observation, _: f64, _: StreamLabel| {
            if i == 0 {
                vec![1.5; 3]
            } else {
                vec![0.0; 3]
            }
        };
        let out = env.run_round(&bidder).unwrap();
        // first seed sells at the starting price, leaving 2/3 < 1.5
        assert_eq!(out.outcome.winner, vec![Some(0), None, None]);
        let obs = &env.observations()[0];
        assert_eq!(obs.g_prev, vec![1.5, 0.0, 0.0]);
        assert!((obs.rb_prev - (2.0 - 4.0 / 3.0)).abs() < 1e-12);
        assert_eq!(out.transition.joint_action[..3], [1.5, 1.5, 1.5]);
        assert_eq!(out.transition.joint_obs[3], 2.0);
        assert_eq!(out.record.revenue, out.record.rewards.iter().sum::<f64>());
    }

    #[test]
    fn wrong_bid_width_is_an_error() {
        let mut env = small_env();
        let bidder = |_: usize, _: &Observation, _: f64, _: StreamLabel| vec![0.0; 2];
        assert!(env.run_round(&bidder).is_err());
    }
}
