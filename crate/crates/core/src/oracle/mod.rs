//! Brute-force reference checks: sweep-based propagation, exhaustive
//! auction enumeration and finite-difference gradients, plus the random
//! suites `oracle-check` runs.

mod enumerate;
mod fixpoint;
mod gradcheck;

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

pub use enumerate::{enumerate_auction, MAX_OUTCOMES};
pub use fixpoint::{fixpoint_diffusion, MAX_NODES};
pub use gradcheck::{grad_check, relative_error};

use crate::diffusion::{diffuse_clt, Allocation};
use crate::error::Result;
use crate::graph::{SeedSet, ThresholdDraw, WeightedGraph};
use crate::marl::{CriticScope, Learner, LearnerConfig, Mlp, Observation, Transition};
use crate::rng::{Purpose, StreamLabel};

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub trial: usize,
    pub what: String,
    /// Enough to rebuild the failing instance.
    pub replay: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub trials: usize,
    pub mismatches: Vec<Mismatch>,
    pub max_error: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// Folds `other` in, renumbering its mismatches after this report's
    /// trials.
    pub fn absorb(&mut self, other: OracleReport) {
        let offset = self.trials;
        self.mismatches
            .extend(other.mismatches.into_iter().map(|m| Mismatch {
                trial: m.trial + offset,
                ..m
            }));
        self.trials += other.trials;
        self.max_error = self.max_error.max(other.max_error);
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} trials, {} mismatches, max error {:.3e}",
            self.trials,
            self.mismatches.len(),
            self.max_error
        )?;
        for m in self.mismatches.iter().take(5) {
            write!(
                f,
                "\n  trial {}: {}\n    replay: {}",
                m.trial, m.what, m.replay
            )?;
        }
        Ok(())
    }
}

/// A small random propagation instance.
#[derive(Debug, Clone)]
pub struct DiffusionInstance {
    pub label: StreamLabel,
    pub graph: WeightedGraph,
    pub thresholds: ThresholdDraw,
    pub seeds: SeedSet,
    pub alloc: Allocation,
    pub t_up: usize,
}

const GRID_THRESHOLDS: [f64; 8] = [0.0, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 1.0];

fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> WeightedGraph {
    let n = rng.random_range(2..=max_nodes);
    let directed = rng.random_bool(0.5);
    let p = rng.random_range(0.15..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && (directed || u < v) && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    WeightedGraph::from_dense(n, directed, edges).expect("random graph has arcs")
}

fn random_thresholds(rng: &mut impl Rng, n: usize) -> ThresholdDraw {
    // half the instances use a coarse grid so that sums land exactly on
    // thresholds and competitors tie
    let xi = if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random::<f64>()).collect()
    } else {
        (0..n)
            .map(|_| GRID_THRESHOLDS[rng.random_range(0..GRID_THRESHOLDS.len())])
            .collect()
    };
    ThresholdDraw::from_values(xi).expect("thresholds in range")
}

impl DiffusionInstance {
    /// Up to 12 nodes, 1 to 3 competitors, some seeds unsold.
    pub fn generate(label: StreamLabel) -> Self {
        let mut rng = label.rng();
        let graph = random_graph(&mut rng, 12);
        let n = graph.node_count();
        let k = rng.random_range(1..=3);
        let l = rng.random_range(1..=n.min(5));
        let seeds = SeedSet::new(sample(&mut rng, n, l).into_vec(), n).unwrap();
        let owners = (0..l)
            .map(|_| {
                let pick = rng.random_range(0..=k);
                (pick < k).then_some(pick)
            })
            .collect();
        let alloc = Allocation::new(owners, k).unwrap();
        let thresholds = random_thresholds(&mut rng, n);
        let t_up = if rng.random_bool(0.25) {
            rng.random_range(1..=3)
        } else {
            n
        };
        DiffusionInstance {
            label,
            graph,
            thresholds,
            seeds,
            alloc,
            t_up,
        }
    }
}

fn oracle_label(master: u64, suite: u64, trial: usize) -> StreamLabel {
    StreamLabel::new(master, Purpose::Oracle).at(suite, trial as u64)
}

/// `diffuse_clt` against [`fixpoint_diffusion`] on `trials` random instances.
pub fn diffusion_suite(trials: usize, master: u64) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    for trial in 0..trials {
        let inst = DiffusionInstance::generate(oracle_label(master, 1, trial));
        let fast = diffuse_clt(
            &inst.graph,
            &inst.thresholds,
            &inst.seeds,
            &inst.alloc,
            inst.t_up,
        );
        let slow = fixpoint_diffusion(
            &inst.graph,
            &inst.thresholds,
            &inst.seeds,
            &inst.alloc,
            inst.t_up,
        )?;
        report.trials += 1;
        if fast != slow {
            report.mismatches.push(Mismatch {
                trial,
                what: format!("diffuse_clt {fast:?} vs fixpoint {slow:?}"),
                replay: format!("DiffusionInstance::generate({:?})", inst.label),
            });
        }
    }
    Ok(report)
}

/// Single competitor, fixed thresholds: growing the seed set never shrinks
/// the spread.
pub fn monotonicity_suite(trials: usize, master: u64) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    for trial in 0..trials {
        let label = oracle_label(master, 2, trial);
        let mut rng = label.rng();
        let graph = random_graph(&mut rng, 12);
        let n = graph.node_count();
        let thresholds = random_thresholds(&mut rng, n);
        let size = rng.random_range(1..=n);
        let big: Vec<usize> = sample(&mut rng, n, size).into_vec();
        let small_len = rng.random_range(0..big.len());
        let small = big[..small_len].to_vec();
        let spread = |set: &[usize]| -> Result<usize> {
            let seeds = SeedSet::new(set.to_vec(), n)?;
            let alloc = Allocation::new(vec![Some(0); set.len()], 1)?;
            Ok(diffuse_clt(&graph, &thresholds, &seeds, &alloc, n).spread(0))
        };
        let (s, t) = (spread(&small)?, spread(&big)?);
        report.trials += 1;
        if s > t {
            report.mismatches.push(Mismatch {
                trial,
                what: format!("spread({small:?}) = {s} > spread({big:?}) = {t}"),
                replay: format!("{label:?}"),
            });
        }
    }
    Ok(report)
}

/// The fixed enumeration grids: two competitors with loose and tight
/// budgets, three competitors with uneven budgets, and an all-zero grid.
pub fn auction_suite() -> Result<OracleReport> {
    let wide = [0.0, 0.5, 1.0, 1.1, 1.5, 2.0, 2.5, 3.0];
    let mut report = enumerate_auction(&[1.0, 1.0], &[3.0, 3.0], &[0.0, 0.5, 1.1, 2.0])?;
    report.absorb(enumerate_auction(&[1.0, 0.8], &[1.5, 2.5], &wide)?);
    report.absorb(enumerate_auction(&[1.0, 0.8], &[2.0, 3.0, 2.5], &wide)?);
    let zeros = enumerate_auction(&[1.0, 1.0], &[3.0, 3.0, 3.0], &[0.0])?;
    report.absorb(zeros);
    Ok(report)
}

/// A random learner with a batch whose network inputs all sit at least
/// `margin` away from every rectifier kink.
pub struct GradientInstance {
    pub label: StreamLabel,
    pub learner: Learner,
    pub batch: Vec<Transition>,
    pub agent: usize,
}

fn random_transition(rng: &mut impl Rng, budgets: &[f64], l: usize) -> Transition {
    let obs = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        budgets
            .iter()
            .flat_map(|&b| {
                let mut o: Vec<f64> = (0..l).map(|_| rng.random::<f64>() * b).collect();
                o.push(rng.random::<f64>() * b);
                o
            })
            .collect()
    };
    let joint_obs = obs(rng);
    let joint_next_obs = obs(rng);
    let joint_action = budgets
        .iter()
        .flat_map(|&b| (0..l).map(|_| rng.random::<f64>() * b).collect::<Vec<_>>())
        .collect();
    Transition {
        joint_obs,
        joint_action,
        rewards: budgets
            .iter()
            .map(|_| rng.random_range(0.0..20.0))
            .collect(),
        joint_next_obs,
        terminal: rng.random_bool(0.3),
    }
}

impl GradientInstance {
    pub fn generate(label: StreamLabel) -> Self {
        let mut rng = label.rng();
        let k = rng.random_range(2..=3);
        let l = rng.random_range(1..=3);
        let budgets: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..4.0)).collect();
        let config = LearnerConfig {
            hidden: vec![rng.random_range(3..=8), rng.random_range(3..=8)],
            reward_scale: rng.random_range(0.01..1.0),
            scope: if rng.random_bool(0.5) {
                CriticScope::Joint
            } else {
                CriticScope::Local
            },
            ..LearnerConfig::default()
        };
        let learner = Learner::new(l, budgets.clone(), config, rng.random()).unwrap();
        let batch = (0..4)
            .map(|_| random_transition(&mut rng, &budgets, l))
            .collect();
        GradientInstance {
            label,
            learner,
            batch,
            agent: rng.random_range(0..k),
        }
    }

    /// Distance of the nearest rectifier kink over every forward pass the
    /// critic loss and actor objective make.
    pub fn margin(&self) -> f64 {
        let (lr, i) = (&self.learner, self.agent);
        let l = lr.seeds();
        let mut m = f64::INFINITY;
        for t in &self.batch {
            let input = lr.critic_input(i, &t.joint_obs, &t.joint_action);
            m = m.min(lr.critic(i).min_hidden_margin(&input));
            let w = l + 1;
            let own =
                Observation::from_slice(&t.joint_obs[i * w..(i + 1) * w]).features(lr.budgets()[i]);
            m = m.min(lr.actor(i).min_hidden_margin(&own));
            let mut replaced = t.joint_action.clone();
            let bids = lr.actor(i).forward(&own);
            for (slot, f) in replaced[i * l..(i + 1) * l].iter_mut().zip(bids) {
                *slot = f * lr.budgets()[i];
            }
            let input = lr.critic_input(i, &t.joint_obs, &replaced);
            m = m.min(lr.critic(i).min_hidden_margin(&input));
        }
        m
    }
}

fn check_input_gradient(
    net: &Mlp,
    x: &[f64],
    index: usize,
    h: f64,
    tol: f64,
) -> Result<OracleReport> {
    let analytic = net.input_gradient(x, index);
    grad_check(|y| net.forward(y)[index], &analytic, x, h, tol)
}

/// Critic-loss, actor-objective and input gradients of `trials` random
/// small networks against central differences.
pub fn gradient_suite(trials: usize, master: u64, h: f64, tol: f64) -> Result<OracleReport> {
    const MIN_MARGIN: f64 = 1e-3;
    let mut report = OracleReport::default();
    for trial in 0..trials {
        let mut attempt = 0;
        let inst = loop {
            let label = oracle_label(master, 3, trial).agent(attempt);
            let inst = GradientInstance::generate(label);
            if inst.margin() > MIN_MARGIN {
                break inst;
            }
            attempt += 1;
        };
        let i = inst.agent;
        let batch: Vec<&Transition> = inst.batch.iter().collect();
        let mut one = OracleReport::default();

        let (_, critic_grad) = inst.learner.critic_loss_and_grad(i, &batch);
        let critic_loss = |theta: &[f64]| {
            let mut lr = inst.learner.clone();
            lr.critic_mut(i).params_mut().copy_from_slice(theta);
            lr.critic_loss_and_grad(i, &batch).0
        };
        one.absorb(grad_check(
            critic_loss,
            &critic_grad,
            inst.learner.critic(i).params(),
            h,
            tol,
        )?);

        let (_, actor_grad) = inst.learner.actor_objective_and_grad(i, &batch);
        let objective = |theta: &[f64]| {
            let mut lr = inst.learner.clone();
            lr.actor_mut(i).params_mut().copy_from_slice(theta);
            lr.actor_objective_and_grad(i, &batch).0
        };
        one.absorb(grad_check(
            objective,
            &actor_grad,
            inst.learner.actor(i).params(),
            h,
            tol,
        )?);

        let t = batch[0];
        let critic_in = inst.learner.critic_input(i, &t.joint_obs, &t.joint_action);
        one.absorb(check_input_gradient(
            inst.learner.critic(i),
            &critic_in,
            0,
            h,
            tol,
        )?);
        let l = inst.learner.seeds();
        let own = Observation::from_slice(&t.joint_obs[i * (l + 1)..(i + 1) * (l + 1)])
            .features(inst.learner.budgets()[i]);
        one.absorb(check_input_gradient(
            inst.learner.actor(i),
            &own,
            l - 1,
            h,
            tol,
        )?);

        report.trials += 1;
        report.max_error = report.max_error.max(one.max_error);
        report
            .mismatches
            .extend(one.mismatches.into_iter().map(|m| Mismatch {
                trial,
                what: m.what,
                replay: format!("GradientInstance::generate({:?})", inst.label),
            }));
    }
    Ok(report)
}

/// Every suite `oracle-check` runs, in a fixed order.
pub fn run_all(trials: usize, master: u64) -> Result<Vec<(&'static str, OracleReport)>> {
    Ok(vec![
        ("diffusion", diffusion_suite(trials, master)?),
        ("monotonicity", monotonicity_suite(trials, master)?),
        ("auction", auction_suite()?),
        (
            "gradients",
            gradient_suite(trials.div_ceil(10), master, 1e-5, 1e-4)?,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible() {
        let label = oracle_label(3, 1, 17);
        let a = DiffusionInstance::generate(label);
        let b = DiffusionInstance::generate(label);
        assert_eq!(
            a.graph.arcs().collect::<Vec<_>>(),
            b.graph.arcs().collect::<Vec<_>>()
        );
        assert_eq!(a.alloc, b.alloc);
        assert!(a.graph.node_count() <= 12);
    }

    #[test]
    fn short_suites_pass() {
        for (name, report) in run_all(30, 9).unwrap() {
            assert!(report.passed(), "{name}: {report}");
        }
    }

    #[test]
    fn absorb_renumbers() {
        let mut a = OracleReport {
            trials: 3,
            ..Default::default()
        };
        a.absorb(OracleReport {
            trials: 2,
            mismatches: vec![Mismatch {
                trial: 1,
                what: "x".into(),
                replay: String::new(),
            }],
            max_error: 0.5,
        });
        assert_eq!((a.trials, a.mismatches[0].trial, a.max_error), (5, 4, 0.5));
    }
}
