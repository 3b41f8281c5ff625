use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::select_seeds_by_degree;
use crate::marl::checkpoint::{self, RngCursor};
use crate::marl::{CriticScope, Learner, LearnerConfig, ReplayBuffer};
use crate::rng::{Purpose, StreamLabel};

use super::config::{Algorithm, ExperimentConfig};
use super::env::{ActorBidder, Bidder, EnvSettings, Environment, RandomBidder};
use super::metrics::{summarize, write_csv_file, EpisodeRecord, Summary};

/// Result of a training or evaluation run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub records: Vec<EpisodeRecord>,
    pub summary: Summary,
    /// Trained agents; `None` for the random baseline.
    pub learner: Option<Learner>,
    /// Number of update ticks performed.
    pub updates: u64,
    pub cursor: RngCursor,
}

/// Builds the environment a config describes: graph, top-degree seeds and
/// the round settings.
pub fn build_environment(config: &ExperimentConfig) -> Result<Environment> {
    config.validate()?;
    let master = config
        .seed
        .ok_or_else(|| Error::Config("a master seed is required".into()))?;
    let graph = config.load_graph()?;
    let seeds = select_seeds_by_degree(&graph, config.l)?;
    let settings = EnvSettings {
        budgets: config.resolved_budgets()?,
        kappa: config.kappa,
        omega: config.omega,
        rho: config.rho,
        t_up: config.t_up.unwrap_or(graph.node_count()),
        rounds_per_iteration: config.rounds,
        reward_mode: config.reward_mode,
        master,
    };
    Environment::new(graph, seeds, settings)
}

pub fn learner_config(config: &ExperimentConfig, node_count: usize) -> LearnerConfig {
    LearnerConfig {
        hidden: config.hidden.clone(),
        lr: config.lr,
        gamma: config.gamma,
        tau: config.tau,
        reward_scale: if config.normalize_rewards {
            1.0 / node_count as f64
        } else {
            1.0
        },
        scope: match config.algorithm {
            Algorithm::Iddpg => CriticScope::Local,
            _ => CriticScope::Joint,
        },
    }
}

/// Runs `config.iterations` iterations of `config.rounds` rounds, learning
/// as it goes unless the algorithm is `random`. Writes nothing to disk.
pub fn train(config: &ExperimentConfig) -> Result<TrainOutput> {
    let mut env = build_environment(config)?;
    let master = env.settings().master;
    let k = config.k;
    let mut learner = match config.algorithm {
        Algorithm::Random => None,
        _ => Some(Learner::new(
            config.l,
            env.settings().budgets.clone(),
            learner_config(config, env.graph().node_count()),
            master,
        )?),
    };
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut records = Vec::with_capacity(config.total_episodes());
    let mut stored: u64 = 0;
    let mut updates: u64 = 0;

    for it in 0..config.iterations {
        env.reset(it as u64)?;
        for t in 0..config.rounds {
            let episode = it * config.rounds + t;
            let out = match &learner {
                None => env.run_round(&RandomBidder { l: config.l })?,
                Some(learner) => {
                    let bidder = ActorBidder {
                        learner,
                        noise: config.noise_at(episode),
                    };
                    env.run_round(&bidder)?
                }
            };
            records.push(out.record);
            let Some(learner) = learner.as_mut() else {
                continue;
            };
            buffer.push(out.transition);
            stored += 1;
            if buffer.len() >= config.batch_size
                && stored.is_multiple_of(config.update_every as u64)
            {
                let batches: Vec<_> = (0..k)
                    .map(|i| {
                        let mut rng = StreamLabel::new(master, Purpose::ReplaySample)
                            .at(updates, 0)
                            .agent(i as u64)
                            .rng();
                        buffer.sample(config.batch_size, &mut rng)
                    })
                    .collect();
                learner.update_all(&batches).map_err(|e| match e {
                    Error::NumericFailure(what) => {
                        Error::NumericFailure(format!("{what} at iteration {it}, round {}", t + 1))
                    }
                    other => other,
                })?;
                updates += 1;
            }
        }
    }

    let summary = summarize(&records, config.rho, config.sr_mode)?;
    Ok(TrainOutput {
        records,
        summary,
        learner,
        updates,
        cursor: RngCursor {
            master,
            iteration: config.iterations as u64,
            round: config.rounds as u64,
            update_ticks: updates,
        },
    })
}

/// Plays the config's iterations with frozen agents and no exploration
/// noise. The learner must match the config's `k`, `l` and budgets.
pub fn evaluate(config: &ExperimentConfig, learner: &Learner) -> Result<TrainOutput> {
    let mut env = build_environment(config)?;
    if learner.agents() != config.k || learner.seeds() != config.l {
        return Err(Error::Config(format!(
            "checkpoint holds {} agents over {} seeds, config asks for {} over {}",
            learner.agents(),
            learner.seeds(),
            config.k,
            config.l
        )));
    }
    if learner.budgets() != env.settings().budgets.as_slice() {
        return Err(Error::Config(
            "checkpoint budgets differ from the config".into(),
        ));
    }
    let bidder = ActorBidder {
        learner,
        noise: 0.0,
    };
    let records = play(&mut env, config, &bidder)?;
    let summary = summarize(&records, config.rho, config.sr_mode)?;
    Ok(TrainOutput {
        records,
        summary,
        learner: None,
        updates: 0,
        cursor: RngCursor {
            master: env.settings().master,
            iteration: config.iterations as u64,
            round: config.rounds as u64,
            update_ticks: 0,
        },
    })
}

/// Plays all iterations with a fixed bidder.
pub fn play(
    env: &mut Environment,
    config: &ExperimentConfig,
    bidder: &dyn Bidder,
) -> Result<Vec<EpisodeRecord>> {
    let mut records = Vec::with_capacity(config.total_episodes());
    for it in 0..config.iterations {
        env.reset(it as u64)?;
        for _ in 0..config.rounds {
            records.push(env.run_round(bidder)?.record);
        }
    }
    Ok(records)
}

/// Paths of the files a run writes under `prefix`.
pub fn output_paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".csv"), with(".summary.txt"), with(".ckpt"))
}

/// Writes `<prefix>.csv`, `<prefix>.summary.txt` and, when there is a
/// learner, `<prefix>.ckpt`.
pub fn write_outputs(prefix: &Path, output: &TrainOutput) -> Result<()> {
    let (csv, summary, ckpt) = output_paths(prefix);
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_csv_file(&csv, &output.records)?;
    fs::write(&summary, format!("{}\n", output.summary)).map_err(|e| Error::io(&summary, e))?;
    if let Some(learner) = &output.learner {
        checkpoint::save(&ckpt, learner, &output.cursor)?;
    }
    Ok(())
}
