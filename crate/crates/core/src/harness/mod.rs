//! Experiment orchestration: configuration, the bidding environment,
//! training and evaluation loops, and per-episode metrics.

pub mod config;
pub mod env;
pub mod metrics;
pub mod train;

pub use config::{Algorithm, BudgetRule, ExperimentConfig, RewardMode, SrMode};
pub use env::{ActorBidder, Bidder, EnvSettings, Environment, RandomBidder, RoundOutput};
pub use metrics::{
    read_csv, read_csv_file, summarize, write_csv, write_csv_file, EpisodeRecord, Summary,
};
pub use train::{
    build_environment, evaluate, output_paths, play, train, write_outputs, TrainOutput,
};
