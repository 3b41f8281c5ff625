use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{load_edge_list, preferential_attachment, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Centralized critics over the joint observation and action.
    Mcbim,
    /// Independent actor-critic learners: each critic sees only its own agent.
    Iddpg,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BudgetRule {
    Explicit(Vec<f64>),
    /// `(l + 1) / 2` for every competitor.
    HalfSeedsPlusOne,
    /// `l / 2` for every competitor.
    HalfSeeds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    ExactClt,
    DegreeProxy,
}

/// Which episodes count toward the success rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrMode {
    SoldOnly,
    SoldAndFair,
}

macro_rules! keyword_enum {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} {other:?}", stringify!($ty)
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Algorithm { "mcbim" => Algorithm::Mcbim, "iddpg" => Algorithm::Iddpg, "random" => Algorithm::Random });
keyword_enum!(RewardMode { "exact-clt" => RewardMode::ExactClt, "degree-proxy" => RewardMode::DegreeProxy });
keyword_enum!(SrMode { "sold-only" => SrMode::SoldOnly, "sold-and-fair" => SrMode::SoldAndFair });

impl BudgetRule {
    pub fn resolve(&self, k: usize, l: usize) -> Result<Vec<f64>> {
        let budgets = match self {
            BudgetRule::Explicit(b) => {
                if b.len() != k {
                    return Err(Error::Config(format!(
                        "{} budgets given for {k} competitors",
                        b.len()
                    )));
                }
                b.clone()
            }
            BudgetRule::HalfSeedsPlusOne => vec![(l as f64 + 1.0) / 2.0; k],
            BudgetRule::HalfSeeds => vec![l as f64 / 2.0; k],
        };
        if budgets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Config("budgets must be positive".into()));
        }
        Ok(budgets)
    }
}

impl FromStr for BudgetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace(' ', "").as_str() {
            "(l+1)/2" => Ok(BudgetRule::HalfSeedsPlusOne),
            "l/2" => Ok(BudgetRule::HalfSeeds),
            list => list
                .split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad budget {v:?}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(BudgetRule::Explicit),
        }
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetRule::HalfSeedsPlusOne => f.write_str("(l+1)/2"),
            BudgetRule::HalfSeeds => f.write_str("l/2"),
            BudgetRule::Explicit(b) => {
                let parts: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Everything one experiment needs. Defaults follow the reference settings:
/// two competitors, five seeds, budgets `(l + 1) / 2`, 50 iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Edge-list path, or `synthetic:<nodes>:<m>[:<graph seed>]` for a
    /// preferential-attachment graph.
    pub dataset: String,
    pub directed: bool,
    pub k: usize,
    pub l: usize,
    pub budgets: BudgetRule,
    pub iterations: usize,
    pub rounds: usize,
    pub rho: f64,
    pub omega: f64,
    pub kappa: f64,
    /// Propagation step cap; `None` means the node count.
    pub t_up: Option<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub update_every: usize,
    /// Exploration noise, as a fraction of budget, at the first and last
    /// episode; interpolated linearly in between.
    pub noise_start: f64,
    pub noise_end: f64,
    pub hidden: Vec<usize>,
    pub algorithm: Algorithm,
    pub seed: Option<u64>,
    /// Output prefix: `<output>.csv`, `<output>.summary.txt`, `<output>.ckpt`.
    pub output: Option<PathBuf>,
    pub reward_mode: RewardMode,
    pub sr_mode: SrMode,
    /// Divide spreads by the node count before they reach the critics.
    pub normalize_rewards: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "synthetic:200:2".into(),
            directed: false,
            k: 2,
            l: 5,
            budgets: BudgetRule::HalfSeedsPlusOne,
            iterations: 50,
            rounds: 200,
            rho: 0.1,
            omega: 2.0,
            kappa: 0.3,
            t_up: None,
            gamma: 0.95,
            tau: 0.01,
            lr: 0.01,
            buffer_capacity: 1_000_000,
            batch_size: 1024,
            update_every: 40,
            noise_start: 0.2,
            noise_end: 0.02,
            hidden: vec![64, 64],
            algorithm: Algorithm::Mcbim,
            seed: None,
            output: None,
            reward_mode: RewardMode::ExactClt,
            sr_mode: SrMode::SoldAndFair,
            normalize_rewards: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad value {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "dataset",
        "directed",
        "k",
        "l",
        "budgets",
        "iterations",
        "rounds",
        "rho",
        "omega",
        "kappa",
        "t_up",
        "gamma",
        "tau",
        "lr",
        "buffer_capacity",
        "batch_size",
        "update_every",
        "noise_start",
        "noise_end",
        "hidden",
        "algorithm",
        "seed",
        "output",
        "reward_mode",
        "sr_mode",
        "normalize_rewards",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dataset" => self.dataset = value.to_string(),
            "directed" => self.directed = parse_bool(key, value)?,
            "k" => self.k = parse(key, value)?,
            "l" => self.l = parse(key, value)?,
            "budgets" => self.budgets = value.parse()?,
            "iterations" => self.iterations = parse(key, value)?,
            "rounds" => self.rounds = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "omega" => self.omega = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "t_up" => {
                self.t_up = match value {
                    "" | "auto" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "gamma" => self.gamma = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "update_every" => self.update_every = parse(key, value)?,
            "noise_start" => self.noise_start = parse(key, value)?,
            "noise_end" => self.noise_end = parse(key, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|v| parse(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "algorithm" => self.algorithm = value.parse()?,
            "seed" => self.seed = Some(parse(key, value)?),
            "output" => self.output = Some(PathBuf::from(value)),
            "reward_mode" => self.reward_mode = value.parse()?,
            "sr_mode" => self.sr_mode = value.parse()?,
            "normalize_rewards" => self.normalize_rewards = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::default();
        config.apply_str(&text)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k < 2 {
            return fail(format!(
                "k = {} but at least two competitors are needed",
                self.k
            ));
        }
        if self.l < 1 {
            return fail("l must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail(format!("rho = {} outside (0, 1)", self.rho));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return fail(format!("kappa = {} outside (0, 1)", self.kappa));
        }
        if self.omega == 0.0 || self.omega == 1.0 || !self.omega.is_finite() {
            return fail(format!("omega = {} must not be 0 or 1", self.omega));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma = {} outside (0, 1]", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau = {} outside (0, 1]", self.tau));
        }
        if !(self.lr > 0.0) {
            return fail(format!("lr = {} must be positive", self.lr));
        }
        if self.iterations == 0 || self.rounds == 0 {
            return fail("iterations and rounds must be positive".into());
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.update_every == 0 {
            return fail("buffer_capacity, batch_size and update_every must be positive".into());
        }
        if self.t_up == Some(0) {
            return fail("t_up must be at least 1".into());
        }
        if self.noise_start < 0.0 || self.noise_end < 0.0 {
            return fail("exploration noise must be non-negative".into());
        }
        self.budgets.resolve(self.k, self.l)?;
        Ok(())
    }

    pub fn resolved_budgets(&self) -> Result<Vec<f64>> {
        self.budgets.resolve(self.k, self.l)
    }

    pub fn total_episodes(&self) -> usize {
        self.iterations * self.rounds
    }

    /// Exploration noise (fraction of budget) at zero-based `episode`.
    pub fn noise_at(&self, episode: usize) -> f64 {
        let total = self.total_episodes();
        if total <= 1 {
            return self.noise_start;
        }
        let frac = episode as f64 / (total - 1) as f64;
        self.noise_start + (self.noise_end - self.noise_start) * frac
    }

    /// Loads the dataset, or builds the synthetic graph it names.
    pub fn load_graph(&self) -> Result<WeightedGraph> {
        if let Some(rest) = self.dataset.strip_prefix("synthetic:") {
            let mut parts = rest.split(':');
            let nodes = parts.next().unwrap_or("");
            let m = parts.next().unwrap_or("2");
            let nodes: usize = parse("dataset", nodes)?;
            let m: usize = parse("dataset", m)?;
            // the topology depends on the dataset string only, never on the master seed
            let graph_seed = match parts.next() {
                Some(s) => parse("dataset", s)?,
                None => 0x5eed,
            };
            return preferential_attachment(nodes, m, graph_seed);
        }
        load_edge_list(&self.dataset, self.directed)
    }

    /// `key = value` rendering that [`apply_str`](Self::apply_str) reads back.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("dataset", self.dataset.clone());
        line("directed", self.directed.to_string());
        line("k", self.k.to_string());
        line("l", self.l.to_string());
        line("budgets", self.budgets.to_string());
        line("iterations", self.iterations.to_string());
        line("rounds", self.rounds.to_string());
        line("rho", self.rho.to_string());
        line("omega", self.omega.to_string());
        line("kappa", self.kappa.to_string());
        line(
            "t_up",
            self.t_up
                .map_or_else(|| "auto".to_string(), |t| t.to_string()),
        );
        line("gamma", self.gamma.to_string());
        line("tau", self.tau.to_string());
        line("lr", self.lr.to_string());
        line("buffer_capacity", self.buffer_capacity.to_string());
        line("batch_size", self.batch_size.to_string());
        line("update_every", self.update_every.to_string());
        line("noise_start", self.noise_start.to_string());
        line("noise_end", self.noise_end.to_string());
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        line("hidden", hidden.join(","));
        line("algorithm", self.algorithm.to_string());
        if let Some(seed) = self.seed {
            line("seed", seed.to_string());
        }
        if let Some(out) = &self.output {
            line("output", out.display().to_string());
        }
        line("reward_mode", self.reward_mode.to_string());
        line("sr_mode", self.sr_mode.to_string());
        line("normalize_rewards", self.normalize_rewards.to_string());
        out
    }
}
