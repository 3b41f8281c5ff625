use rand::Rng;

use crate::error::{Error, Result};

/// One round of experience, shared by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// `o_1 .. o_k`, each `l + 1` wide.
    pub joint_obs: Vec<f64>,
    /// `a_1 .. a_k`, each `l` wide, as submitted (before auction rules).
    pub joint_action: Vec<f64>,
    /// Raw spread of every competitor this round.
    pub rewards: Vec<f64>,
    pub joint_next_obs: Vec<f64>,
    /// Last round of an iteration: no bootstrapping past it.
    pub terminal: bool,
}

impl Transition {
    pub fn check_shape(&self, k: usize, l: usize) -> Result<()> {
        let checks = [
            ("joint observation", k * (l + 1), self.joint_obs.len()),
            ("joint action", k * l, self.joint_action.len()),
            ("rewards", k, self.rewards.len()),
            (
                "joint next observation",
                k * (l + 1),
                self.joint_next_obs.len(),
            ),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(Error::ShapeMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }
}

/// Fixed-capacity ring of transitions; the oldest record is overwritten
/// once the ring is full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    records: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            records: Vec::new(),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.records.len() < self.capacity {
            self.records.push(t);
        } else {
            self.records[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Records from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = if self.records.len() < self.capacity {
            (&self.records[..], &self.records[..0])
        } else {
            (&self.records[..self.cursor], &self.records[self.cursor..])
        };
        older.iter().chain(newer)
    }

    /// `batch` records drawn uniformly with replacement.
    pub fn sample(&self, batch: usize, rng: &mut impl Rng) -> Vec<&Transition> {
        assert!(!self.records.is_empty(), "sampling from an empty buffer");
        (0..batch)
            .map(|_| &self.records[rng.random_range(0..self.records.len())])
            .collect()
    }
}
