//! Labeled random streams.
//!
//! Every random draw in the engine comes from a stream identified by a
//! [`StreamLabel`]: the experiment's master seed plus the purpose of the draw
//! and its position (iteration, round, agent). Streams are derived by hashing
//! the label, so the draws of one stream never depend on how many values
//! another stream consumed, and running parts of a round in parallel cannot
//! change results.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Thresholds,
    Exploration,
    RandomBids,
    ParamInit,
    ReplaySample,
    Oracle,
    Synthetic,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Thresholds => 1,
            Purpose::Exploration => 2,
            Purpose::RandomBids => 3,
            Purpose::ParamInit => 4,
            Purpose::ReplaySample => 5,
            Purpose::Oracle => 6,
            Purpose::Synthetic => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamLabel {
    pub master: u64,
    pub purpose: Purpose,
    pub iteration: u64,
    pub round: u64,
    pub agent: u64,
}

impl StreamLabel {
    pub fn new(master: u64, purpose: Purpose) -> Self {
        StreamLabel {
            master,
            purpose,
            iteration: 0,
            round: 0,
            agent: 0,
        }
    }

    pub fn at(self, iteration: u64, round: u64) -> Self {
        StreamLabel {
            iteration,
            round,
            ..self
        }
    }

    pub fn agent(self, agent: u64) -> Self {
        StreamLabel { agent, ..self }
    }

    /// The 64-bit seed of this stream.
    pub fn seed(&self) -> u64 {
        let mut h = splitmix(self.master ^ 0x243f_6a88_85a3_08d3);
        for word in [self.purpose.tag(), self.iteration, self.round, self.agent] {
            h = splitmix(h ^ word);
        }
        h
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.seed())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
