//! Binary checkpoints of a [`Learner`].
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic "CBIMCKPT" | version u32
//! k | l | scope (0 joint, 1 local) | hidden layer count | hidden widths...
//! gamma | tau | lr | reward_scale | budgets[k]
//! cursor: master seed | iteration | round | update ticks
//! per agent: actor, target actor, critic, target critic,
//!            each as parameter count followed by the parameters
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::learner::AgentNets;
use super::{CriticScope, Learner, LearnerConfig, Mlp, OutputActivation};

const MAGIC: &[u8; 8] = b"CBIMCKPT";
pub const VERSION: u32 = 1;

/// Where the random streams stood when the checkpoint was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RngCursor {
    pub master: u64,
    pub iteration: u64,
    pub round: u64,
    pub update_ticks: u64,
}

pub fn encode(learner: &Learner, cursor: &RngCursor) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = learner.config();
    let mut put = |v: u64| out.extend_from_slice(&v.to_le_bytes());
    put(learner.agents() as u64);
    put(learner.seeds() as u64);
    put(match cfg.scope {
        CriticScope::Joint => 0,
        CriticScope::Local => 1,
    });
    put(cfg.hidden.len() as u64);
    for &h in &cfg.hidden {
        put(h as u64);
    }
    let reals = [cfg.gamma, cfg.tau, cfg.lr, cfg.reward_scale];
    for r in reals.iter().chain(learner.budgets()) {
        out.extend_from_slice(&r.to_le_bytes());
    }
    for v in [
        cursor.master,
        cursor.iteration,
        cursor.round,
        cursor.update_ticks,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..learner.agents() {
        for net in [
            learner.actor(i),
            learner.target_actor(i),
            learner.critic(i),
            learner.target_critic(i),
        ] {
            out.extend_from_slice(&(net.params().len() as u64).to_le_bytes());
            for p in net.params() {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self, limit: usize, what: &str) -> Result<usize> {
        let v = self.u64()?;
        if v as usize > limit {
            return Err(Error::Checkpoint(format!("{what} {v} is implausible")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(Learner, RngCursor)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let k = r.usize(1 << 16, "agent count")?;
    let l = r.usize(1 << 20, "seed count")?;
    let scope = match r.u64()? {
        0 => CriticScope::Joint,
        1 => CriticScope::Local,
        other => return Err(Error::Checkpoint(format!("unknown critic scope {other}"))),
    };
    let depth = r.usize(64, "hidden layer count")?;
    let hidden = (0..depth)
        .map(|_| r.usize(1 << 20, "hidden width"))
        .collect::<Result<Vec<_>>>()?;
    let config = LearnerConfig {
        hidden,
        gamma: r.f64()?,
        tau: r.f64()?,
        lr: r.f64()?,
        reward_scale: r.f64()?,
        scope,
    };
    let budgets = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let cursor = RngCursor {
        master: r.u64()?,
        iteration: r.u64()?,
        round: r.u64()?,
        update_ticks: r.u64()?,
    };

    // shapes come from a freshly built learner with the same configuration
    let template = Learner::zeroed(l, budgets.clone(), config.clone())
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    let mut agents = Vec::with_capacity(k);
    for i in 0..k {
        let mut read_net = |like: &Mlp| -> Result<Mlp> {
            let n = r.usize(1 << 28, "parameter count")?;
            let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            Mlp::from_params(like.sizes(), like.output_activation(), params)
                .map_err(|e| Error::Checkpoint(e.to_string()))
        };
        let actor = read_net(template.actor(i))?;
        let target_actor = read_net(template.actor(i))?;
        let critic = read_net(template.critic(i))?;
        let target_critic = read_net(template.critic(i))?;
        debug_assert_eq!(critic.output_activation(), OutputActivation::Identity);
        agents.push(AgentNets::new(
            actor,
            critic,
            target_actor,
            target_critic,
            config.lr,
        ));
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let learner = Learner::from_parts(l, budgets, config, agents);
    if !learner.is_finite() {
        return Err(Error::NumericFailure("loading a checkpoint".into()));
    }
    Ok((learner, cursor))
}

pub fn save(path: impl AsRef<Path>, learner: &Learner, cursor: &RngCursor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(learner, cursor)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<(Learner, RngCursor)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let cfg = LearnerConfig {
            hidden: vec![7, 5],
            reward_scale: 0.25,
            ..LearnerConfig::default()
        };
        let learner = Learner::new(4, vec![2.5, 3.0], cfg, 12).unwrap();
        let cursor = RngCursor {
            master: 12,
            iteration: 3,
            round: 40,
            update_ticks: 9,
        };
        let bytes = encode(&learner, &cursor);
        assert_eq!(&bytes[..8], MAGIC);
        let (back, cur) = decode(&bytes).unwrap();
        assert_eq!(cur, cursor);
        assert_eq!(back.config(), learner.config());
        assert_eq!(back.budgets(), learner.budgets());
        for i in 0..2 {
            assert_eq!(back.actor(i), learner.actor(i));
            assert_eq!(back.target_critic(i), learner.target_critic(i));
        }
        assert_eq!(encode(&back, &cur), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let learner = Learner::zeroed(2, vec![1.0, 1.0], LearnerConfig::default()).unwrap();
        let bytes = encode(&learner, &RngCursor::default());
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut newer = bytes.clone();
        newer[8] = 9;
        assert!(decode(&newer).is_err());
        let mut longer = bytes;
        longer.push(0);
        assert!(decode(&longer).is_err());
    }
}
