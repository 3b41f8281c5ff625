//! Per-episode records, their CSV form, and run summaries.
//!
//! CSV columns, in order:
//!
//! ```text
//! iteration, round, revenue, ge, all_sold, fair,
//! price_1 .. price_l, reward_1 .. reward_k, cost_1 .. cost_k,
//! budget_1 .. budget_k, g_1_1 .. g_1_l, .. g_k_l, wall_time_us
//! ```
//!
//! Booleans are written as `0`/`1`; reals use the shortest representation
//! that reads back to the same value, with `.` as decimal separator.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::config::SrMode;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub iteration: u64,
    pub round: u64,
    /// Starting prices the round was played at.
    pub prices: Vec<f64>,
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub budgets: Vec<f64>,
    pub effective_prices: Vec<Vec<f64>>,
    pub ge: f64,
    pub all_sold: bool,
    /// `ge <= rho` for the rho the run was configured with.
    pub fair: bool,
    pub revenue: f64,
    pub wall_time_us: u64,
}

impl EpisodeRecord {
    fn k(&self) -> usize {
        self.rewards.len()
    }

    fn l(&self) -> usize {
        self.prices.len()
    }
}

pub fn csv_header(k: usize, l: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["iteration", "round", "revenue", "ge", "all_sold", "fair"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=l).map(|j| format!("price_{j}")));
    cols.extend((1..=k).map(|i| format!("reward_{i}")));
    cols.extend((1..=k).map(|i| format!("cost_{i}")));
    cols.extend((1..=k).map(|i| format!("budget_{i}")));
    for i in 1..=k {
        cols.extend((1..=l).map(|j| format!("g_{i}_{j}")));
    }
    cols.push("wall_time_us".into());
    cols
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_csv<W: Write>(out: W, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (k, l) = records.first().map_or((0, 0), |r| (r.k(), r.l()));
    w.write_record(csv_header(k, l))?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.iteration.to_string(),
            r.round.to_string(),
            r.revenue.to_string(),
            r.ge.to_string(),
            flag(r.all_sold).into(),
            flag(r.fair).into(),
        ];
        for values in [&r.prices, &r.rewards, &r.costs, &r.budgets] {
            row.extend(values.iter().map(f64::to_string));
        }
        row.extend(r.effective_prices.iter().flatten().map(f64::to_string));
        row.push(r.wall_time_us.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn write_csv_file(path: impl AsRef<Path>, records: &[EpisodeRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), records)
}

fn count_prefixed(header: &csv::StringRecord, prefix: &str) -> usize {
    header.iter().filter(|c| c.starts_with(prefix)).count()
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let k = count_prefixed(&header, "reward_");
    let l = count_prefixed(&header, "price_");
    let expected = csv_header(k, l);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::invalid(
            "CSV header does not match the episode schema",
        ));
    }
    let mut records = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |col: usize| {
            Error::invalid(format!(
                "row {}: bad value {:?} in column {}",
                n + 2,
                row.get(col).unwrap_or(""),
                expected[col]
            ))
        };
        let real = |col: usize| row[col].parse::<f64>().map_err(|_| bad(col));
        let int = |col: usize| row[col].parse::<u64>().map_err(|_| bad(col));
        let boolean = |col: usize| match &row[col] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(col)),
        };
        let reals =
            |start: usize, len: usize| (start..start + len).map(real).collect::<Result<Vec<_>>>();
        let mut col = 6;
        let prices = reals(col, l)?;
        col += l;
        let rewards = reals(col, k)?;
        col += k;
        let costs = reals(col, k)?;
        col += k;
        let budgets = reals(col, k)?;
        col += k;
        let effective_prices = (0..k)
            .map(|i| reals(col + i * l, l))
            .collect::<Result<Vec<_>>>()?;
        col += k * l;
        records.push(EpisodeRecord {
            iteration: int(0)?,
            round: int(1)?,
            revenue: real(2)?,
            ge: real(3)?,
            all_sold: boolean(4)?,
            fair: boolean(5)?,
            prices,
            rewards,
            costs,
            budgets,
            effective_prices,
            wall_time_us: int(col)?,
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<EpisodeRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

/// Aggregate metrics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub episodes: usize,
    pub rho: f64,
    pub sr_mode: SrMode,
    /// Episodes counted as successful under `sr_mode`.
    pub successes: usize,
    /// Episodes with `ge <= rho`.
    pub fair_episodes: usize,
    /// Episodes in which every seed was sold.
    pub sold_out: usize,
    pub sr: f64,
    pub ser: f64,
    /// Largest and mean revenue over successful episodes.
    pub rev_max: Option<f64>,
    pub rev_avg: Option<f64>,
    /// Largest revenue over fair episodes.
    pub rop_max: Option<f64>,
    /// Mean reward per competitor.
    pub mean_reward: Vec<f64>,
    /// Mean cost-to-budget ratio per competitor.
    pub cost_ratio: Vec<f64>,
    pub runtime_secs: f64,
}

impl Summary {
    pub fn is_success(record: &EpisodeRecord, rho: f64, mode: SrMode) -> bool {
        match mode {
            SrMode::SoldOnly => record.all_sold,
            SrMode::SoldAndFair => record.all_sold && record.ge <= rho,
        }
    }
}

/// Summarizes `records`, judging fairness against `rho` (so the same run can
/// be re-scored with another threshold).
pub fn summarize(records: &[EpisodeRecord], rho: f64, sr_mode: SrMode) -> Result<Summary> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no episodes to summarize"))?;
    let k = first.rewards.len();
    let n = records.len();

    let mut successes = 0;
    let mut fair_episodes = 0;
    let mut sold_out = 0;
    let mut rev_max: Option<f64> = None;
    let mut rev_sum = 0.0;
    let mut rop_max: Option<f64> = None;
    let mut reward_sum = vec![0.0; k];
    let mut ratio_sum = vec![0.0; k];
    let mut wall_us: u64 = 0;
    for r in records {
        if r.rewards.len() != k {
            return Err(Error::invalid("episodes disagree on the competitor count"));
        }
        let fair = r.ge <= rho;
        if fair {
            fair_episodes += 1;
            rop_max = Some(rop_max.map_or(r.revenue, |m| m.max(r.revenue)));
        }
        if r.all_sold {
            sold_out += 1;
        }
        if Summary::is_success(r, rho, sr_mode) {
            successes += 1;
            rev_sum += r.revenue;
            rev_max = Some(rev_max.map_or(r.revenue, |m| m.max(r.revenue)));
        }
        for i in 0..k {
            reward_sum[i] += r.rewards[i];
            ratio_sum[i] += r.costs[i] / r.budgets[i];
        }
        wall_us += r.wall_time_us;
    }
    Ok(Summary {
        episodes: n,
        rho,
        sr_mode,
        successes,
        fair_episodes,
        sold_out,
        sr: successes as f64 / n as f64,
        ser: fair_episodes as f64 / n as f64,
        rev_max,
        rev_avg: (successes > 0).then(|| rev_sum / successes as f64),
        rop_max,
        mean_reward: reward_sum.iter().map(|s| s / n as f64).collect(),
        cost_ratio: ratio_sum.iter().map(|s| s / n as f64).collect(),
        runtime_secs: wall_us as f64 / 1e6,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "episodes   {}", self.episodes)?;
        writeln!(f, "rho        {}", self.rho)?;
        writeln!(f, "sr_mode    {}", self.sr_mode)?;
        writeln!(
            f,
            "SR         {:.2}% ({} of {})",
            self.sr * 100.0,
            self.successes,
            self.episodes
        )?;
        writeln!(
            f,
            "SER        {:.2}% ({} of {})",
            self.ser * 100.0,
            self.fair_episodes,
            self.episodes
        )?;
        writeln!(f, "sold out   {}", self.sold_out)?;
        writeln!(f, "REV_max    {}", opt(self.rev_max))?;
        writeln!(f, "REV_avg    {}", opt(self.rev_avg))?;
        writeln!(f, "ROP_max    {}", opt(self.rop_max))?;
        for (i, (re, cr)) in self.mean_reward.iter().zip(&self.cost_ratio).enumerate() {
            writeln!(f, "RE_{}       {:.4}", i + 1, re)?;
            writeln!(f, "CR_{}       {:.4}", i + 1, cr)?;
        }
        write!(f, "RT         {:.3}s", self.runtime_secs)
    }
}
