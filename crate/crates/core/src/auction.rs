//! Sealed-bid seed auctions and the platform's starting-price lifecycle.
//!
//! Seeds are sold one at a time in a fixed order. A bid is *effective* when
//! it is strictly above the seed's starting price and no larger than what
//! the bidder still has left at that point in the order. The highest
//! effective bid wins (ties to the lower competitor index) and pays the
//! second-highest effective bid, or the starting price when it was the only
//! effective bid.

use crate::error::{Error, Result};

/// Starting prices for the first round: the total budget split evenly over
/// the `l` seeds.
pub fn initial_prices(budgets: &[f64], l: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::invalid("seed count must be positive"));
    }
    if budgets.is_empty() {
        return Err(Error::invalid("at least one budget is required"));
    }
    if let Some(b) = budgets.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::invalid(format!("budget {b} is not positive")));
    }
    let total: f64 = budgets.iter().sum();
    Ok(vec![total / l as f64; l])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionState {
    pub prices: Vec<f64>,
    pub budgets: Vec<f64>,
    /// Seed indices in the order they are auctioned.
    pub order: Vec<usize>,
    pub round_index: u64,
}

impl AuctionState {
    /// State for the first round of an iteration: prices from
    /// [`initial_prices`], seeds auctioned in index order.
    pub fn new(budgets: Vec<f64>, l: usize) -> Result<Self> {
        let prices = initial_prices(&budgets, l)?;
        Ok(AuctionState {
            prices,
            budgets,
            order: (0..l).collect(),
            round_index: 1,
        })
    }

    pub fn with_prices(budgets: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if let Some(p) = prices.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::invalid(format!(
                "starting price {p} is not positive"
            )));
        }
        if let Some(b) = budgets.iter().find(|b| !(**b > 0.0)) {
            return Err(Error::invalid(format!("budget {b} is not positive")));
        }
        Ok(AuctionState {
            order: (0..prices.len()).collect(),
            prices,
            budgets,
            round_index: 1,
        })
    }

    pub fn competitors(&self) -> usize {
        self.budgets.len()
    }

    pub fn seeds(&self) -> usize {
        self.prices.len()
    }
}

/// `k x l` bids, row `i` holding competitor `i`'s bid on every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct BidMatrix {
    k: usize,
    l: usize,
    values: Vec<f64>,
}

impl BidMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(k * l);
        for row in rows {
            if row.len() != l {
                return Err(Error::ShapeMismatch {
                    what: "bid row",
                    expected: l,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(BidMatrix { k, l, values })
    }

    pub fn zeros(k: usize, l: usize) -> Self {
        BidMatrix {
            k,
            l,
            values: vec![0.0; k * l],
        }
    }

    pub fn competitors(&self) -> usize {
        self.k
    }

    pub fn seeds(&self) -> usize {
        self.l
    }

    pub fn get(&self, competitor: usize, seed: usize) -> f64 {
        self.values[competitor * self.l + seed]
    }

    pub fn set(&mut self, competitor: usize, seed: usize, bid: f64) {
        self.values[competitor * self.l + seed] = bid;
    }

    pub fn row(&self, competitor: usize) -> &[f64] {
        &self.values[competitor * self.l..(competitor + 1) * self.l]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: Vec<Option<usize>>,
    /// What the winner paid per seed; zero for unsold seeds.
    pub payment: Vec<f64>,
    /// `effective[i][j]`: competitor `i`'s bid on seed `j` was effective.
    pub effective: Vec<Vec<bool>>,
    /// The bid where effective, zero elsewhere.
    pub effective_prices: Vec<Vec<f64>>,
    /// Seed indices won by each competitor, in auction order.
    pub seed_sets: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
    pub all_sold: bool,
}

impl AuctionOutcome {
    pub fn sold(&self) -> Vec<bool> {
        self.winner.iter().map(Option::is_some).collect()
    }

    pub fn remaining_budgets(&self, budgets: &[f64]) -> Vec<f64> {
        budgets
            .iter()
            .zip(&self.costs)
            .map(|(b, c)| (b - c).max(0.0))
            .collect()
    }
}

/// Resolves one round of sealed bids.
///
/// # Panics
///
/// If the bid matrix shape differs from `k x l` of the state.
pub fn run_auction(state: &AuctionState, bids: &BidMatrix) -> AuctionOutcome {
    let k = state.competitors();
    let l = state.seeds();
    assert_eq!(bids.competitors(), k, "one bid row per competitor");
    assert_eq!(bids.seeds(), l, "one bid per seed");

    let mut remaining = state.budgets.clone();
    let mut winner = vec![None; l];
    let mut payment = vec![0.0; l];
    let mut effective = vec![vec![false; l]; k];
    let mut effective_prices = vec![vec![0.0; l]; k];
    let mut seed_sets = vec![Vec::new(); k];
    let mut costs = vec![0.0; k];

    for &j in &state.order {
        let price = state.prices[j];
        // (competitor, bid) of the best and runner-up effective bids
        let mut best: Option<(usize, f64)> = None;
        let mut second: Option<f64> = None;
        for i in 0..k {
            let bid = bids.get(i, j);
            if !(bid > price && bid <= remaining[i]) {
                continue;
            }
            effective[i][j] = true;
            effective_prices[i][j] = bid;
            match best {
                Some((_, top)) if bid <= top => {
                    if second.is_none_or(|s| bid > s) {
                        second = Some(bid);
                    }
                }
                _ => {
                    second = best.map(|(_, top)| top);
                    best = Some((i, bid));
                }
            }
        }
        if let Some((i, _)) = best {
            let pay = second.unwrap_or(price);
            remaining[i] -= pay;
            winner[j] = Some(i);
            payment[j] = pay;
            seed_sets[i].push(j);
            costs[i] += pay;
        }
    }

    let all_sold = winner.iter().all(Option::is_some);
    AuctionOutcome {
        winner,
        payment,
        effective,
        effective_prices,
        seed_sets,
        costs,
        all_sold,
    }
}

/// Contribution degree of each seed: its standalone spread relative to the
/// mean standalone spread of all seeds. The values average to one.
pub fn contribution_degrees(per_seed_spread: &[usize]) -> Vec<f64> {
    let l = per_seed_spread.len();
    let total: usize = per_seed_spread.iter().sum();
    if total == 0 {
        return vec![1.0; l];
    }
    per_seed_spread
        .iter()
        .map(|&s| s as f64 * l as f64 / total as f64)
        .collect()
}

/// Next round's starting prices: unsold seeds get cheaper by `kappa`; sold
/// seeds with above-average contribution get dearer by up to `kappa`; other
/// sold seeds keep their price.
pub fn adjust_prices(prices: &[f64], sold: &[bool], cd: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid(format!("kappa {kappa} outside (0, 1)")));
    }
    if sold.len() != prices.len() || cd.len() != prices.len() {
        return Err(Error::ShapeMismatch {
            what: "price adjustment inputs",
            expected: prices.len(),
            got: sold.len().min(cd.len()),
        });
    }
    Ok(prices
        .iter()
        .zip(sold)
        .zip(cd)
        .map(|((&p, &sold), &cd)| {
            if !sold {
                p * (1.0 - kappa)
            } else if cd < 1.0 {
                p
            } else {
                p * (1.0 + kappa).min(cd)
            }
        })
        .collect())
}

/// Generalized-entropy index of unit costs `R_i`. Zero means every
/// competitor got the same spread per unit spent.
pub fn generalized_entropy(unit_costs: &[f64], omega: f64) -> Result<f64> {
    if omega == 0.0 || omega == 1.0 || !omega.is_finite() {
        return Err(Error::invalid(format!(
            "omega {omega} must be finite and not 0 or 1"
        )));
    }
    if unit_costs.is_empty() {
        return Err(Error::invalid("no competitors"));
    }
    let k = unit_costs.len() as f64;
    let mean = unit_costs.iter().sum::<f64>() / k;
    if mean == 0.0 {
        return Ok(0.0);
    }
    // The ratios x average to one, so adding -omega * (x - 1) leaves the sum
    // unchanged; each term is then a convexity gap whose sign matches
    // omega * (omega - 1), which keeps rounding from producing a negative
    // index when all ratios are close to one.
    let sign = (omega * (omega - 1.0)).signum();
    let sum: f64 = unit_costs
        .iter()
        .map(|r| {
            let x = r / mean;
            let gap = x.powf(omega) - 1.0 - omega * (x - 1.0);
            sign * (sign * gap).max(0.0)
        })
        .sum();
    Ok(sum / (k * omega * (omega - 1.0)))
}

/// Fairness index of a round from each competitor's spread and cost.
/// A competitor that spent nothing has unit cost zero.
pub fn fairness_index(rewards: &[f64], costs: &[f64], omega: f64) -> Result<f64> {
    if rewards.len() != costs.len() {
        return Err(Error::ShapeMismatch {
            what: "fairness inputs",
            expected: rewards.len(),
            got: costs.len(),
        });
    }
    if rewards.len() < 2 {
        return Err(Error::invalid("fairness needs at least two competitors"));
    }
    let unit: Vec<f64> = rewards
        .iter()
        .zip(costs)
        .map(|(&r, &c)| if c == 0.0 { 0.0 } else { r / c })
        .collect();
    generalized_entropy(&unit, omega)
}
