use crate::auction::{run_auction, AuctionOutcome, AuctionState, BidMatrix};
use crate::error::{Error, Result};

use super::{Mismatch, OracleReport};

pub const MAX_OUTCOMES: u64 = 1_000_000;

const EPS: f64 = 1e-12;

/// Winner and payment per seed, resolved by ranking each seed's admissible
/// bids.
fn reference_resolution(
    prices: &[f64],
    budgets: &[f64],
    bids: &[Vec<f64>],
) -> (Vec<Option<usize>>, Vec<f64>) {
    let mut left = budgets.to_vec();
    let mut winners = Vec::new();
    let mut payments = Vec::new();
    for (j, &price) in prices.iter().enumerate() {
        let mut ranked: Vec<(usize, f64)> = bids
            .iter()
            .enumerate()
            .map(|(i, row)| (i, row[j]))
            .filter(|&(i, b)| b > price && b <= left[i])
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        match ranked.first() {
            Some(&(i, _)) => {
                let pay = ranked.get(1).map_or(price, |r| r.1);
                left[i] -= pay;
                winners.push(Some(i));
                payments.push(pay);
            }
            None => {
                winners.push(None);
                payments.push(0.0);
            }
        }
    }
    (winners, payments)
}

fn check_outcome(
    prices: &[f64],
    budgets: &[f64],
    bids: &[Vec<f64>],
    got: &AuctionOutcome,
    state: &AuctionState,
) -> Vec<String> {
    let mut problems = Vec::new();
    let k = budgets.len();
    let (winners, payments) = reference_resolution(prices, budgets, bids);
    if got.winner != winners || got.payment != payments {
        problems.push(format!(
            "resolution differs: got {:?}/{:?}, expected {:?}/{:?}",
            got.winner, got.payment, winners, payments
        ));
    }
    for (j, w) in got.winner.iter().enumerate() {
        if let Some(i) = *w {
            let pay = got.payment[j];
            if !(pay >= prices[j] && pay <= bids[i][j]) {
                problems.push(format!(
                    "seed {j}: payment {pay} outside [{}, {}]",
                    prices[j], bids[i][j]
                ));
            }
        }
    }
    for (i, (cost, budget)) in got.costs.iter().zip(budgets).enumerate() {
        if *cost > budget + EPS {
            problems.push(format!("competitor {i} spent {cost} of {budget}"));
        }
    }
    let mut owner = vec![None; prices.len()];
    for (i, set) in got.seed_sets.iter().enumerate() {
        for &j in set {
            if owner[j].replace(i).is_some() {
                problems.push(format!("seed {j} appears in two seed sets"));
            }
        }
    }
    if owner != got.winner {
        problems.push("seed sets disagree with winners".into());
    }
    // replacing any non-effective bid by zero must not change the result
    for i in 0..k {
        for j in 0..prices.len() {
            if got.effective[i][j] || bids[i][j] == 0.0 {
                continue;
            }
            let mut altered = bids.to_vec();
            altered[i][j] = 0.0;
            let again = run_auction(state, &BidMatrix::from_rows(&altered).unwrap());
            if again.winner != got.winner || again.payment != got.payment {
                problems.push(format!("non-effective bid ({i}, {j}) changed the outcome"));
            }
        }
    }
    problems
}

/// Runs the auction on every bid matrix whose entries come from `grid` and
/// checks each outcome against an independent resolution and the auction's
/// invariants.
pub fn enumerate_auction(prices: &[f64], budgets: &[f64], grid: &[f64]) -> Result<OracleReport> {
    let k = budgets.len();
    let l = prices.len();
    if k == 0 || l == 0 || grid.is_empty() {
        return Err(Error::invalid("empty auction enumeration"));
    }
    let cells = (k * l) as u32;
    let total = (grid.len() as u64)
        .checked_pow(cells)
        .filter(|&t| t <= MAX_OUTCOMES)
        .ok_or_else(|| {
            Error::invalid(format!(
                "{}^{cells} bid matrices exceed the cap of {MAX_OUTCOMES}",
                grid.len()
            ))
        })?;
    let state = AuctionState::with_prices(budgets.to_vec(), prices.to_vec())?;

    let mut report = OracleReport::default();
    let mut digits = vec![0usize; k * l];
    for trial in 0..total {
        let mut rest = trial;
        for d in digits.iter_mut() {
            *d = (rest % grid.len() as u64) as usize;
            rest /= grid.len() as u64;
        }
        let bids: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..l).map(|j| grid[digits[i * l + j]]).collect())
            .collect();
        let got = run_auction(&state, &BidMatrix::from_rows(&bids)?);
        report.trials += 1;
        for what in check_outcome(prices, budgets, &bids, &got, &state) {
            report.mismatches.push(Mismatch {
                trial: trial as usize,
                what,
                replay: format!("prices {prices:?} budgets {budgets:?} bids {bids:?}"),
            });
        }
    }
    Ok(report)
}
