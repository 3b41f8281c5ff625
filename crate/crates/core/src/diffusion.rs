//! Competitive linear-threshold propagation.
//!
//! Every competitor's owned seeds start active. At each synchronous step an
//! inactive node `v` qualifies for competitor `i` when the summed weight of
//! its in-neighbors already active for `i` is strictly greater than `xi_v`.
//! A node qualifying for several competitors goes to the one with the largest
//! sum; exact ties go to the lowest competitor index. Nodes are activated at
//! most once. Seeds that nobody won are blocked: they are never activated and
//! never pass influence on.

use crate::error::{Error, Result};
use crate::graph::{SeedSet, ThresholdDraw, WeightedGraph};

/// Which competitor, if any, won each seed (indexed like the [`SeedSet`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    competitors: usize,
    owners: Vec<Option<usize>>,
}

impl Allocation {
    pub fn new(owners: Vec<Option<usize>>, competitors: usize) -> Result<Self> {
        if let Some(bad) = owners.iter().flatten().find(|&&c| c >= competitors) {
            return Err(Error::invalid(format!(
                "seed owner {bad} outside competitor range 0..{competitors}"
            )));
        }
        Ok(Allocation {
            competitors,
            owners,
        })
    }

    pub fn competitors(&self) -> usize {
        self.competitors
    }

    pub fn owners(&self) -> &[Option<usize>] {
        &self.owners
    }

    /// Seed indices (positions in the seed set) owned by `competitor`.
    pub fn seed_indices(&self, competitor: usize) -> Vec<usize> {
        self.owners
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(competitor))
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionResult {
    /// Activated nodes per competitor, seeds included, ascending.
    pub activated_by: Vec<Vec<usize>>,
    /// Synchronous propagation steps executed.
    pub steps_used: usize,
}

impl DiffusionResult {
    pub fn spread(&self, competitor: usize) -> usize {
        spread(self, competitor)
    }

    pub fn spreads(&self) -> Vec<usize> {
        self.activated_by.iter().map(Vec::len).collect()
    }
}

/// Influence spread of `competitor`: the number of nodes it activated.
pub fn spread(result: &DiffusionResult, competitor: usize) -> usize {
    result.activated_by[competitor].len()
}

const INACTIVE: usize = usize::MAX;
const BLOCKED: usize = usize::MAX - 1;

/// Runs the competitive cascade to its fixed point or for `t_up` steps,
/// whichever comes first.
///
/// Influence is accumulated incrementally: only nodes adjacent to the
/// previous step's activations are re-examined.
///
/// # Panics
///
/// If the allocation or the threshold vector does not match the seed set or
/// the graph, or if `t_up` is zero.
pub fn diffuse_clt(
    graph: &WeightedGraph,
    thresholds: &ThresholdDraw,
    seeds: &SeedSet,
    alloc: &Allocation,
    t_up: usize,
) -> DiffusionResult {
    let n = graph.node_count();
    let k = alloc.competitors();
    assert_eq!(thresholds.xi.len(), n, "one threshold per node");
    assert_eq!(alloc.owners().len(), seeds.len(), "one owner slot per seed");
    assert!(t_up >= 1, "t_up must be at least 1");

    let mut owner = vec![INACTIVE; n];
    let mut frontier = Vec::new();
    for (j, slot) in alloc.owners().iter().enumerate() {
        let s = seeds.get(j);
        match *slot {
            Some(c) => {
                owner[s] = c;
                frontier.push(s);
            }
            None => owner[s] = BLOCKED,
        }
    }

    let mut pressure = vec![0.0f64; n * k];
    let mut touched = Vec::new();
    let mut marked = vec![false; n];
    let mut fresh: Vec<(usize, usize)> = Vec::new();
    let mut steps = 0;
    while !frontier.is_empty() && steps < t_up {
        steps += 1;
        for &u in &frontier {
            let c = owner[u];
            for (v, w) in graph.out_arcs(u) {
                if owner[v] == INACTIVE {
                    pressure[v * k + c] += w;
                    if !marked[v] {
                        marked[v] = true;
                        touched.push(v);
                    }
                }
            }
        }
        fresh.clear();
        for &v in &touched {
            marked[v] = false;
            let xi = thresholds.xi[v];
            let row = &pressure[v * k..(v + 1) * k];
            let mut best: Option<(usize, f64)> = None;
            for (c, &p) in row.iter().enumerate() {
                if p > xi && best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((c, p));
                }
            }
            if let Some((c, _)) = best {
                fresh.push((v, c));
            }
        }
        touched.clear();
        frontier.clear();
        for &(v, c) in &fresh {
            owner[v] = c;
            frontier.push(v);
        }
    }

    let mut activated_by = vec![Vec::new(); k];
    for (v, &c) in owner.iter().enumerate() {
        if c < k {
            activated_by[c].push(v);
        }
    }
    DiffusionResult {
        activated_by,
        steps_used: steps,
    }
}

/// Standalone spread of each seed: the seed alone, owned by a single
/// competitor, under the same thresholds. Other platform seeds behave as
/// ordinary nodes in these runs.
pub fn single_seed_spreads(
    graph: &WeightedGraph,
    thresholds: &ThresholdDraw,
    seeds: &SeedSet,
    t_up: usize,
) -> Vec<usize> {
    let solo = Allocation {
        competitors: 1,
        owners: vec![Some(0)],
    };
    seeds
        .nodes()
        .iter()
        .map(|&s| {
            let single = SeedSet::new(vec![s], graph.node_count()).expect("seed already validated");
            diffuse_clt(graph, thresholds, &single, &solo, t_up).spread(0)
        })
        .collect()
}

/// Cheap stand-in for exact propagation: a competitor's reward is the number
/// of distinct nodes in the closed out-neighborhood of its seeds, never
/// counting blocked seeds or seeds won by someone else.
pub fn degree_proxy_spreads(
    graph: &WeightedGraph,
    seeds: &SeedSet,
    alloc: &Allocation,
) -> Vec<usize> {
    let n = graph.node_count();
    let mut excluded = vec![false; n];
    for &s in seeds.nodes() {
        excluded[s] = true;
    }
    let mut seen = vec![usize::MAX; n];
    (0..alloc.competitors())
        .map(|c| {
            let mut count = 0;
            for j in alloc.seed_indices(c) {
                let s = seeds.get(j);
                if seen[s] != c {
                    seen[s] = c;
                    count += 1;
                }
                for (v, _) in graph.out_arcs(s) {
                    if !excluded[v] && seen[v] != c {
                        seen[v] = c;
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}
