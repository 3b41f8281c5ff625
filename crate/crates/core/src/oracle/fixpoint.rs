use crate::diffusion::{Allocation, DiffusionResult};
use crate::error::{Error, Result};
use crate::graph::{SeedSet, ThresholdDraw, WeightedGraph};

pub const MAX_NODES: usize = 64;

/// Reference propagation by whole-table sweeps.
///
/// Each sweep recomputes, for every node not yet decided, the in-weight it
/// receives from every competitor using only the table left by the previous
/// sweep, then writes all new activations at once. Sweeps stop when one
/// changes nothing or after `t_up` sweeps. Deliberately quadratic.
pub fn fixpoint_diffusion(
    graph: &WeightedGraph,
    thresholds: &ThresholdDraw,
    seeds: &SeedSet,
    alloc: &Allocation,
    t_up: usize,
) -> Result<DiffusionResult> {
    let n = graph.node_count();
    let k = alloc.competitors();
    if n > MAX_NODES {
        return Err(Error::invalid(format!(
            "fixpoint oracle is capped at {MAX_NODES} nodes, got {n}"
        )));
    }
    if thresholds.xi.len() != n || alloc.owners().len() != seeds.len() || t_up == 0 {
        return Err(Error::invalid("instance shapes do not match"));
    }

    // table[v]: None undecided, Some(None) blocked, Some(Some(c)) active for c
    let mut table: Vec<Option<Option<usize>>> = vec![None; n];
    for (j, &s) in seeds.nodes().iter().enumerate() {
        table[s] = Some(alloc.owners()[j]);
    }

    let mut sweeps = 0;
    let any_active = table.iter().any(|t| matches!(t, Some(Some(_))));
    if any_active {
        loop {
            sweeps += 1;
            let mut next = table.clone();
            let mut changed = false;
            for v in 0..n {
                if table[v].is_some() {
                    continue;
                }
                let mut weight = vec![0.0f64; k];
                for (u, w) in graph.in_arcs(v) {
                    if let Some(Some(c)) = table[u] {
                        weight[c] += w;
                    }
                }
                let qualifying: Vec<usize> =
                    (0..k).filter(|&c| weight[c] > thresholds.xi[v]).collect();
                let strongest = qualifying
                    .iter()
                    .map(|&c| weight[c])
                    .fold(f64::NEG_INFINITY, f64::max);
                if let Some(&c) = qualifying.iter().find(|&&c| weight[c] == strongest) {
                    next[v] = Some(Some(c));
                    changed = true;
                }
            }
            table = next;
            if !changed || sweeps >= t_up {
                break;
            }
        }
    }

    let activated_by = (0..k)
        .map(|c| (0..n).filter(|&v| table[v] == Some(Some(c))).collect())
        .collect();
    Ok(DiffusionResult {
        activated_by,
        steps_used: sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_seed_spreads_to_itself() {
        let g = WeightedGraph::from_dense(3, false, [(1, 2)]).unwrap();
        let seeds = SeedSet::new(vec![0], 3).unwrap();
        let alloc = Allocation::new(vec![Some(0)], 1).unwrap();
        let th = ThresholdDraw::uniform(3, 0.0).unwrap();
        let r = fixpoint_diffusion(&g, &th, &seeds, &alloc, 3).unwrap();
        assert_eq!(r.activated_by, vec![vec![0]]);
    }

    #[test]
    fn size_cap_is_an_error() {
        let g = WeightedGraph::from_dense(65, false, [(0, 1)]).unwrap();
        let seeds = SeedSet::new(vec![0], 65).unwrap();
        let alloc = Allocation::new(vec![Some(0)], 1).unwrap();
        let th = ThresholdDraw::uniform(65, 0.5).unwrap();
        assert!(fixpoint_diffusion(&g, &th, &seeds, &alloc, 5).is_err());
    }

    #[test]
    fn tie_goes_to_lower_index() {
        // 0 -> 2 <- 1, each arc weight 1/2
        let g = WeightedGraph::from_dense(3, true, [(0, 2), (1, 2)]).unwrap();
        let seeds = SeedSet::new(vec![1, 0], 3).unwrap();
        let alloc = Allocation::new(vec![Some(0), Some(1)], 2).unwrap();
        let th = ThresholdDraw::uniform(3, 0.25).unwrap();
        let r = fixpoint_diffusion(&g, &th, &seeds, &alloc, 3).unwrap();
        assert_eq!(r.activated_by, vec![vec![1, 2], vec![0]]);
    }
}
