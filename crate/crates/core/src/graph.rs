//! Influence graphs: edge-list ingestion, edge weights, activation thresholds
//! and degree-ranked seed selection.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamLabel};

/// A simple directed graph in compressed adjacency form, with one influence
/// weight per arc.
///
/// Undirected inputs are stored as a pair of opposite arcs per edge, so the
/// in-degree of a node equals its degree and the weight rule is the same for
/// both kinds of graph: every arc into `v` carries `1 / in_degree(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    directed: bool,
    original_ids: Vec<u64>,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    in_weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from `(u, v)` pairs of arbitrary integer ids.
    ///
    /// Ids are remapped to `0..n` in ascending order of the original id, so
    /// comparing dense ids is the same as comparing original ids. Self-loops
    /// are dropped and repeated arcs collapsed. Weights are assigned with
    /// [`assign_weights`].
    pub fn from_edges(directed: bool, edges: &[(u64, u64)]) -> Result<Self> {
        let ids: BTreeSet<u64> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        let original_ids: Vec<u64> = ids.into_iter().collect();
        let index: HashMap<u64, usize> = original_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let arcs = edges.iter().map(|(u, v)| (index[u], index[v]));
        Self::from_arcs(original_ids.len(), directed, arcs, Some(original_ids))
    }

    /// Builds a graph over dense node ids `0..node_count`.
    pub fn from_dense(
        node_count: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        Self::from_arcs(node_count, directed, edges, None)
    }

    fn from_arcs(
        node_count: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (usize, usize)>,
        original_ids: Option<Vec<u64>>,
    ) -> Result<Self> {
        let mut arcs: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) outside node range 0..{node_count}"
                )));
            }
            if u == v {
                continue;
            }
            arcs.push((u, v));
            if !directed {
                arcs.push((v, u));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        if arcs.is_empty() {
            return Err(Error::EmptyGraph);
        }

        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_offsets = vec![0usize; node_count + 1];
        for &(u, v) in &arcs {
            out_offsets[u + 1] += 1;
            in_offsets[v + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        // `arcs` is sorted by (u, v), so targets come out sorted per source.
        let out_targets: Vec<usize> = arcs.iter().map(|&(_, v)| v).collect();
        let mut in_sources = vec![0usize; arcs.len()];
        let mut fill = in_offsets.clone();
        for &(u, v) in &arcs {
            in_sources[fill[v]] = u;
            fill[v] += 1;
        }

        let graph = WeightedGraph {
            node_count,
            directed,
            original_ids: original_ids.unwrap_or_else(|| (0..node_count as u64).collect()),
            out_offsets,
            out_targets,
            out_weights: vec![0.0; arcs.len()],
            in_offsets,
            in_sources,
            in_weights: vec![0.0; arcs.len()],
        };
        Ok(assign_weights(graph))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of stored arcs (twice the edge count for undirected graphs).
    pub fn arc_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn original_id(&self, node: usize) -> u64 {
        self.original_ids[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_offsets[node + 1] - self.out_offsets[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Degree used to rank seeds: out-degree, which for undirected graphs is
    /// the plain degree.
    pub fn seed_degree(&self, node: usize) -> usize {
        self.out_degree(node)
    }

    /// `(target, w_uv)` for every arc leaving `node`, targets ascending.
    pub fn out_arcs(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.out_offsets[node]..self.out_offsets[node + 1];
        self.out_targets[range.clone()]
            .iter()
            .copied()
            .zip(self.out_weights[range].iter().copied())
    }

    /// `(source, w_uv)` for every arc entering `node`, sources ascending.
    pub fn in_arcs(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.in_offsets[node]..self.in_offsets[node + 1];
        self.in_sources[range.clone()]
            .iter()
            .copied()
            .zip(self.in_weights[range].iter().copied())
    }

    /// Every arc as `(u, v, w_uv)`, ordered by `(u, v)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count).flat_map(move |u| self.out_arcs(u).map(move |(v, w)| (u, v, w)))
    }
}

/// Assigns `w_uv = 1 / |N_in(v)|` to every arc. For undirected graphs the
/// in-neighborhood is the whole neighborhood, giving `1 / |N(v)|`.
pub fn assign_weights(mut graph: WeightedGraph) -> WeightedGraph {
    for v in 0..graph.node_count {
        let deg = graph.in_degree(v);
        let w = if deg == 0 { 0.0 } else { 1.0 / deg as f64 };
        for slot in graph.in_offsets[v]..graph.in_offsets[v + 1] {
            graph.in_weights[slot] = w;
        }
    }
    for slot in 0..graph.out_targets.len() {
        let v = graph.out_targets[slot];
        graph.out_weights[slot] = 1.0 / graph.in_degree(v) as f64;
    }
    graph
}

/// Reads a SNAP-style edge list: one `u v` pair per line, any whitespace
/// between ids, `#` lines ignored.
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<WeightedGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path, directed)
}

/// Parses edge-list text from any reader. `origin` only labels errors.
pub fn parse_edge_list(
    reader: impl BufRead,
    origin: impl AsRef<Path>,
    directed: bool,
) -> Result<WeightedGraph> {
    let origin = origin.as_ref();
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message,
        };
        let mut fields = trimmed.split_whitespace();
        let mut next_id = || -> Result<u64> {
            let field = fields
                .next()
                .ok_or_else(|| parse_err(format!("expected two node ids, got {trimmed:?}")))?;
            field
                .parse::<u64>()
                .map_err(|e| parse_err(format!("bad node id {field:?}: {e}")))
        };
        let u = next_id()?;
        let v = next_id()?;
        if let Some(extra) = fields.next() {
            return Err(parse_err(format!("unexpected trailing field {extra:?}")));
        }
        edges.push((u, v));
    }
    WeightedGraph::from_edges(directed, &edges)
}

/// One activation threshold per node, tagged with the stream that drew it.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdDraw {
    pub xi: Vec<f64>,
    pub label: Option<StreamLabel>,
}

impl ThresholdDraw {
    /// Hand-set thresholds, mostly for tests and worked examples.
    pub fn from_values(xi: Vec<f64>) -> Result<Self> {
        if let Some(bad) = xi.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("threshold {bad} outside [0, 1]")));
        }
        Ok(ThresholdDraw { xi, label: None })
    }

    pub fn uniform(node_count: usize, value: f64) -> Result<Self> {
        Self::from_values(vec![value; node_count])
    }
}

/// Draws i.i.d. uniform thresholds in `[0, 1)` from the round's stream,
/// identified by `(master, iteration, round)`.
pub fn sample_thresholds(
    graph: &WeightedGraph,
    master: u64,
    iteration: u64,
    round: u64,
) -> ThresholdDraw {
    let label = StreamLabel::new(master, Purpose::Thresholds).at(iteration, round);
    let mut rng = label.rng();
    let xi = (0..graph.node_count())
        .map(|_| rng.random::<f64>())
        .collect();
    ThresholdDraw {
        xi,
        label: Some(label),
    }
}

/// The platform's seeds, in auction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<usize>,
}

impl SeedSet {
    pub fn new(seeds: Vec<usize>, node_count: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &s in &seeds {
            if s >= node_count {
                return Err(Error::invalid(format!(
                    "seed {s} outside node range 0..{node_count}"
                )));
            }
            if !seen.insert(s) {
                return Err(Error::invalid(format!("seed {s} listed twice")));
            }
        }
        Ok(SeedSet { seeds })
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.seeds
    }

    pub fn get(&self, j: usize) -> usize {
        self.seeds[j]
    }
}

/// The `l` highest-degree nodes, ordered by descending degree then ascending
/// id. The returned order is the auction order.
pub fn select_seeds_by_degree(graph: &WeightedGraph, l: usize) -> Result<SeedSet> {
    if l == 0 {
        return Err(Error::invalid("seed count must be positive"));
    }
    if l > graph.node_count() {
        return Err(Error::invalid(format!(
            "asked for {l} seeds from a graph with {} nodes",
            graph.node_count()
        )));
    }
    let mut nodes: Vec<usize> = (0..graph.node_count()).collect();
    nodes.sort_by_key(|&v| (std::cmp::Reverse(graph.seed_degree(v)), v));
    nodes.truncate(l);
    SeedSet::new(nodes, graph.node_count())
}

/// Undirected preferential-attachment graph: each new node links to `m`
/// distinct existing nodes picked with probability proportional to degree,
/// starting from a clique on `m + 1` nodes.
pub fn preferential_attachment(nodes: usize, m: usize, seed: u64) -> Result<WeightedGraph> {
    if m == 0 || nodes <= m {
        return Err(Error::invalid(format!(
            "preferential attachment needs 0 < m < nodes, got m={m}, nodes={nodes}"
        )));
    }
    let mut rng = StreamLabel::new(seed, Purpose::Synthetic).rng();
    let mut edges = Vec::new();
    // every endpoint appears once per incident edge
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..=m {
        for v in (u + 1)..=m {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    for v in (m + 1)..nodes {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(endpoints[rng.random_range(0..endpoints.len())]);
        }
        for u in targets {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    WeightedGraph::from_dense(nodes, false, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, directed: bool) -> Result<WeightedGraph> {
        parse_edge_list(text.as_bytes(), "inline", directed)
    }

    #[test]
    fn directed_chain_loads_two_arcs() {
        let g = parse("0 1\n1 2", true).unwrap();
        assert_eq!(g.node_count(), 3);
        let arcs: Vec<_> = g.arcs().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(arcs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn undirected_line_yields_both_arcs() {
        let g = parse("0 1", false).unwrap();
        let arcs: Vec<_> = g.arcs().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(arcs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn comments_and_odd_whitespace() {
        let g = parse("# comment\n\n  0\t 1  \n", false).unwrap();
        assert_eq!(g.arc_count(), 2);
    }

    #[test]
    fn self_loops_and_duplicates_dropped() {
        let g = parse("0 0\n0 1\n0 1\n1 0", true).unwrap();
        let arcs: Vec<_> = g.arcs().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(arcs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn sparse_ids_are_remapped_in_id_order() {
        let g = parse("100 7\n7 42", true).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(
            (0..3).map(|v| g.original_id(v)).collect::<Vec<_>>(),
            [7, 42, 100]
        );
        let arcs: Vec<_> = g.arcs().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(arcs, vec![(0, 1), (2, 0)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("0 1\n# ok\n2 x\n", true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("0 1 2", true),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("5", true),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse("# nothing\n", true), Err(Error::EmptyGraph)));
        assert!(matches!(parse("3 3\n", true), Err(Error::EmptyGraph)));
    }

    #[test]
    fn in_degree_weights() {
        let g = parse("0 2\n1 2", true).unwrap();
        for (_, v, w) in g.arcs() {
            assert_eq!(v, 2);
            assert_eq!(w, 0.5);
        }
        let single = parse("0 1", true).unwrap();
        assert_eq!(single.arcs().next().unwrap().2, 1.0);
        let triangle = parse("0 1\n1 2\n2 0", false).unwrap();
        assert!(triangle.arcs().all(|(_, _, w)| w == 0.5));
        assert_eq!(triangle.arc_count(), 6);
    }

    #[test]
    fn in_and_out_views_agree() {
        let g = preferential_attachment(30, 2, 3).unwrap();
        let mut from_in: Vec<_> = (0..g.node_count())
            .flat_map(|v| g.in_arcs(v).map(move |(u, w)| (u, v, w)))
            .collect();
        from_in.sort_by_key(|a| (a.0, a.1));
        let from_out: Vec<_> = g.arcs().collect();
        assert_eq!(from_in, from_out);
    }

    #[test]
    fn threshold_draws_are_labeled_and_reproducible() {
        let g = parse("0 1\n1 2\n2 3", false).unwrap();
        let a = sample_thresholds(&g, 11, 2, 5);
        let b = sample_thresholds(&g, 11, 2, 5);
        assert_eq!(a, b);
        assert_eq!(a.xi.len(), 4);
        assert!(a.xi.iter().all(|x| (0.0..1.0).contains(x)));
        let c = sample_thresholds(&g, 11, 2, 6);
        assert_ne!(a.xi, c.xi);
    }

    #[test]
    fn threshold_mean_over_many_nodes() {
        let edges: Vec<(usize, usize)> = (0..99_999).map(|v| (v, v + 1)).collect();
        let g = WeightedGraph::from_dense(100_000, true, edges).unwrap();
        let draw = sample_thresholds(&g, 1, 0, 0);
        let mean = draw.xi.iter().sum::<f64>() / draw.xi.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn seed_selection_star_and_path() {
        let star = parse("0 1\n0 2\n0 3\n0 4\n0 5", false).unwrap();
        assert_eq!(select_seeds_by_degree(&star, 1).unwrap().nodes(), &[0]);
        let path = parse("0 1\n1 2", false).unwrap();
        assert_eq!(select_seeds_by_degree(&path, 2).unwrap().nodes(), &[1, 0]);
        assert!(select_seeds_by_degree(&path, 0).is_err());
        assert!(select_seeds_by_degree(&path, 4).is_err());
    }

    #[test]
    fn seed_set_validation() {
        assert!(SeedSet::new(vec![0, 1, 0], 3).is_err());
        assert!(SeedSet::new(vec![3], 3).is_err());
        assert_eq!(SeedSet::new(vec![2, 0], 3).unwrap().get(0), 2);
    }

    #[test]
    fn preferential_attachment_shape() {
        let g = preferential_attachment(200, 2, 9).unwrap();
        assert_eq!(g.node_count(), 200);
        assert!(!g.is_directed());
        // clique on 3 nodes plus 2 edges per later node, two arcs per edge
        assert_eq!(g.arc_count(), 2 * (3 + 2 * 197));
        assert_eq!(g, preferential_attachment(200, 2, 9).unwrap());
    }
}
