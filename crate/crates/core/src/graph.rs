//! Retweet endorsement graph and the pruned root-graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::ingest::InteractionRecord;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("only {survivors} node(s) survive degree pruning; the discussion is too small to score")]
    Degenerate { survivors: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Fewer surviving root-graph nodes than this is treated as degenerate.
pub const MIN_ROOT_NODES: usize = 10;

/// Directed, weighted user graph. An edge `(u, v)` with weight `w` means
/// `u` retweeted `v` `w` times.
///
/// Nodes are kept in ascending id order, so node indices compare like ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetweetGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), u32>,
}

impl RetweetGraph {
    /// Builds a graph from explicit node ids and weighted edges. Edge
    /// endpoints are added as nodes; self-loops are dropped and parallel
    /// edges summed.
    pub fn from_parts<N, E, S>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, S, u32)>,
        S: AsRef<str>,
    {
        let mut names: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_owned()).collect();
        let edges: Vec<(String, String, u32)> = edges
            .into_iter()
            .map(|(u, v, w)| (u.as_ref().to_owned(), v.as_ref().to_owned(), w))
            .collect();
        for (u, v, _) in &edges {
            names.insert(u.clone());
            names.insert(v.clone());
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut edge_map = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v || w == 0 {
                continue;
            }
            *edge_map.entry((index[&u], index[&v])).or_insert(0) += w;
        }
        Self {
            nodes,
            index,
            edges: edge_map,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn weight(&self, u: &str, v: &str) -> Option<u32> {
        let key = (self.index_of(u)?, self.index_of(v)?);
        self.edges.get(&key).copied()
    }

    /// Directed edges as `(source, target, weight)` index triples, ordered
    /// by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|&w| w as u64).sum()
    }

    /// Retweets made plus retweets received, per node.
    pub fn total_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.nodes.len()];
        for (u, v, w) in self.edges() {
            deg[u] += w as u64;
            deg[v] += w as u64;
        }
        deg
    }

    /// Subgraph induced by `keep` (node indices of `self`).
    pub fn restrict(&self, keep: &[usize]) -> RetweetGraph {
        let mut mask = vec![false; self.nodes.len()];
        for &k in keep {
            mask[k] = true;
        }
        let nodes = keep.iter().map(|&k| self.nodes[k].as_str());
        let edges = self
            .edges()
            .filter(|&(u, v, _)| mask[u] && mask[v])
            .map(|(u, v, w)| (self.nodes[u].as_str(), self.nodes[v].as_str(), w));
        RetweetGraph::from_parts(nodes, edges)
    }

    /// Symmetrised view with summed weights, as used by clustering and
    /// propagation.
    pub fn undirected(&self) -> UndirectedGraph {
        UndirectedGraph::from_edges(self.nodes.len(), self.edges().map(|(u, v, w)| (u, v, w as f64)))
    }
}

/// Undirected weighted graph in compressed adjacency form. Neighbour lists
/// are sorted by index; no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl UndirectedGraph {
    /// `edges` may repeat a pair in either orientation; weights are summed.
    /// Self-loops and non-positive weights are ignored.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v || w <= 0.0 {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            *pairs.entry(key).or_insert(0.0) += w;
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut total_weight = 0.0;
        for (&(u, v), &w) in &pairs {
            adj[u].push((v, w));
            adj[v].push((u, w));
            total_weight += w;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * pairs.len());
        let mut weights = Vec::with_capacity(2 * pairs.len());
        offsets.push(0);
        for mut list in adj {
            list.sort_by_key(|&(j, _)| j);
            for (j, w) in list {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            weights,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.weights[self.offsets[i]..self.offsets[i + 1]].iter().sum()
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Weakly connected components, each sorted ascending, ordered by their
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Builds the endorsement graph: one node per contributing user, one edge
/// per retweeting pair weighted by the number of retweets.
pub fn build_graph(records: &[InteractionRecord]) -> RetweetGraph {
    let mut edges: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for r in records {
        if let Some(target) = r.retweet_of_user.as_deref() {
            *edges.entry((r.user_id.as_str(), target)).or_insert(0) += 1;
        }
    }
    RetweetGraph::from_parts(
        records.iter().map(|r| r.user_id.as_str()),
        edges.into_iter().map(|((u, v), w)| (u, v, w)),
    )
}

/// Largest weakly connected component, as ascending node indices. Ties go to
/// the component holding the smallest id.
pub fn largest_component(graph: &RetweetGraph) -> Result<Vec<usize>, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut best: Option<Vec<usize>> = None;
    // components come ordered by smallest member, so strict `>` keeps the tie rule
    for comp in graph.undirected().components() {
        if best.as_ref().is_none_or(|b| comp.len() > b.len()) {
            best = Some(comp);
        }
    }
    Ok(best.unwrap_or_default())
}

/// Pruned largest component used for prediction and propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct RootGraph {
    pub graph: RetweetGraph,
    /// Size of the component the pruning started from.
    pub component_size: usize,
    /// Nodes removed by pruning (including those stranded outside the final
    /// largest component).
    pub pruned: usize,
}

impl RootGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

/// Nodes that survive iterative removal of every node whose total weighted
/// interaction count is below `min_total_degree`. Ascending indices.
pub fn peel_low_degree(graph: &RetweetGraph, min_total_degree: u64) -> Vec<usize> {
    let n = graph.node_count();
    let mut degree = graph.total_degrees();
    let mut incident: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (u, v, w) in graph.edges() {
        incident[u].push((v, w as u64));
        incident[v].push((u, w as u64));
    }
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| degree[i] < min_total_degree).collect();
    for &i in &queue {
        removed[i] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &(v, w) in &incident[u] {
            if removed[v] {
                continue;
            }
            degree[v] -= w;
            if degree[v] < min_total_degree {
                removed[v] = true;
                queue.push_back(v);
            }
        }
    }
    (0..n).filter(|&i| !removed[i]).collect()
}

/// Peels low-degree nodes to a fixpoint, then keeps the largest surviving
/// component.
pub fn prune_low_degree(graph: &RetweetGraph, min_total_degree: u64) -> Result<RootGraph, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let n = graph.node_count();
    let survivors = peel_low_degree(graph, min_total_degree);
    if survivors.len() < MIN_ROOT_NODES {
        return Err(GraphError::Degenerate {
            survivors: survivors.len(),
        });
    }
    let peeled = graph.restrict(&survivors);
    let keep = largest_component(&peeled)?;
    if keep.len() < MIN_ROOT_NODES {
        return Err(GraphError::Degenerate { survivors: keep.len() });
    }
    let root = peeled.restrict(&keep);
    Ok(RootGraph {
        pruned: n - root.node_count(),
        component_size: n,
        graph: root,
    })
}

/// Largest component followed by degree pruning.
pub fn root_graph(graph: &RetweetGraph, min_total_degree: u64) -> Result<RootGraph, GraphError> {
    let lcc = largest_component(graph)?;
    prune_low_degree(&graph.restrict(&lcc), min_total_degree)
}

/// Writes `source<TAB>target<TAB>weight` lines ordered by source then target.
pub fn export_edges(graph: &RetweetGraph, path: &Path) -> Result<(), GraphError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_edges(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_edges<W: Write>(graph: &RetweetGraph, out: &mut W) -> std::io::Result<()> {
    for (u, v, w) in graph.edges() {
        writeln!(out, "{}\t{}\t{}", graph.node_id(u), graph.node_id(v), w)?;
    }
    Ok(())
}

pub fn write_nodes<W: Write>(graph: &RetweetGraph, out: &mut W) -> std::io::Result<()> {
    for id in graph.nodes() {
        writeln!(out, "{id}")?;
    }
    Ok(())
}

/// Parses an edge list; lines starting with `#` are ignored. Extra
/// `nodes` (e.g. isolated authors) are added to the graph.
pub fn read_edges<R: BufRead>(input: R, nodes: &[String]) -> Result<RetweetGraph, GraphError> {
    let mut edges = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(u), Some(v), Some(w), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Parse {
                line: idx + 1,
                message: "expected 3 tab-separated fields".into(),
            });
        };
        let w: u32 = w.parse().map_err(|_| GraphError::Parse {
            line: idx + 1,
            message: format!("bad weight {w:?}"),
        })?;
        edges.push((u.to_owned(), v.to_owned(), w));
    }
    Ok(RetweetGraph::from_parts(nodes.iter().cloned(), edges))
}

pub fn read_nodes<R: BufRead>(input: R) -> Result<Vec<String>, GraphError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line);
    }
    Ok(out)
}

pub fn import_edges(path: &Path) -> Result<RetweetGraph, GraphError> {
    read_edges(BufReader::new(File::open(path)?), &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(id: usize, u: &str, v: &str) -> InteractionRecord {
        InteractionRecord {
            tweet_id: id.to_string(),
            user_id: u.into(),
            text: String::new(),
            retweet_of_user: Some(v.into()),
            timestamp: 0,
            hashtags: vec![],
            lang: None,
        }
    }

    fn clique(prefix: &str, k: usize) -> Vec<(String, String, u32)> {
        let mut e = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                e.push((format!("{prefix}{i}"), format!("{prefix}{j}"), 1));
            }
        }
        e
    }

    #[test]
    fn repeated_retweets_accumulate() {
        let g = build_graph(&[rt(1, "A", "B"), rt(2, "A", "B")]);
        assert_eq!(g.nodes(), ["A", "B"]);
        assert_eq!(g.weight("A", "B"), Some(2));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = RetweetGraph::from_parts(["A"], [("A", "A", 1)]);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn original_authors_are_isolated_nodes() {
        let mut orig = rt(3, "C", "x");
        orig.retweet_of_user = None;
        orig.text = "hello".into();
        let g = build_graph(&[rt(1, "A", "B"), orig]);
        assert_eq!(g.nodes(), ["A", "B", "C"]);
    }

    #[test]
    fn largest_component_picks_bigger_clique() {
        let mut e = clique("a", 5);
        e.extend(clique("b", 3));
        let g = RetweetGraph::from_parts(Vec::<String>::new(), e);
        let lcc = largest_component(&g).unwrap();
        let ids: Vec<_> = lcc.iter().map(|&i| g.node_id(i)).collect();
        assert_eq!(ids, ["a0", "a1", "a2", "a3", "a4"]);

        let full = RetweetGraph::from_parts(Vec::<String>::new(), clique("c", 4));
        assert_eq!(largest_component(&full).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(
            largest_component(&RetweetGraph::default()),
            Err(GraphError::EmptyGraph)
        ));
    }

    #[test]
    fn component_ties_go_to_smallest_id() {
        let mut e = clique("b", 3);
        e.extend(clique("a", 3));
        let g = RetweetGraph::from_parts(Vec::<String>::new(), e);
        let lcc = largest_component(&g).unwrap();
        assert_eq!(g.node_id(lcc[0]), "a0");
    }

    #[test]
    fn star_collapses_to_degenerate() {
        let edges: Vec<_> = (0..5).map(|i| (format!("leaf{i}"), "center".to_string(), 1)).collect();
        let g = RetweetGraph::from_parts(Vec::<String>::new(), edges);
        assert!(matches!(
            prune_low_degree(&g, 3),
            Err(GraphError::Degenerate { survivors: 0 })
        ));
    }

    #[test]
    fn clique_of_six_is_unchanged_but_too_small() {
        let g = RetweetGraph::from_parts(Vec::<String>::new(), clique("n", 6));
        assert!(g.total_degrees().iter().all(|&d| d == 5));
        assert_eq!(peel_low_degree(&g, 3), (0..6).collect::<Vec<_>>());
        // six nodes are below the scoring floor
        assert!(matches!(
            prune_low_degree(&g, 3),
            Err(GraphError::Degenerate { survivors: 6 })
        ));
        let big = RetweetGraph::from_parts(Vec::<String>::new(), clique("n", 12));
        let root = prune_low_degree(&big, 3).unwrap();
        assert_eq!(root.graph, big);
        assert_eq!(root.pruned, 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = RetweetGraph::from_parts(["solo"], [("a", "b", 3), ("b", "c", 1)]);
        let mut buf = Vec::new();
        write_edges(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a\tb\t3\nb\tc\t1\n");
        let back = read_edges(&buf[..], &["solo".to_string()]).unwrap();
        assert_eq!(back, g);
        let mut empty = Vec::new();
        write_edges(&RetweetGraph::default(), &mut empty).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn undirected_view_sums_both_directions() {
        let g = RetweetGraph::from_parts(Vec::<&str>::new(), [("a", "b", 2), ("b", "a", 1), ("b", "c", 4)]);
        let u = g.undirected();
        assert_eq!(u.edge_count(), 2);
        assert_eq!(u.neighbors(1).collect::<Vec<_>>(), vec![(0, 3.0), (2, 4.0)]);
        assert_eq!(u.total_weight(), 7.0);
    }
}
