//! Community detection on the symmetrised retweet graph.
//!
//! Partitions are scored with Newman modularity
//! `Q = Σ_c (L_c / m − (D_c / 2m)²)`, where `L_c` is the weight inside
//! community `c`, `D_c` the summed strength of its members and `m` the total
//! edge weight.

mod louvain;
mod walktrap;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UndirectedGraph;

pub use louvain::{louvain, louvain_traced, MIN_GAIN};
pub use walktrap::{walktrap, DEFAULT_WALK_LENGTH};

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} has no community")]
    UnassignedNode(String),
    #[error("clustering found a single community; there is no division to measure")]
    SingleCommunity,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    #[default]
    Louvain,
    Walktrap,
}

impl std::fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClusterMethod::Louvain => "louvain",
            ClusterMethod::Walktrap => "walktrap",
        })
    }
}

impl std::str::FromStr for ClusterMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "louvain" => Ok(ClusterMethod::Louvain),
            "walktrap" => Ok(ClusterMethod::Walktrap),
            other => Err(format!("unknown cluster method {other:?} (louvain|walktrap)")),
        }
    }
}

/// Community assignment for every node, with dense ids starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: usize,
    pub modularity: f64,
    pub method: ClusterMethod,
}

impl Partition {
    /// Relabels `labels` densely (first appearance order) and scores it.
    pub fn new(graph: &UndirectedGraph, labels: &[usize], method: ClusterMethod) -> Result<Self, CommunityError> {
        let assignment = relabel_dense(labels);
        let communities = assignment.iter().max().map_or(0, |&c| c + 1);
        let modularity = modularity(graph, &assignment)?;
        Ok(Self {
            assignment,
            communities,
            modularity,
            method,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn community_count(&self) -> usize {
        self.communities
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

pub(crate) fn relabel_dense(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Newman modularity of `assignment` (community id per node).
pub fn modularity(graph: &UndirectedGraph, assignment: &[usize]) -> Result<f64, CommunityError> {
    let n = graph.node_count();
    if assignment.len() != n {
        return Err(CommunityError::UnassignedNode(format!(
            "#{} (assignment covers {} of {n} nodes)",
            assignment.len().min(n),
            assignment.len()
        )));
    }
    let m = graph.total_weight();
    if m <= 0.0 {
        return Ok(0.0);
    }
    let k = assignment.iter().max().map_or(0, |&c| c + 1);
    let mut internal = vec![0.0; k];
    let mut strength = vec![0.0; k];
    for (u, v, w) in graph.edges() {
        let (cu, cv) = (assignment[u], assignment[v]);
        if cu == cv {
            internal[cu] += w;
        }
        strength[cu] += w;
        strength[cv] += w;
    }
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(&l, &d)| l / m - (d / (2.0 * m)).powi(2))
        .sum())
}

/// The two largest communities, as user ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipalPair {
    /// Largest community (label C1).
    pub c1_users: Vec<String>,
    /// Second largest community (label C2).
    pub c2_users: Vec<String>,
}

/// Picks the two largest communities; equal sizes are ordered by their
/// smallest member id. `node_ids` are the ids of the clustered graph, in
/// ascending order.
pub fn principal_pair(partition: &Partition, node_ids: &[String]) -> Result<PrincipalPair, CommunityError> {
    let mut members = partition.members();
    members.retain(|m| !m.is_empty());
    if members.len() < 2 {
        return Err(CommunityError::SingleCommunity);
    }
    members.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| node_ids[a[0]].cmp(&node_ids[b[0]])));
    let ids = |m: &[usize]| m.iter().map(|&i| node_ids[i].clone()).collect::<Vec<_>>();
    Ok(PrincipalPair {
        c1_users: ids(&members[0]),
        c2_users: ids(&members[1]),
    })
}

/// `user_id<TAB>community_id` lines in node order.
pub fn write_partition<W: Write>(partition: &Partition, node_ids: &[String], out: &mut W) -> std::io::Result<()> {
    for (node, &c) in partition.assignment.iter().enumerate() {
        writeln!(out, "{}\t{}", node_ids[node], c)?;
    }
    Ok(())
}

/// Reads a partition written by [`write_partition`] back onto `graph`.
pub fn read_partition<R: BufRead>(
    input: R,
    graph: &UndirectedGraph,
    node_ids: &[String],
    method: ClusterMethod,
) -> Result<Partition, CommunityError> {
    let index: std::collections::HashMap<&str, usize> =
        node_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut labels: Vec<Option<usize>> = vec![None; node_ids.len()];
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| CommunityError::Parse { line: idx + 1, message };
        let (user, c) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected user<TAB>community".into()))?;
        let c: usize = c.parse().map_err(|_| parse_err(format!("bad community id {c:?}")))?;
        let &node = index
            .get(user)
            .ok_or_else(|| parse_err(format!("user {user:?} is not in the graph")))?;
        labels[node] = Some(c);
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| CommunityError::UnassignedNode(node_ids[i].clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Partition::new(graph, &labels, method)
}

/// Runs the chosen method. Walktrap ignores `seed`.
pub fn cluster(graph: &UndirectedGraph, method: ClusterMethod, seed: u64) -> Result<Partition, CommunityError> {
    match method {
        ClusterMethod::Louvain => louvain(graph, seed),
        ClusterMethod::Walktrap => walktrap(graph, DEFAULT_WALK_LENGTH),
    }
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use crate::graph::UndirectedGraph;

    /// Two 5-cliques (nodes 0-4 and 5-9) joined by the edge 4-5.
    pub fn two_cliques() -> UndirectedGraph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((4, 5, 1.0));
        UndirectedGraph::from_edges(10, edges)
    }

    pub fn complete(n: usize) -> UndirectedGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        UndirectedGraph::from_edges(n, edges)
    }
}
