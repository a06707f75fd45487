//! Walktrap: agglomerative clustering by random-walk distance.
//!
//! Every vertex gets a self-loop (weight = mean incident weight, 1 for
//! isolated vertices). Communities `C` carry the distribution `P^t_C` of a
//! `t`-step walk started uniformly inside `C`, stored pre-scaled by
//! `d(k)^-1/2` so the walk distance is a plain Euclidean norm. Adjacent
//! communities with the smallest
//! `Δσ = (1/n) · |C1||C2| / (|C1| + |C2|) · r²(C1, C2)` are merged first; the
//! cut of the merge sequence with the highest modularity is returned.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use super::{ClusterMethod, CommunityError, Partition};
use crate::graph::UndirectedGraph;

pub const DEFAULT_WALK_LENGTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    delta_sigma: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.delta_sigma
            .total_cmp(&other.delta_sigma)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

struct Community {
    size: usize,
    walk: Vec<f64>,
    /// neighbour community -> (Δσ, connecting edge weight)
    neighbors: BTreeMap<usize, (f64, f64)>,
    strength: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Walk distributions `P^t_i / sqrt(d)` for every vertex.
fn vertex_walks(graph: &UndirectedGraph, walk_length: usize) -> Vec<Vec<f64>> {
    let n = graph.node_count();
    let loops: Vec<f64> = (0..n)
        .map(|i| match graph.degree(i) {
            0 => 1.0,
            d => graph.strength(i) / d as f64,
        })
        .collect();
    let degree: Vec<f64> = (0..n).map(|i| graph.strength(i) + loops[i]).collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| d.sqrt().recip()).collect();
    let mut next = vec![0.0; n];
    (0..n)
        .map(|start| {
            let mut cur = vec![0.0; n];
            cur[start] = 1.0;
            let mut support = vec![start];
            let mut in_support = vec![false; n];
            in_support[start] = true;
            for _ in 0..walk_length {
                let mut grown = support.clone();
                for &j in &support {
                    let p = cur[j];
                    if p == 0.0 {
                        continue;
                    }
                    let scale = p / degree[j];
                    next[j] += scale * loops[j];
                    for (k, w) in graph.neighbors(j) {
                        next[k] += scale * w;
                        if !in_support[k] {
                            in_support[k] = true;
                            grown.push(k);
                        }
                    }
                }
                for &j in &grown {
                    cur[j] = next[j];
                    next[j] = 0.0;
                }
                support = grown;
            }
            for (x, s) in cur.iter_mut().zip(&inv_sqrt) {
                *x *= s;
            }
            cur
        })
        .collect()
}

/// Walktrap clustering with walks of `walk_length` steps. Deterministic.
pub fn walktrap(graph: &UndirectedGraph, walk_length: usize) -> Result<Partition, CommunityError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    let m = graph.total_weight();
    let walks = vertex_walks(graph, walk_length);
    let inv_n = 1.0 / n as f64;

    let mut communities: Vec<Option<Community>> = Vec::with_capacity(2 * n);
    let mut heap = BinaryHeap::new();
    for (i, walk) in walks.into_iter().enumerate() {
        communities.push(Some(Community {
            size: 1,
            walk,
            neighbors: BTreeMap::new(),
            strength: graph.strength(i),
        }));
    }
    for (u, v, w) in graph.edges() {
        let ds = {
            let cu = communities[u].as_ref().expect("live");
            let cv = communities[v].as_ref().expect("live");
            0.5 * inv_n * squared_distance(&cu.walk, &cv.walk)
        };
        communities[u].as_mut().expect("live").neighbors.insert(v, (ds, w));
        communities[v].as_mut().expect("live").neighbors.insert(u, (ds, w));
        heap.push(Reverse(Candidate {
            delta_sigma: ds,
            a: u,
            b: v,
        }));
    }

    let mut q = if m > 0.0 {
        -(0..n).map(|i| (graph.strength(i) / (2.0 * m)).powi(2)).sum::<f64>()
    } else {
        0.0
    };
    let mut best_q = q;
    let mut best_step = 0usize;
    let mut merges: Vec<(usize, usize)> = Vec::new();

    while let Some(Reverse(cand)) = heap.pop() {
        let Candidate { delta_sigma, a, b } = cand;
        let current = match (&communities[a], &communities[b]) {
            (Some(ca), Some(_)) => ca.neighbors.get(&b).map(|&(ds, _)| ds),
            _ => None,
        };
        if current != Some(delta_sigma) {
            continue;
        }
        let ca = communities[a].take().expect("live");
        let cb = communities[b].take().expect("live");
        let new_id = communities.len();
        let (sa, sb) = (ca.size as f64, cb.size as f64);
        let size = ca.size + cb.size;
        let s_new = size as f64;
        let walk: Vec<f64> = ca
            .walk
            .iter()
            .zip(&cb.walk)
            .map(|(x, y)| (sa * x + sb * y) / s_new)
            .collect();

        let w_ab = ca.neighbors[&b].1;
        if m > 0.0 {
            q += w_ab / m - ca.strength * cb.strength / (2.0 * m * m);
        }
        merges.push((a, b));
        if q > best_q {
            best_q = q;
            best_step = merges.len();
        }

        let mut neighbors = BTreeMap::new();
        let keys: Vec<usize> = ca
            .neighbors
            .keys()
            .chain(cb.neighbors.keys())
            .copied()
            .filter(|&c| c != a && c != b)
            .collect();
        for c in keys {
            if neighbors.contains_key(&c) {
                continue;
            }
            let other = communities[c].as_mut().expect("neighbour is live");
            let sc = other.size as f64;
            let via_a = ca.neighbors.get(&c).copied();
            let via_b = cb.neighbors.get(&c).copied();
            let weight = via_a.map_or(0.0, |x| x.1) + via_b.map_or(0.0, |x| x.1);
            let ds = match (via_a, via_b) {
                (Some((da, _)), Some((db, _))) => ((sa + sc) * da + (sb + sc) * db - sc * delta_sigma) / (sa + sb + sc),
                _ => inv_n * s_new * sc / (s_new + sc) * squared_distance(&walk, &other.walk),
            };
            other.neighbors.remove(&a);
            other.neighbors.remove(&b);
            other.neighbors.insert(new_id, (ds, weight));
            neighbors.insert(c, (ds, weight));
            heap.push(Reverse(Candidate {
                delta_sigma: ds,
                a: c.min(new_id),
                b: c.max(new_id),
            }));
        }
        communities.push(Some(Community {
            size,
            walk,
            neighbors,
            strength: ca.strength + cb.strength,
        }));
    }

    // replay the best prefix of the merge sequence
    let mut parent: Vec<usize> = (0..n + merges.len()).collect();
    for (step, &(a, b)) in merges.iter().take(best_step).enumerate() {
        parent[a] = n + step;
        parent[b] = n + step;
    }
    let labels: Vec<usize> = (0..n)
        .map(|mut x| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        })
        .collect();
    Partition::new(graph, &labels, ClusterMethod::Walktrap)
}
