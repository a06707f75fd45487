//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the code under test except to read graph
//! structure.

#![allow(dead_code, clippy::needless_range_loop)]

use polarimeter::graph::UndirectedGraph;
use rand::Rng;

/// Dense symmetric adjacency matrix.
pub fn adjacency(graph: &UndirectedGraph) -> Vec<Vec<f64>> {
    let n = graph.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (j, w) in graph.neighbors(i) {
            a[i][j] = w;
        }
    }
    a
}

/// Connected graph on `n` nodes: a random spanning tree plus each remaining
/// pair with probability `p`; integer weights in 1..=max_w.
pub fn random_connected(rng: &mut impl Rng, n: usize, p: f64, max_w: u32) -> UndirectedGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, rng.gen_range(1..=max_w) as f64));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.gen_range(1..=max_w) as f64));
            }
        }
    }
    UndirectedGraph::from_edges(n, edges)
}

/// Planted partition: groups of the given sizes, edge probability `p_in`
/// inside a group and `p_out` across. Returns the graph and the planted
/// labels.
pub fn planted(rng: &mut impl Rng, sizes: &[usize], p_in: f64, p_out: f64) -> (UndirectedGraph, Vec<usize>) {
    let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| vec![g; s]).collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    (UndirectedGraph::from_edges(n, edges), labels)
}

/// `Q = 1/(2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)` by a double loop.
pub fn brute_modularity(graph: &UndirectedGraph, labels: &[usize]) -> f64 {
    let a = adjacency(graph);
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Solves the harmonic system `s_i x_i − Σ_j w_ij x_j = 0` for free nodes
/// with seeds fixed, by Gaussian elimination with partial pivoting. Every
/// free node must be connected to some seed.
pub fn harmonic_solve(graph: &UndirectedGraph, seeds: &[(usize, f64)]) -> Vec<f64> {
    let a = adjacency(graph);
    let n = a.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(i, v) in seeds {
        fixed[i] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let pos: std::collections::HashMap<usize, usize> = free.iter().enumerate().map(|(r, &i)| (i, r)).collect();
    let f = free.len();
    let mut m = vec![vec![0.0; f + 1]; f];
    for (r, &i) in free.iter().enumerate() {
        for j in 0..n {
            if a[i][j] == 0.0 {
                continue;
            }
            m[r][r] += a[i][j];
            match fixed[j] {
                Some(v) => m[r][f] += a[i][j] * v,
                None => m[r][pos[&j]] -= a[i][j],
            }
        }
    }
    for col in 0..f {
        let pivot = (col..f)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        assert!(m[col][col].abs() > 1e-12, "singular harmonic system");
        for row in 0..f {
            if row != col {
                let factor = m[row][col] / m[col][col];
                if factor != 0.0 {
                    for c in col..=f {
                        m[row][c] -= factor * m[col][c];
                    }
                }
            }
        }
    }
    let mut x: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    for (r, &i) in free.iter().enumerate() {
        x[i] = m[r][f] / m[r][r];
    }
    x
}

/// Exact maximum modularity over partitions into at most `k_max`
/// communities, by branch and bound. `incumbent` must be the modularity of
/// some feasible partition (it only prunes).
pub fn exhaustive_max_modularity(graph: &UndirectedGraph, k_max: usize, incumbent: f64) -> f64 {
    let a = adjacency(graph);
    let n = a.len();
    let deg: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = deg.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    // Order nodes so each one is strongly tied to those before it.
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut tie = vec![0.0f64; n];
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !placed[i])
            .max_by(|&x, &y| tie[x].total_cmp(&tie[y]).then(deg[x].total_cmp(&deg[y])))
            .unwrap();
        placed[next] = true;
        order.push(next);
        for j in 0..n {
            tie[j] += a[next][j];
        }
    }
    let mut search = Search {
        a: &a,
        deg: &deg,
        two_m,
        order,
        k_max,
        label: vec![usize::MAX; n],
        comm_deg: vec![0.0; k_max],
        best: incumbent - 1e-9,
    };
    search.descend(0, 0, 0.0);
    search.best
}

struct Search<'a> {
    a: &'a [Vec<f64>],
    deg: &'a [f64],
    two_m: f64,
    order: Vec<usize>,
    k_max: usize,
    label: Vec<usize>,
    comm_deg: Vec<f64>,
    best: f64,
}

impl Search<'_> {
    /// `internal` is twice the weight of edges inside communities so far.
    fn descend(&mut self, depth: usize, used: usize, internal: f64) {
        let n = self.order.len();
        if depth == n {
            let penalty: f64 = self.comm_deg.iter().map(|d| d * d).sum::<f64>() / self.two_m;
            let q = (internal - penalty) / self.two_m;
            if q > self.best {
                self.best = q;
            }
            return;
        }
        if self.upper_bound(depth, used, internal) <= self.best {
            return;
        }
        let node = self.order[depth];
        let choices = (used + 1).min(self.k_max);
        for c in 0..choices {
            let gain: f64 = self.order[..depth]
                .iter()
                .filter(|&&j| self.label[j] == c)
                .map(|&j| 2.0 * self.a[node][j])
                .sum();
            self.label[node] = c;
            self.comm_deg[c] += self.deg[node];
            self.descend(depth + 1, used.max(c + 1), internal + gain);
            self.comm_deg[c] -= self.deg[node];
            self.label[node] = usize::MAX;
        }
    }

    fn upper_bound(&self, depth: usize, used: usize, internal: f64) -> f64 {
        let rest = &self.order[depth..];
        let mut extra = 0.0;
        let mut remaining_deg = 0.0;
        for (idx, &u) in rest.iter().enumerate() {
            remaining_deg += self.deg[u];
            // Edges among unassigned nodes may all end up internal.
            for &v in &rest[idx + 1..] {
                extra += 2.0 * self.a[u][v];
            }
            // Edges to assigned nodes: only one community can be joined.
            let mut to_comm = vec![0.0; self.k_max];
            for &j in &self.order[..depth] {
                to_comm[self.label[j]] += self.a[u][j];
            }
            let best = if used < self.k_max {
                to_comm.iter().copied().fold(0.0, f64::max)
            } else {
                to_comm[..used].iter().copied().fold(0.0, f64::max)
            };
            extra += 2.0 * best;
        }
        // Smallest possible Σ D_c² when the remaining degree is split freely.
        let penalty = water_fill(&self.comm_deg, remaining_deg) / self.two_m;
        (internal + extra - penalty) / self.two_m
    }
}

/// `min Σ (d_c + x_c)²` over `x_c ≥ 0`, `Σ x_c = total`.
fn water_fill(levels: &[f64], total: f64) -> f64 {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut level = sorted[0];
    let mut left = total;
    let mut k = 1;
    while k < sorted.len() && left > 0.0 {
        let need = (sorted[k] - level) * k as f64;
        if need >= left {
            break;
        }
        left -= need;
        level = sorted[k];
        k += 1;
    }
    level += left / k as f64;
    sorted
        .iter()
        .map(|&d| {
            let v = d.max(level);
            v * v
        })
        .sum()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Central finite-difference check of a scalar function of `f32`
/// parameters. Returns the worst relative error against `analytic`, with
/// magnitudes below `floor` treated as `floor`.
pub fn worst_relative_error(analytic: f64, plus: f64, minus: f64, step: f64, floor: f64) -> f64 {
    let numeric = (plus - minus) / step;
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}
