//! Unweighted shortest-path machinery shared by the readout and the baselines.

use std::collections::VecDeque;

use crate::multiplex::LayerGraph;

/// Read-only undirected adjacency.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn neighbors(&self, v: usize) -> &[usize];
}

impl Adjacency for LayerGraph {
    fn node_count(&self) -> usize {
        LayerGraph::node_count(self)
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        LayerGraph::neighbors(self, v)
    }
}

impl Adjacency for [Vec<usize>] {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self[v]
    }
}

impl Adjacency for Vec<Vec<usize>> {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self[v]
    }
}

/// Hop distances from `source`; `None` for unreachable nodes.
pub fn bfs_distances<G: Adjacency + ?Sized>(g: &G, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &w in g.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// BFS from one source: visit order, shortest-path counts and predecessor lists.
struct ShortestPathDag {
    order: Vec<usize>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
}

fn shortest_path_dag<G: Adjacency + ?Sized>(g: &G, source: usize) -> ShortestPathDag {
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    dist[source] = 0;
    sigma[source] = 1.0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[u] + 1 {
                sigma[w] += sigma[u];
                preds[w].push(u);
            }
        }
    }
    ShortestPathDag {
        order,
        sigma,
        preds,
    }
}

/// For every node, the number of shortest paths between unordered pairs of
/// other nodes that pass through it, counting every shortest path of a pair
/// (not divided by the pair's path count).
///
/// From each source `s`, `tail(v)` counts DAG paths that leave `v` toward any
/// deeper target; `sigma(s, v) * tail(v)` is then the number of `s`-rooted
/// shortest paths with `v` strictly inside. Each pair is seen from both ends.
pub fn shortest_path_counts<G: Adjacency + ?Sized>(g: &G) -> Vec<u64> {
    let n = g.node_count();
    let mut through = vec![0u128; n];
    for s in 0..n {
        let dag = shortest_path_dag(g, s);
        let mut tail = vec![0u128; n];
        for &w in dag.order.iter().rev() {
            for &v in &dag.preds[w] {
                tail[v] += 1 + tail[w];
            }
            if w != s {
                through[w] += dag.sigma[w] as u128 * tail[w];
            }
        }
    }
    through
        .into_iter()
        .map(|x| u64::try_from(x / 2).unwrap_or(u64::MAX))
        .collect()
}

/// Brandes betweenness for undirected graphs, unnormalized, each unordered
/// pair counted once.
pub fn betweenness<G: Adjacency + ?Sized>(g: &G) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0; n];
    for s in 0..n {
        let dag = shortest_path_dag(g, s);
        let mut delta = vec![0.0f64; n];
        for &w in dag.order.iter().rev() {
            for &v in &dag.preds[w] {
                delta[v] += dag.sigma[v] / dag.sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    centrality.iter_mut().for_each(|c| *c /= 2.0);
    centrality
}

/// Harmonic closeness: sum of reciprocal distances to every other reachable node.
pub fn harmonic_closeness<G: Adjacency + ?Sized>(g: &G) -> Vec<f64> {
    (0..g.node_count())
        .map(|s| {
            bfs_distances(g, s)
                .iter()
                .filter_map(|d| d.filter(|&d| d > 0).map(|d| 1.0 / d as f64))
                .sum()
        })
        .collect()
}

/// Core number of every node (bucket peeling).
pub fn core_numbers<G: Adjacency + ?Sized>(g: &G) -> Vec<usize> {
    let n = g.node_count();
    let mut degree: Vec<usize> = (0..n).map(|v| g.neighbors(v).len()).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut bins = vec![0usize; max_deg + 1];
    for &d in &degree {
        bins[d] += 1;
    }
    let mut start = 0;
    for bin in bins.iter_mut() {
        let count = *bin;
        *bin = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bins[degree[v]];
        vert[pos[v]] = v;
        bins[degree[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bins[d] = bins[d - 1];
    }
    if max_deg > 0 || n > 0 {
        bins[0] = 0;
    }
    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bins[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bins[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    degree
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); n];
        for &(u, v) in edges {
            a[u].push(v);
            a[v].push(u);
        }
        a
    }

    #[test]
    fn path_counts() {
        assert_eq!(
            shortest_path_counts(&adj(3, &[(0, 1), (1, 2)])),
            vec![0, 1, 0]
        );
    }

    #[test]
    fn star_counts() {
        let g = adj(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(shortest_path_counts(&g), vec![3, 0, 0, 0]);
    }

    #[test]
    fn four_cycle_counts() {
        let g = adj(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(shortest_path_counts(&g), vec![1, 1, 1, 1]);
        // Brandes divides each pair's contribution by its path count
        assert_eq!(betweenness(&g), vec![0.5; 4]);
    }

    #[test]
    fn disconnected_and_trivial() {
        assert_eq!(shortest_path_counts(&adj(1, &[])), vec![0]);
        assert_eq!(shortest_path_counts(&adj(4, &[(0, 1), (2, 3)])), vec![0; 4]);
    }

    #[test]
    fn closeness_and_cores() {
        let g = adj(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]);
        let c = harmonic_closeness(&g);
        assert_eq!(c[2], 3.0);
        assert_eq!(c[3], 1.0 + 0.5 + 0.5);
        assert_eq!(core_numbers(&g), vec![2, 2, 2, 1]);
        assert_eq!(core_numbers(&adj(3, &[])), vec![0, 0, 0]);
    }
}
