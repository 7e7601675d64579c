//! Brute-force reference implementations shared by the integration suites.
//! Everything here is deliberately naive: exhaustive enumeration, no reuse of
//! the library's own graph routines.

#![allow(dead_code)]

use std::collections::VecDeque;

use infmde::diffusion::{estimate_influence_stats, DiffusionConfig, DiffusionModel};
use infmde::MultilayerNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod gradient;

/// Undirected simple graph as a sorted adjacency list.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v && !adj[u].contains(&v) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    adj
}

/// Erdős–Rényi style edge list with edge probability `p`.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

pub fn is_connected(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Union of all layer edge sets, from the raw layer graphs.
pub fn union_adjacency(net: &MultilayerNetwork) -> Vec<Vec<usize>> {
    let edges: Vec<(usize, usize)> = net.layers().iter().flat_map(|l| l.edges()).collect();
    adjacency(net.node_count(), &edges)
}

/// Every simple path from `s` to `t`, found by depth-first search.
pub fn simple_paths(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(
        adj: &[Vec<usize>],
        t: usize,
        path: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        if v == t {
            out.push(path.clone());
            return;
        }
        for &u in &adj[v] {
            if !on[u] {
                on[u] = true;
                path.push(u);
                walk(adj, t, path, on, out);
                path.pop();
                on[u] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; adj.len()];
    on[s] = true;
    walk(adj, t, &mut vec![s], &mut on, &mut out);
    out
}

/// Shortest `s`-`t` paths: the minimum-length simple paths.
pub fn shortest_paths(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let all = simple_paths(adj, s, t);
    let Some(best) = all.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    all.into_iter().filter(|p| p.len() == best).collect()
}

/// Interior-vertex shortest-path counts over unordered pairs.
pub fn brute_path_counts(adj: &[Vec<usize>]) -> Vec<u64> {
    let n = adj.len();
    let mut count = vec![0u64; n];
    for s in 0..n {
        for t in s + 1..n {
            for p in shortest_paths(adj, s, t) {
                for &v in &p[1..p.len() - 1] {
                    count[v] += 1;
                }
            }
        }
    }
    count
}

/// Betweenness as the sum over unordered pairs of the fraction of shortest
/// paths through each vertex.
pub fn brute_betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = shortest_paths(adj, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / total;
                }
            }
        }
    }
    bc
}

/// All-pairs hop distances by Floyd–Warshall; `None` when unreachable.
pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut d = vec![vec![None; n]; n];
    for v in 0..n {
        d[v][v] = Some(0);
        for &u in &adj[v] {
            d[v][u] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub fn brute_harmonic(adj: &[Vec<usize>]) -> Vec<f64> {
    floyd_warshall(adj)
        .iter()
        .map(|row| {
            row.iter()
                .flatten()
                .filter(|&&d| d > 0)
                .map(|&d| 1.0 / d as f64)
                .sum()
        })
        .collect()
}

/// Core number as the largest `k` whose `k`-core (repeated deletion of
/// vertices with fewer than `k` surviving neighbours) contains the vertex.
pub fn brute_core_numbers(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut core = vec![0; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let drop: Vec<usize> = (0..n)
                .filter(|&v| alive[v] && adj[v].iter().filter(|&&u| alive[u]).count() < k)
                .collect();
            if drop.is_empty() {
                break;
            }
            drop.into_iter().for_each(|v| alive[v] = false);
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

/// Nodes of a directed graph on `(layer, node)` copies reachable from the
/// seeds' copies in every layer; returns the number of distinct nodes hit.
fn reach_count(
    layers: usize,
    n: usize,
    seeds: &[usize],
    arcs: &[((usize, usize), (usize, usize))],
) -> usize {
    let mut out = vec![Vec::new(); layers * n];
    for &((la, a), (lb, b)) in arcs {
        out[la * n + a].push(lb * n + b);
    }
    let mut seen = vec![false; layers * n];
    let mut queue = VecDeque::new();
    for &s in seeds {
        for l in 0..layers {
            if !seen[l * n + s] {
                seen[l * n + s] = true;
                queue.push_back(l * n + s);
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        for &y in &out[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    (0..n)
        .filter(|&v| (0..layers).any(|l| seen[l * n + v]))
        .count()
}

type Arc = ((usize, usize), (usize, usize));

/// One independent random arc of the live-edge representation.
struct Coin {
    arc: Arc,
    p: f64,
}

/// Cross-layer arcs `(src, v) -> (dst, v)` for every non-seed node.
fn cross_coins(
    net: &MultilayerNetwork,
    seeds: &[usize],
    theta: &[f64],
    fixed: &mut Vec<Arc>,
    coins: &mut Vec<Coin>,
) {
    let layers = net.layer_count();
    for v in (0..net.node_count()).filter(|v| !seeds.contains(v)) {
        for src in 0..layers {
            for dst in (0..layers).filter(|&d| d != src) {
                let arc = ((src, v), (dst, v));
                match theta[src] {
                    t if t >= 1.0 => fixed.push(arc),
                    t if t > 0.0 => coins.push(Coin { arc, p: t }),
                    _ => {}
                }
            }
        }
    }
}

fn ic_coins(
    net: &MultilayerNetwork,
    seeds: &[usize],
    probs: &[f64],
    theta: &[f64],
) -> (Vec<Arc>, Vec<Coin>) {
    let mut fixed = Vec::new();
    let mut coins = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        for (u, w) in layer.edges() {
            for (a, b) in [(u, w), (w, u)] {
                if seeds.contains(&b) {
                    continue;
                }
                let arc = ((l, a), (l, b));
                match probs[l] {
                    p if p >= 1.0 => fixed.push(arc),
                    p if p > 0.0 => coins.push(Coin { arc, p }),
                    _ => {}
                }
            }
        }
    }
    cross_coins(net, seeds, theta, &mut fixed, &mut coins);
    (fixed, coins)
}

/// Number of independent binary events an IC/SIR(γ=1) enumeration needs.
pub fn ic_bits(net: &MultilayerNetwork, seeds: &[usize], probs: &[f64], theta: &[f64]) -> usize {
    ic_coins(net, seeds, probs, theta).1.len()
}

/// Exact expected spread of Multi-IC by enumerating every live-arc world.
/// SIR with recovery probability one is the same process with `probs = beta`.
pub fn exact_ic(net: &MultilayerNetwork, seeds: &[usize], probs: &[f64], theta: &[f64]) -> f64 {
    let (fixed, coins) = ic_coins(net, seeds, probs, theta);
    assert!(coins.len() <= 20, "too many coins to enumerate");
    let mut expected = 0.0;
    for mask in 0u32..(1 << coins.len()) {
        let mut weight = 1.0;
        let mut arcs = fixed.clone();
        for (i, c) in coins.iter().enumerate() {
            if mask >> i & 1 == 1 {
                weight *= c.p;
                arcs.push(c.arc);
            } else {
                weight *= 1.0 - c.p;
            }
        }
        expected += weight * reach_count(net.layer_count(), net.node_count(), seeds, &arcs) as f64;
    }
    expected
}

/// Size of the Multi-LT world space: every non-seed copy with neighbours
/// picks one in-neighbour, and every cross-layer coin is flipped.
pub fn lt_outcomes(net: &MultilayerNetwork, seeds: &[usize], theta: &[f64]) -> f64 {
    let mut fixed = Vec::new();
    let mut coins = Vec::new();
    cross_coins(net, seeds, theta, &mut fixed, &mut coins);
    let picks: f64 = net
        .layers()
        .iter()
        .flat_map(|l| {
            (0..net.node_count())
                .filter(|v| !seeds.contains(v))
                .map(move |v| l.degree(v).max(1) as f64)
        })
        .product();
    picks * 2f64.powi(coins.len() as i32)
}

/// Exact expected spread of Multi-LT with `1/deg` weights and uniform
/// thresholds, through its live-edge form: each non-seed copy keeps exactly
/// one uniformly chosen in-arc.
pub fn exact_lt(net: &MultilayerNetwork, seeds: &[usize], theta: &[f64]) -> f64 {
    let mut fixed = Vec::new();
    let mut coins = Vec::new();
    cross_coins(net, seeds, theta, &mut fixed, &mut coins);
    let choosers: Vec<(usize, usize, Vec<usize>)> = net
        .layers()
        .iter()
        .enumerate()
        .flat_map(|(l, layer)| {
            (0..net.node_count())
                .filter(|v| !seeds.contains(v) && layer.degree(*v) > 0)
                .map(move |v| (l, v, layer.neighbors(v).to_vec()))
        })
        .collect();
    let mut expected = 0.0;
    let mut choice = vec![0usize; choosers.len()];
    loop {
        let mut base = fixed.clone();
        let mut weight = 1.0;
        for (c, (l, v, nbrs)) in choosers.iter().enumerate() {
            base.push(((*l, nbrs[choice[c]]), (*l, *v)));
            weight /= nbrs.len() as f64;
        }
        for mask in 0u32..(1 << coins.len()) {
            let mut w = weight;
            let mut arcs = base.clone();
            for (i, c) in coins.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    w *= c.p;
                    arcs.push(c.arc);
                } else {
                    w *= 1.0 - c.p;
                }
            }
            expected += w * reach_count(net.layer_count(), net.node_count(), seeds, &arcs) as f64;
        }
        // odometer over neighbour choices
        let mut i = 0;
        loop {
            if i == choosers.len() {
                return expected;
            }
            choice[i] += 1;
            if choice[i] < choosers[i].2.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

pub const MAX_BITS: f64 = 12.0;

pub struct Case {
    pub net: MultilayerNetwork,
    pub seeds: Vec<usize>,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Small random multiplex instances whose IC and LT world spaces both fit in
/// `MAX_BITS` binary events.
pub fn small_cases(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    while cases.len() < count {
        let n = rng.random_range(3..=6);
        let layers = rng.random_range(1..=3);
        let edges: Vec<Vec<(usize, usize)>> = (0..layers)
            .map(|_| random_edges(&mut rng, n, 0.45))
            .collect();
        let net = MultilayerNetwork::from_layer_edges(n, &edges).unwrap();
        let seeds = vec![rng.random_range(0..n)];
        let p: Vec<f64> = (0..layers).map(|_| rng.random_range(0.1..0.9)).collect();
        let theta: Vec<f64> = (0..layers)
            .map(|_| [0.0, 0.35, 0.8, 1.0][rng.random_range(0..4)])
            .collect();
        let bits = ic_bits(&net, &seeds, &p, &theta) as f64;
        if bits == 0.0 || bits > MAX_BITS || lt_outcomes(&net, &seeds, &theta).log2() > MAX_BITS {
            continue;
        }
        cases.push(Case {
            net,
            seeds,
            p,
            theta,
        });
    }
    cases
}

/// Monte-Carlo mean, its standard error, and the exact expectation.
pub fn mc_against_exact(
    case: &Case,
    model: DiffusionModel,
    runs: usize,
    master: u64,
) -> (f64, f64, f64) {
    let layers = case.net.layer_count();
    let mut cfg = DiffusionConfig::uniform(layers, 0.0, 0.0, 1.0, 0.0, runs);
    cfg.theta = case.theta.clone();
    let exact = match model {
        DiffusionModel::Ic => {
            cfg.per_layer_p = case.p.clone();
            exact_ic(&case.net, &case.seeds, &case.p, &case.theta)
        }
        DiffusionModel::Sir => {
            cfg.per_layer_beta = case.p.clone();
            exact_ic(&case.net, &case.seeds, &case.p, &case.theta)
        }
        DiffusionModel::Lt => exact_lt(&case.net, &case.seeds, &case.theta),
    };
    let est = estimate_influence_stats(&case.net, &case.seeds, model, &cfg, master).unwrap();
    (est.mean, est.std_error, exact)
}
