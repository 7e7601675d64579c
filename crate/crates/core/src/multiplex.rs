//! Multi-layer network data model, edge-list ingestion and per-layer statistics.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense node index, shared by every layer.
pub type NodeId = usize;

/// One undirected relation over the shared node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerGraph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl LayerGraph {
    /// Build a layer from an edge iterator. Self-loops and duplicates are
    /// dropped; the returned counts say how many of each were seen.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Self, DropCounts)>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        let mut drops = DropCounts::default();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                drops.self_loops += 1;
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut half_edges = 0;
        for list in &mut adjacency {
            let before = list.len();
            list.sort_unstable();
            list.dedup();
            drops.duplicates += before - list.len();
            half_edges += list.len();
        }
        // every duplicate edge was counted once from each endpoint
        drops.duplicates /= 2;
        Ok((
            Self {
                adjacency,
                edge_count: half_edges / 2,
            },
            drops,
        ))
    }

    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.self_loops + self.duplicates
    }
}

/// Node-aligned multiplex: `layers[i]` is relation `i + 1` of the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilayerNetwork {
    n: usize,
    layers: Vec<LayerGraph>,
}

impl MultilayerNetwork {
    pub fn new(layers: Vec<LayerGraph>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::invalid("a network needs at least one layer"));
        };
        let n = first.node_count();
        if layers.iter().any(|l| l.node_count() != n) {
            return Err(Error::invalid("layers disagree on node count"));
        }
        Ok(Self { n, layers })
    }

    /// Convenience constructor from per-layer edge lists. Invalid edges are
    /// rejected; loops and duplicates are silently dropped.
    pub fn from_layer_edges(n: usize, layers: &[Vec<(NodeId, NodeId)>]) -> Result<Self> {
        let layers = layers
            .iter()
            .map(|edges| LayerGraph::from_edges(n, edges.iter().copied()).map(|(g, _)| g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerGraph] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &LayerGraph {
        &self.layers[i]
    }

    /// Average degree and infection threshold of one layer.
    pub fn layer_stats(&self, layer: usize) -> Result<LayerStats> {
        let graph = self.layers.get(layer).ok_or_else(|| {
            Error::invalid(format!(
                "layer index {layer} out of range for {} layers",
                self.layers.len()
            ))
        })?;
        Ok(LayerStats::from_counts(self.n, graph.edge_count()))
    }

    pub fn all_layer_stats(&self) -> Vec<LayerStats> {
        self.layers
            .iter()
            .map(|g| LayerStats::from_counts(self.n, g.edge_count()))
            .collect()
    }

    /// Union of all layers' edge sets.
    pub fn flatten(&self) -> LayerGraph {
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); self.n];
        for layer in &self.layers {
            for (v, list) in layer.adjacency.iter().enumerate() {
                adjacency[v].extend_from_slice(list);
            }
        }
        let mut half_edges = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            half_edges += list.len();
        }
        LayerGraph {
            adjacency,
            edge_count: half_edges / 2,
        }
    }

    /// Serialize in the multiplex edge-list format (dense ids, 1-based layers).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (u, v) in layer.edges() {
                let _ = writeln!(out, "{} {} {}", i + 1, u, v);
            }
        }
        out
    }

    /// Serialized form with a `# nodes=N` header so trailing isolated nodes survive a reload.
    pub fn to_edge_list_with_header(&self) -> String {
        format!(
            "# nodes={} layers={}\n{}",
            self.n,
            self.layers.len(),
            self.to_edge_list()
        )
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_edge_list_with_header().as_bytes())?;
        Ok(())
    }
}

/// Average degree `2m/n` and critical infection threshold `1 / avg_degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStats {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
    /// `None` when the layer has no edges.
    pub infection_threshold: Option<f64>,
}

impl LayerStats {
    pub fn from_counts(nodes: usize, edges: usize) -> Self {
        let avg_degree = if nodes == 0 {
            0.0
        } else {
            2.0 * edges as f64 / nodes as f64
        };
        let infection_threshold = (avg_degree > 0.0).then(|| 1.0 / avg_degree);
        Self {
            nodes,
            edges,
            avg_degree,
            infection_threshold,
        }
    }
}

/// Mapping between identifiers found in the input file and dense node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    originals: Vec<String>,
}

impl IdMap {
    /// Original identifier of a dense id, if the node came from the file.
    pub fn original(&self, dense: NodeId) -> Option<&str> {
        self.originals.get(dense).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }

    /// CSV sidecar `original_id,dense_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("original_id,dense_id\n");
        for (dense, original) in self.originals.iter().enumerate() {
            let _ = writeln!(out, "{original},{dense}");
        }
        out
    }
}

/// Result of reading an edge-list file.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: MultilayerNetwork,
    pub id_map: IdMap,
    pub dropped: DropCounts,
}

/// Read a multiplex edge list from disk. See [`parse_edge_list`].
pub fn load_edge_list(path: &Path, n_hint: Option<usize>) -> Result<LoadedNetwork> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, n_hint)
}

/// Parse `layer src dst [ignored...]` lines.
///
/// When every node token is an integer the dense ids follow numeric order,
/// so files that already use `0..n` keep their ids; otherwise ids are handed
/// out in order of first appearance. `n_hint` pads the node set with
/// isolated nodes when it exceeds the number of distinct ids.
pub fn parse_edge_list(text: &str, n_hint: Option<usize>) -> Result<LoadedNetwork> {
    let mut raw: Vec<(usize, &str, &str)> = Vec::new();
    let mut header_nodes = None;
    let mut header_layers = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            // header written by `write_edge_list`
            for field in comment.split_whitespace() {
                if let Some(v) = field.strip_prefix("nodes=") {
                    header_nodes = v.parse::<usize>().ok();
                } else if let Some(v) = field.strip_prefix("layers=") {
                    header_layers = v.parse::<usize>().ok();
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(layer), Some(src), Some(dst)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `layer src dst`, got {trimmed:?}"),
            });
        };
        let layer: usize = layer.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("layer id {layer:?} is not a positive integer"),
        })?;
        if layer == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "layer ids are 1-based".into(),
            });
        }
        raw.push((layer, src, dst));
    }
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }

    let max_layer = raw.iter().map(|r| r.0).max().unwrap_or(0);
    let layer_count = max_layer.max(header_layers.unwrap_or(0));
    // a header that declares the layer count allows explicitly empty layers
    if header_layers.is_none() {
        let mut present = vec![false; layer_count];
        for r in &raw {
            present[r.0 - 1] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::LayerGap {
                missing: missing + 1,
            });
        }
    }

    let numeric = raw
        .iter()
        .all(|(_, s, d)| s.parse::<u64>().is_ok() && d.parse::<u64>().is_ok());
    let mut originals: Vec<String> = Vec::new();
    let mut index: HashMap<&str, NodeId> = HashMap::new();
    if numeric {
        let mut ids: Vec<u64> = raw
            .iter()
            .flat_map(|(_, s, d)| [s.parse::<u64>().unwrap(), d.parse::<u64>().unwrap()])
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let rank: HashMap<u64, NodeId> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        for (_, s, d) in &raw {
            for tok in [*s, *d] {
                index.insert(tok, rank[&tok.parse::<u64>().unwrap()]);
            }
        }
        originals = ids.iter().map(u64::to_string).collect();
    } else {
        for (_, s, d) in &raw {
            for tok in [*s, *d] {
                if !index.contains_key(tok) {
                    index.insert(tok, originals.len());
                    originals.push(tok.to_string());
                }
            }
        }
    }

    let n = originals
        .len()
        .max(n_hint.unwrap_or(0))
        .max(header_nodes.unwrap_or(0));
    let mut per_layer: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); layer_count];
    for (layer, s, d) in &raw {
        per_layer[layer - 1].push((index[s], index[d]));
    }
    let mut dropped = DropCounts::default();
    let mut layers = Vec::with_capacity(layer_count);
    for edges in per_layer {
        let (graph, drops) = LayerGraph::from_edges(n, edges)?;
        dropped.self_loops += drops.self_loops;
        dropped.duplicates += drops.duplicates;
        layers.push(graph);
    }
    if dropped.total() > 0 {
        log::warn!(
            "dropped {} self-loops and {} duplicate edges",
            dropped.self_loops,
            dropped.duplicates
        );
    }
    for (i, layer) in layers.iter().enumerate() {
        if layer.edge_count() == 0 {
            log::warn!("layer {} has no edges", i + 1);
        }
    }
    Ok(LoadedNetwork {
        network: MultilayerNetwork::new(layers)?,
        id_map: IdMap { originals },
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> LoadedNetwork {
        parse_edge_list(text, None).unwrap()
    }

    #[test]
    fn small_file_counts() {
        let loaded = parse("1 0 1\n1 1 2\n2 0 2\n");
        let net = &loaded.network;
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.layer_count(), 2);
        assert_eq!(net.layer(0).edge_count(), 2);
        assert_eq!(net.layer(1).edge_count(), 1);
    }

    #[test]
    fn self_loop_dropped_and_counted() {
        let loaded = parse("1 0 0\n1 0 1\n");
        assert_eq!(loaded.dropped.self_loops, 1);
        assert_eq!(loaded.network.layer(0).edge_count(), 1);
    }

    #[test]
    fn only_self_loop_still_loads() {
        let loaded = parse("1 0 0\n");
        assert_eq!(loaded.dropped.self_loops, 1);
        assert_eq!(loaded.network.node_count(), 1);
        assert_eq!(loaded.network.layer(0).edge_count(), 0);
    }

    #[test]
    fn duplicates_in_either_direction_dropped() {
        let loaded = parse("1 0 1\n1 1 0\n1 0 1 0.5\n");
        assert_eq!(loaded.dropped.duplicates, 2);
        assert_eq!(loaded.network.layer(0).edge_count(), 1);
    }

    #[test]
    fn comments_weights_and_blank_lines() {
        let loaded = parse("# header\n\n1 0 1 3.5 extra\n   # indented comment\n1 1 2\n");
        assert_eq!(loaded.network.layer(0).edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_edge_list("1 0 1\n1 2\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("x 0 1\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_edge_list("0 0 1\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_file_rejected() {
        assert!(matches!(parse_edge_list("", None), Err(Error::EmptyInput)));
        assert!(matches!(
            parse_edge_list("# only a comment\n", None),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn layer_gap_rejected() {
        assert!(matches!(
            parse_edge_list("1 0 1\n3 1 2\n", None),
            Err(Error::LayerGap { missing: 2 })
        ));
    }

    #[test]
    fn one_based_ids_become_dense() {
        let loaded = parse("1 1 2\n1 2 3\n2 3 1\n");
        assert_eq!(loaded.network.node_count(), 3);
        assert_eq!(loaded.id_map.original(0), Some("1"));
        assert_eq!(loaded.id_map.original(2), Some("3"));
        assert!(loaded.network.layer(0).has_edge(0, 1));
    }

    #[test]
    fn string_ids_follow_first_appearance() {
        let loaded = parse("1 bob alice\n1 alice carol\n");
        assert_eq!(loaded.id_map.original(0), Some("bob"));
        assert_eq!(loaded.id_map.original(1), Some("alice"));
        assert_eq!(loaded.id_map.original(2), Some("carol"));
        assert!(loaded
            .id_map
            .to_csv()
            .starts_with("original_id,dense_id\nbob,0\n"));
    }

    #[test]
    fn n_hint_pads_isolated_nodes() {
        let loaded = parse_edge_list("1 0 1\n", Some(5)).unwrap();
        assert_eq!(loaded.network.node_count(), 5);
        assert_eq!(loaded.network.layer(0).degree(4), 0);
        let smaller = parse_edge_list("1 0 1\n1 1 2\n", Some(2)).unwrap();
        assert_eq!(smaller.network.node_count(), 3);
    }

    #[test]
    fn layer_stats_by_formula() {
        let net = MultilayerNetwork::from_layer_edges(2, &[vec![(0, 1)]]).unwrap();
        let stats = net.layer_stats(0).unwrap();
        assert_eq!(stats.avg_degree, 1.0);
        assert_eq!(stats.infection_threshold, Some(1.0));
    }

    #[test]
    fn layer_stats_from_table_counts() {
        let tailor = LayerStats::from_counts(39, 158);
        assert!((tailor.avg_degree - 8.10).abs() < 0.01);
        assert!((tailor.infection_threshold.unwrap() - 0.123).abs() < 0.001);
        let ckm = LayerStats::from_counts(241, 449);
        assert!((ckm.avg_degree - 3.72).abs() < 0.01);
        assert!((ckm.infection_threshold.unwrap() - 0.269).abs() < 0.001);
    }

    #[test]
    fn empty_layer_threshold_undefined() {
        let net = MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1)], vec![]]).unwrap();
        let stats = net.layer_stats(1).unwrap();
        assert_eq!(stats.avg_degree, 0.0);
        assert_eq!(stats.infection_threshold, None);
        assert!(net.layer_stats(2).is_err());
    }

    #[test]
    fn flatten_is_union() {
        let net =
            MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1)], vec![(0, 1), (1, 2)]]).unwrap();
        let flat = net.flatten();
        assert_eq!(flat.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn flatten_identical_layers() {
        let edges = vec![(0, 1), (1, 2), (2, 3), (0, 3)];
        let net = MultilayerNetwork::from_layer_edges(4, &[edges.clone(), edges]).unwrap();
        assert_eq!(net.flatten(), net.layer(0).clone());
    }

    #[test]
    fn header_keeps_trailing_isolated_nodes() {
        let loaded = parse_edge_list("1 0 1\n", Some(4)).unwrap();
        let again = parse(&loaded.network.to_edge_list_with_header());
        assert_eq!(again.network, loaded.network);
        let with_empty =
            MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1)], vec![], vec![(1, 2)]]).unwrap();
        let again = parse(&with_empty.to_edge_list_with_header());
        assert_eq!(again.network, with_empty);
    }

    #[test]
    fn serialize_reload_identity() {
        let loaded = parse("1 0 1\n1 1 2\n2 0 2\n3 2 3\n");
        let text = loaded.network.to_edge_list();
        let again = parse(&text);
        assert_eq!(again.network, loaded.network);
    }
}
