//! Time-dependent road network and the shortest-path queries built on it.
//!
//! Edge weights are traversal times in seconds, one per hour-of-day slot. A
//! query issued at time `t` evaluates every edge at `slot(t)` for the whole
//! path. Single-source trees are memoised in an LRU cache keyed by
//! `(source, slot)`, so the network can be shared read-only across threads.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use lru::LruCache;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Seconds, Timestamp};

/// Number of hour slots carried by every edge.
pub const SLOTS: usize = 24;

/// Default number of cached shortest-path trees.
pub const DEFAULT_CACHE_TREES: usize = 8192;

/// Lower bound used in place of a zero nearest-vehicle distance.
pub const NEAR_DIST_EPSILON: Seconds = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weights: [Seconds; SLOTS],
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: edge endpoint `{label}` is not a declared node")]
    DanglingEndpoint { line: u64, label: String },
    #[error("line {line}: slot {slot} weight {value} must be positive and finite")]
    InvalidWeight { line: u64, slot: usize, value: f64 },
    #[error("line {line}: self-loop on node `{label}`")]
    SelfLoop { line: u64, label: String },
    #[error("line {line}: duplicate node `{label}`")]
    DuplicateNode { line: u64, label: String },
    #[error("network has no nodes")]
    Empty,
}

/// Hour slot containing `t` (seconds since midnight of day zero).
#[inline]
pub fn slot_of(t: Timestamp) -> usize {
    let day = t.rem_euclid(86_400.0);
    ((day / 3600.0).floor() as usize).min(SLOTS - 1)
}

#[derive(Debug)]
pub struct ShortestPathTree {
    pub dist: Vec<Seconds>,
    pred: Vec<u32>,
}

impl ShortestPathTree {
    fn pred_edge(&self, node: NodeId) -> Option<EdgeId> {
        match self.pred[node.index()] {
            u32::MAX => None,
            e => Some(EdgeId(e)),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: Seconds,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct RoadNetwork {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    coords: Vec<(f64, f64)>,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
    cache: Mutex<LruCache<(NodeId, u8), Arc<ShortestPathTree>>>,
    snap_index: SnapIndex,
}

impl fmt::Debug for RoadNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RoadNetwork")
            .field("nodes", &self.labels.len())
            .field("edges", &self.edges.len())
            .finish()
    }
}

impl Clone for RoadNetwork {
    fn clone(&self) -> Self {
        RoadNetwork::from_parts(
            self.labels.clone(),
            self.coords.clone(),
            self.edges.clone(),
        )
        .expect("cloned network is valid")
    }
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.coords == other.coords && self.edges == other.edges
    }
}

fn csr(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> NodeId) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e).index() + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut list = vec![EdgeId(0); edges.len()];
    for (i, e) in edges.iter().enumerate() {
        let k = key(e).index();
        list[fill[k]] = EdgeId(i as u32);
        fill[k] += 1;
    }
    (offsets, list)
}

impl RoadNetwork {
    /// Builds a network from already-validated components.
    pub fn from_parts(
        labels: Vec<String>,
        coords: Vec<(f64, f64)>,
        edges: Vec<Edge>,
    ) -> Result<Self, NetworkError> {
        if labels.is_empty() {
            return Err(NetworkError::Empty);
        }
        assert_eq!(labels.len(), coords.len());
        let mut label_index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), NodeId(i as u32)).is_some() {
                return Err(NetworkError::DuplicateNode {
                    line: i as u64 + 2,
                    label: l.clone(),
                });
            }
        }
        let n = labels.len();
        for (i, e) in edges.iter().enumerate() {
            let line = i as u64 + 2;
            if e.src.index() >= n || e.dst.index() >= n {
                return Err(NetworkError::DanglingEndpoint {
                    line,
                    label: format!("#{}", e.src.0.max(e.dst.0)),
                });
            }
            if e.src == e.dst {
                return Err(NetworkError::SelfLoop {
                    line,
                    label: labels[e.src.index()].clone(),
                });
            }
            for (slot, &w) in e.weights.iter().enumerate() {
                if !(w.is_finite() && w > 0.0) {
                    return Err(NetworkError::InvalidWeight { line, slot, value: w });
                }
            }
        }
        let (out_offsets, out_edges) = csr(n, &edges, |e| e.src);
        let (in_offsets, in_edges) = csr(n, &edges, |e| e.dst);
        let snap_index = SnapIndex::build(&coords);
        Ok(RoadNetwork {
            labels,
            label_index,
            coords,
            edges,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
            cache: Mutex::new(LruCache::new(
                NonZeroUsize::new(DEFAULT_CACHE_TREES).unwrap(),
            )),
            snap_index,
        })
    }

    /// Parses the node CSV (`node_id,x,y`) and edge CSV (`src,dst,w0..w23`).
    pub fn load(node_records: &str, edge_records: &str) -> Result<Self, NetworkError> {
        let mut labels = Vec::new();
        let mut coords = Vec::new();
        let mut seen: HashMap<String, NodeId> = HashMap::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(node_records.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(NetworkError::Parse {
                    line,
                    message: format!("expected 3 fields, found {}", rec.len()),
                });
            }
            let label = rec[0].to_string();
            let x = parse_f64(&rec[1], line)?;
            let y = parse_f64(&rec[2], line)?;
            if seen.contains_key(&label) {
                return Err(NetworkError::DuplicateNode { line, label });
            }
            seen.insert(label.clone(), NodeId(labels.len() as u32));
            labels.push(label);
            coords.push((x, y));
        }
        if labels.is_empty() {
            return Err(NetworkError::Empty);
        }

        let mut edges = Vec::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(edge_records.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 + SLOTS {
                return Err(NetworkError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", 2 + SLOTS, rec.len()),
                });
            }
            let lookup = |s: &str| {
                seen.get(s).copied().ok_or_else(|| NetworkError::DanglingEndpoint {
                    line,
                    label: s.to_string(),
                })
            };
            let src = lookup(&rec[0])?;
            let dst = lookup(&rec[1])?;
            if src == dst {
                return Err(NetworkError::SelfLoop {
                    line,
                    label: rec[0].to_string(),
                });
            }
            let mut weights = [0.0; SLOTS];
            for (slot, w) in weights.iter_mut().enumerate() {
                *w = parse_f64(&rec[2 + slot], line)?;
                if !(w.is_finite() && *w > 0.0) {
                    return Err(NetworkError::InvalidWeight { line, slot, value: *w });
                }
            }
            edges.push(Edge { src, dst, weights });
        }
        Self::from_parts(labels, coords, edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    pub fn coord(&self, node: NodeId) -> (f64, f64) {
        self.coords[node.index()]
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.labels.len()
    }

    /// `(min_x, min_y, max_x, max_y)` over all node coordinates.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.coords.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
        )
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[node.index()]..self.out_offsets[node.index() + 1]]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[node.index()]..self.in_offsets[node.index() + 1]]
    }

    /// Traversal time of `edge` in the hour slot containing `t`.
    #[inline]
    pub fn edge_time(&self, edge: EdgeId, t: Timestamp) -> Seconds {
        self.edges[edge.0 as usize].weights[slot_of(t)]
    }

    fn dijkstra(&self, source: NodeId, slot: usize) -> ShortestPathTree {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![u32::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source.index()] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: source.0 });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            let u = node as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            for &eid in self.out_edges(NodeId(node)) {
                let e = &self.edges[eid.0 as usize];
                let v = e.dst.index();
                let nd = d + e.weights[slot];
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = eid.0;
                    heap.push(HeapEntry { dist: nd, node: e.dst.0 });
                }
            }
        }
        ShortestPathTree { dist, pred }
    }

    /// Forward shortest-path tree from `source` under the weights of slot(`t`).
    pub fn tree(&self, source: NodeId, t: Timestamp) -> Arc<ShortestPathTree> {
        let key = (source, slot_of(t) as u8);
        if let Some(tree) = self.cache.lock().get(&key) {
            return Arc::clone(tree);
        }
        let tree = Arc::new(self.dijkstra(source, key.1 as usize));
        self.cache.lock().put(key, Arc::clone(&tree));
        tree
    }

    /// Quickest travel time from `u` to `v` at time `t`; infinite when unreachable.
    pub fn shortest_path_time(&self, u: NodeId, v: NodeId, t: Timestamp) -> Seconds {
        if u == v {
            return 0.0;
        }
        self.tree(u, t).dist[v.index()]
    }

    /// Edge sequence of the quickest `u -> v` path at time `t`, or `None` when unreachable.
    pub fn path(&self, u: NodeId, v: NodeId, t: Timestamp) -> Option<Vec<EdgeId>> {
        if u == v {
            return Some(Vec::new());
        }
        let tree = self.tree(u, t);
        if !tree.dist[v.index()].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = v;
        while cur != u {
            let e = tree.pred_edge(cur)?;
            out.push(e);
            cur = self.edges[e.0 as usize].src;
        }
        out.reverse();
        Some(out)
    }

    /// Best-first expansion toward `target` over reversed edges: yields every
    /// node with its quickest travel time *to* `target`, in non-decreasing order.
    pub fn expand_towards(&self, target: NodeId, t: Timestamp) -> ReverseExpansion<'_> {
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { dist: 0.0, node: target.0 });
        let n = self.node_count();
        ReverseExpansion {
            net: self,
            slot: slot_of(t),
            heap,
            dist: vec![f64::INFINITY; n],
            done: vec![false; n],
            started: false,
            target,
        }
    }

    /// Vehicles that can reach `source` within `gamma` times the nearest one.
    ///
    /// Distances are vehicle-to-source travel times. A zero nearest distance
    /// is replaced by [`NEAR_DIST_EPSILON`] when forming the bound.
    pub fn range_search_vehicles(
        &self,
        source: NodeId,
        t: Timestamp,
        gamma: f64,
        vehicle_locations: &HashMap<NodeId, Vec<VehicleId>>,
    ) -> RangeResult {
        let mut near_dist = f64::INFINITY;
        let mut bound = f64::INFINITY;
        let mut reachable = Vec::new();
        if vehicle_locations.is_empty() {
            return RangeResult { near_dist, reachable };
        }
        for (node, d) in self.expand_towards(source, t) {
            if d > bound {
                break;
            }
            if let Some(vs) = vehicle_locations.get(&node) {
                if vs.is_empty() {
                    continue;
                }
                if near_dist.is_infinite() {
                    near_dist = d;
                    bound = gamma * d.max(NEAR_DIST_EPSILON);
                }
                reachable.extend(vs.iter().map(|&v| (v, d)));
            }
        }
        RangeResult { near_dist, reachable }
    }

    /// Nearest node to `(x, y)` by Euclidean distance, ties to the smaller id.
    pub fn snap_to_node(&self, x: f64, y: f64) -> NodeId {
        self.snap_index.nearest(&self.coords, x, y)
    }

    /// Copy of this network with every slot weight rewritten by `f(edge_index, weight)`.
    pub fn map_weights(&self, mut f: impl FnMut(usize, Seconds) -> Seconds) -> RoadNetwork {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| Edge {
                src: e.src,
                dst: e.dst,
                weights: e.weights.map(|w| f(i, w)),
            })
            .collect();
        RoadNetwork::from_parts(self.labels.clone(), self.coords.clone(), edges)
            .expect("reweighted network stays valid")
    }

    /// Node CSV in the ingestion format.
    pub fn nodes_csv(&self) -> String {
        let mut out = String::from("node_id,x,y\n");
        for (l, (x, y)) in self.labels.iter().zip(&self.coords) {
            out.push_str(&format!("{l},{x},{y}\n"));
        }
        out
    }

    /// Edge CSV in the ingestion format.
    pub fn edges_csv(&self) -> String {
        let mut out = String::from("src,dst");
        for s in 0..SLOTS {
            out.push_str(&format!(",w{s}"));
        }
        out.push('\n');
        for e in &self.edges {
            out.push_str(self.label(e.src));
            out.push(',');
            out.push_str(self.label(e.dst));
            for w in &e.weights {
                out.push_str(&format!(",{w}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeResult {
    pub near_dist: Seconds,
    pub reachable: Vec<(VehicleId, Seconds)>,
}

pub struct ReverseExpansion<'a> {
    net: &'a RoadNetwork,
    slot: usize,
    heap: BinaryHeap<HeapEntry>,
    dist: Vec<Seconds>,
    done: Vec<bool>,
    started: bool,
    target: NodeId,
}

impl Iterator for ReverseExpansion<'_> {
    type Item = (NodeId, Seconds);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            self.dist[self.target.index()] = 0.0;
        }
        while let Some(HeapEntry { dist: d, node }) = self.heap.pop() {
            let u = node as usize;
            if self.done[u] {
                continue;
            }
            self.done[u] = true;
            for &eid in self.net.in_edges(NodeId(node)) {
                let e = &self.net.edges[eid.0 as usize];
                let w = e.src.index();
                let nd = d + e.weights[self.slot];
                if nd < self.dist[w] {
                    self.dist[w] = nd;
                    self.heap.push(HeapEntry { dist: nd, node: e.src.0 });
                }
            }
            return Some((NodeId(node), d));
        }
        None
    }
}

/// Uniform bucket grid over node coordinates for nearest-node lookups.
#[derive(Debug)]
struct SnapIndex {
    min_x: f64,
    min_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl SnapIndex {
    fn build(coords: &[(f64, f64)]) -> Self {
        let (mut min_x, mut min_y, mut max_x, mut max_y) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in coords {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1.0);
        let per_axis = ((coords.len() as f64).sqrt().ceil() as usize).max(1);
        let cell = span / per_axis as f64;
        let cols = (((max_x - min_x) / cell).floor() as usize + 1).max(1);
        let rows = (((max_y - min_y) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, &(x, y)) in coords.iter().enumerate() {
            let cx = (((x - min_x) / cell).floor() as usize).min(cols - 1);
            let cy = (((y - min_y) / cell).floor() as usize).min(rows - 1);
            buckets[cy * cols + cx].push(i as u32);
        }
        SnapIndex { min_x, min_y, cell, cols, rows, buckets }
    }

    fn nearest(&self, coords: &[(f64, f64)], x: f64, y: f64) -> NodeId {
        let fx = ((x - self.min_x) / self.cell).floor();
        let fy = ((y - self.min_y) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.cols - 1) as f64) as i64;
        let cy = fy.clamp(0.0, (self.rows - 1) as f64) as i64;
        let mut best: Option<(f64, u32)> = None;
        let max_ring = self.cols.max(self.rows) as i64;
        for ring in 0..=max_ring {
            for gy in (cy - ring)..=(cy + ring) {
                for gx in (cx - ring)..=(cx + ring) {
                    let on_ring = (gy - cy).abs() == ring || (gx - cx).abs() == ring;
                    if !on_ring || gx < 0 || gy < 0 {
                        continue;
                    }
                    let (gx, gy) = (gx as usize, gy as usize);
                    if gx >= self.cols || gy >= self.rows {
                        continue;
                    }
                    for &i in &self.buckets[gy * self.cols + gx] {
                        let (nx, ny) = coords[i as usize];
                        let d2 = (nx - x).powi(2) + (ny - y).powi(2);
                        best = match best {
                            Some((bd, bi)) if bd < d2 || (bd == d2 && bi < i) => Some((bd, bi)),
                            _ => Some((d2, i)),
                        };
                    }
                }
            }
            if let Some((bd, _)) = best {
                // Every unvisited cell lies at least `ring * cell` away from
                // the query's clamped cell.
                let outside = self.distance_outside_ring(x, y, cx, cy, ring);
                if outside * outside > bd {
                    break;
                }
            }
        }
        NodeId(best.expect("network has at least one node").1)
    }

    /// Lower bound on the distance from `(x, y)` to any cell beyond `ring`.
    fn distance_outside_ring(&self, x: f64, y: f64, cx: i64, cy: i64, ring: i64) -> f64 {
        let lo_x = self.min_x + (cx - ring) as f64 * self.cell;
        let hi_x = self.min_x + (cx + ring + 1) as f64 * self.cell;
        let lo_y = self.min_y + (cy - ring) as f64 * self.cell;
        let hi_y = self.min_y + (cy + ring + 1) as f64 * self.cell;
        let d = [x - lo_x, hi_x - x, y - lo_y, hi_y - y];
        d.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
    }
}

fn csv_error(e: csv::Error) -> NetworkError {
    let line = e.position().map_or(0, |p| p.line());
    NetworkError::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_f64(s: &str, line: u64) -> Result<f64, NetworkError> {
    s.parse::<f64>().map_err(|_| NetworkError::Parse {
        line,
        message: format!("`{s}` is not a number"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node(weights: [f64; SLOTS]) -> RoadNetwork {
        RoadNetwork::from_parts(
            vec!["a".into(), "b".into()],
            vec![(0.0, 0.0), (10.0, 0.0)],
            vec![Edge { src: NodeId(0), dst: NodeId(1), weights }],
        )
        .unwrap()
    }

    fn edge_rows(rows: &[(&str, &str, f64)]) -> String {
        let mut s = String::from("src,dst");
        for i in 0..SLOTS {
            s.push_str(&format!(",w{i}"));
        }
        s.push('\n');
        for (a, b, w) in rows {
            s.push_str(&format!("{a},{b}"));
            for _ in 0..SLOTS {
                s.push_str(&format!(",{w}"));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn minimal_network_loads() {
        let net = RoadNetwork::load(
            "node_id,x,y\na,0,0\nb,1,0\n",
            &edge_rows(&[("a", "b", 10.0)]),
        )
        .unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn dangling_endpoint_is_rejected() {
        let err = RoadNetwork::load(
            "node_id,x,y\nu1,0,0\nu2,1,0\n",
            &edge_rows(&[("u1", "u99", 3.0)]),
        )
        .unwrap_err();
        assert_eq!(
            err,
            NetworkError::DanglingEndpoint { line: 2, label: "u99".into() }
        );
    }

    #[test]
    fn non_positive_weight_is_rejected() {
        let err = RoadNetwork::load(
            "node_id,x,y\na,0,0\nb,1,0\n",
            &edge_rows(&[("a", "b", 0.0)]),
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::InvalidWeight { line: 2, slot: 0, .. }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = RoadNetwork::load("node_id,x,y\na,0,0\nb,zz,0\n", "src,dst\n").unwrap_err();
        assert!(matches!(err, NetworkError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn self_loop_is_rejected() {
        let err = RoadNetwork::load(
            "node_id,x,y\na,0,0\nb,1,0\n",
            &edge_rows(&[("a", "a", 1.0)]),
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::SelfLoop { .. }));
    }

    #[test]
    fn edge_time_uses_hour_slot() {
        let mut w = [8.0; SLOTS];
        w[10] = 12.0;
        let net = two_node(w);
        assert_eq!(net.edge_time(EdgeId(0), 36_000.0), 12.0);
        assert_eq!(net.edge_time(EdgeId(0), 37_800.0), 12.0);
        assert_eq!(net.edge_time(EdgeId(0), 35_999.0), 8.0);
        let uniform = two_node([8.0; SLOTS]);
        assert_eq!(uniform.edge_time(EdgeId(0), 0.0), uniform.edge_time(EdgeId(0), 86_399.0));
        // next day wraps
        assert_eq!(net.edge_time(EdgeId(0), 86_400.0 + 37_800.0), 12.0);
    }

    #[test]
    fn unreachable_is_infinite() {
        let net = two_node([5.0; SLOTS]);
        assert_eq!(net.shortest_path_time(NodeId(0), NodeId(1), 0.0), 5.0);
        assert!(net.shortest_path_time(NodeId(1), NodeId(0), 0.0).is_infinite());
        assert_eq!(net.shortest_path_time(NodeId(1), NodeId(1), 0.0), 0.0);
        assert!(net.path(NodeId(1), NodeId(0), 0.0).is_none());
    }

    #[test]
    fn range_search_with_no_vehicles() {
        let net = two_node([5.0; SLOTS]);
        let r = net.range_search_vehicles(NodeId(1), 0.0, 2.0, &HashMap::new());
        assert!(r.near_dist.is_infinite());
        assert!(r.reachable.is_empty());
    }

    #[test]
    fn co_located_vehicle_uses_epsilon_bound() {
        let net = two_node([1.5; SLOTS]);
        let mut locs = HashMap::new();
        locs.insert(NodeId(1), vec![VehicleId(7)]);
        locs.insert(NodeId(0), vec![VehicleId(3)]);
        let r = net.range_search_vehicles(NodeId(1), 0.0, 2.0, &locs);
        assert_eq!(r.near_dist, 0.0);
        // bound 2 * 1s covers the vehicle 1.5 s upstream
        assert_eq!(r.reachable, vec![(VehicleId(7), 0.0), (VehicleId(3), 1.5)]);
    }

    #[test]
    fn snap_prefers_smaller_id_on_ties() {
        let net = two_node([1.0; SLOTS]);
        assert_eq!(net.snap_to_node(0.0, 0.0), NodeId(0));
        assert_eq!(net.snap_to_node(10.0, 0.0), NodeId(1));
        assert_eq!(net.snap_to_node(5.0, 0.0), NodeId(0));
        assert_eq!(net.snap_to_node(-500.0, 40.0), NodeId(0));
    }

    #[test]
    fn csv_round_trip() {
        let mut w = [3.0; SLOTS];
        w[5] = 2.5;
        let net = two_node(w);
        let back = RoadNetwork::load(&net.nodes_csv(), &net.edges_csv()).unwrap();
        assert_eq!(back, net);
    }
}
