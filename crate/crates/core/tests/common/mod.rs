#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use fairdispatch::dispatch::{DutyInterval, Order, OrderId, OrderStatus, Vehicle};
use fairdispatch::roadnet::{Edge, NodeId, RoadNetwork, VehicleId, SLOTS};

pub fn data_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub struct FigEx1 {
    pub net: RoadNetwork,
    pub o1: Order,
    pub o2: Order,
    pub o3: Order,
    pub v1: Vehicle,
    pub v2: Vehicle,
    pub v3: Vehicle,
}

impl FigEx1 {
    pub fn node(&self, label: &str) -> NodeId {
        self.net.node_by_label(label).unwrap()
    }
}

/// The worked example network with its three orders and three vehicles.
///
/// v2's accumulators come from the figure; v1's and v3's are not given
/// there and are fixed here at (10, 0, 20) and (5, 0, 20).
pub fn fig_ex1() -> FigEx1 {
    let dir = data_dir("fig_ex1");
    let nodes = std::fs::read_to_string(dir.join("nodes.csv")).unwrap();
    let edges = std::fs::read_to_string(dir.join("edges.csv")).unwrap();
    let net = RoadNetwork::load(&nodes, &edges).unwrap();
    let n = |l: &str| net.node_by_label(l).unwrap();
    let o1 = Order::new(OrderId(1), n("u2"), n("u7"), 100.0, 5.0).unwrap();
    let o2 = Order::new(OrderId(2), n("u6"), n("u9"), 100.0, 5.0).unwrap();
    let o3 = Order::new(OrderId(3), n("u3"), n("u8"), 100.0, 11.0).unwrap();
    let duty = || vec![DutyInterval { on: 0.0, off: 1000.0 }];
    let mk = |id: u32, at: &str, acc: (f64, f64, f64)| {
        let mut v = Vehicle::new(VehicleId(id), n(at), duty(), 3).unwrap();
        v.drive_time = acc.0;
        v.wait_time = acc.1;
        v.available_time = acc.2;
        v
    };
    let v1 = mk(1, "u1", (10.0, 0.0, 20.0));
    let v2 = mk(2, "u4", (13.0, 2.0, 25.0));
    let v3 = mk(3, "u5", (5.0, 0.0, 20.0));
    FigEx1 { o1, o2, o3, v1, v2, v3, net }
}

/// v2 after o1 has been assigned to it.
pub fn v2_carrying_o1(fx: &FigEx1) -> Vehicle {
    let mut o1 = fx.o1.clone();
    o1.transition(OrderStatus::Assigned).unwrap();
    o1.assigned_vehicle = Some(fx.v2.id);
    let mut v2 = fx.v2.clone();
    v2.load.push(o1);
    v2
}

/// Bidirectional path 0 - 1 - ... - (n-1) with uniform weight `w`.
pub fn line(n: u32, w: f64) -> RoadNetwork {
    let mut edges = Vec::new();
    for i in 0..n - 1 {
        edges.push(Edge { src: NodeId(i), dst: NodeId(i + 1), weights: [w; SLOTS] });
        edges.push(Edge { src: NodeId(i + 1), dst: NodeId(i), weights: [w; SLOTS] });
    }
    RoadNetwork::from_parts(
        (0..n).map(|i| format!("n{i}")).collect(),
        (0..n).map(|i| (i as f64 * 100.0, 0.0)).collect(),
        edges,
    )
    .unwrap()
}

/// Random strongly connected network: a bidirectional ring plus random
/// chords, each with independent integer weights per slot.
pub fn random_network(rng: &mut impl rand::Rng, n: u32, chords: usize) -> RoadNetwork {
    let mut edges = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j {
            edges.push(Edge { src: NodeId(i), dst: NodeId(j), weights: slot_weights(rng) });
            edges.push(Edge { src: NodeId(j), dst: NodeId(i), weights: slot_weights(rng) });
        }
    }
    for _ in 0..chords {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push(Edge { src: NodeId(a), dst: NodeId(b), weights: slot_weights(rng) });
        }
    }
    RoadNetwork::from_parts(
        (0..n).map(|i| i.to_string()).collect(),
        (0..n).map(|_| (rng.random::<f64>() * 1000.0, rng.random::<f64>() * 1000.0)).collect(),
        edges,
    )
    .unwrap()
}

fn slot_weights(rng: &mut impl rand::Rng) -> [f64; SLOTS] {
    let base: u32 = rng.random_range(1..20);
    let mut w = [0.0; SLOTS];
    for (s, x) in w.iter_mut().enumerate() {
        *x = (base + (s as u32 % 3)) as f64;
    }
    w
}

/// All-pairs shortest paths at slot `slot` by Floyd-Warshall.
pub fn floyd_warshall(net: &RoadNetwork, slot: usize) -> Vec<Vec<f64>> {
    let n = net.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in net.edges() {
        let (a, b) = (e.src.index(), e.dst.index());
        d[a][b] = d[a][b].min(e.weights[slot]);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}
