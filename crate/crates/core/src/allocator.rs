//! Per-window order allocation.
//!
//! Pending orders are grouped into capacity-bounded clusters, each cluster is
//! connected to the vehicles that can reach its anchor restaurant within
//! `gamma` times the nearest vehicle's travel time, and a minimum-weight
//! maximum-cardinality matching picks the assignment. The three policies
//! differ only in the edge weight.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{self, augment, best_route_plan, ns_income_from, Order, PaymentParams, PlanStart, Vehicle};
use crate::roadnet::{NodeId, RoadNetwork, VehicleId};
use crate::{Seconds, Timestamp};

/// How the cost of merging two clusters is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeRule {
    /// `cost(A ∪ B) − max(cost(A), cost(B))`
    #[default]
    Max,
    /// `cost(A ∪ B) − (cost(A) + cost(B))`
    Sum,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("gamma must exceed 1, got {0}")]
    Gamma(f64),
    #[error("f must lie in (0, 1], got {0}")]
    ClusterFraction(f64),
    #[error("eta must be positive, got {0}")]
    Eta(f64),
    #[error("max_o must be positive")]
    MaxO,
    #[error("omega must be positive, got {0}")]
    Omega(f64),
    #[error("lambda must lie in [0, 1], got {0}")]
    Lambda(f64),
    #[error(transparent)]
    Payment(#[from] dispatch::DispatchError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocatorConfig {
    pub gamma: f64,
    pub f: f64,
    pub eta: Seconds,
    pub pay: PaymentParams,
    pub max_o: usize,
    pub omega: Seconds,
    pub merge_rule: MergeRule,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        AllocatorConfig {
            gamma: 2.0,
            f: 0.8,
            eta: 600.0,
            pay: PaymentParams::default(),
            max_o: 3,
            omega: 7200.0,
            merge_rule: MergeRule::Max,
        }
    }
}

impl AllocatorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(ConfigError::ClusterFraction(self.f));
        }
        if !(self.eta > 0.0) {
            return Err(ConfigError::Eta(self.eta));
        }
        if self.max_o == 0 {
            return Err(ConfigError::MaxO);
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(ConfigError::Omega(self.omega));
        }
        PaymentParams::new(self.pay.w1, self.pay.w2)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AllocatorKind {
    Fairfoody,
    GreedyEdt,
    Weighted { lambda: f64 },
}

impl AllocatorKind {
    pub fn name(&self) -> String {
        match self {
            AllocatorKind::Fairfoody => "fairfoody".into(),
            AllocatorKind::GreedyEdt => "greedy_edt".into(),
            AllocatorKind::Weighted { lambda } => format!("weighted({lambda})"),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            AllocatorKind::Weighted { lambda } if !(0.0..=1.0).contains(&lambda) => {
                Err(ConfigError::Lambda(lambda))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCluster {
    pub orders: Vec<Order>,
    /// Restaurant of the first pickup in the cluster's own best plan.
    pub anchor: NodeId,
    /// Completion time of that plan, measured from the clustering time.
    pub cached_cost: Seconds,
}

impl OrderCluster {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    fn first_id(&self) -> u32 {
        self.orders[0].id.0
    }
}

/// Best single-vehicle plan for `orders`, started at whichever of their
/// restaurants finishes soonest.
pub fn cluster_from_orders(mut orders: Vec<Order>, max_o: usize, t: Timestamp, net: &RoadNetwork) -> OrderCluster {
    orders.sort_by_key(|o| o.id);
    let mut best: Option<(Seconds, NodeId)> = None;
    let mut starts: Vec<NodeId> = orders.iter().map(|o| o.restaurant).collect();
    starts.sort();
    starts.dedup();
    for r in starts {
        let cost = match best_route_plan(net, PlanStart { node: r, time: t }, &[], &orders, max_o) {
            Ok(plan) => plan.completion() - t,
            Err(_) => f64::INFINITY,
        };
        let anchor = r;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, anchor));
        }
    }
    let (cached_cost, anchor) = best.unwrap_or((f64::INFINITY, orders[0].restaurant));
    OrderCluster { orders, anchor, cached_cost }
}

fn merge_increment(rule: MergeRule, a: &OrderCluster, b: &OrderCluster, union: &OrderCluster) -> Seconds {
    match rule {
        MergeRule::Max => union.cached_cost - a.cached_cost.max(b.cached_cost),
        MergeRule::Sum => union.cached_cost - (a.cached_cost + b.cached_cost),
    }
}

/// Groups pending orders into clusters of at most `max_o`.
///
/// When `orders.len() <= f · n_vehicles` every order stays a singleton.
/// Otherwise the cheapest merge (by [`MergeRule`]) is applied repeatedly
/// until the cluster count drops to `f · n_vehicles` or the cheapest
/// increment exceeds `eta`.
pub fn cluster_orders(
    orders: &[Order],
    n_vehicles: usize,
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> Vec<OrderCluster> {
    let mut sorted = orders.to_vec();
    sorted.sort_by_key(|o| o.id);
    let mut clusters: Vec<OrderCluster> = sorted
        .into_par_iter()
        .map(|o| cluster_from_orders(vec![o], cfg.max_o, t, net))
        .collect();
    let target = cfg.f * n_vehicles as f64;
    if clusters.len() as f64 <= target {
        return clusters;
    }

    // Candidate merges keyed by the first order id of each side.
    let candidate = |a: &OrderCluster, b: &OrderCluster| -> Option<(Seconds, OrderCluster)> {
        if a.len() + b.len() > cfg.max_o {
            return None;
        }
        let union = cluster_from_orders(
            a.orders.iter().chain(&b.orders).cloned().collect(),
            cfg.max_o,
            t,
            net,
        );
        let inc = merge_increment(cfg.merge_rule, a, b, &union);
        inc.is_finite().then_some((inc, union))
    };
    let mut pairs: HashMap<(u32, u32), (Seconds, OrderCluster)> = (0..clusters.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let clusters = &clusters;
            (i + 1..clusters.len()).filter_map(move |j| {
                candidate(&clusters[i], &clusters[j])
                    .map(|c| ((clusters[i].first_id(), clusters[j].first_id()), c))
            })
        })
        .collect();

    while clusters.len() as f64 > target {
        let mut best: Option<(Seconds, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if let Some((inc, _)) = pairs.get(&(clusters[i].first_id(), clusters[j].first_id())) {
                    if best.is_none_or(|(b, _, _)| *inc < b) {
                        best = Some((*inc, i, j));
                    }
                }
            }
        }
        let Some((inc, i, j)) = best else { break };
        if inc > cfg.eta {
            break;
        }
        let (a, b) = (clusters[i].first_id(), clusters[j].first_id());
        let (_, merged) = pairs.remove(&(a, b)).expect("selected pair is cached");
        pairs.retain(|&(x, y), _| x != a && y != a && x != b && y != b);
        clusters.remove(j);
        clusters[i] = merged;
        let fresh: Vec<_> = (0..clusters.len())
            .into_par_iter()
            .filter(|&k| k != i)
            .filter_map(|k| {
                let (lo, hi) = if k < i { (k, i) } else { (i, k) };
                candidate(&clusters[lo], &clusters[hi])
                    .map(|c| ((clusters[lo].first_id(), clusters[hi].first_id()), c))
            })
            .collect();
        pairs.extend(fresh);
    }
    clusters
}

/// Weighted bipartite graph between available vehicles and order clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteProblem {
    pub vehicles: Vec<VehicleId>,
    pub clusters: Vec<OrderCluster>,
    /// Row-major `vehicles × clusters`.
    pub weight: Vec<f64>,
    pub forbidden: Vec<bool>,
    /// Travel time of the nearest vehicle to each cluster anchor.
    pub near_dist: Vec<Seconds>,
    /// Vehicle-to-anchor travel time for in-range pairs, infinite otherwise.
    pub distance: Vec<Seconds>,
}

impl BipartiteProblem {
    /// Problem from a dense weight matrix; non-finite entries become forbidden.
    pub fn from_matrix(vehicles: Vec<VehicleId>, clusters: Vec<OrderCluster>, weight: Vec<f64>) -> Self {
        assert_eq!(weight.len(), vehicles.len() * clusters.len());
        let forbidden = weight.iter().map(|w| !w.is_finite()).collect();
        let n = clusters.len();
        let cells = weight.len();
        BipartiteProblem {
            vehicles,
            clusters,
            weight,
            forbidden,
            near_dist: vec![0.0; n],
            distance: vec![0.0; cells],
        }
    }

    #[inline]
    pub fn idx(&self, vehicle: usize, cluster: usize) -> usize {
        vehicle * self.clusters.len() + cluster
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub pairs: Vec<(VehicleId, usize)>,
    pub unassigned_clusters: Vec<usize>,
}

/// Edge scorer used while building the bipartite graph.
#[derive(Debug, Clone, Copy)]
enum Scorer {
    Fair { min_income: f64 },
    Time,
    Blend { lambda: f64, min_income: f64 },
}

impl Scorer {
    fn for_kind(kind: AllocatorKind, fleet: &[Vehicle], cfg: &AllocatorConfig, t: Timestamp) -> Self {
        let min_income = min_on_duty_income(fleet, &cfg.pay, t);
        match kind {
            AllocatorKind::Fairfoody => Scorer::Fair { min_income },
            AllocatorKind::GreedyEdt => Scorer::Time,
            // endpoints use the unscaled pure weights so ties break identically
            AllocatorKind::Weighted { lambda: 0.0 } => Scorer::Time,
            AllocatorKind::Weighted { lambda: 1.0 } => Scorer::Fair { min_income },
            AllocatorKind::Weighted { lambda } => Scorer::Blend { lambda, min_income },
        }
    }

    fn score(
        &self,
        vehicle: &Vehicle,
        cluster: &OrderCluster,
        cfg: &AllocatorConfig,
        t: Timestamp,
        net: &RoadNetwork,
    ) -> Option<f64> {
        let aug = augment(&cluster.orders, vehicle, t, net).ok()?;
        let w = match *self {
            Scorer::Fair { min_income } => ns_income_from(vehicle, &aug, &cfg.pay) - min_income,
            Scorer::Time => aug.aodt,
            Scorer::Blend { lambda, min_income } => {
                let fair = ns_income_from(vehicle, &aug, &cfg.pay) - min_income;
                lambda * fair + (1.0 - lambda) * (aug.aodt / cfg.omega)
            }
        };
        w.is_finite().then_some(w)
    }
}

/// Lowest income among vehicles on duty at `t`; a vehicle with no available
/// time yet counts as earning zero.
pub fn min_on_duty_income(fleet: &[Vehicle], pay: &PaymentParams, t: Timestamp) -> f64 {
    let m = fleet
        .iter()
        .filter(|v| v.on_duty(t))
        .map(|v| v.income(pay).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        0.0
    }
}

fn build_with(
    scorer: Scorer,
    available: &[&Vehicle],
    clusters: Vec<OrderCluster>,
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> BipartiteProblem {
    let nv = available.len();
    let nc = clusters.len();
    let mut locations: HashMap<NodeId, Vec<VehicleId>> = HashMap::new();
    let mut index: HashMap<VehicleId, usize> = HashMap::with_capacity(nv);
    for (i, v) in available.iter().enumerate() {
        locations.entry(v.location).or_default().push(v.id);
        index.insert(v.id, i);
    }

    let columns: Vec<(Seconds, Vec<(usize, Seconds, Option<f64>)>)> = clusters
        .par_iter()
        .map(|c| {
            let range = net.range_search_vehicles(c.anchor, t, cfg.gamma, &locations);
            let entries = range
                .reachable
                .iter()
                .map(|&(vid, d)| {
                    let vi = index[&vid];
                    let v = available[vi];
                    let w = if v.spare_capacity() >= c.len() {
                        scorer.score(v, c, cfg, t, net)
                    } else {
                        None
                    };
                    (vi, d, w)
                })
                .collect();
            (range.near_dist, entries)
        })
        .collect();

    let mut weight = vec![0.0; nv * nc];
    let mut forbidden = vec![true; nv * nc];
    let mut distance = vec![f64::INFINITY; nv * nc];
    let mut near_dist = Vec::with_capacity(nc);
    for (ci, (nd, entries)) in columns.into_iter().enumerate() {
        near_dist.push(nd);
        for (vi, d, w) in entries {
            let k = vi * nc + ci;
            distance[k] = d;
            if let Some(w) = w {
                weight[k] = w;
                forbidden[k] = false;
            }
        }
    }
    BipartiteProblem {
        vehicles: available.iter().map(|v| v.id).collect(),
        clusters,
        weight,
        forbidden,
        near_dist,
        distance,
    }
}

/// Fairness-weighted graph: `w(v, O) = ns_income(v, O) − min on-duty income`.
///
/// `fleet` supplies every vehicle for the minimum-income term; only vehicles
/// on duty with spare capacity become graph rows.
pub fn build_bipartite(
    fleet: &[Vehicle],
    clusters: Vec<OrderCluster>,
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> BipartiteProblem {
    build_for_kind(AllocatorKind::Fairfoody, fleet, clusters, cfg, t, net)
}

pub fn build_for_kind(
    kind: AllocatorKind,
    fleet: &[Vehicle],
    clusters: Vec<OrderCluster>,
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> BipartiteProblem {
    let available: Vec<&Vehicle> = fleet.iter().filter(|v| v.is_available(t)).collect();
    build_with(Scorer::for_kind(kind, fleet, cfg, t), &available, clusters, cfg, t, net)
}

/// Minimum-weight matching of maximum cardinality over non-forbidden edges.
pub fn solve_matching(problem: &BipartiteProblem) -> Matching {
    let nv = problem.vehicles.len();
    let nc = problem.clusters.len();
    let all_unassigned = || Matching {
        pairs: Vec::new(),
        unassigned_clusters: (0..nc).collect(),
    };
    if nv == 0 || nc == 0 {
        return all_unassigned();
    }
    let allowed = problem.forbidden.iter().zip(&problem.weight).filter(|(f, _)| !**f);
    let (lo, hi) = allowed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &w)| {
        (lo.min(w), hi.max(w))
    });
    if lo.is_infinite() {
        return all_unassigned();
    }
    // Shift so every allowed weight is non-negative, and price forbidden
    // edges above any matching that uses one fewer of them.
    let span = hi - lo;
    let k = nv.min(nc) as f64;
    let big = (span + 1.0) * (k + 1.0);
    let cost = |v: usize, c: usize| {
        let i = problem.idx(v, c);
        if problem.forbidden[i] {
            big
        } else {
            problem.weight[i] - lo
        }
    };

    let mut col_of_vehicle = vec![usize::MAX; nv];
    if nc <= nv {
        let assign = hungarian(nc, nv, |r, c| cost(c, r));
        for (cluster, vehicle) in assign.into_iter().enumerate() {
            col_of_vehicle[vehicle] = cluster;
        }
    } else {
        let assign = hungarian(nv, nc, cost);
        col_of_vehicle = assign;
    }

    let mut pairs = Vec::new();
    let mut matched = vec![false; nc];
    for (v, &c) in col_of_vehicle.iter().enumerate() {
        if c != usize::MAX && !problem.forbidden[problem.idx(v, c)] {
            pairs.push((problem.vehicles[v], c));
            matched[c] = true;
        }
    }
    Matching {
        pairs,
        unassigned_clusters: (0..nc).filter(|&c| !matched[c]).collect(),
    }
}

/// Kuhn-Munkres with row/column potentials for a `rows × cols` cost matrix,
/// `rows <= cols`. Returns the column assigned to each row.
pub fn hungarian(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    assert!(rows <= cols);
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![0.0; cols + 1];
    let mut used = vec![false; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![usize::MAX; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// One executed vehicle-cluster pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub vehicle: VehicleId,
    pub cluster: OrderCluster,
    pub near_dist: Seconds,
    pub distance: Seconds,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub assignments: Vec<Assignment>,
    /// Orders left for the next window.
    pub unassigned: Vec<Order>,
    pub cluster_count: usize,
}

/// Runs clustering, graph construction and matching for one window.
pub fn allocate(
    kind: AllocatorKind,
    fleet: &[Vehicle],
    pending: &[Order],
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> Allocation {
    if pending.is_empty() {
        return Allocation::default();
    }
    let available: Vec<&Vehicle> = fleet.iter().filter(|v| v.is_available(t)).collect();
    if available.is_empty() {
        return Allocation {
            assignments: Vec::new(),
            unassigned: pending.to_vec(),
            cluster_count: 0,
        };
    }
    let clusters = cluster_orders(pending, available.len(), cfg, t, net);
    let scorer = Scorer::for_kind(kind, fleet, cfg, t);
    let problem = build_with(scorer, &available, clusters, cfg, t, net);
    let matching = solve_matching(&problem);
    let index: HashMap<VehicleId, usize> =
        problem.vehicles.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut assignments = Vec::with_capacity(matching.pairs.len());
    for &(vid, c) in &matching.pairs {
        let k = problem.idx(index[&vid], c);
        assignments.push(Assignment {
            vehicle: vid,
            cluster: problem.clusters[c].clone(),
            near_dist: problem.near_dist[c],
            distance: problem.distance[k],
            weight: problem.weight[k],
        });
    }
    let mut unassigned: Vec<Order> = matching
        .unassigned_clusters
        .iter()
        .flat_map(|&c| problem.clusters[c].orders.iter().cloned())
        .collect();
    unassigned.sort_by_key(|o| o.id);
    Allocation {
        assignments,
        unassigned,
        cluster_count: problem.clusters.len(),
    }
}

pub fn allocate_fairfoody(
    fleet: &[Vehicle],
    pending: &[Order],
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> Allocation {
    allocate(AllocatorKind::Fairfoody, fleet, pending, cfg, t, net)
}

pub fn allocate_greedy_edt(
    fleet: &[Vehicle],
    pending: &[Order],
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
) -> Allocation {
    allocate(AllocatorKind::GreedyEdt, fleet, pending, cfg, t, net)
}

pub fn allocate_weighted(
    fleet: &[Vehicle],
    pending: &[Order],
    cfg: &AllocatorConfig,
    t: Timestamp,
    net: &RoadNetwork,
    lambda: f64,
) -> Allocation {
    allocate(AllocatorKind::Weighted { lambda }, fleet, pending, cfg, t, net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{DutyInterval, OrderId};
    use crate::roadnet::{Edge, SLOTS};

    fn grid(n: u32, w: f64) -> RoadNetwork {
        let id = |x: u32, y: u32| NodeId(y * n + x);
        let mut edges = Vec::new();
        for y in 0..n {
            for x in 0..n {
                if x + 1 < n {
                    edges.push(Edge { src: id(x, y), dst: id(x + 1, y), weights: [w; SLOTS] });
                    edges.push(Edge { src: id(x + 1, y), dst: id(x, y), weights: [w; SLOTS] });
                }
                if y + 1 < n {
                    edges.push(Edge { src: id(x, y), dst: id(x, y + 1), weights: [w; SLOTS] });
                    edges.push(Edge { src: id(x, y + 1), dst: id(x, y), weights: [w; SLOTS] });
                }
            }
        }
        RoadNetwork::from_parts(
            (0..n * n).map(|i| i.to_string()).collect(),
            (0..n * n).map(|i| ((i % n) as f64, (i / n) as f64)).collect(),
            edges,
        )
        .unwrap()
    }

    fn order(id: u32, r: u32, c: u32) -> Order {
        Order::new(OrderId(id), NodeId(r), NodeId(c), 0.0, 0.0).unwrap()
    }

    fn vehicle(id: u32, at: u32) -> Vehicle {
        Vehicle::new(VehicleId(id), NodeId(at), vec![DutyInterval { on: 0.0, off: 1e6 }], 3).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = AllocatorConfig::default();
        assert!(ok.validate().is_ok());
        assert!(AllocatorConfig { gamma: 1.0, ..ok }.validate().is_err());
        assert!(AllocatorConfig { f: 0.0, ..ok }.validate().is_err());
        assert!(AllocatorConfig { eta: 0.0, ..ok }.validate().is_err());
        assert!(AllocatorKind::Weighted { lambda: 1.5 }.validate().is_err());
    }

    #[test]
    fn under_threshold_orders_stay_singletons() {
        let net = grid(4, 10.0);
        let orders: Vec<_> = (0..3).map(|i| order(i, i, 15)).collect();
        let cfg = AllocatorConfig::default();
        let cs = cluster_orders(&orders, 10, &cfg, 0.0, &net);
        assert_eq!(cs.len(), 3);
        assert!(cs.iter().all(|c| c.len() == 1));
        assert_eq!(cs[1].anchor, NodeId(1));
        assert_eq!(cs[1].cached_cost, 10.0 * 5.0);
    }

    #[test]
    fn co_located_orders_merge_for_free() {
        let net = grid(4, 10.0);
        let orders = vec![order(1, 0, 5), order(2, 0, 5)];
        let cfg = AllocatorConfig { f: 0.5, ..Default::default() };
        let cs = cluster_orders(&orders, 2, &cfg, 0.0, &net);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 2);
        assert_eq!(cs[0].cached_cost, 20.0);
    }

    #[test]
    fn clusters_respect_max_o_and_eta() {
        let net = grid(4, 10.0);
        let orders: Vec<_> = (0..5).map(|i| order(i, 0, 5)).collect();
        let cfg = AllocatorConfig { f: 0.1, max_o: 2, ..Default::default() };
        let cs = cluster_orders(&orders, 1, &cfg, 0.0, &net);
        assert!(cs.iter().all(|c| c.len() <= 2));
        assert_eq!(cs.len(), 3);
        // orders far apart cost more than eta to merge
        let far = vec![order(1, 0, 1), order(2, 15, 14)];
        let cfg = AllocatorConfig { f: 0.1, eta: 5.0, ..Default::default() };
        assert_eq!(cluster_orders(&far, 1, &cfg, 0.0, &net).len(), 2);
    }

    #[test]
    fn single_in_range_pair() {
        let net = grid(3, 10.0);
        let fleet = vec![vehicle(0, 0)];
        let c = cluster_from_orders(vec![order(1, 1, 2)], 3, 0.0, &net);
        let p = build_bipartite(&fleet, vec![c], &AllocatorConfig::default(), 0.0, &net);
        assert_eq!(p.forbidden, vec![false]);
        assert_eq!(p.near_dist, vec![10.0]);
        let m = solve_matching(&p);
        assert_eq!(m.pairs, vec![(VehicleId(0), 0)]);
    }

    #[test]
    fn unreachable_cluster_column_is_forbidden() {
        let mut edges = Vec::new();
        for (a, b) in [(0, 1), (1, 0)] {
            edges.push(Edge { src: NodeId(a), dst: NodeId(b), weights: [1.0; SLOTS] });
        }
        edges.push(Edge { src: NodeId(2), dst: NodeId(3), weights: [1.0; SLOTS] });
        let net = RoadNetwork::from_parts(
            (0..4).map(|i| i.to_string()).collect(),
            (0..4).map(|i| (i as f64, 0.0)).collect(),
            edges,
        )
        .unwrap();
        let fleet = vec![vehicle(0, 0), vehicle(1, 1)];
        let c = cluster_from_orders(vec![order(1, 2, 3)], 3, 0.0, &net);
        let p = build_bipartite(&fleet, vec![c], &AllocatorConfig::default(), 0.0, &net);
        assert!(p.forbidden.iter().all(|&f| f));
        assert!(p.near_dist[0].is_infinite());
        let m = solve_matching(&p);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unassigned_clusters, vec![0]);
    }

    #[test]
    fn all_forbidden_matrix() {
        let cs: Vec<_> = (0..2)
            .map(|i| OrderCluster { orders: vec![order(i, 0, 1)], anchor: NodeId(0), cached_cost: 0.0 })
            .collect();
        let p = BipartiteProblem::from_matrix(vec![VehicleId(0), VehicleId(1)], cs, vec![f64::INFINITY; 4]);
        let m = solve_matching(&p);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unassigned_clusters, vec![0, 1]);
    }

    #[test]
    fn zero_pending_is_empty_allocation() {
        let net = grid(2, 1.0);
        let a = allocate_fairfoody(&[vehicle(0, 0)], &[], &AllocatorConfig::default(), 0.0, &net);
        assert!(a.assignments.is_empty() && a.unassigned.is_empty());
    }

    #[test]
    fn greedy_prefers_nearer_vehicle() {
        // line 0-1-...-9 with the restaurant at 5; vehicles 5 s and 9 s away
        let n = 15u32;
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push(Edge { src: NodeId(i), dst: NodeId(i + 1), weights: [1.0; SLOTS] });
            edges.push(Edge { src: NodeId(i + 1), dst: NodeId(i), weights: [1.0; SLOTS] });
        }
        let net = RoadNetwork::from_parts(
            (0..n).map(|i| i.to_string()).collect(),
            (0..n).map(|i| (i as f64, 0.0)).collect(),
            edges,
        )
        .unwrap();
        let fleet = vec![vehicle(0, 14), vehicle(1, 0)];
        let a = allocate_greedy_edt(&fleet, &[order(1, 5, 6)], &AllocatorConfig::default(), 0.0, &net);
        assert_eq!(a.assignments.len(), 1);
        assert_eq!(a.assignments[0].vehicle, VehicleId(1));
        assert_eq!(a.assignments[0].distance, 5.0);
        assert_eq!(a.assignments[0].near_dist, 5.0);
    }

    #[test]
    fn hungarian_small_known_case() {
        let m = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = hungarian(3, 3, |r, c| m[r][c]);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| m[r][c]).sum();
        assert_eq!(total, 5.0);
    }
}
