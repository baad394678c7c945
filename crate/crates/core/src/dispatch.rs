//! Orders, vehicles and route plans, plus every per-pair quantity the
//! allocators consume (first/last mile, EDT, SDT, AODT, AOP, income and
//! next-slot income).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadnet::{NodeId, RoadNetwork, VehicleId};
use crate::{Seconds, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderId(pub u32);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Pending,
    Assigned,
    PickedUp,
    Delivered,
    Rejected,
}

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("invalid order {0}: {1}")]
    InvalidOrder(OrderId, &'static str),
    #[error("order {order}: illegal status transition {from:?} -> {to:?}")]
    IllegalTransition {
        order: OrderId,
        from: OrderStatus,
        to: OrderStatus,
    },
    #[error("invalid vehicle {0}: {1}")]
    InvalidVehicle(VehicleId, &'static str),
    #[error("capacity exceeded: {requested} orders for capacity {capacity}")]
    CapacityExceeded { requested: usize, capacity: usize },
    #[error("no route plan reaches every stop")]
    Infeasible,
    #[error("order {0} has no pickup stop in the plan")]
    OrderNotInPlan(OrderId),
    #[error("payment rates must satisfy w1 >= w2 >= 0")]
    InvalidPayment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub restaurant: NodeId,
    pub customer: NodeId,
    pub placed_at: Timestamp,
    pub prep_time: Seconds,
    pub status: OrderStatus,
    pub assigned_vehicle: Option<VehicleId>,
    pub delivered_at: Option<Timestamp>,
}

impl Order {
    pub fn new(
        id: OrderId,
        restaurant: NodeId,
        customer: NodeId,
        placed_at: Timestamp,
        prep_time: Seconds,
    ) -> Result<Self, DispatchError> {
        if restaurant == customer {
            return Err(DispatchError::InvalidOrder(id, "restaurant equals customer"));
        }
        if !(prep_time >= 0.0 && prep_time.is_finite()) {
            return Err(DispatchError::InvalidOrder(id, "negative preparation time"));
        }
        if !placed_at.is_finite() {
            return Err(DispatchError::InvalidOrder(id, "non-finite placement time"));
        }
        Ok(Order {
            id,
            restaurant,
            customer,
            placed_at,
            prep_time,
            status: OrderStatus::Pending,
            assigned_vehicle: None,
            delivered_at: None,
        })
    }

    /// Time at which the food can be collected.
    pub fn ready_at(&self) -> Timestamp {
        self.placed_at + self.prep_time
    }

    pub fn is_picked_up(&self) -> bool {
        self.status == OrderStatus::PickedUp
    }

    /// Moves along pending -> assigned -> picked_up -> delivered, or pending -> rejected.
    pub fn transition(&mut self, to: OrderStatus) -> Result<(), DispatchError> {
        use OrderStatus::*;
        let ok = matches!(
            (self.status, to),
            (Pending, Assigned) | (Assigned, PickedUp) | (PickedUp, Delivered) | (Pending, Rejected)
        );
        if !ok {
            return Err(DispatchError::IllegalTransition {
                order: self.id,
                from: self.status,
                to,
            });
        }
        self.status = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyInterval {
    pub on: Timestamp,
    pub off: Timestamp,
}

impl DutyInterval {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.on <= t && t < self.off
    }

    /// Length of the overlap with `[a, b)`.
    pub fn overlap(&self, a: Timestamp, b: Timestamp) -> Seconds {
        (self.off.min(b) - self.on.max(a)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaymentParams {
    /// Pay per second spent driving.
    pub w1: f64,
    /// Pay per second spent waiting at a restaurant.
    pub w2: f64,
}

impl PaymentParams {
    pub fn new(w1: f64, w2: f64) -> Result<Self, DispatchError> {
        if !(w1 >= w2 && w2 >= 0.0 && w1.is_finite()) {
            return Err(DispatchError::InvalidPayment);
        }
        Ok(PaymentParams { w1, w2 })
    }

    pub fn pay(&self, drive: Seconds, wait: Seconds) -> f64 {
        self.w1 * drive + self.w2 * wait
    }
}

impl Default for PaymentParams {
    fn default() -> Self {
        PaymentParams { w1: 1.0, w2: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stop {
    pub node: NodeId,
    pub kind: StopKind,
    pub order: OrderId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopTiming {
    pub arrive: Timestamp,
    pub wait: Seconds,
    pub depart: Timestamp,
}

/// Where and when a plan begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStart {
    pub node: NodeId,
    pub time: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    pub start: PlanStart,
    pub stops: Vec<Stop>,
    pub timeline: Vec<StopTiming>,
}

impl RoutePlan {
    pub fn empty(start: PlanStart) -> Self {
        RoutePlan { start, stops: Vec::new(), timeline: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Departure from the final stop, or the start time for an empty plan.
    pub fn completion(&self) -> Timestamp {
        self.timeline.last().map_or(self.start.time, |s| s.depart)
    }

    /// Driving seconds before reaching stop `i`.
    pub fn leg_drive(&self, i: usize) -> Seconds {
        let prev = if i == 0 { self.start.time } else { self.timeline[i - 1].depart };
        self.timeline[i].arrive - prev
    }

    pub fn drive_time(&self) -> Seconds {
        (0..self.stops.len()).map(|i| self.leg_drive(i)).sum()
    }

    pub fn wait_time(&self) -> Seconds {
        self.timeline.iter().map(|s| s.wait).sum()
    }

    fn position(&self, order: OrderId, kind: StopKind) -> Option<usize> {
        self.stops.iter().position(|s| s.order == order && s.kind == kind)
    }

    /// Checks pickup-before-dropoff for every order and a non-decreasing timeline.
    pub fn is_precedence_valid(&self) -> bool {
        let mut t = self.start.time;
        for (stop, tm) in self.stops.iter().zip(&self.timeline) {
            if tm.arrive < t || tm.depart < tm.arrive || tm.wait < 0.0 {
                return false;
            }
            if stop.kind == StopKind::Dropoff && tm.wait != 0.0 {
                return false;
            }
            t = tm.depart;
        }
        self.stops.iter().enumerate().all(|(i, s)| match s.kind {
            StopKind::Pickup => self.position(s.order, StopKind::Dropoff).is_some_and(|d| d > i),
            StopKind::Dropoff => self.position(s.order, StopKind::Pickup).is_none_or(|p| p < i),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Last node the vehicle reached.
    pub location: NodeId,
    pub duty: Vec<DutyInterval>,
    pub capacity: usize,
    pub plan: RoutePlan,
    /// Undelivered orders currently assigned to the vehicle.
    pub load: Vec<Order>,
    pub drive_time: Seconds,
    pub wait_time: Seconds,
    pub available_time: Seconds,
    /// Set while the vehicle is mid-edge: the node it is bound to and its arrival time.
    pub committed: Option<PlanStart>,
}

impl Vehicle {
    pub fn new(
        id: VehicleId,
        location: NodeId,
        mut duty: Vec<DutyInterval>,
        capacity: usize,
    ) -> Result<Self, DispatchError> {
        if capacity == 0 {
            return Err(DispatchError::InvalidVehicle(id, "capacity must be positive"));
        }
        duty.sort_by(|a, b| a.on.total_cmp(&b.on));
        for d in &duty {
            if !(d.on < d.off) {
                return Err(DispatchError::InvalidVehicle(id, "empty duty interval"));
            }
        }
        if duty.windows(2).any(|w| w[1].on < w[0].off) {
            return Err(DispatchError::InvalidVehicle(id, "overlapping duty intervals"));
        }
        Ok(Vehicle {
            id,
            location,
            duty,
            capacity,
            plan: RoutePlan::empty(PlanStart { node: location, time: 0.0 }),
            load: Vec::new(),
            drive_time: 0.0,
            wait_time: 0.0,
            available_time: 0.0,
            committed: None,
        })
    }

    pub fn on_duty(&self, t: Timestamp) -> bool {
        self.duty.iter().any(|d| d.contains(t))
    }

    pub fn spare_capacity(&self) -> usize {
        self.capacity.saturating_sub(self.load.len())
    }

    /// On duty at `t` with room for at least one more order.
    pub fn is_available(&self, t: Timestamp) -> bool {
        self.on_duty(t) && self.spare_capacity() > 0
    }

    /// Point from which a re-plan issued at `t` can begin.
    pub fn origin(&self, t: Timestamp) -> PlanStart {
        self.committed.unwrap_or(PlanStart { node: self.location, time: t })
    }

    /// Time-normalised income `(w1·dT + w2·wT) / aT`; `None` while `aT = 0`.
    pub fn income(&self, pay: &PaymentParams) -> Option<f64> {
        income(self.drive_time, self.wait_time, self.available_time, pay)
    }
}

pub fn income(drive: Seconds, wait: Seconds, available: Seconds, pay: &PaymentParams) -> Option<f64> {
    (available > 0.0).then(|| pay.pay(drive, wait) / available)
}

/// Quickest precedence-valid plan serving `carried` (some possibly already
/// picked up) together with `added`, starting at `start`.
///
/// All stop permutations are enumerated depth-first in ascending
/// `(order id, pickup-before-dropoff)` order, so the first plan reaching the
/// minimum completion time is also the lexicographically smallest.
pub fn best_route_plan(
    net: &RoadNetwork,
    start: PlanStart,
    carried: &[Order],
    added: &[Order],
    max_o: usize,
) -> Result<RoutePlan, DispatchError> {
    let requested = carried.len() + added.len();
    if requested > max_o {
        return Err(DispatchError::CapacityExceeded { requested, capacity: max_o });
    }
    let mut orders: Vec<&Order> = carried.iter().chain(added).collect();
    orders.sort_by_key(|o| o.id);
    if orders.is_empty() {
        return Ok(RoutePlan::empty(start));
    }

    // Node table: index 0 is the start, then restaurant/customer per order.
    let mut nodes = vec![start.node];
    for o in &orders {
        nodes.push(o.restaurant);
        nodes.push(o.customer);
    }
    let k = nodes.len();
    let mut sp = vec![f64::INFINITY; k * k];
    for a in 0..k {
        let tree = net.tree(nodes[a], start.time);
        for b in 0..k {
            sp[a * k + b] = if nodes[a] == nodes[b] { 0.0 } else { tree.dist[nodes[b].index()] };
        }
    }

    let mut search = PlanSearch {
        orders: &orders,
        sp: &sp,
        k,
        picked: orders.iter().map(|o| o.is_picked_up()).collect(),
        dropped: vec![false; orders.len()],
        path: Vec::with_capacity(2 * orders.len()),
        best_time: f64::INFINITY,
        best: Vec::new(),
    };
    let remaining = search.picked.iter().filter(|&&p| !p).count() + orders.len();
    search.dfs(0, start.time, remaining);
    if search.best_time.is_infinite() {
        return Err(DispatchError::Infeasible);
    }
    Ok(evaluate_plan(net, start, &orders, &search.best))
}

struct PlanSearch<'a> {
    orders: &'a [&'a Order],
    sp: &'a [Seconds],
    k: usize,
    picked: Vec<bool>,
    dropped: Vec<bool>,
    path: Vec<(usize, StopKind)>,
    best_time: Timestamp,
    best: Vec<(usize, StopKind)>,
}

impl PlanSearch<'_> {
    fn dfs(&mut self, at: usize, now: Timestamp, remaining: usize) {
        if remaining == 0 {
            if now < self.best_time {
                self.best_time = now;
                self.best = self.path.clone();
            }
            return;
        }
        for i in 0..self.orders.len() {
            let kind = if !self.picked[i] {
                StopKind::Pickup
            } else if !self.dropped[i] {
                StopKind::Dropoff
            } else {
                continue;
            };
            let node = match kind {
                StopKind::Pickup => 1 + 2 * i,
                StopKind::Dropoff => 2 + 2 * i,
            };
            let arrive = now + self.sp[at * self.k + node];
            if !arrive.is_finite() {
                continue;
            }
            let depart = match kind {
                StopKind::Pickup => arrive.max(self.orders[i].ready_at()),
                StopKind::Dropoff => arrive,
            };
            // Any completion reachable from here is >= depart; equal ones lose the tie.
            if depart >= self.best_time {
                continue;
            }
            match kind {
                StopKind::Pickup => self.picked[i] = true,
                StopKind::Dropoff => self.dropped[i] = true,
            }
            self.path.push((i, kind));
            self.dfs(node, depart, remaining - 1);
            self.path.pop();
            match kind {
                StopKind::Pickup => self.picked[i] = false,
                StopKind::Dropoff => self.dropped[i] = false,
            }
        }
    }
}

fn evaluate_plan(
    net: &RoadNetwork,
    start: PlanStart,
    orders: &[&Order],
    seq: &[(usize, StopKind)],
) -> RoutePlan {
    let mut stops = Vec::with_capacity(seq.len());
    let mut timeline = Vec::with_capacity(seq.len());
    let mut at = start.node;
    let mut now = start.time;
    for &(i, kind) in seq {
        let o = orders[i];
        let node = match kind {
            StopKind::Pickup => o.restaurant,
            StopKind::Dropoff => o.customer,
        };
        let arrive = now + net.shortest_path_time(at, node, start.time);
        let depart = match kind {
            StopKind::Pickup => arrive.max(o.ready_at()),
            StopKind::Dropoff => arrive,
        };
        stops.push(Stop { node, kind, order: o.id });
        timeline.push(StopTiming { arrive, wait: depart - arrive, depart });
        at = node;
        now = depart;
    }
    RoutePlan { start, stops, timeline }
}

/// Drive time from the plan start to the order's pickup stop.
pub fn first_mile(order: &Order, plan: &RoutePlan) -> Result<Seconds, DispatchError> {
    let p = plan
        .position(order.id, StopKind::Pickup)
        .ok_or(DispatchError::OrderNotInPlan(order.id))?;
    Ok((0..=p).map(|i| plan.leg_drive(i)).sum())
}

/// Drive time from the order's pickup stop to its dropoff stop along the plan.
pub fn last_mile(order: &Order, plan: &RoutePlan) -> Result<Seconds, DispatchError> {
    let p = plan
        .position(order.id, StopKind::Pickup)
        .ok_or(DispatchError::OrderNotInPlan(order.id))?;
    let d = plan
        .position(order.id, StopKind::Dropoff)
        .ok_or(DispatchError::OrderNotInPlan(order.id))?;
    Ok((p + 1..=d).map(|i| plan.leg_drive(i)).sum())
}

/// Expected delivery time `max(latency + firstMile, prep) + lastMile`.
pub fn edt(order: &Order, plan: &RoutePlan, assign_latency: Seconds) -> Result<Seconds, DispatchError> {
    let fm = first_mile(order, plan)?;
    let lm = last_mile(order, plan)?;
    Ok((assign_latency + fm).max(order.prep_time) + lm)
}

/// Shortest delivery time: preparation plus the direct restaurant-to-customer path.
pub fn sdt(order: &Order, net: &RoadNetwork) -> Seconds {
    order.prep_time + net.shortest_path_time(order.restaurant, order.customer, order.placed_at)
}

/// Outcome of appending a cluster to a vehicle's plan at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub plan: RoutePlan,
    /// Completion minus `t`.
    pub aodt: Seconds,
    /// Driving seconds in `[t, completion]`, including any committed edge.
    pub drive: Seconds,
    /// Waiting seconds in `[t, completion]`.
    pub wait: Seconds,
}

impl Augmentation {
    pub fn payment(&self, pay: &PaymentParams) -> f64 {
        pay.pay(self.drive, self.wait)
    }
}

pub fn augment(
    cluster: &[Order],
    vehicle: &Vehicle,
    t: Timestamp,
    net: &RoadNetwork,
) -> Result<Augmentation, DispatchError> {
    let start = vehicle.origin(t);
    let plan = best_route_plan(net, start, &vehicle.load, cluster, vehicle.capacity)?;
    let lead = start.time - t;
    Ok(Augmentation {
        aodt: plan.completion() - t,
        drive: plan.drive_time() + lead,
        wait: plan.wait_time(),
        plan,
    })
}

/// Augmented order delivery time: completion of the augmented plan minus `t`.
pub fn aodt(cluster: &[Order], vehicle: &Vehicle, t: Timestamp, net: &RoadNetwork) -> Result<Seconds, DispatchError> {
    augment(cluster, vehicle, t, net).map(|a| a.aodt)
}

/// Augmented order payment `w1·drive + w2·wait` over `[t, completion]`.
pub fn aop(
    cluster: &[Order],
    vehicle: &Vehicle,
    t: Timestamp,
    net: &RoadNetwork,
    pay: &PaymentParams,
) -> Result<f64, DispatchError> {
    augment(cluster, vehicle, t, net).map(|a| a.payment(pay))
}

/// Income rate after hypothetically completing the augmented plan:
/// `(inc·aT + AOP) / (aT + AODT)`, with `inc` taken as 0 while `aT = 0`.
pub fn ns_income_from(vehicle: &Vehicle, aug: &Augmentation, pay: &PaymentParams) -> f64 {
    let at = vehicle.available_time;
    let earned = vehicle.income(pay).map_or(0.0, |inc| inc * at);
    let denom = at + aug.aodt;
    if denom > 0.0 {
        (earned + aug.payment(pay)) / denom
    } else {
        0.0
    }
}

pub fn ns_income(
    vehicle: &Vehicle,
    cluster: &[Order],
    t: Timestamp,
    net: &RoadNetwork,
    pay: &PaymentParams,
) -> Result<f64, DispatchError> {
    augment(cluster, vehicle, t, net).map(|a| ns_income_from(vehicle, &a, pay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roadnet::{Edge, SLOTS};

    fn line(n: u32, w: f64) -> RoadNetwork {
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push(Edge { src: NodeId(i), dst: NodeId(i + 1), weights: [w; SLOTS] });
            edges.push(Edge { src: NodeId(i + 1), dst: NodeId(i), weights: [w; SLOTS] });
        }
        RoadNetwork::from_parts(
            (0..n).map(|i| i.to_string()).collect(),
            (0..n).map(|i| (i as f64, 0.0)).collect(),
            edges,
        )
        .unwrap()
    }

    fn order(id: u32, r: u32, c: u32, t: f64, p: f64) -> Order {
        Order::new(OrderId(id), NodeId(r), NodeId(c), t, p).unwrap()
    }

    #[test]
    fn order_validation() {
        assert!(Order::new(OrderId(1), NodeId(1), NodeId(1), 0.0, 0.0).is_err());
        assert!(Order::new(OrderId(1), NodeId(1), NodeId(2), 0.0, -1.0).is_err());
    }

    #[test]
    fn order_lifecycle() {
        let mut o = order(1, 0, 1, 0.0, 0.0);
        assert!(o.transition(OrderStatus::Delivered).is_err());
        o.transition(OrderStatus::Assigned).unwrap();
        assert!(o.transition(OrderStatus::Rejected).is_err());
        o.transition(OrderStatus::PickedUp).unwrap();
        o.transition(OrderStatus::Delivered).unwrap();
        let mut r = order(2, 0, 1, 0.0, 0.0);
        r.transition(OrderStatus::Rejected).unwrap();
        assert!(r.transition(OrderStatus::Assigned).is_err());
    }

    #[test]
    fn vehicle_duty_validation() {
        let id = VehicleId(0);
        let d = |on, off| DutyInterval { on, off };
        assert!(Vehicle::new(id, NodeId(0), vec![d(0.0, 10.0)], 0).is_err());
        assert!(Vehicle::new(id, NodeId(0), vec![d(0.0, 10.0), d(5.0, 20.0)], 1).is_err());
        let v = Vehicle::new(id, NodeId(0), vec![d(30.0, 40.0), d(0.0, 10.0)], 2).unwrap();
        assert_eq!(v.duty[0].on, 0.0);
        assert!(v.on_duty(0.0) && !v.on_duty(10.0) && v.on_duty(35.0));
    }

    #[test]
    fn payment_params_ordering() {
        assert!(PaymentParams::new(0.5, 0.8).is_err());
        assert!(PaymentParams::new(1.0, -0.1).is_err());
        assert!(PaymentParams::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn single_order_at_restaurant_with_food_ready() {
        let net = line(4, 10.0);
        let o = order(1, 0, 3, 0.0, 0.0);
        let plan =
            best_route_plan(&net, PlanStart { node: NodeId(0), time: 0.0 }, &[], std::slice::from_ref(&o), 3).unwrap();
        assert_eq!(plan.stops.len(), 2);
        assert_eq!(plan.stops[0].kind, StopKind::Pickup);
        assert_eq!(plan.completion(), 30.0);
        assert_eq!(first_mile(&o, &plan).unwrap(), 0.0);
        assert_eq!(last_mile(&o, &plan).unwrap(), 30.0);
        assert_eq!(edt(&o, &plan, 0.0).unwrap(), 30.0);
    }

    #[test]
    fn capacity_is_enforced() {
        let net = line(4, 1.0);
        let os: Vec<_> = (0..3).map(|i| order(i, 0, 1, 0.0, 0.0)).collect();
        let err = best_route_plan(&net, PlanStart { node: NodeId(0), time: 0.0 }, &os[..2], &os[2..], 2);
        assert_eq!(err.unwrap_err(), DispatchError::CapacityExceeded { requested: 3, capacity: 2 });
    }

    #[test]
    fn unreachable_leg_is_infeasible() {
        let net = RoadNetwork::from_parts(
            vec!["a".into(), "b".into()],
            vec![(0.0, 0.0), (1.0, 0.0)],
            vec![Edge { src: NodeId(0), dst: NodeId(1), weights: [1.0; SLOTS] }],
        )
        .unwrap();
        let o = order(1, 1, 0, 0.0, 0.0);
        let err = best_route_plan(&net, PlanStart { node: NodeId(0), time: 0.0 }, &[], &[o], 3);
        assert_eq!(err.unwrap_err(), DispatchError::Infeasible);
    }

    #[test]
    fn picked_up_orders_contribute_only_dropoffs() {
        let net = line(5, 2.0);
        let mut carried = order(1, 0, 4, 0.0, 0.0);
        carried.status = OrderStatus::PickedUp;
        let added = order(2, 2, 3, 0.0, 0.0);
        let plan = best_route_plan(
            &net,
            PlanStart { node: NodeId(1), time: 0.0 },
            &[carried.clone()],
            std::slice::from_ref(&added),
            3,
        )
        .unwrap();
        assert_eq!(plan.stops.len(), 3);
        assert!(plan.stops.iter().all(|s| !(s.order == carried.id && s.kind == StopKind::Pickup)));
        assert!(plan.is_precedence_valid());
        assert_eq!(plan.completion(), 6.0);
        assert_eq!(first_mile(&carried, &plan), Err(DispatchError::OrderNotInPlan(carried.id)));
    }

    #[test]
    fn waiting_accrues_only_at_unready_pickups() {
        let net = line(3, 5.0);
        let o = order(1, 1, 2, 0.0, 20.0);
        let plan =
            best_route_plan(&net, PlanStart { node: NodeId(0), time: 0.0 }, &[], &[o], 3).unwrap();
        assert_eq!(plan.timeline[0].arrive, 5.0);
        assert_eq!(plan.timeline[0].wait, 15.0);
        assert_eq!(plan.timeline[1].wait, 0.0);
        assert_eq!(plan.completion(), 25.0);
        assert_eq!(plan.drive_time() + plan.wait_time(), 25.0);
    }

    #[test]
    fn ties_prefer_smallest_order_sequence() {
        let net = line(3, 1.0);
        let a = order(4, 1, 2, 0.0, 0.0);
        let b = order(2, 1, 2, 0.0, 0.0);
        let plan = best_route_plan(&net, PlanStart { node: NodeId(0), time: 0.0 }, &[], &[a, b], 3)
            .unwrap();
        let seq: Vec<_> = plan.stops.iter().map(|s| (s.order.0, s.kind)).collect();
        assert_eq!(
            seq,
            vec![
                (2, StopKind::Pickup),
                (4, StopKind::Pickup),
                (2, StopKind::Dropoff),
                (4, StopKind::Dropoff)
            ]
        );
    }

    #[test]
    fn income_edge_cases() {
        let pay = PaymentParams::default();
        assert_eq!(income(0.0, 0.0, 0.0, &pay), None);
        assert_eq!(income(0.0, 0.0, 10.0, &pay), Some(0.0));
        let a = income(13.0, 2.0, 25.0, &pay).unwrap();
        let b = income(130.0, 20.0, 250.0, &pay).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_on_idle_vehicle() {
        let net = line(3, 1.0);
        let mut v = Vehicle::new(VehicleId(0), NodeId(0), vec![DutyInterval { on: 0.0, off: 100.0 }], 3)
            .unwrap();
        let pay = PaymentParams::default();
        assert_eq!(aodt(&[], &v, 50.0, &net).unwrap(), 0.0);
        assert_eq!(aop(&[], &v, 50.0, &net, &pay).unwrap(), 0.0);
        v.drive_time = 10.0;
        v.wait_time = 5.0;
        v.available_time = 40.0;
        let inc = v.income(&pay).unwrap();
        assert_eq!(ns_income(&v, &[], 50.0, &net, &pay).unwrap(), inc);
    }

    #[test]
    fn committed_edge_counts_as_drive() {
        let net = line(4, 10.0);
        let mut v = Vehicle::new(VehicleId(0), NodeId(0), vec![DutyInterval { on: 0.0, off: 100.0 }], 3)
            .unwrap();
        v.committed = Some(PlanStart { node: NodeId(1), time: 54.0 });
        let o = order(1, 2, 3, 0.0, 0.0);
        let a = augment(&[o], &v, 50.0, &net).unwrap();
        assert_eq!(a.aodt, 4.0 + 20.0);
        assert_eq!(a.drive, 24.0);
        assert_eq!(a.wait, 0.0);
    }
}
