//! Deterministic window-by-window dispatch simulation.
//!
//! Time advances in fixed windows of `delta` seconds. At each boundary every
//! vehicle is moved along its itinerary up to the boundary, newly placed
//! orders join the pending pool, stale ones are rejected, and the configured
//! allocator assigns the rest. Allocation takes zero simulated time; its
//! wall-clock cost is recorded separately from the event stream so that the
//! stream itself stays byte-identical across replays.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{allocate, AllocatorConfig, AllocatorKind, ConfigError};
use crate::dispatch::{augment, DispatchError, Order, OrderId, OrderStatus, PlanStart, RoutePlan, StopKind, Vehicle};
use crate::roadnet::{EdgeId, NodeId, RoadNetwork, VehicleId, NEAR_DIST_EPSILON};
use crate::{Seconds, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub delta: Seconds,
    pub sla: Seconds,
    pub reject_after: Seconds,
    pub allocator: AllocatorKind,
    pub allocator_cfg: AllocatorConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delta: 180.0,
            sla: 2700.0,
            reject_after: 2700.0,
            allocator: AllocatorKind::Fairfoody,
            allocator_cfg: AllocatorConfig::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.delta > 0.0 && self.sla > 0.0 && self.reject_after > 0.0) {
            return Err(SimError::Config(
                "delta, sla and reject_after must be positive".into(),
            ));
        }
        self.allocator_cfg.validate()?;
        self.allocator.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("order stream is not sorted by placement time at order {0}")]
    Unsorted(OrderId),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Allocator(#[from] ConfigError),
    #[error("vehicle {0}: {1}")]
    Vehicle(VehicleId, DispatchError),
    #[error("event log line {line}: {message}")]
    Log { line: usize, message: String },
}

/// Rounds a simulated time to whole seconds, halves away from negative infinity.
pub fn round_t(t: Timestamp) -> i64 {
    (t + 0.5).floor() as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    DutyOn {
        t: i64,
        vehicle: VehicleId,
    },
    DutyOff {
        t: i64,
        vehicle: VehicleId,
    },
    Placed {
        t: i64,
        order: OrderId,
        restaurant: NodeId,
        customer: NodeId,
    },
    Assigned {
        t: i64,
        order: OrderId,
        vehicle: VehicleId,
        vehicle_node: NodeId,
        anchor: NodeId,
        near_dist: Seconds,
        assigned_dist: Seconds,
        gamma: f64,
    },
    PickedUp {
        t: i64,
        order: OrderId,
        vehicle: VehicleId,
        node: NodeId,
        leg_drive: Seconds,
        leg_wait: Seconds,
    },
    Delivered {
        t: i64,
        order: OrderId,
        vehicle: VehicleId,
        node: NodeId,
        leg_drive: Seconds,
        leg_wait: Seconds,
    },
    Rejected {
        t: i64,
        order: OrderId,
    },
    Accrual {
        t: i64,
        vehicle: VehicleId,
        dt: Seconds,
        wt: Seconds,
        at: Seconds,
    },
    Window {
        t: i64,
        pending: usize,
        clusters: usize,
        assigned: usize,
        rejected: usize,
    },
    VehicleFinal {
        t: i64,
        vehicle: VehicleId,
        dt: Seconds,
        wt: Seconds,
        at: Seconds,
    },
    Diagnostic {
        t: i64,
        message: String,
    },
}

impl Event {
    pub fn t(&self) -> i64 {
        match self {
            Event::DutyOn { t, .. }
            | Event::DutyOff { t, .. }
            | Event::Placed { t, .. }
            | Event::Assigned { t, .. }
            | Event::PickedUp { t, .. }
            | Event::Delivered { t, .. }
            | Event::Rejected { t, .. }
            | Event::Accrual { t, .. }
            | Event::Window { t, .. }
            | Event::VehicleFinal { t, .. }
            | Event::Diagnostic { t, .. } => *t,
        }
    }
}

/// Wall-clock cost of one allocation call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowTiming {
    pub t: Timestamp,
    pub orders: usize,
    pub wall_ms: f64,
    pub overflow: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub timings: Vec<WindowTiming>,
}

impl EventLog {
    /// One JSON object per line, fields in declaration order.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, SimError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(line).map_err(|e| SimError::Log {
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(e);
        }
        Ok(EventLog { events, timings: Vec::new() })
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("t,orders,wall_ms,overflow\n");
        for w in &self.timings {
            out.push_str(&format!("{},{},{},{}\n", w.t, w.orders, w.wall_ms, w.overflow));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Drive { from: NodeId, to: NodeId, start: Timestamp, end: Timestamp },
    Wait { start: Timestamp, end: Timestamp },
    Stop { kind: StopKind, order: OrderId, node: NodeId, at: Timestamp },
}

impl Segment {
    fn end(&self) -> Timestamp {
        match *self {
            Segment::Drive { end, .. } | Segment::Wait { end, .. } => end,
            Segment::Stop { at, .. } => at,
        }
    }
}

/// A vehicle together with the itinerary it is executing.
#[derive(Debug, Clone)]
pub struct VehicleRuntime {
    pub vehicle: Vehicle,
    itinerary: VecDeque<Segment>,
    clock: Timestamp,
    leg_drive: Seconds,
    leg_wait: Seconds,
    next_duty: usize,
    duty_open: bool,
    /// When the load last became empty; `None` while loaded.
    empty_since: Option<Timestamp>,
}

impl VehicleRuntime {
    pub fn new(vehicle: Vehicle, clock: Timestamp) -> Self {
        let empty_since = vehicle.load.is_empty().then_some(f64::NEG_INFINITY);
        VehicleRuntime {
            vehicle,
            itinerary: VecDeque::new(),
            clock,
            leg_drive: 0.0,
            leg_wait: 0.0,
            next_duty: 0,
            duty_open: false,
            empty_since,
        }
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn is_idle(&self) -> bool {
        self.itinerary.is_empty()
    }

    /// Replaces everything after the committed edge with `plan`.
    fn install_plan(&mut self, plan: RoutePlan, net: &RoadNetwork) {
        let keep = match self.itinerary.front() {
            Some(&Segment::Drive { start, end, .. }) if start < self.clock && self.clock < end => 1,
            _ => 0,
        };
        self.itinerary.truncate(keep);
        let mut at = plan.start.node;
        let mut now = plan.start.time;
        for (stop, tm) in plan.stops.iter().zip(&plan.timeline) {
            let edges: Vec<EdgeId> = net
                .path(at, stop.node, plan.start.time)
                .expect("planned legs are reachable");
            for (k, &e) in edges.iter().enumerate() {
                let edge = net.edge(e);
                let end = if k + 1 == edges.len() {
                    tm.arrive
                } else {
                    now + net.edge_time(e, plan.start.time)
                };
                self.itinerary.push_back(Segment::Drive { from: edge.src, to: edge.dst, start: now, end });
                now = end;
            }
            if tm.wait > 0.0 {
                self.itinerary.push_back(Segment::Wait { start: tm.arrive, end: tm.depart });
            }
            self.itinerary.push_back(Segment::Stop {
                kind: stop.kind,
                order: stop.order,
                node: stop.node,
                at: tm.depart,
            });
            at = stop.node;
            now = tm.depart;
        }
        self.vehicle.plan = plan;
    }
}

/// Moves a vehicle along its itinerary up to `until`, accruing drive, wait
/// and available time, and returns the events that happened on the way.
pub fn advance_vehicle(rt: &mut VehicleRuntime, until: Timestamp) -> Vec<Event> {
    let from = rt.clock;
    if until <= from {
        return Vec::new();
    }
    let vid = rt.vehicle.id;
    let mut timed: Vec<(Timestamp, Event)> = Vec::new();

    // Available time: on-duty seconds plus loaded seconds outside duty.
    let busy_end = rt.itinerary.back().map_or(from, |s| s.end()).min(until);
    let on_duty: Seconds = rt.vehicle.duty.iter().map(|d| d.overlap(from, until)).sum();
    let busy_on_duty: Seconds = rt.vehicle.duty.iter().map(|d| d.overlap(from, busy_end)).sum();
    let at = on_duty + ((busy_end - from) - busy_on_duty).max(0.0);

    let (mut dt, mut wt) = (0.0, 0.0);
    while let Some(&seg) = rt.itinerary.front() {
        match seg {
            Segment::Drive { to, start, end, .. } => {
                let span = end.min(until) - start.max(from);
                if span > 0.0 {
                    dt += span;
                    rt.leg_drive += span;
                }
                if end <= until {
                    rt.vehicle.location = to;
                    rt.itinerary.pop_front();
                } else {
                    break;
                }
            }
            Segment::Wait { start, end } => {
                let span = end.min(until) - start.max(from);
                if span > 0.0 {
                    wt += span;
                    rt.leg_wait += span;
                }
                if end <= until {
                    rt.itinerary.pop_front();
                } else {
                    break;
                }
            }
            Segment::Stop { kind, order, node, at } => {
                if at > until {
                    break;
                }
                rt.itinerary.pop_front();
                rt.vehicle.location = node;
                let (leg_drive, leg_wait) = (rt.leg_drive, rt.leg_wait);
                rt.leg_drive = 0.0;
                rt.leg_wait = 0.0;
                let t = round_t(at);
                let event = match kind {
                    StopKind::Pickup => {
                        if let Some(o) = rt.vehicle.load.iter_mut().find(|o| o.id == order) {
                            o.status = OrderStatus::PickedUp;
                        }
                        Event::PickedUp { t, order, vehicle: vid, node, leg_drive, leg_wait }
                    }
                    StopKind::Dropoff => {
                        rt.vehicle.load.retain(|o| o.id != order);
                        if rt.vehicle.load.is_empty() {
                            rt.empty_since = Some(at);
                        }
                        Event::Delivered { t, order, vehicle: vid, node, leg_drive, leg_wait }
                    }
                };
                timed.push((at, event));
            }
        }
    }
    rt.vehicle.committed = match rt.itinerary.front() {
        Some(&Segment::Drive { to, start, end, .. }) if start < until => Some(PlanStart { node: to, time: end }),
        _ => None,
    };
    if rt.itinerary.is_empty() {
        rt.vehicle.plan = RoutePlan::empty(PlanStart { node: rt.vehicle.location, time: until });
    }

    // Duty transitions; going off duty waits for the load to drain.
    loop {
        let Some(d) = rt.vehicle.duty.get(rt.next_duty).copied() else { break };
        if !rt.duty_open {
            if d.on <= until {
                timed.push((d.on.max(from), Event::DutyOn { t: round_t(d.on.max(from)), vehicle: vid }));
                rt.duty_open = true;
            } else {
                break;
            }
        }
        if d.off > until {
            break;
        }
        match rt.empty_since {
            Some(e) if e.max(d.off) <= until => {
                let off = e.max(d.off);
                timed.push((off, Event::DutyOff { t: round_t(off), vehicle: vid }));
                rt.duty_open = false;
                rt.next_duty += 1;
            }
            _ => break,
        }
    }

    rt.vehicle.drive_time += dt;
    rt.vehicle.wait_time += wt;
    rt.vehicle.available_time += at;
    rt.clock = until;
    if dt > 0.0 || wt > 0.0 || at > 0.0 {
        timed.push((until, Event::Accrual { t: round_t(until), vehicle: vid, dt, wt, at }));
    }
    timed.sort_by(|a, b| a.0.total_cmp(&b.0));
    timed.into_iter().map(|(_, e)| e).collect()
}

/// Window-stepping simulation state.
pub struct Simulation<'a> {
    net: &'a RoadNetwork,
    cfg: SimConfig,
    stream: Vec<Order>,
    next_order: usize,
    pending: Vec<Order>,
    fleet: Vec<VehicleRuntime>,
    now: Timestamp,
    horizon: Timestamp,
    log: EventLog,
}

impl<'a> Simulation<'a> {
    pub fn new(
        net: &'a RoadNetwork,
        orders: Vec<Order>,
        vehicles: Vec<Vehicle>,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        Self::starting_at(net, orders, vehicles, cfg, 0.0)
    }

    /// Simulation whose first window boundary is `start`. Vehicles may carry
    /// pre-assigned load, which is planned at `start`.
    pub fn starting_at(
        net: &'a RoadNetwork,
        orders: Vec<Order>,
        vehicles: Vec<Vehicle>,
        cfg: SimConfig,
        start: Timestamp,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        if let Some(w) = orders.windows(2).find(|w| w[1].placed_at < w[0].placed_at) {
            return Err(SimError::Unsorted(w[1].id));
        }
        let horizon = vehicles
            .iter()
            .flat_map(|v| v.duty.iter().map(|d| d.off))
            .chain(orders.iter().map(|o| o.placed_at))
            .fold(start, f64::max);
        let mut fleet: Vec<VehicleRuntime> = vehicles.into_iter().map(|v| VehicleRuntime::new(v, start)).collect();
        for rt in &mut fleet {
            if !rt.vehicle.load.is_empty() {
                let origin = rt.vehicle.origin(start);
                let plan = crate::dispatch::best_route_plan(net, origin, &rt.vehicle.load, &[], rt.vehicle.capacity)
                    .map_err(|e| SimError::Vehicle(rt.vehicle.id, e))?;
                rt.install_plan(plan, net);
            }
        }
        Ok(Simulation {
            net,
            cfg,
            stream: orders,
            next_order: 0,
            pending: Vec::new(),
            fleet,
            now: start,
            horizon,
            log: EventLog::default(),
        })
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.fleet.iter().map(|rt| &rt.vehicle)
    }

    pub fn pending(&self) -> &[Order] {
        &self.pending
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn drained(&self) -> bool {
        self.next_order == self.stream.len()
            && self.pending.is_empty()
            && self.fleet.iter().all(|rt| rt.is_idle() && !rt.duty_open && rt.next_duty == rt.vehicle.duty.len())
    }

    /// Processes the window boundary at `now`, then moves the clock forward by `delta`.
    pub fn step(&mut self) {
        let t = self.now;
        for rt in &mut self.fleet {
            let events = advance_vehicle(rt, t);
            self.log.events.extend(events);
        }

        while let Some(o) = self.stream.get(self.next_order) {
            if o.placed_at > t {
                break;
            }
            self.log.events.push(Event::Placed {
                t: round_t(o.placed_at),
                order: o.id,
                restaurant: o.restaurant,
                customer: o.customer,
            });
            self.pending.push(o.clone());
            self.next_order += 1;
        }

        let reject_after = self.cfg.reject_after;
        let (stale, keep): (Vec<Order>, Vec<Order>) =
            self.pending.drain(..).partition(|o| t - o.placed_at > reject_after);
        self.pending = keep;
        for o in &stale {
            self.log.events.push(Event::Rejected { t: round_t(t), order: o.id });
        }

        let pending_count = self.pending.len();
        let mut assigned = 0;
        let mut clusters = 0;
        if !self.pending.is_empty() {
            let vehicles: Vec<Vehicle> = self.fleet.iter().map(|rt| rt.vehicle.clone()).collect();
            let started = Instant::now();
            let alloc = allocate(
                self.cfg.allocator,
                &vehicles,
                &self.pending,
                &self.cfg.allocator_cfg,
                t,
                self.net,
            );
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            self.log.timings.push(WindowTiming {
                t,
                orders: pending_count,
                wall_ms,
                overflow: wall_ms > self.cfg.delta * 1e3,
            });
            clusters = alloc.cluster_count;
            let index: HashMap<VehicleId, usize> =
                self.fleet.iter().enumerate().map(|(i, rt)| (rt.vehicle.id, i)).collect();
            let mut returned = alloc.unassigned;
            for a in alloc.assignments {
                let rt = &mut self.fleet[index[&a.vehicle]];
                let mut orders = a.cluster.orders.clone();
                for o in &mut orders {
                    o.status = OrderStatus::Assigned;
                    o.assigned_vehicle = Some(a.vehicle);
                }
                match augment(&orders, &rt.vehicle, t, self.net) {
                    Ok(aug) => {
                        for o in &orders {
                            self.log.events.push(Event::Assigned {
                                t: round_t(t),
                                order: o.id,
                                vehicle: a.vehicle,
                                vehicle_node: rt.vehicle.location,
                                anchor: a.cluster.anchor,
                                near_dist: a.near_dist,
                                assigned_dist: a.distance,
                                gamma: self.cfg.allocator_cfg.gamma,
                            });
                        }
                        assigned += orders.len();
                        rt.vehicle.load.extend(orders);
                        rt.empty_since = None;
                        rt.install_plan(aug.plan, self.net);
                    }
                    Err(e) => {
                        self.log.events.push(Event::Diagnostic {
                            t: round_t(t),
                            message: format!("vehicle {}: re-plan failed: {e}", a.vehicle),
                        });
                        returned.extend(a.cluster.orders);
                    }
                }
            }
            returned.sort_by_key(|o| o.id);
            self.pending = returned;
        }
        self.log.events.push(Event::Window {
            t: round_t(t),
            pending: pending_count,
            clusters,
            assigned,
            rejected: stale.len(),
        });
        self.now = t + self.cfg.delta;
    }

    /// Steps until every order is resolved and every vehicle is off duty and idle.
    pub fn run_to_end(mut self) -> EventLog {
        loop {
            self.step();
            if self.now - self.cfg.delta >= self.horizon && self.drained() {
                break;
            }
        }
        let t = round_t(self.now - self.cfg.delta);
        for rt in &self.fleet {
            let v = &rt.vehicle;
            self.log.events.push(Event::VehicleFinal {
                t,
                vehicle: v.id,
                dt: v.drive_time,
                wt: v.wait_time,
                at: v.available_time,
            });
        }
        self.log
    }

    pub fn into_parts(self) -> (EventLog, Vec<Vehicle>) {
        (self.log, self.fleet.into_iter().map(|rt| rt.vehicle).collect())
    }
}

/// Runs a full simulation from time zero.
pub fn run(
    net: &RoadNetwork,
    orders: Vec<Order>,
    vehicles: Vec<Vehicle>,
    cfg: SimConfig,
) -> Result<EventLog, SimError> {
    Ok(Simulation::new(net, orders, vehicles, cfg)?.run_to_end())
}

/// Copy of `net` with `⌈fraction·|E|⌉` uniformly chosen edges slowed by
/// a factor `1 + inflation` in every slot.
pub fn perturb_travel_times(net: &RoadNetwork, fraction: f64, inflation: f64, seed: u64) -> RoadNetwork {
    assert!((0.0..=1.0).contains(&fraction), "fraction must lie in [0, 1]");
    assert!(inflation >= 0.0, "inflation must be non-negative");
    let m = net.edge_count();
    let k = ((fraction * m as f64) - 1e-9).ceil().clamp(0.0, m as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; m];
    for i in sample(&mut rng, m, k) {
        chosen[i] = true;
    }
    net.map_weights(|i, w| if chosen[i] { w * (1.0 + inflation) } else { w })
}

/// Whether a logged assignment honours the `gamma` reach bound.
pub fn within_gamma(near_dist: Seconds, assigned_dist: Seconds, gamma: f64) -> bool {
    assigned_dist <= gamma * near_dist.max(NEAR_DIST_EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::DutyInterval;
    use crate::roadnet::{Edge, SLOTS};

    fn line(n: u32, w: f64) -> RoadNetwork {
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push(Edge { src: NodeId(i), dst: NodeId(i + 1), weights: [w; SLOTS] });
            edges.push(Edge { src: NodeId(i + 1), dst: NodeId(i), weights: [w; SLOTS] });
        }
        RoadNetwork::from_parts(
            (0..n).map(|i| i.to_string()).collect(),
            (0..n).map(|i| (i as f64 * 100.0, 0.0)).collect(),
            edges,
        )
        .unwrap()
    }

    fn vehicle(id: u32, at: u32, on: f64, off: f64) -> Vehicle {
        Vehicle::new(VehicleId(id), NodeId(at), vec![DutyInterval { on, off }], 3).unwrap()
    }

    #[test]
    fn idle_vehicle_accrues_only_available_time() {
        let mut rt = VehicleRuntime::new(vehicle(0, 0, 0.0, 1000.0), 0.0);
        let ev = advance_vehicle(&mut rt, 300.0);
        assert_eq!(rt.vehicle.available_time, 300.0);
        assert_eq!(rt.vehicle.drive_time, 0.0);
        assert_eq!(rt.vehicle.wait_time, 0.0);
        assert!(matches!(ev[0], Event::DutyOn { t: 0, .. }));
    }

    #[test]
    fn delivery_inside_window_keeps_exact_timestamp() {
        let net = line(4, 10.0);
        let mut rt = VehicleRuntime::new(vehicle(0, 0, 0.0, 1000.0), 0.0);
        let mut o = Order::new(OrderId(1), NodeId(1), NodeId(3), 0.0, 0.0).unwrap();
        o.status = OrderStatus::Assigned;
        let plan = crate::dispatch::best_route_plan(
            &net,
            PlanStart { node: NodeId(0), time: 0.0 },
            &[],
            &[o.clone()],
            3,
        )
        .unwrap();
        rt.vehicle.load.push(o);
        rt.empty_since = None;
        rt.install_plan(plan, &net);
        let ev = advance_vehicle(&mut rt, 180.0);
        let delivered: Vec<_> = ev.iter().filter(|e| matches!(e, Event::Delivered { .. })).collect();
        assert_eq!(delivered.len(), 1);
        assert_eq!(delivered[0].t(), 30);
        assert_eq!(rt.vehicle.drive_time, 30.0);
        assert_eq!(rt.vehicle.location, NodeId(3));
    }

    #[test]
    fn mid_edge_vehicle_is_committed() {
        let net = line(3, 100.0);
        let mut rt = VehicleRuntime::new(vehicle(0, 0, 0.0, 1000.0), 0.0);
        let mut o = Order::new(OrderId(1), NodeId(1), NodeId(2), 0.0, 0.0).unwrap();
        o.status = OrderStatus::Assigned;
        let plan = crate::dispatch::best_route_plan(
            &net,
            PlanStart { node: NodeId(0), time: 0.0 },
            &[],
            &[o.clone()],
            3,
        )
        .unwrap();
        rt.vehicle.load.push(o);
        rt.install_plan(plan, &net);
        advance_vehicle(&mut rt, 50.0);
        assert_eq!(rt.vehicle.location, NodeId(0));
        assert_eq!(rt.vehicle.committed, Some(PlanStart { node: NodeId(1), time: 100.0 }));
        assert_eq!(rt.vehicle.drive_time, 50.0);
    }

    #[test]
    fn empty_stream_only_logs_duty() {
        let net = line(3, 10.0);
        let vs = vec![vehicle(0, 0, 0.0, 600.0), vehicle(1, 2, 100.0, 500.0)];
        let log = run(&net, Vec::new(), vs, SimConfig::default()).unwrap();
        for e in &log.events {
            match e {
                Event::DutyOn { .. } | Event::DutyOff { .. } | Event::Accrual { .. } | Event::Window { .. } => {}
                Event::VehicleFinal { dt, wt, at, .. } => {
                    assert_eq!((*dt, *wt), (0.0, 0.0));
                    assert!(*at > 0.0);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        let offs: Vec<_> = log.events.iter().filter(|e| matches!(e, Event::DutyOff { .. })).map(Event::t).collect();
        assert_eq!(offs, vec![500, 600]);
    }

    #[test]
    fn unsorted_stream_is_rejected() {
        let net = line(3, 10.0);
        let a = Order::new(OrderId(1), NodeId(0), NodeId(1), 50.0, 0.0).unwrap();
        let b = Order::new(OrderId(2), NodeId(0), NodeId(1), 10.0, 0.0).unwrap();
        let err = run(&net, vec![a, b], vec![], SimConfig::default()).err().unwrap();
        assert!(matches!(err, SimError::Unsorted(OrderId(2))));
    }

    #[test]
    fn stale_orders_are_rejected() {
        let net = line(3, 10.0);
        let o = Order::new(OrderId(1), NodeId(0), NodeId(1), 0.0, 0.0).unwrap();
        let cfg = SimConfig { reject_after: 300.0, ..Default::default() };
        let log = run(&net, vec![o], vec![], cfg).unwrap();
        let rej: Vec<_> = log.events.iter().filter(|e| matches!(e, Event::Rejected { .. })).collect();
        assert_eq!(rej.len(), 1);
        assert_eq!(rej[0].t(), 360);
    }

    #[test]
    fn perturbation_counts() {
        let net = line(51, 10.0);
        assert_eq!(net.edge_count(), 100);
        assert_eq!(perturb_travel_times(&net, 0.0, 0.5, 1), net);
        let all = perturb_travel_times(&net, 1.0, 0.5, 1);
        assert!(all.edges().iter().all(|e| e.weights.iter().all(|&w| w == 15.0)));
        let some = perturb_travel_times(&net, 0.3, 0.5, 9);
        let changed = some.edges().iter().zip(net.edges()).filter(|(a, b)| a.weights != b.weights).count();
        assert_eq!(changed, 30);
        assert_eq!(perturb_travel_times(&net, 0.3, 0.5, 9), some);
    }

    #[test]
    fn ndjson_round_trip() {
        let log = EventLog {
            events: vec![
                Event::Placed { t: 3, order: OrderId(1), restaurant: NodeId(2), customer: NodeId(4) },
                Event::Accrual { t: 180, vehicle: VehicleId(0), dt: 0.1 + 0.2, wt: 1.0 / 3.0, at: 180.0 },
            ],
            timings: Vec::new(),
        };
        let text = log.to_ndjson();
        assert!(text.starts_with(r#"{"type":"placed","t":3,"order":1,"restaurant":2,"customer":4}"#));
        assert_eq!(EventLog::from_ndjson(&text).unwrap(), log);
        assert!(matches!(EventLog::from_ndjson("{\"type\":\"nope\"}"), Err(SimError::Log { line: 1, .. })));
    }
}
