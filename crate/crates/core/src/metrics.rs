//! Inequality and efficiency metrics over an [`EventLog`].

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dispatch::{income, OrderId, PaymentParams};
use crate::roadnet::{NodeId, RoadNetwork, VehicleId};
use crate::simulator::{Event, EventLog};
use crate::Seconds;

/// Per-vehicle time-normalised income, for vehicles with positive available time.
pub fn income_by_vehicle(log: &EventLog, pay: &PaymentParams) -> Vec<(VehicleId, f64)> {
    let mut out: Vec<(VehicleId, f64)> = log
        .events
        .iter()
        .filter_map(|e| match *e {
            Event::VehicleFinal { vehicle, dt, wt, at, .. } => income(dt, wt, at, pay).map(|x| (vehicle, x)),
            _ => None,
        })
        .collect();
    out.sort_by_key(|&(v, _)| v);
    out
}

pub fn income_vector(log: &EventLog, pay: &PaymentParams) -> Vec<f64> {
    income_by_vehicle(log, pay).into_iter().map(|(_, x)| x).collect()
}

/// Vehicles ordered by ascending income, ties by id.
fn ranked(log: &EventLog, pay: &PaymentParams) -> Vec<(VehicleId, f64)> {
    let mut v = income_by_vehicle(log, pay);
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v
}

/// Bottom and top quartiles by income; `None` with fewer than eight earners.
fn quartiles(log: &EventLog, pay: &PaymentParams) -> Option<(Vec<VehicleId>, Vec<VehicleId>)> {
    let r = ranked(log, pay);
    if r.len() < 8 {
        return None;
    }
    let q = r.len() / 4;
    let bottom = r[..q].iter().map(|p| p.0).collect();
    let top = r[r.len() - q..].iter().map(|p| p.0).collect();
    Some((bottom, top))
}

/// Gini coefficient `Σ_i Σ_j |x_i − x_j| / (2 n Σ x)`; zero when `Σ x = 0`.
pub fn gini(x: &[f64]) -> f64 {
    let n = x.len();
    let total: f64 = x.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    // Σ_i Σ_j |x_i − x_j| = 2 Σ_k (2k − n + 1) x_(k)
    let pair_sum: f64 = s
        .iter()
        .enumerate()
        .map(|(k, &v)| (2.0 * k as f64 - n as f64 + 1.0) * v)
        .sum::<f64>()
        * 2.0;
    (pair_sum / (2.0 * n as f64 * total)).clamp(0.0, 1.0)
}

/// `max − min` income, converted from per-second to per-hour units.
pub fn income_gap(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (hi - lo) * 3600.0
}

/// Cumulative income shares of the sorted population, from (0,0) to (1,1).
pub fn lorenz_points(x: &[f64]) -> Vec<(f64, f64)> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let total: f64 = s.iter().sum();
    let n = s.len() as f64;
    let mut out = vec![(0.0, 0.0)];
    let mut acc = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v;
        let share = if total > 0.0 { acc / total } else { 0.0 };
        out.push(((i + 1) as f64 / n, share));
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    out
}

#[derive(Debug, Clone, Default)]
struct OrderTimes {
    placed: Option<i64>,
    delivered: Option<i64>,
    rejected: bool,
}

fn order_times(log: &EventLog) -> BTreeMap<OrderId, OrderTimes> {
    let mut m: BTreeMap<OrderId, OrderTimes> = BTreeMap::new();
    for e in &log.events {
        match *e {
            Event::Placed { t, order, .. } => m.entry(order).or_default().placed = Some(t),
            Event::Delivered { t, order, .. } => m.entry(order).or_default().delivered = Some(t),
            Event::Rejected { order, .. } => m.entry(order).or_default().rejected = true,
            _ => {}
        }
    }
    m
}

/// Mean delivery time per delivered order in minutes; `None` if nothing was delivered.
pub fn dtpo(log: &EventLog) -> Option<f64> {
    let times: Vec<i64> = order_times(log)
        .values()
        .filter_map(|o| Some(o.delivered? - o.placed?))
        .collect();
    if times.is_empty() {
        return None;
    }
    Some(times.iter().sum::<i64>() as f64 / times.len() as f64 / 60.0)
}

/// Percentage of orders delivered later than `threshold` after placement, or rejected.
pub fn sla_violations(log: &EventLog, threshold: Seconds) -> Option<f64> {
    let m = order_times(log);
    if m.is_empty() {
        return None;
    }
    let bad = m
        .values()
        .filter(|o| {
            o.rejected
                || match (o.placed, o.delivered) {
                    (Some(p), Some(d)) => (d - p) as f64 > threshold,
                    _ => false,
                }
        })
        .count();
    Some(100.0 * bad as f64 / m.len() as f64)
}

pub fn rejection_rate(log: &EventLog) -> Option<f64> {
    let m = order_times(log);
    (!m.is_empty()).then(|| 100.0 * m.values().filter(|o| o.rejected).count() as f64 / m.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub resolution: usize,
}

impl GridSpec {
    pub const DEFAULT_RESOLUTION: usize = 32;

    pub fn for_network(net: &RoadNetwork, resolution: usize) -> Self {
        let (min_x, min_y, mut max_x, mut max_y) = net.bounding_box();
        if max_x <= min_x {
            max_x = min_x + 1.0;
        }
        if max_y <= min_y {
            max_y = min_y + 1.0;
        }
        GridSpec { min_x, min_y, max_x, max_y, resolution: resolution.max(1) }
    }

    pub fn cells(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn cell(&self, x: f64, y: f64) -> (usize, usize) {
        let r = self.resolution;
        let fx = ((x - self.min_x) / (self.max_x - self.min_x) * r as f64).floor();
        let fy = ((y - self.min_y) / (self.max_y - self.min_y) * r as f64).floor();
        (fx.clamp(0.0, (r - 1) as f64) as usize, fy.clamp(0.0, (r - 1) as f64) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialProperty {
    VehicleLoc,
    Restaurant,
    Customer,
}

impl SpatialProperty {
    pub const ALL: [SpatialProperty; 3] =
        [SpatialProperty::VehicleLoc, SpatialProperty::Restaurant, SpatialProperty::Customer];

    pub fn name(&self) -> &'static str {
        match self {
            SpatialProperty::VehicleLoc => "vehicle_loc",
            SpatialProperty::Restaurant => "restaurant",
            SpatialProperty::Customer => "customer",
        }
    }
}

/// Total variation distance `½ Σ |a_i − b_i|` between two distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialHeatmap {
    pub grid: GridSpec,
    /// Distribution for the top-quartile earners.
    pub alpha: Vec<f64>,
    /// Distribution for the bottom-quartile earners.
    pub beta: Vec<f64>,
    pub psi: f64,
}

impl SpatialHeatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_x,cell_y,alpha,beta\n");
        let r = self.grid.resolution;
        for cy in 0..r {
            for cx in 0..r {
                let i = cy * r + cx;
                out.push_str(&format!("{cx},{cy},{},{}\n", self.alpha[i], self.beta[i]));
            }
        }
        out
    }
}

/// Grid histograms of `property` for top- and bottom-quartile earners.
///
/// Returns `None` with fewer than eight earners or when either group has no
/// assignments.
pub fn spatial_heatmap(
    log: &EventLog,
    net: &RoadNetwork,
    grid: &GridSpec,
    property: SpatialProperty,
    pay: &PaymentParams,
) -> Option<SpatialHeatmap> {
    let (bottom, top) = quartiles(log, pay)?;
    let mut group: HashMap<VehicleId, usize> = HashMap::new();
    for v in top {
        group.insert(v, 0);
    }
    for v in bottom {
        group.insert(v, 1);
    }
    let mut endpoints: HashMap<OrderId, (NodeId, NodeId)> = HashMap::new();
    for e in &log.events {
        if let Event::Placed { order, restaurant, customer, .. } = *e {
            endpoints.insert(order, (restaurant, customer));
        }
    }
    let mut hist = [vec![0.0; grid.cells()], vec![0.0; grid.cells()]];
    for e in &log.events {
        if let Event::Assigned { order, vehicle, vehicle_node, .. } = *e {
            let Some(&g) = group.get(&vehicle) else { continue };
            let node = match property {
                SpatialProperty::VehicleLoc => vehicle_node,
                SpatialProperty::Restaurant => endpoints.get(&order)?.0,
                SpatialProperty::Customer => endpoints.get(&order)?.1,
            };
            let (x, y) = net.coord(node);
            let (cx, cy) = grid.cell(x, y);
            hist[g][cy * grid.resolution + cx] += 1.0;
        }
    }
    let [mut alpha, mut beta] = hist;
    for h in [&mut alpha, &mut beta] {
        let total: f64 = h.iter().sum();
        if total == 0.0 {
            return None;
        }
        h.iter_mut().for_each(|v| *v /= total);
    }
    let psi = total_variation(&alpha, &beta);
    Some(SpatialHeatmap { grid: *grid, alpha, beta, psi })
}

pub fn spatial_distance(
    log: &EventLog,
    net: &RoadNetwork,
    grid: &GridSpec,
    property: SpatialProperty,
    pay: &PaymentParams,
) -> Option<f64> {
    spatial_heatmap(log, net, grid, property, pay).map(|h| h.psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentileMethod {
    #[default]
    NearestRank,
    Linear,
}

/// Delivered-order counts at the requested percentiles of the income ranking.
pub fn order_count_percentiles(
    log: &EventLog,
    pay: &PaymentParams,
    percentiles: &[f64],
    method: PercentileMethod,
) -> Vec<(f64, f64)> {
    let mut delivered: HashMap<VehicleId, usize> = HashMap::new();
    for e in &log.events {
        if let Event::Delivered { vehicle, .. } = *e {
            *delivered.entry(vehicle).or_default() += 1;
        }
    }
    let counts: Vec<f64> = ranked(log, pay)
        .iter()
        .map(|(v, _)| delivered.get(v).copied().unwrap_or(0) as f64)
        .collect();
    percentiles.iter().map(|&p| (p, percentile_of(&counts, p, method))).collect()
}

/// Value at percentile `p` of an already-ordered sequence.
pub fn percentile_of(ordered: &[f64], p: f64, method: PercentileMethod) -> f64 {
    let n = ordered.len();
    if n == 0 {
        return f64::NAN;
    }
    match method {
        PercentileMethod::NearestRank => {
            let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
            ordered[rank.min(n) - 1]
        }
        PercentileMethod::Linear => {
            let h = (n - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            ordered[lo] + (h - lo as f64) * (ordered[hi] - ordered[lo])
        }
    }
}

/// Fractions of on-duty time spent in the lunch, dinner and other periods.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodShares {
    pub lunch: f64,
    pub dinner: f64,
    pub other: f64,
}

const LUNCH: (f64, f64) = (11.0 * 3600.0, 14.0 * 3600.0);
const DINNER: (f64, f64) = (19.0 * 3600.0, 23.0 * 3600.0);
const DAY: f64 = 86_400.0;

/// Overlap of `[a, b)` with the daily recurring window `[lo, hi)`.
fn daily_overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let first = (a / DAY).floor() as i64;
    let last = (b / DAY).floor() as i64;
    (first..=last)
        .map(|d| {
            let base = d as f64 * DAY;
            ((b.min(base + hi)) - (a.max(base + lo))).max(0.0)
        })
        .sum()
}

/// Seconds in each period summed over `intervals`.
pub fn period_seconds(intervals: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut lunch = 0.0;
    let mut dinner = 0.0;
    let mut total = 0.0;
    for &(a, b) in intervals {
        lunch += daily_overlap(a, b, LUNCH.0, LUNCH.1);
        dinner += daily_overlap(a, b, DINNER.0, DINNER.1);
        total += (b - a).max(0.0);
    }
    (lunch, dinner, total - lunch - dinner)
}

pub fn period_shares(intervals: &[(f64, f64)]) -> PeriodShares {
    let (lunch, dinner, other) = period_seconds(intervals);
    let total = lunch + dinner + other;
    if total <= 0.0 {
        return PeriodShares::default();
    }
    PeriodShares { lunch: lunch / total, dinner: dinner / total, other: other / total }
}

/// On-duty intervals per vehicle reconstructed from duty events.
pub fn duty_intervals(log: &EventLog) -> BTreeMap<VehicleId, Vec<(f64, f64)>> {
    let mut open: HashMap<VehicleId, i64> = HashMap::new();
    let mut out: BTreeMap<VehicleId, Vec<(f64, f64)>> = BTreeMap::new();
    for e in &log.events {
        match *e {
            Event::DutyOn { t, vehicle } => {
                open.insert(vehicle, t);
            }
            Event::DutyOff { t, vehicle } => {
                if let Some(on) = open.remove(&vehicle) {
                    out.entry(vehicle).or_default().push((on as f64, t as f64));
                }
            }
            _ => {}
        }
    }
    out
}

/// Period shares for the (top, bottom) income quartiles.
pub fn period_histogram(log: &EventLog, pay: &PaymentParams) -> Option<(PeriodShares, PeriodShares)> {
    let (bottom, top) = quartiles(log, pay)?;
    let duty = duty_intervals(log);
    let collect = |vs: &[VehicleId]| -> Vec<(f64, f64)> {
        vs.iter().flat_map(|v| duty.get(v).cloned().unwrap_or_default()).collect()
    };
    Some((period_shares(&collect(&top)), period_shares(&collect(&bottom))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub manifest_hash: Option<String>,
    pub allocator: Option<String>,
    pub orders: usize,
    pub delivered: usize,
    pub rejected: usize,
    pub vehicles_with_income: usize,
    pub gini: f64,
    /// Income gap in pay units per hour.
    pub income_gap_per_hour: f64,
    pub mean_income_per_hour: f64,
    pub dtpo_minutes: Option<f64>,
    pub sla_violation_pct: Option<f64>,
    pub rejection_pct: Option<f64>,
    pub psi_vehicle_loc: Option<f64>,
    pub psi_restaurant: Option<f64>,
    pub psi_customer: Option<f64>,
    pub top_quartile_periods: Option<PeriodShares>,
    pub bottom_quartile_periods: Option<PeriodShares>,
    pub windows: usize,
    pub mean_window_ms: Option<f64>,
    pub max_window_ms: Option<f64>,
    pub overflow_pct: Option<f64>,
}

pub fn report(
    log: &EventLog,
    net: &RoadNetwork,
    pay: &PaymentParams,
    sla: Seconds,
    grid: &GridSpec,
) -> MetricsReport {
    let incomes = income_vector(log, pay);
    let times = order_times(log);
    let psi = |p| spatial_distance(log, net, grid, p, pay);
    let periods = period_histogram(log, pay);
    let wall: Vec<f64> = log.timings.iter().map(|w| w.wall_ms).collect();
    let windows = log.events.iter().filter(|e| matches!(e, Event::Window { .. })).count();
    MetricsReport {
        manifest_hash: None,
        allocator: None,
        orders: times.len(),
        delivered: times.values().filter(|o| o.delivered.is_some()).count(),
        rejected: times.values().filter(|o| o.rejected).count(),
        vehicles_with_income: incomes.len(),
        gini: gini(&incomes),
        income_gap_per_hour: income_gap(&incomes),
        mean_income_per_hour: if incomes.is_empty() {
            0.0
        } else {
            incomes.iter().sum::<f64>() / incomes.len() as f64 * 3600.0
        },
        dtpo_minutes: dtpo(log),
        sla_violation_pct: sla_violations(log, sla),
        rejection_pct: rejection_rate(log),
        psi_vehicle_loc: psi(SpatialProperty::VehicleLoc),
        psi_restaurant: psi(SpatialProperty::Restaurant),
        psi_customer: psi(SpatialProperty::Customer),
        top_quartile_periods: periods.map(|p| p.0),
        bottom_quartile_periods: periods.map(|p| p.1),
        windows,
        mean_window_ms: (!wall.is_empty()).then(|| wall.iter().sum::<f64>() / wall.len() as f64),
        max_window_ms: wall.iter().copied().reduce(f64::max),
        overflow_pct: (!log.timings.is_empty()).then(|| {
            100.0 * log.timings.iter().filter(|w| w.overflow).count() as f64 / log.timings.len() as f64
        }),
    }
}
