//! Seeded synthetic city generator and the on-disk workload bundle.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispatch::{DispatchError, DutyInterval, Order, OrderId, Vehicle};
use crate::roadnet::{Edge, NetworkError, NodeId, RoadNetwork, VehicleId, SLOTS};
use crate::Seconds;

pub const FORMAT_VERSION: u32 = 1;

const LUNCH_HOURS: (u32, u32) = (11, 14);
const DINNER_HOURS: (u32, u32) = (19, 23);
const MIN_PREP: Seconds = 60.0;
const SHIFT_TAIL: Seconds = 3600.0;

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: format error at byte {offset}: {message}")]
    Format { file: String, offset: u64, message: String },
    #[error("unsupported bundle format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CityParams {
    pub nodes: usize,
    pub avg_degree: f64,
    pub restaurants: usize,
    pub vehicles: usize,
    pub orders_per_hour: f64,
    pub peak_multiplier: f64,
    pub hotspot_count: usize,
    /// Share of restaurants drawn from hotspots; 0 gives a uniform city.
    pub hotspot_concentration: f64,
    pub sim_hours: f64,
    /// Hour of day at which the simulated horizon starts.
    pub start_hour: f64,
    pub prep_time_mean: Seconds,
    pub prep_time_std: Seconds,
    /// Side of the square city, metres.
    pub extent: f64,
    /// Free-flow speed, metres per second.
    pub speed: f64,
    /// Maximum restaurant-to-customer straight-line distance, metres.
    pub customer_radius: f64,
    pub vehicle_capacity: usize,
    pub seed: u64,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            nodes: 1000,
            avg_degree: 5.0,
            restaurants: 80,
            vehicles: 220,
            orders_per_hour: 200.0,
            peak_multiplier: 2.0,
            hotspot_count: 5,
            hotspot_concentration: 0.5,
            sim_hours: 8.0,
            start_hour: 10.0,
            prep_time_mean: 480.0,
            prep_time_std: 180.0,
            extent: 8000.0,
            speed: 6.0,
            customer_radius: 1500.0,
            vehicle_capacity: 3,
            seed: 1,
        }
    }
}

impl CityParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: &str| Err(WorkloadError::Params(m.to_string()));
        if self.nodes < 2 {
            return bad("nodes must be at least 2");
        }
        if self.restaurants == 0 || self.vehicles == 0 || self.hotspot_count == 0 || self.vehicle_capacity == 0 {
            return bad("counts must be at least 1");
        }
        let positive = [
            ("avg_degree", self.avg_degree),
            ("orders_per_hour", self.orders_per_hour),
            ("peak_multiplier", self.peak_multiplier),
            ("sim_hours", self.sim_hours),
            ("extent", self.extent),
            ("speed", self.speed),
            ("customer_radius", self.customer_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.hotspot_concentration) {
            return bad("hotspot_concentration must lie in [0, 1]");
        }
        if !(self.start_hour >= 0.0 && self.start_hour.is_finite()) {
            return bad("start_hour must be non-negative");
        }
        if !(self.prep_time_mean.is_finite() && self.prep_time_std >= 0.0 && self.prep_time_std.is_finite()) {
            return bad("prep time distribution is invalid");
        }
        Ok(())
    }

    pub fn horizon(&self) -> (f64, f64) {
        let t0 = (self.start_hour * 3600.0).round();
        (t0, t0 + (self.sim_hours * 3600.0).round())
    }
}

/// Order-rate multiplier at time `t` (seconds since midnight of day 0).
pub fn demand_multiplier(t: f64, peak: f64) -> f64 {
    let hour = (t.rem_euclid(86_400.0) / 3600.0).floor() as u32;
    let in_window = |(a, b): (u32, u32)| hour >= a && hour < b;
    if in_window(LUNCH_HOURS) || in_window(DINNER_HOURS) {
        peak
    } else {
        1.0
    }
}

/// Congestion factor applied to free-flow time in each hourly slot.
fn slot_factor(slot: usize) -> f64 {
    match slot {
        8 | 9 | 17 | 18 | 19 => 1.3,
        12 | 13 | 20 => 1.15,
        0..=5 => 0.9,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub net: RoadNetwork,
    pub restaurants: Vec<NodeId>,
    pub vehicles: Vec<Vehicle>,
    pub orders: Vec<Order>,
    /// Generator parameters; `None` for hand-written bundles.
    pub params: Option<CityParams>,
}

impl Workload {
    /// Hash over the serialized bundle contents.
    pub fn manifest_hash(&self) -> String {
        let files = self.render();
        let mut h = Sha256::new();
        for (name, body) in &files.files {
            h.update(name.as_bytes());
            h.update([0]);
            h.update(body.as_bytes());
            h.update([0]);
        }
        h.update(serde_json::to_string(&self.params).unwrap_or_default().as_bytes());
        format!("{:x}", h.finalize())
    }

    fn render(&self) -> Rendered {
        let mut restaurants = String::from("restaurant_id,node_id\n");
        for (i, r) in self.restaurants.iter().enumerate() {
            restaurants.push_str(&format!("{i},{}\n", self.net.label(*r)));
        }
        let mut vehicles = String::from("vehicle_id,start_node,duty_on_s,duty_off_s,capacity\n");
        for v in &self.vehicles {
            for d in &v.duty {
                vehicles.push_str(&format!(
                    "{},{},{},{},{}\n",
                    v.id.0,
                    self.net.label(v.location),
                    d.on,
                    d.off,
                    v.capacity
                ));
            }
        }
        let mut orders = String::from("order_id,restaurant_node,customer_node,placed_at_s,prep_time_s\n");
        for o in &self.orders {
            orders.push_str(&format!(
                "{},{},{},{},{}\n",
                o.id.0,
                self.net.label(o.restaurant),
                self.net.label(o.customer),
                o.placed_at,
                o.prep_time
            ));
        }
        Rendered {
            files: vec![
                ("nodes.csv", self.net.nodes_csv()),
                ("edges.csv", self.net.edges_csv()),
                ("restaurants.csv", restaurants),
                ("vehicles.csv", vehicles),
                ("orders.csv", orders),
            ],
        }
    }
}

struct Rendered {
    files: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub seed: Option<u64>,
    pub params: Option<CityParams>,
    pub counts: BundleCounts,
    pub manifest_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleCounts {
    pub nodes: usize,
    pub edges: usize,
    pub restaurants: usize,
    pub vehicles: usize,
    pub orders: usize,
}

/// Builds a city, restaurants, fleet and order stream from `params`.
pub fn generate_city(params: &CityParams) -> Result<Workload, WorkloadError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let net = random_geometric_network(params, &mut rng)?;
    let (restaurants, popularity) = place_restaurants(params, &net, &mut rng);
    let vehicles = place_vehicles(params, &net, &restaurants, &mut rng)?;

    let (t0, t1) = params.horizon();
    let peak = params.peak_multiplier.max(1.0);
    let lambda_max = params.orders_per_hour * peak / 3600.0;
    let pick = WeightedIndex::new(&popularity).map_err(|e| WorkloadError::Generation(e.to_string()))?;
    let prep = Normal::new(params.prep_time_mean, params.prep_time_std)
        .map_err(|e| WorkloadError::Params(e.to_string()))?;
    let mut orders = Vec::new();
    let mut t = t0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / lambda_max;
        if t >= t1 {
            break;
        }
        let accept: f64 = rng.random();
        if accept * peak >= demand_multiplier(t, params.peak_multiplier) {
            continue;
        }
        let restaurant = restaurants[pick.sample(&mut rng)];
        let customer = pick_customer(params, &net, restaurant, &mut rng);
        if customer == restaurant {
            continue;
        }
        let mut p = MIN_PREP;
        for _ in 0..64 {
            let s: f64 = prep.sample(&mut rng);
            if s >= MIN_PREP {
                p = s;
                break;
            }
        }
        let id = OrderId(orders.len() as u32);
        orders.push(Order::new(id, restaurant, customer, t.floor(), p.round())?);
    }
    Ok(Workload { net, restaurants, vehicles, orders, params: Some(params.clone()) })
}

fn random_geometric_network(params: &CityParams, rng: &mut ChaCha8Rng) -> Result<RoadNetwork, WorkloadError> {
    let n = params.nodes;
    let side = params.extent;
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side)).collect();
    let radius = (params.avg_degree * side * side / (std::f64::consts::PI * n as f64)).sqrt();

    let cells = ((side / radius).floor() as usize).max(1);
    let cell_of = |p: (f64, f64)| {
        let cx = ((p.0 / side * cells as f64) as usize).min(cells - 1);
        let cy = ((p.1 / side * cells as f64) as usize).min(cells - 1);
        (cx, cy)
    };
    let mut grid: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(cell_of(*p)).or_default().push(i);
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &p) in pts.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        for gx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
            for gy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                for &j in grid.get(&(gx, gy)).into_iter().flatten() {
                    if j > i && dist(p, pts[j]) <= radius {
                        adj[i].push(j);
                        adj[j].push(i);
                    }
                }
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }

    // largest connected component, ties to the one containing the smallest index
    let mut comp = vec![usize::MAX; n];
    let mut best: (usize, usize) = (0, usize::MAX);
    let mut ncomp = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut q = VecDeque::from([s]);
        comp[s] = ncomp;
        while let Some(u) = q.pop_front() {
            size += 1;
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = ncomp;
                    q.push_back(v);
                }
            }
        }
        if size > best.0 {
            best = (size, ncomp);
        }
        ncomp += 1;
    }
    if best.0 < 2 {
        return Err(WorkloadError::Generation("giant component has fewer than two nodes".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| comp[i] == best.1).collect();
    let mut remap = vec![u32::MAX; n];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new as u32;
    }

    let mut edges = Vec::new();
    for &u in &keep {
        for &v in &adj[u] {
            let free = dist(pts[u], pts[v]) / params.speed;
            let jitter = rng.random_range(0.85..1.2);
            let mut weights = [0.0; SLOTS];
            for (s, w) in weights.iter_mut().enumerate() {
                *w = (free * jitter * slot_factor(s)).round().max(1.0);
            }
            edges.push(Edge { src: NodeId(remap[u]), dst: NodeId(remap[v]), weights });
        }
    }
    let labels = (0..keep.len()).map(|i| i.to_string()).collect();
    let coords = keep.iter().map(|&i| pts[i]).collect();
    Ok(RoadNetwork::from_parts(labels, coords, edges)?)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Restaurant nodes with their order popularity weights.
fn place_restaurants(params: &CityParams, net: &RoadNetwork, rng: &mut ChaCha8Rng) -> (Vec<NodeId>, Vec<f64>) {
    let n = net.node_count();
    let centres: Vec<(f64, f64)> = (0..params.hotspot_count)
        .map(|_| net.coord(NodeId(rng.random_range(0..n) as u32)))
        .collect();
    let spread = Normal::new(0.0, params.extent * 0.06).expect("positive spread");
    let target = params.restaurants.min(n);
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(target);
    let mut weight = Vec::with_capacity(target);
    let mut attempts = 0;
    while out.len() < target {
        attempts += 1;
        let hot = rng.random::<f64>() < params.hotspot_concentration;
        let node = if hot {
            let c = centres[rng.random_range(0..centres.len())];
            net.snap_to_node(c.0 + spread.sample(rng), c.1 + spread.sample(rng))
        } else {
            NodeId(rng.random_range(0..n) as u32)
        };
        if taken[node.index()] && attempts < target * 50 {
            continue;
        }
        if taken[node.index()] {
            // give up on distinctness, fall back to the first free node
            match taken.iter().position(|t| !t) {
                Some(i) => {
                    taken[i] = true;
                    out.push(NodeId(i as u32));
                    weight.push(1.0);
                }
                None => break,
            }
            continue;
        }
        taken[node.index()] = true;
        out.push(node);
        weight.push(if hot { 1.0 + 4.0 * params.hotspot_concentration } else { 1.0 });
    }
    (out, weight)
}

/// Drivers log in near a restaurant with probability `hotspot_concentration`,
/// anywhere otherwise.
fn place_vehicles(
    params: &CityParams,
    net: &RoadNetwork,
    restaurants: &[NodeId],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vehicle>, WorkloadError> {
    let n = net.node_count();
    let spread = Normal::new(0.0, params.extent * 0.06).expect("positive spread");
    let (t0, t1) = params.horizon();
    // shifts may run past the last order so late orders can still be served
    let t1 = t1 + SHIFT_TAIL;
    let span = t1 - t0;
    let mut out = Vec::with_capacity(params.vehicles);
    for i in 0..params.vehicles {
        let node = if rng.random::<f64>() < params.hotspot_concentration {
            let (x, y) = net.coord(restaurants[rng.random_range(0..restaurants.len())]);
            net.snap_to_node(x + spread.sample(rng), y + spread.sample(rng))
        } else {
            NodeId(rng.random_range(0..n) as u32)
        };
        let (on, off) = if i == 0 || span <= 4.0 * 3600.0 {
            (t0, t1)
        } else {
            let len = rng.random_range(4.0 * 3600.0..=span.min(8.0 * 3600.0)).round();
            let start = (t0 + rng.random::<f64>() * (span - len)).round();
            (start, start + len)
        };
        let v = Vehicle::new(VehicleId(i as u32), node, vec![DutyInterval { on, off }], params.vehicle_capacity)?;
        out.push(v);
    }
    Ok(out)
}

fn pick_customer(params: &CityParams, net: &RoadNetwork, restaurant: NodeId, rng: &mut ChaCha8Rng) -> NodeId {
    let (rx, ry) = net.coord(restaurant);
    for _ in 0..16 {
        let r = params.customer_radius * rng.random::<f64>().sqrt();
        let a = rng.random::<f64>() * std::f64::consts::TAU;
        let c = net.snap_to_node(rx + r * a.cos(), ry + r * a.sin());
        if c != restaurant {
            return c;
        }
    }
    net.out_edges(restaurant).first().map_or(restaurant, |&e| net.edge(e).dst)
}

/// Writes the bundle into `dir`, creating it if needed.
pub fn write_workload(w: &Workload, dir: &Path) -> Result<BundleManifest, WorkloadError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| WorkloadError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, body) in &w.render().files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io(&p))?;
    }
    let manifest = BundleManifest {
        format_version: FORMAT_VERSION,
        seed: w.params.as_ref().map(|p| p.seed),
        params: w.params.clone(),
        counts: BundleCounts {
            nodes: w.net.node_count(),
            edges: w.net.edge_count(),
            restaurants: w.restaurants.len(),
            vehicles: w.vehicles.len(),
            orders: w.orders.len(),
        },
        manifest_hash: w.manifest_hash(),
    };
    let p = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(&p, body).map_err(io(&p))?;
    Ok(manifest)
}

fn read_file(dir: &Path, name: &str) -> Result<String, WorkloadError> {
    let path = dir.join(name);
    let body = fs::read_to_string(&path).map_err(|source| WorkloadError::Io { path, source })?;
    if !body.is_empty() && !body.ends_with('\n') {
        return Err(WorkloadError::Format {
            file: name.into(),
            offset: body.len() as u64,
            message: "file is truncated (no final newline)".into(),
        });
    }
    Ok(body)
}

fn format_err(file: &str, offset: u64, message: impl Into<String>) -> WorkloadError {
    WorkloadError::Format { file: file.into(), offset, message: message.into() }
}

fn csv_rows(file: &str, body: &str) -> Result<Vec<(u64, csv::StringRecord)>, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let off = e.position().map_or(0, |p| p.byte());
            format_err(file, off, e.to_string())
        })?;
        rows.push((rec.position().map_or(0, |p| p.byte()), rec));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(file: &str, off: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, WorkloadError> {
    rec.get(i)
        .ok_or_else(|| format_err(file, off, format!("missing field {name}")))?
        .parse()
        .map_err(|_| format_err(file, off, format!("cannot parse {name} {:?}", &rec[i])))
}

/// Reads a bundle written by [`write_workload`] or by hand.
pub fn read_workload(dir: &Path) -> Result<(Workload, BundleManifest), WorkloadError> {
    let mbody = read_file(dir, "manifest.json")?;
    let manifest: BundleManifest = serde_json::from_str(&mbody).map_err(|e| {
        let off: usize = mbody.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
        format_err("manifest.json", (off + e.column().saturating_sub(1)) as u64, e.to_string())
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(WorkloadError::Version { found: manifest.format_version, expected: FORMAT_VERSION });
    }

    let nodes = read_file(dir, "nodes.csv")?;
    let edges = read_file(dir, "edges.csv")?;
    let net = RoadNetwork::load(&nodes, &edges)?;
    let lookup = |file: &str, off: u64, label: &str| {
        net.node_by_label(label)
            .ok_or_else(|| format_err(file, off, format!("unknown node {label:?}")))
    };

    let body = read_file(dir, "restaurants.csv")?;
    let mut restaurants = Vec::new();
    for (off, rec) in csv_rows("restaurants.csv", &body)? {
        let label = rec.get(1).ok_or_else(|| format_err("restaurants.csv", off, "missing node_id"))?;
        restaurants.push(lookup("restaurants.csv", off, label)?);
    }

    let body = read_file(dir, "vehicles.csv")?;
    let mut fleet: Vec<(u32, NodeId, Vec<DutyInterval>, usize)> = Vec::new();
    for (off, rec) in csv_rows("vehicles.csv", &body)? {
        let f = "vehicles.csv";
        let id: u32 = field(f, off, &rec, 0, "vehicle_id")?;
        let node = lookup(f, off, rec.get(1).unwrap_or(""))?;
        let on: f64 = field(f, off, &rec, 2, "duty_on_s")?;
        let off_t: f64 = field(f, off, &rec, 3, "duty_off_s")?;
        let cap: usize = field(f, off, &rec, 4, "capacity")?;
        match fleet.last_mut() {
            Some(last) if last.0 == id => {
                if last.1 != node || last.3 != cap {
                    return Err(format_err(f, off, "vehicle rows disagree on start node or capacity"));
                }
                last.2.push(DutyInterval { on, off: off_t });
            }
            _ => {
                if fleet.iter().any(|v| v.0 == id) {
                    return Err(format_err(f, off, "vehicle rows are not contiguous"));
                }
                fleet.push((id, node, vec![DutyInterval { on, off: off_t }], cap));
            }
        }
    }
    let vehicles = fleet
        .into_iter()
        .map(|(id, node, duty, cap)| Vehicle::new(VehicleId(id), node, duty, cap))
        .collect::<Result<Vec<_>, _>>()?;

    let body = read_file(dir, "orders.csv")?;
    let mut orders = Vec::new();
    for (off, rec) in csv_rows("orders.csv", &body)? {
        let f = "orders.csv";
        let id: u32 = field(f, off, &rec, 0, "order_id")?;
        let r = lookup(f, off, rec.get(1).unwrap_or(""))?;
        let c = lookup(f, off, rec.get(2).unwrap_or(""))?;
        let placed: f64 = field(f, off, &rec, 3, "placed_at_s")?;
        let prep: f64 = field(f, off, &rec, 4, "prep_time_s")?;
        orders.push(Order::new(OrderId(id), r, c, placed, prep)?);
    }

    let counts = BundleCounts {
        nodes: net.node_count(),
        edges: net.edge_count(),
        restaurants: restaurants.len(),
        vehicles: vehicles.len(),
        orders: orders.len(),
    };
    if counts != manifest.counts {
        return Err(format_err(
            "manifest.json",
            0,
            format!("record counts {counts:?} do not match manifest {:?}; a file may be truncated", manifest.counts),
        ));
    }
    let w = Workload { net, restaurants, vehicles, orders, params: manifest.params.clone() };
    Ok((w, manifest))
}

/// Copy of `params` with the fleet scaled by `factor` (at least one vehicle).
pub fn scale_fleet(params: &CityParams, factor: f64) -> CityParams {
    CityParams { vehicles: ((params.vehicles as f64 * factor).round() as usize).max(1), ..params.clone() }
}
