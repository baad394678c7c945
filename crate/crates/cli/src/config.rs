//! Command-line options and the JSON config file that mirrors them.
//!
//! Every tunable is an `Option` so that a value can be resolved as
//! flag, then config file, then built-in default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CityOpts {
    /// Road network nodes before component extraction.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub avg_degree: Option<f64>,
    #[arg(long)]
    pub restaurants: Option<usize>,
    #[arg(long)]
    pub vehicles: Option<usize>,
    #[arg(long)]
    pub orders_per_hour: Option<f64>,
    /// Demand multiplier during lunch and dinner.
    #[arg(long)]
    pub peak_multiplier: Option<f64>,
    #[arg(long)]
    pub hotspot_count: Option<usize>,
    /// 0 gives uniform demand.
    #[arg(long)]
    pub hotspot_concentration: Option<f64>,
    #[arg(long)]
    pub sim_hours: Option<f64>,
    #[arg(long)]
    pub start_hour: Option<f64>,
    #[arg(long)]
    pub prep_time_mean: Option<f64>,
    #[arg(long)]
    pub prep_time_std: Option<f64>,
    /// Side of the square city in metres.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Base travel speed in metres per second.
    #[arg(long)]
    pub speed: Option<f64>,
    #[arg(long)]
    pub customer_radius: Option<f64>,
    #[arg(long)]
    pub vehicle_capacity: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SimOpts {
    /// fairfoody, greedy_edt or weighted.
    #[arg(long)]
    pub allocator: Option<String>,
    /// Fairness weight for the weighted allocator, in [0, 1].
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Window length in seconds.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target cluster count as a fraction of the fleet.
    #[arg(long)]
    pub f: Option<f64>,
    /// Largest merge cost increase accepted while clustering, in seconds.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub w1: Option<f64>,
    #[arg(long)]
    pub w2: Option<f64>,
    #[arg(long)]
    pub max_o: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Pending orders older than this many seconds are rejected.
    #[arg(long)]
    pub reject_after: Option<f64>,
    /// Fraction of edges to slow down.
    #[arg(long)]
    pub perturb_fraction: Option<f64>,
    /// Relative slowdown of perturbed edges.
    #[arg(long)]
    pub perturb_inflation: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ReportOpts {
    /// Promised delivery time in seconds.
    #[arg(long)]
    pub sla: Option<f64>,
    /// Heatmap cells per side.
    #[arg(long)]
    pub grid_resolution: Option<usize>,
    /// nearest_rank or linear.
    #[arg(long)]
    pub percentile_method: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub city: CityOpts,
    #[serde(flatten)]
    pub sim: SimOpts,
    #[serde(flatten)]
    pub report: ReportOpts,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let Some(map) = value.as_object() else { bail!("config {} must be a JSON object", path.display()) };
        let known = serde_json::to_value(FileConfig::default())?;
        let known = known.as_object().expect("config serialises to an object");
        for key in map.keys() {
            if !known.contains_key(key) {
                bail!("config {}: unknown key {key:?}", path.display());
            }
        }
        serde_json::from_value(value).with_context(|| format!("config {}", path.display()))
    }
}

macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.clone(); } )*
    };
}

impl CityOpts {
    /// Fills unset flags from the config file.
    pub fn overlay(&mut self, file: &CityOpts) {
        overlay!(self, file; nodes, avg_degree, restaurants, vehicles, orders_per_hour, peak_multiplier,
            hotspot_count, hotspot_concentration, sim_hours, start_hour, prep_time_mean, prep_time_std,
            extent, speed, customer_radius, vehicle_capacity);
    }
}

impl SimOpts {
    pub fn overlay(&mut self, file: &SimOpts) {
        overlay!(self, file; allocator, lambda, gamma, delta, f, eta, w1, w2, max_o, omega, reject_after,
            perturb_fraction, perturb_inflation);
    }
}

impl ReportOpts {
    pub fn overlay(&mut self, file: &ReportOpts) {
        overlay!(self, file; sla, grid_resolution, percentile_method);
    }
}
