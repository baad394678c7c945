//! Output files. Every artifact names the workload manifest hash: JSON files
//! in a field, CSV sidecars in a leading `#` comment, the event log in a
//! header line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fairdispatch::dispatch::PaymentParams;
use fairdispatch::metrics::{
    income_vector, lorenz_points, order_count_percentiles, spatial_heatmap, GridSpec, MetricsReport,
    PercentileMethod, SpatialProperty,
};
use fairdispatch::simulator::{EventLog, WindowTiming};
use fairdispatch::RoadNetwork;
use serde::{Deserialize, Serialize};

pub const EVENTS: &str = "events.ndjson";
pub const METRICS: &str = "metrics.json";
pub const TIMINGS: &str = "timings.csv";
pub const RUN: &str = "run.json";

pub const PERCENTILES: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 90.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventsHeader {
    pub manifest_hash: String,
    pub allocator: String,
}

pub fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn with_hash_comment(hash: &str, csv: &str) -> String {
    format!("# manifest_hash={hash}\n{csv}")
}

pub fn write_events(dir: &Path, header: &EventsHeader, log: &EventLog) -> anyhow::Result<()> {
    let mut body = serde_json::to_string(header)?;
    body.push('\n');
    body.push_str(&log.to_ndjson());
    write(&dir.join(EVENTS), &body)
}

/// Reads an event log written by [`write_events`]; a missing header is allowed.
pub fn read_events(path: &Path) -> anyhow::Result<(Option<EventsHeader>, EventLog)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    let header: Option<EventsHeader> = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .filter(|v| v.get("type").is_none())
        .and_then(|v| serde_json::from_value(v).ok());
    let body = if header.is_some() { text.split_once('\n').map_or("", |p| p.1) } else { &text };
    let shift = usize::from(header.is_some());
    let log = EventLog::from_ndjson(body).map_err(|e| match e {
        fairdispatch::simulator::SimError::Log { line, message } => {
            anyhow::anyhow!("{}: line {}: {message}", path.display(), line + shift)
        }
        other => anyhow::anyhow!("{}: {other}", path.display()),
    })?;
    Ok((header, log))
}

pub fn read_timings(path: &Path) -> anyhow::Result<Vec<WindowTiming>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("t,") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parsed = (|| -> Option<WindowTiming> {
            Some(WindowTiming {
                t: f.first()?.parse().ok()?,
                orders: f.get(1)?.parse().ok()?,
                wall_ms: f.get(2)?.parse().ok()?,
                overflow: f.get(3)?.parse().ok()?,
            })
        })();
        match parsed {
            Some(w) if f.len() == 4 => out.push(w),
            _ => bail!("{}: line {}: malformed timing row", path.display(), i + 1),
        }
    }
    Ok(out)
}

pub fn read_metrics(dir: &Path) -> anyhow::Result<MetricsReport> {
    let path = dir.join(METRICS);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub struct ReportInputs<'a> {
    pub log: &'a EventLog,
    pub net: &'a RoadNetwork,
    pub pay: PaymentParams,
    pub grid: GridSpec,
    pub method: PercentileMethod,
    pub hash: &'a str,
}

/// Writes metrics.json plus the plot-ready sidecars; returns the files written.
pub fn write_report(dir: &Path, inputs: &ReportInputs, report: &MetricsReport) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        write(&path, &body)?;
        written.push(path);
        Ok(())
    };
    put(METRICS.into(), serde_json::to_string_pretty(report)? + "\n")?;

    let mut lorenz = String::from("population_share,income_share\n");
    for (p, s) in lorenz_points(&income_vector(inputs.log, &inputs.pay)) {
        lorenz.push_str(&format!("{p},{s}\n"));
    }
    put("lorenz.csv".into(), with_hash_comment(inputs.hash, &lorenz))?;

    let mut pct = String::from("percentile,orders_delivered\n");
    for (p, v) in order_count_percentiles(inputs.log, &inputs.pay, &PERCENTILES, inputs.method) {
        pct.push_str(&format!("{p},{v}\n"));
    }
    put("percentiles.csv".into(), with_hash_comment(inputs.hash, &pct))?;

    for prop in SpatialProperty::ALL {
        if let Some(h) = spatial_heatmap(inputs.log, inputs.net, &inputs.grid, prop, &inputs.pay) {
            put(format!("heatmap_{}.csv", prop.name()), with_hash_comment(inputs.hash, &h.to_csv()))?;
        }
    }
    if !inputs.log.timings.is_empty() {
        put(TIMINGS.into(), with_hash_comment(inputs.hash, &inputs.log.timings_csv()))?;
    }
    Ok(written)
}
