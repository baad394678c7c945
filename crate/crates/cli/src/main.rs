mod artifacts;
mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use fairdispatch::allocator::{AllocatorConfig, AllocatorKind};
use fairdispatch::dispatch::PaymentParams;
use fairdispatch::metrics::{report, GridSpec, MetricsReport, PercentileMethod};
use fairdispatch::simulator::{perturb_travel_times, run, SimConfig, SimError};
use fairdispatch::workload::{generate_city, read_workload, write_workload, CityParams, Workload};
use serde::Serialize;

use artifacts::{EventsHeader, ReportInputs};
use config::{CityOpts, FileConfig, ReportOpts, SimOpts};

#[derive(Debug, Parser)]
#[command(name = "fairdispatch", version, about = "Food-delivery dispatch simulator with fairness-aware allocation")]
struct Cli {
    /// Seed for city generation and travel-time perturbation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for allocator weight evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// JSON file with defaults for any of the flags, keyed by flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic city workload bundle.
    Generate(GenerateArgs),
    /// Simulate a workload and write the event log and metrics.
    Simulate(SimulateArgs),
    /// Tabulate the metrics of several runs of one workload.
    Compare(CompareArgs),
    /// Recompute metrics from an event log.
    Metrics(MetricsArgs),
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[command(flatten)]
    city: CityOpts,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Workload bundle directory.
    workload: PathBuf,
    #[command(flatten)]
    sim: SimOpts,
    #[command(flatten)]
    report: ReportOpts,
}

#[derive(Debug, clap::Args)]
struct CompareArgs {
    /// Run directories holding metrics.json.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct MetricsArgs {
    /// events.ndjson, or a run directory containing it.
    events: PathBuf,
    /// Workload bundle the events were simulated on.
    #[arg(long)]
    workload: PathBuf,
    #[command(flatten)]
    report: ReportOpts,
}

/// A failure together with its exit code class.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn usage_error(msg: impl Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

struct Globals {
    seed: Option<u64>,
    output: Option<PathBuf>,
    file: FileConfig,
}

impl Globals {
    fn output(&self, fallback: Option<&Path>) -> Result<PathBuf, Failure> {
        self.output
            .clone()
            .or_else(|| fallback.map(Path::to_path_buf))
            .ok_or_else(|| usage_error("--output is required"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, err) = match &f {
                Failure::Usage(e) => ("usage error", e),
                Failure::Data(e) => ("data error", e),
                Failure::Internal(e) => ("internal error", e),
            };
            eprintln!("fairdispatch: {kind}: {err:#}");
            ExitCode::from(f.code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).usage()?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(usage_error("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().internal()?;
    }
    let globals = Globals { seed: cli.seed.or(file.seed), output: cli.output.or(file.output.clone()), file };
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &globals),
        Command::Simulate(a) => cmd_simulate(a, &globals),
        Command::Compare(a) => cmd_compare(a, &globals),
        Command::Metrics(a) => cmd_metrics(a, &globals),
    }
}

fn city_params(mut o: CityOpts, g: &Globals) -> CityParams {
    o.overlay(&g.file.city);
    let d = CityParams::default();
    CityParams {
        nodes: o.nodes.unwrap_or(d.nodes),
        avg_degree: o.avg_degree.unwrap_or(d.avg_degree),
        restaurants: o.restaurants.unwrap_or(d.restaurants),
        vehicles: o.vehicles.unwrap_or(d.vehicles),
        orders_per_hour: o.orders_per_hour.unwrap_or(d.orders_per_hour),
        peak_multiplier: o.peak_multiplier.unwrap_or(d.peak_multiplier),
        hotspot_count: o.hotspot_count.unwrap_or(d.hotspot_count),
        hotspot_concentration: o.hotspot_concentration.unwrap_or(d.hotspot_concentration),
        sim_hours: o.sim_hours.unwrap_or(d.sim_hours),
        start_hour: o.start_hour.unwrap_or(d.start_hour),
        prep_time_mean: o.prep_time_mean.unwrap_or(d.prep_time_mean),
        prep_time_std: o.prep_time_std.unwrap_or(d.prep_time_std),
        extent: o.extent.unwrap_or(d.extent),
        speed: o.speed.unwrap_or(d.speed),
        customer_radius: o.customer_radius.unwrap_or(d.customer_radius),
        vehicle_capacity: o.vehicle_capacity.unwrap_or(d.vehicle_capacity),
        seed: g.seed.unwrap_or(d.seed),
    }
}

fn print_table(rows: &[(&str, String)]) {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("  {k:<w$}  {v}");
    }
}

fn cmd_generate(a: GenerateArgs, g: &Globals) -> Result<(), Failure> {
    let params = city_params(a.city, g);
    params.validate().usage()?;
    let out = g.output(None)?;
    let w = generate_city(&params).map_err(|e| Failure::Internal(e.into()))?;
    let m = write_workload(&w, &out).data()?;
    let prep = w.orders.iter().map(|o| o.prep_time).sum::<f64>() / w.orders.len().max(1) as f64 / 60.0;
    println!("workload written to {}", out.display());
    print_table(&[
        ("restaurants", m.counts.restaurants.to_string()),
        ("vehicles", m.counts.vehicles.to_string()),
        ("orders", m.counts.orders.to_string()),
        ("food prep. time (avg. min)", format!("{prep:.2}")),
        ("nodes", m.counts.nodes.to_string()),
        ("edges", m.counts.edges.to_string()),
        ("manifest hash", m.manifest_hash.clone()),
    ]);
    Ok(())
}

fn load_workload(dir: &Path) -> Result<(Workload, String), Failure> {
    let (w, m) = read_workload(dir).with_context(|| format!("loading workload {}", dir.display())).data()?;
    let hash = if m.manifest_hash.is_empty() { w.manifest_hash() } else { m.manifest_hash };
    Ok((w, hash))
}

fn allocator_kind(name: &str, lambda: Option<f64>) -> Result<AllocatorKind, Failure> {
    let kind = match name {
        "fairfoody" => AllocatorKind::Fairfoody,
        "greedy_edt" | "greedy-edt" | "greedy" => AllocatorKind::GreedyEdt,
        "weighted" => AllocatorKind::Weighted {
            lambda: lambda.ok_or_else(|| usage_error("--lambda is required with --allocator weighted"))?,
        },
        other => {
            return Err(usage_error(format!(
                "unknown allocator {other:?} (expected fairfoody, greedy_edt or weighted)"
            )))
        }
    };
    if lambda.is_some() && !matches!(kind, AllocatorKind::Weighted { .. }) {
        return Err(usage_error("--lambda only applies to --allocator weighted"));
    }
    Ok(kind)
}

fn percentile_method(name: Option<&str>) -> Result<PercentileMethod, Failure> {
    match name {
        None | Some("nearest_rank") => Ok(PercentileMethod::NearestRank),
        Some("linear") => Ok(PercentileMethod::Linear),
        Some(other) => Err(usage_error(format!("unknown percentile method {other:?}"))),
    }
}

#[derive(Debug, Serialize)]
struct Perturbation {
    fraction: f64,
    inflation: f64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool_version: &'static str,
    workload: PathBuf,
    manifest_hash: String,
    output: PathBuf,
    allocator: String,
    lambda: Option<f64>,
    delta: f64,
    sla: f64,
    reject_after: f64,
    gamma: f64,
    f: f64,
    eta: f64,
    w1: f64,
    w2: f64,
    max_o: usize,
    omega: f64,
    seed: u64,
    perturbation: Option<Perturbation>,
}

fn sim_config(mut o: SimOpts, sla: Option<f64>, g: &Globals) -> Result<SimConfig, Failure> {
    o.overlay(&g.file.sim);
    let d = SimConfig::default();
    let da = AllocatorConfig::default();
    let pay = PaymentParams::new(o.w1.unwrap_or(da.pay.w1), o.w2.unwrap_or(da.pay.w2)).usage()?;
    let cfg = SimConfig {
        delta: o.delta.unwrap_or(d.delta),
        sla: sla.unwrap_or(d.sla),
        reject_after: o.reject_after.unwrap_or(d.reject_after),
        allocator: allocator_kind(o.allocator.as_deref().unwrap_or("fairfoody"), o.lambda)?,
        allocator_cfg: AllocatorConfig {
            gamma: o.gamma.unwrap_or(da.gamma),
            f: o.f.unwrap_or(da.f),
            eta: o.eta.unwrap_or(da.eta),
            pay,
            max_o: o.max_o.unwrap_or(da.max_o),
            omega: o.omega.unwrap_or(da.omega),
            merge_rule: da.merge_rule,
        },
        seed: g.seed.unwrap_or(d.seed),
    };
    cfg.validate().usage()?;
    Ok(cfg)
}

fn grid_for(net: &fairdispatch::RoadNetwork, res: Option<usize>) -> Result<GridSpec, Failure> {
    let res = res.unwrap_or(GridSpec::DEFAULT_RESOLUTION);
    if res == 0 {
        return Err(usage_error("--grid-resolution must be positive"));
    }
    Ok(GridSpec::for_network(net, res))
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

fn print_summary(r: &MetricsReport) {
    print_table(&[
        ("orders", format!("{} ({} delivered, {} rejected)", r.orders, r.delivered, r.rejected)),
        ("gini", format!("{:.4}", r.gini)),
        ("income gap (per hour)", format!("{:.2}", r.income_gap_per_hour)),
        ("DTPO (min)", fmt_opt(r.dtpo_minutes, 2)),
        ("SLA-V (%)", fmt_opt(r.sla_violation_pct, 2)),
        ("mean window (ms)", fmt_opt(r.mean_window_ms, 2)),
        ("max window (ms)", fmt_opt(r.max_window_ms, 2)),
        ("overflow (%)", fmt_opt(r.overflow_pct, 2)),
    ]);
}

fn cmd_simulate(a: SimulateArgs, g: &Globals) -> Result<(), Failure> {
    let mut ropts = a.report;
    ropts.overlay(&g.file.report);
    let mut sopts = a.sim;
    sopts.overlay(&g.file.sim);
    let (fraction, inflation) = (sopts.perturb_fraction, sopts.perturb_inflation);
    let cfg = sim_config(sopts, ropts.sla, g)?;
    let method = percentile_method(ropts.percentile_method.as_deref())?;
    let out = g.output(None)?;

    let perturbation = match (fraction, inflation) {
        (None, None) => None,
        (f, i) => {
            let (fraction, inflation) = (f.unwrap_or(0.3), i.unwrap_or(0.5));
            if !(0.0..=1.0).contains(&fraction) || !(inflation >= 0.0 && inflation.is_finite()) {
                return Err(usage_error("perturbation needs a fraction in [0, 1] and a non-negative inflation"));
            }
            Some(Perturbation { fraction, inflation, seed: cfg.seed })
        }
    };

    let (w, hash) = load_workload(&a.workload)?;
    let net = match &perturbation {
        Some(p) => perturb_travel_times(&w.net, p.fraction, p.inflation, p.seed),
        None => w.net.clone(),
    };
    let grid = grid_for(&net, ropts.grid_resolution)?;
    let log = run(&net, w.orders.clone(), w.vehicles.clone(), cfg).map_err(|e| match e {
        SimError::Unsorted(_) => Failure::Data(e.into()),
        other => Failure::Internal(other.into()),
    })?;

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())).data()?;
    let name = cfg.allocator.name();
    let mut r = report(&log, &net, &cfg.allocator_cfg.pay, cfg.sla, &grid);
    r.manifest_hash = Some(hash.clone());
    r.allocator = Some(name.clone());

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        workload: a.workload.clone(),
        manifest_hash: hash.clone(),
        output: out.clone(),
        allocator: name.clone(),
        lambda: match cfg.allocator {
            AllocatorKind::Weighted { lambda } => Some(lambda),
            _ => None,
        },
        delta: cfg.delta,
        sla: cfg.sla,
        reject_after: cfg.reject_after,
        gamma: cfg.allocator_cfg.gamma,
        f: cfg.allocator_cfg.f,
        eta: cfg.allocator_cfg.eta,
        w1: cfg.allocator_cfg.pay.w1,
        w2: cfg.allocator_cfg.pay.w2,
        max_o: cfg.allocator_cfg.max_o,
        omega: cfg.allocator_cfg.omega,
        seed: cfg.seed,
        perturbation,
    };
    artifacts::write(&out.join(artifacts::RUN), &(serde_json::to_string_pretty(&manifest).internal()? + "\n"))
        .data()?;
    artifacts::write_events(&out, &EventsHeader { manifest_hash: hash.clone(), allocator: name.clone() }, &log)
        .data()?;
    let inputs = ReportInputs { log: &log, net: &net, pay: cfg.allocator_cfg.pay, grid, method, hash: &hash };
    artifacts::write_report(&out, &inputs, &r).data()?;

    println!("{name} on {} -> {}", a.workload.display(), out.display());
    print_summary(&r);
    Ok(())
}

fn cmd_metrics(a: MetricsArgs, g: &Globals) -> Result<(), Failure> {
    let mut ropts = a.report;
    ropts.overlay(&g.file.report);
    let method = percentile_method(ropts.percentile_method.as_deref())?;
    let events = if a.events.is_dir() { a.events.join(artifacts::EVENTS) } else { a.events.clone() };
    let run_dir = events.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = g.output(Some(&run_dir))?;

    let (w, hash) = load_workload(&a.workload)?;
    let (header, mut log) = artifacts::read_events(&events).data()?;
    if let Some(h) = &header {
        if h.manifest_hash != hash {
            return Err(Failure::Data(anyhow!(
                "{} was produced on workload {} but {} has hash {hash}",
                events.display(),
                h.manifest_hash,
                a.workload.display()
            )));
        }
    }
    let timings = run_dir.join(artifacts::TIMINGS);
    if timings.exists() {
        log.timings = artifacts::read_timings(&timings).data()?;
    }
    let grid = grid_for(&w.net, ropts.grid_resolution)?;
    let pay = PaymentParams::default();
    let sla = ropts.sla.unwrap_or(SimConfig::default().sla);
    let mut r = report(&log, &w.net, &pay, sla, &grid);
    r.manifest_hash = Some(hash.clone());
    r.allocator = header.map(|h| h.allocator);

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())).data()?;
    let inputs = ReportInputs { log: &log, net: &w.net, pay, grid, method, hash: &hash };
    artifacts::write_report(&out, &inputs, &r).data()?;
    println!("metrics for {} -> {}", events.display(), out.display());
    print_summary(&r);
    Ok(())
}

struct Column {
    name: &'static str,
    get: fn(&MetricsReport) -> Option<f64>,
}

const COLUMNS: [Column; 9] = [
    Column { name: "gini", get: |r| Some(r.gini) },
    Column { name: "income_gap_per_hour", get: |r| Some(r.income_gap_per_hour) },
    Column { name: "dtpo_minutes", get: |r| r.dtpo_minutes },
    Column { name: "sla_violation_pct", get: |r| r.sla_violation_pct },
    Column { name: "rejection_pct", get: |r| r.rejection_pct },
    Column { name: "psi_vehicle_loc", get: |r| r.psi_vehicle_loc },
    Column { name: "mean_window_ms", get: |r| r.mean_window_ms },
    Column { name: "max_window_ms", get: |r| r.max_window_ms },
    Column { name: "overflow_pct", get: |r| r.overflow_pct },
];

fn cmd_compare(a: CompareArgs, g: &Globals) -> Result<(), Failure> {
    let mut rows: Vec<(String, MetricsReport)> = Vec::new();
    for dir in &a.runs {
        let r = artifacts::read_metrics(dir).data()?;
        let label = r.allocator.clone().unwrap_or_else(|| dir.display().to_string());
        rows.push((label, r));
    }
    let hash = rows[0].1.manifest_hash.clone();
    for (dir, (_, r)) in a.runs.iter().zip(&rows) {
        if r.manifest_hash != hash {
            return Err(Failure::Data(anyhow!(
                "comparison error: {} was run on workload {:?}, {} on {:?}",
                a.runs[0].display(),
                hash,
                dir.display(),
                r.manifest_hash
            )));
        }
    }
    // lower is better for every column
    let best: Vec<Option<f64>> = COLUMNS
        .iter()
        .map(|c| rows.iter().filter_map(|(_, r)| (c.get)(r)).reduce(f64::min))
        .collect();

    let mut csv = String::from("run,allocator");
    for c in &COLUMNS {
        csv.push(',');
        csv.push_str(c.name);
    }
    csv.push('\n');
    let mut table: Vec<Vec<String>> = vec![std::iter::once("allocator".to_string())
        .chain(COLUMNS.iter().map(|c| c.name.to_string()))
        .collect()];
    for (dir, (label, r)) in a.runs.iter().zip(&rows) {
        csv.push_str(&format!("{},{label}", dir.display()));
        let mut line = vec![label.clone()];
        for (c, b) in COLUMNS.iter().zip(&best) {
            let v = (c.get)(r);
            csv.push(',');
            csv.push_str(&v.map(|x| x.to_string()).unwrap_or_default());
            let star = if v.is_some() && v == *b && rows.len() > 1 { "*" } else { "" };
            line.push(format!("{}{star}", fmt_opt(v, 4)));
        }
        csv.push('\n');
        table.push(line);
    }

    let widths: Vec<usize> =
        (0..table[0].len()).map(|i| table.iter().map(|row| row[i].len()).max().unwrap_or(0)).collect();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        println!("{}", cells.join("  "));
    }
    println!("* best per metric; workload {}", hash.as_deref().unwrap_or("unknown"));

    if let Some(out) = &g.output {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).data()?;
        let path = out.join("comparison.csv");
        artifacts::write(&path, &artifacts::with_hash_comment(hash.as_deref().unwrap_or(""), &csv)).data()?;
        println!("written {}", path.display());
    }
    Ok(())
}
