use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use stickyquake::analytics::{gr_power_law, gr_survival};
use stickyquake::boundary::{simulate_edge, simulate_vertex, BoundaryPath};
use stickyquake::config::{NetworkSpec, RunConfig, CONFIG_KEYS};
use stickyquake::graph::{simulate_q, GraphPosition, QTrajectory, VisitEvent};
use stickyquake::harness::try_draw;
use stickyquake::quake::{catalog_summary, empirical_gr_curve, simulate_quake, Catalog};
use stickyquake::rdbm::{simulate_path, PathSample, StopCause};
use stickyquake::validate::{run_suite, GrRow, Suite};
use stickyquake::{io, Error};

/// Stream domains of the simulate commands.
mod dom {
    pub const RDBM: u32 = 100;
    pub const EDGE: u32 = 101;
    pub const VERTEX: u32 = 102;
    pub const GRAPH: u32 = 103;
    pub const QUAKE: u32 = 104;
}

#[derive(Parser)]
#[command(
    name = "stickyquake",
    version,
    about = "Sticky and jumping diffusions on metric graphs, with earthquake catalogs"
)]
#[command(after_help = format!("{CONFIG_KEYS}\nEXIT CODES\n  0 success, 1 validation failure, 2 configuration error, 3 runtime error"))]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Paths or catalogs; for `validate`, the cap per check.
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicas of one process and write paths and a summary.
    Simulate {
        #[arg(value_enum)]
        process: Process,
    },
    /// Run an oracle suite and write report.json.
    Validate {
        #[arg(default_value = "all")]
        suite: Suite,
        /// Flip the drift sign in the simulations; checks should then fail.
        #[arg(long)]
        negative_control: bool,
    },
    /// Empirical and analytic event-count survival from quake catalogs.
    GrCurve,
}

#[derive(Clone, Copy, ValueEnum)]
enum Process {
    Rdbm,
    Edge,
    Vertex,
    Graph,
    Quake,
}

enum Failure {
    Config(String),
    Runtime(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn config_failure(e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Config(m),
        other => Failure::Config(other.to_string()),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(config_failure)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out {
        cfg.output.dir = d.clone();
    }
    if let Some(dt) = cli.dt {
        cfg.dt = dt;
    }
    if let Some(n) = cli.paths {
        cfg.n_paths = n;
        cfg.n_catalogs = n;
        cfg.validation.max_paths = Some(n);
    }
    if let Command::Validate {
        negative_control: true, ..
    } = cli.command
    {
        cfg.validation.negative_control = true;
    }
    cfg.validate().map_err(config_failure)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    let digest = cfg.digest();
    match cli.command {
        Command::Simulate { process } => {
            let n = match process {
                Process::Rdbm => simulate_rdbm(&cfg, &out, &digest)?,
                Process::Edge => simulate_edge_cmd(&cfg, &out, &digest)?,
                Process::Vertex => simulate_vertex_cmd(&cfg, &out, &digest)?,
                Process::Graph => simulate_graph(&cfg, &out, &digest)?,
                Process::Quake => simulate_quake_cmd(&cfg, &out, &digest)?,
            };
            let name = process.to_possible_value().expect("named").get_name().to_string();
            println!(
                "simulate {name}: {n} replicas, config_digest {digest}, output {}",
                out.display()
            );
            Ok(())
        }
        Command::Validate { suite, .. } => validate(&cfg, suite, &out, &digest),
        Command::GrCurve => {
            let cats = quake_catalogs(&cfg)?;
            let rows = gr_rows(&cfg, &cats)?;
            io::write_gr_curve(create(&out, "gr_curve.csv")?, &rows, Some(&digest))?;
            write_summary(
                &out,
                &digest,
                &cfg,
                "gr-curve",
                json!({ "catalogs": cats.len(), "gr_curve": rows }),
            )?;
            println!(
                "gr-curve: {} catalogs, config_digest {digest}, output {}",
                cats.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let p = dir.join(name);
    File::create(&p)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
}

fn write_summary(dir: &Path, digest: &str, cfg: &RunConfig, command: &str, body: Value) -> Result<(), Failure> {
    let doc = json!({
        "command": command,
        "config_digest": digest,
        "seed": cfg.seed,
        "summary": body,
    });
    io::write_json(create(dir, "summary.json")?, &doc)?;
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn replicas(cfg: &RunConfig, n: usize) -> usize {
    if cfg.t_max == 0.0 {
        0
    } else {
        n
    }
}

fn cause_name(c: Option<StopCause>) -> &'static str {
    match c {
        Some(StopCause::HitLevel) => "hit_level",
        Some(StopCause::ElasticKill) => "elastic_kill",
        Some(StopCause::Horizon) => "horizon",
        Some(StopCause::Absorbed) => "absorbed",
        None => "none",
    }
}

fn count<I: IntoIterator<Item = &'static str>>(items: I) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_default() += 1;
    }
    m
}

/// Keeps every `stride`-th point plus the last one.
fn thin(p: &PathSample, stride: usize) -> PathSample {
    if stride <= 1 || p.len() <= 2 {
        return p.clone();
    }
    let mut q = PathSample {
        killed_at: p.killed_at,
        stopped_at: p.stopped_at,
        stop_cause: p.stop_cause,
        ..PathSample::default()
    };
    for k in (0..p.len()).filter(|&k| k % stride == 0 || k + 1 == p.len()) {
        q.times.push(p.times[k]);
        q.values.push(p.values[k]);
        q.local_time.push(p.local_time[k]);
        q.flags.push(p.flags[k]);
    }
    q
}

fn simulate_rdbm(cfg: &RunConfig, out: &Path, digest: &str) -> Result<usize, Failure> {
    let params = cfg.rdbm_params();
    let n = replicas(cfg, cfg.n_paths);
    let paths = try_draw(n, cfg.seed, dom::RDBM, |rng| {
        simulate_path(&params, cfg.model.x0, cfg.model.stop_level, rng).map(|p| thin(&p, cfg.model.record_stride))
    })?;
    let rows: Vec<(usize, &PathSample)> = paths.iter().enumerate().collect();
    io::write_paths(create(out, "paths.csv")?, &rows, Some(digest))?;
    let body = json!({
        "replicas": n,
        "mean_end_time": mean(paths.iter().map(PathSample::end_time)),
        "mean_local_time": mean(paths.iter().map(|p| p.local_time.last().copied().unwrap_or(0.0))),
        "causes": count(paths.iter().map(|p| cause_name(p.stop_cause))),
    });
    write_summary(out, digest, cfg, "simulate rdbm", body)?;
    Ok(n)
}

fn simulate_edge_cmd(cfg: &RunConfig, out: &Path, digest: &str) -> Result<usize, Failure> {
    let params = cfg.edge_params()?;
    let disc = cfg.discretization();
    let n = replicas(cfg, cfg.n_paths);
    let runs = try_draw(n, cfg.seed, dom::EDGE, |rng| {
        simulate_edge(&params, cfg.model.x0, cfg.t_max, disc, rng)
    })?;
    let rows: Vec<(usize, &BoundaryPath)> = runs.iter().map(|r| &r.path).enumerate().collect();
    io::write_boundary_paths(create(out, "paths.csv")?, &rows, Some(digest))?;
    let body = json!({
        "replicas": n,
        "mean_end_time": mean(runs.iter().map(|r| r.stats.end_time)),
        "mean_diffusive_time": mean(runs.iter().map(|r| r.stats.diffusive_time)),
        "mean_holding_time": mean(runs.iter().map(|r| r.stats.holding_time)),
        "mean_holdings": mean(runs.iter().map(|r| r.stats.holdings.len() as f64)),
        "mean_local_time": mean(runs.iter().map(|r| r.stats.local_time)),
        "causes": count(runs.iter().map(|r| cause_name(Some(r.stats.cause)))),
    });
    write_summary(out, digest, cfg, "simulate edge", body)?;
    Ok(n)
}

fn simulate_vertex_cmd(cfg: &RunConfig, out: &Path, digest: &str) -> Result<usize, Failure> {
    let params = cfg.vertex_params()?;
    let h0 = cfg.initial_level()?;
    let disc = cfg.discretization();
    let mode = cfg.model.accumulation;
    let n = replicas(cfg, cfg.n_paths);
    let mean_jump = params.jump.eta_eps;
    let runs = try_draw(n, cfg.seed, dom::VERTEX, |rng| {
        let h = h0.draw(mean_jump, rng);
        simulate_vertex(&params, h, cfg.t_max, mode, disc, rng)
    })?;
    let rows: Vec<(usize, &BoundaryPath)> = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.path.as_ref().map(|p| (i, p)))
        .collect();
    io::write_boundary_paths(create(out, "paths.csv")?, &rows, Some(digest))?;
    let body = json!({
        "replicas": n,
        "absorbed_fraction": mean(runs.iter().map(|r| f64::from(u8::from(r.absorbed_at.is_some())))),
        "mean_absorption_time": mean(runs.iter().filter_map(|r| r.absorbed_at)),
        "mean_excursions": mean(runs.iter().map(|r| r.excursions.len() as f64)),
        "mean_end_time": mean(runs.iter().map(|r| r.end_time)),
    });
    write_summary(out, digest, cfg, "simulate vertex", body)?;
    Ok(n)
}

fn simulate_graph(cfg: &RunConfig, out: &Path, digest: &str) -> Result<usize, Failure> {
    let net = cfg.network()?;
    let opts = cfg.q_options();
    let disc = cfg.discretization();
    let n = replicas(cfg, cfg.n_paths);
    let start = GraphPosition::vertex(net.root);
    let trajs = try_draw(n, cfg.seed, dom::GRAPH, |rng| {
        simulate_q(&net, start, cfg.t_max, &opts, disc, rng)
    })?;
    io::write_trajectories(create(out, "trajectory.csv")?, &trajs, Some(digest))?;
    io::write_visits(create(out, "visits.csv")?, &trajs, Some(digest))?;
    let switched: Vec<f64> = trajs.iter().filter_map(QTrajectory::first_switch).collect();
    let body = json!({
        "replicas": n,
        "stars": net.stars.len(),
        "mean_end_time": mean(trajs.iter().map(|t| t.end_time)),
        "switch_fraction": if n == 0 { f64::NAN } else { switched.len() as f64 / n as f64 },
        "mean_first_switch": mean(switched.iter().copied()),
        "mean_center_holdings": mean(trajs.iter().map(|t| t.holdings.len() as f64)),
        "ends": count(trajs.iter().map(|t| t.end.map_or("none", |e: VisitEvent| e.code()))),
    });
    write_summary(out, digest, cfg, "simulate graph", body)?;
    Ok(n)
}

fn quake_catalogs(cfg: &RunConfig) -> Result<Vec<Catalog>, Failure> {
    let net = cfg.network()?;
    let opts = cfg.quake_options();
    let h0 = cfg.initial_level()?;
    let n = cfg.n_catalogs;
    let mut cats = try_draw(n, cfg.seed, dom::QUAKE, |rng| {
        simulate_quake(&net, h0, cfg.t_max, &opts, rng)
    })?;
    for c in &mut cats {
        c.config_digest = cfg.digest();
    }
    Ok(cats)
}

/// Analytic columns need a visiting order, which only a chain fixes.
fn gr_rows(cfg: &RunConfig, cats: &[Catalog]) -> Result<Vec<GrRow>, Failure> {
    let curve = empirical_gr_curve(cats)?;
    let chain = matches!(cfg.model.network, NetworkSpec::Chain);
    let ms: Vec<(f64, f64)> = cfg.model.regions.iter().map(|r| (r.m, r.sigma)).collect();
    let mags: Vec<f64> = ms.iter().map(|p| p.0).collect();
    Ok(curve
        .iter()
        .map(|p| {
            let analytic = if chain {
                gr_survival(p.n, &ms, cfg.model.h_star).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            let power_law = if chain {
                gr_power_law(p.n, &mags).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            GrRow {
                n: p.n,
                empirical: p.empirical,
                std_error: p.std_error,
                analytic,
                power_law,
            }
        })
        .collect())
}

fn simulate_quake_cmd(cfg: &RunConfig, out: &Path, digest: &str) -> Result<usize, Failure> {
    let cats = quake_catalogs(cfg)?;
    io::write_catalogs(create(out, "catalog.csv")?, &cats, Some(digest))?;
    let rows = if cfg.t_max == 0.0 {
        Vec::new()
    } else {
        gr_rows(cfg, &cats)?
    };
    io::write_gr_curve(create(out, "gr_curve.csv")?, &rows, Some(digest))?;
    let summaries: Vec<_> = cats.iter().map(catalog_summary).collect();
    let mut terminals: BTreeMap<String, usize> = BTreeMap::new();
    for s in &summaries {
        for (k, v) in &s.terminals {
            *terminals.entry(k.clone()).or_default() += v;
        }
    }
    let body = json!({
        "catalogs": cats.len(),
        "mean_events": mean(summaries.iter().map(|s| s.events as f64)),
        "mean_lifetime": mean(summaries.iter().map(|s| s.lifetime)),
        "terminals": terminals,
    });
    write_summary(out, digest, cfg, "simulate quake", body)?;
    Ok(cats.len())
}

fn validate(cfg: &RunConfig, suite: Suite, out: &Path, digest: &str) -> Result<(), Failure> {
    let v = run_suite(suite, &cfg.validation_config())?;
    for r in &v.reports {
        println!(
            "{:<4} {:<48} oracle={:<12.6} estimate={:<12.6} z={:.2}",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.oracle_value,
            r.mc_estimate,
            r.z_score
        );
    }
    let passed = v.all_passed();
    let doc = json!({
        "suite": suite.name(),
        "config_digest": digest,
        "seed": cfg.seed,
        "negative_control": cfg.validation.negative_control,
        "passed": passed,
        "reports": v.reports,
    });
    io::write_json(create(out, "report.json")?, &doc)?;
    if !v.gr_curve.is_empty() {
        io::write_gr_curve(create(out, "gr_curve.csv")?, &v.gr_curve, Some(digest))?;
    }
    let failed = v.reports.iter().filter(|r| !r.passed()).count();
    println!(
        "validate {}: {} checks, {} failed, config_digest {digest}, output {}",
        suite.name(),
        v.reports.len(),
        failed,
        out.display()
    );
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}
