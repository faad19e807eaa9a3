use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bubble_core::bench::{self, RunManifest};
use bubble_core::report;
use bubble_core::scenario::{FrontEnd, ScenarioConfig};
use bubble_core::sim;
use bubble_core::verify::{self, Suite};
use bubble_core::worldgen::{self, WorldKind, WorldSpec};
use bubble_core::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bubblex", version, about = "Occlusion-free-sphere exploration: runs, benchmarks, worlds, oracle suites")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Viewpoint front-end.
    #[arg(long)]
    frontend: Option<FrontEnd>,
    /// Simulated time limit, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Any scenario key, `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    /// All overrides as `key=value` strings, flags last so they win.
    fn assignments(&self) -> Vec<String> {
        let mut v = self.set.clone();
        if let Some(s) = self.seed {
            v.push(format!("seed={s}"));
        }
        if let Some(f) = self.frontend {
            v.push(format!("frontend=\"{f}\""));
        }
        if let Some(t) = self.time_limit {
            v.push(format!("time_limit={t:?}"));
        }
        v
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and write its artifacts.
    Run {
        scenario: PathBuf,
        /// Output directory [default: out/<scenario name>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every (scenario, front-end, seed) of a manifest and aggregate.
    Bench {
        manifest: PathBuf,
        /// Output directory [default: the manifest's `out`, else bench_out].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run only this front-end arm.
        #[arg(long)]
        frontend: Option<FrontEnd>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Generate a synthetic world and a matching scenario file.
    GenScenario {
        /// building, forest or empty.
        kind: WorldKind,
        /// Extent as XxYxZ meters.
        #[arg(long, default_value = "40x40x6", value_parser = parse_size)]
        size: [f64; 3],
        /// Trunks per square meter (forest).
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        resolution: f64,
        /// Force a floor layer on or off (default: on except for empty).
        #[arg(long)]
        floor: Option<bool>,
        #[arg(long)]
        ceiling: bool,
        /// File stem for the map and scenario [default: the kind].
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run an oracle-equivalence suite.
    Verify {
        /// nn, rays, astar, atsp, occlusion or all.
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_size(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(format!("expected XxYxZ, got `{s}`")),
    }
}

fn cmd_run(scenario: &Path, out: Option<PathBuf>, overrides: &Overrides) -> Result<()> {
    let mut cfg = ScenarioConfig::load(scenario)?;
    for a in overrides.assignments() {
        cfg.apply_override(&a)?;
    }
    let result = sim::run_episode(&cfg)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let s = report::write_run_artifacts(&dir, &cfg, &result)?;
    println!(
        "{} [{} seed {}]: {:?} at {:.1} s, coverage {:.2}%, flight {:.1} m, {} raycasts -> {}",
        s.scenario,
        s.frontend,
        s.seed,
        s.completion,
        s.end_time,
        100.0 * s.coverage,
        s.flight_distance,
        s.raycast_count,
        dir.display()
    );
    Ok(())
}

fn cmd_bench(
    manifest: &Path,
    out: Option<PathBuf>,
    jobs: usize,
    frontend: Option<FrontEnd>,
    time_limit: Option<f64>,
    set: &[String],
) -> Result<()> {
    let mut m = RunManifest::load(manifest)?;
    if let Some(f) = frontend {
        m.arms = vec![f];
    }
    let out = out
        .or_else(|| m.out.as_ref().map(|o| m.base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("bench_out"));
    let mut extra = set.to_vec();
    if let Some(t) = time_limit {
        extra.push(format!("time_limit={t:?}"));
    }
    let outcome = bench::run_bench(&m, &out, jobs, &extra)?;
    print!("{}", bench::comparison_csv(&outcome.rows));
    println!("{} episodes, tables in {}", outcome.jobs.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    kind: WorldKind,
    size: [f64; 3],
    density: f64,
    seed: u64,
    resolution: f64,
    floor: Option<bool>,
    ceiling: bool,
    name: Option<String>,
    out: &Path,
) -> Result<()> {
    let mut spec = WorldSpec::new(kind, size, seed);
    spec.density = density;
    spec.resolution = resolution;
    spec.ceiling = ceiling;
    if let Some(f) = floor {
        spec.floor = f;
    }
    let name = name.unwrap_or_else(|| kind.to_string());
    let path = worldgen::write_world(&spec, out, &name)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(suite: &str, seed: u64) -> Result<bool> {
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
    let mut ok = true;
    for s in suites {
        let rep = verify::run_suite(s, seed);
        print!("{rep}");
        ok &= rep.passed();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { scenario, out, overrides } => cmd_run(&scenario, out, &overrides).map(|_| true),
        Cmd::Bench { manifest, out, jobs, frontend, time_limit, set } => {
            cmd_bench(&manifest, out, jobs, frontend, time_limit, &set).map(|_| true)
        }
        Cmd::GenScenario { kind, size, density, seed, resolution, floor, ceiling, name, out } => {
            cmd_gen(kind, size, density, seed, resolution, floor, ceiling, name, &out).map(|_| true)
        }
        Cmd::Verify { suite, seed } => cmd_verify(&suite, seed),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
