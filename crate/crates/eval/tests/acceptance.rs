//! Acceptance run: generated worlds, the paired four-seed bench, the oracle
//! suites and checks on the written artifacts. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bubble_core::bench::{self, BenchOutcome, RunManifest};
use bubble_core::bubble::{Viewpoint, ViewpointSource};
use bubble_core::mapio;
use bubble_core::report::{RunSummary, TRAJECTORY_TXT};
use bubble_core::scenario::{FrontEnd, ScenarioConfig};
use bubble_core::sim::{self, Completion};
use bubble_core::tour::{gain, select_queue, GainParams, VehicleConfig};
use bubble_core::verify::{self, Suite};
use bubble_core::worldgen::{self, WorldKind, WorldSpec};
use bubble_core::Vec3;
use bubble_eval::artifacts;
use bubble_eval::compare::{self, Ordering};
use bubble_eval::kinematics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OCCLUSION_MIN_SCENES: usize = 1000;
const OCCLUSION_BUDGET: Duration = Duration::from_secs(120);
const BENCH_BUDGET: Duration = Duration::from_secs(15 * 60);
const SUITES_BUDGET: Duration = Duration::from_secs(180);
const RAYCAST_RATIO_MAX: f64 = 0.2;
const COVERAGE_MIN: f64 = 0.99;
const TIME_LIMIT: f64 = 600.0;
const SEEDS: u64 = 4;
const GAIN_TOL: f64 = 1e-9;
const SPEED_MAX: f64 = 2.5;
const SPEED_TOL: f64 = 1e-6;
const ACCEL_FACTOR: f64 = 1.05;
const RERUN_TIME_LIMIT: f64 = 60.0;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn workdir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    if dir.exists() {
        fs::remove_dir_all(&dir).expect("clear previous acceptance output");
    }
    fs::create_dir_all(&dir).expect("create acceptance dir");
    dir
}

fn generate_worlds(dir: &Path) {
    let building = WorldSpec::new(WorldKind::Building, [40.0, 40.0, 6.0], 1);
    let mut forest = WorldSpec::new(WorldKind::Forest, [40.0, 40.0, 5.0], 1);
    forest.density = 0.1;
    for (spec, name) in [(building, "building"), (forest, "forest")] {
        worldgen::write_world(&spec, dir, name).expect("world generation");
    }
}

fn write_manifest(dir: &Path, name: &str, repeats: u64, overrides: &[&str]) -> RunManifest {
    let ov: Vec<String> = overrides.iter().map(|o| format!("{o:?}")).collect();
    let mut text = String::new();
    for s in ["building", "forest"] {
        text += &format!("[[scenarios]]\nfile = \"{s}.toml\"\nrepeats = {repeats}\noverrides = [{}]\n\n", ov.join(", "));
    }
    let path = dir.join(name);
    fs::write(&path, text).expect("write manifest");
    RunManifest::load(&path).expect("load manifest")
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn occlusion() -> Verdict {
    let t0 = Instant::now();
    let rep = verify::run_suite(Suite::Occlusion, 1);
    let took = t0.elapsed();
    Verdict {
        id: 1,
        name: "occlusion-free sphere viewpoints",
        pass: rep.passed() && rep.cases >= OCCLUSION_MIN_SCENES && took < OCCLUSION_BUDGET,
        detail: format!(
            "{} scenes, {} covered-cell checks, {} violations, {} (budget {})",
            rep.cases,
            rep.checks,
            rep.mismatches,
            secs(took),
            secs(OCCLUSION_BUDGET)
        ),
    }
}

fn suites() -> Verdict {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (suite, min_cases) in [(Suite::Nn, 1000), (Suite::Rays, 10_000), (Suite::Astar, 2500), (Suite::Atsp, 100)] {
        let rep = verify::run_suite(suite, 1);
        print!("  {rep}");
        pass &= rep.passed() && rep.cases >= min_cases;
        parts.push(format!("{} {}/{} mismatches", suite, rep.mismatches, rep.checks));
    }
    let took = t0.elapsed();
    pass &= took < SUITES_BUDGET;
    Verdict {
        id: 5,
        name: "oracle equivalence suites",
        pass,
        detail: format!("{}; {} (budget {})", parts.join(", "), secs(took), secs(SUITES_BUDGET)),
    }
}

fn vp(position: Vec3, radius: f64) -> Viewpoint {
    Viewpoint {
        position,
        yaw: 0.0,
        covered_frontiers: vec![],
        covered_centers: vec![],
        source_bubble_radius: radius,
        source: ViewpointSource::Surface,
    }
}

fn gain_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = Vec::new();
    let origin = VehicleConfig::at(Vec3::new(20.0, 20.0, 1.5));
    let zero = GainParams { lambda: 0.0, n_q: 15 };
    for _ in 0..1000 {
        let r = rng.random_range(0.01..10.0);
        let p = Vec3::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0), rng.random_range(0.0..6.0));
        if gain(&vp(p, r), &origin, &zero) != r {
            bad.push(format!("lambda 0 changed radius {r}"));
            break;
        }
    }
    let half = GainParams { lambda: 0.5, n_q: 15 };
    let g = gain(&vp(Vec3::new(0.0, 2.0, 0.0), 2.0), &VehicleConfig::at(Vec3::zeros()), &half);
    let want = 2.0 * (-1.0f64).exp();
    if (g - want).abs() > GAIN_TOL {
        bad.push(format!("gain(2, 0.5, 2) = {g}, want {want}"));
    }
    let mut argmax_sets = 0;
    for set in 0..100 {
        let n = rng.random_range(2..40);
        let vps: Vec<Viewpoint> = (0..n)
            .map(|_| {
                let p = Vec3::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0), rng.random_range(0.0..6.0));
                vp(p, rng.random_range(0.1..8.0))
            })
            .collect();
        let params = GainParams { lambda: rng.random_range(0.01..1.0), n_q: 15 };
        let k = rng.random_range(0.05..20.0);
        let scaled: Vec<Viewpoint> = vps.iter().map(|v| vp(v.position, k * v.source_bubble_radius)).collect();
        // reference argmax straight from the formula
        let score = |v: &Viewpoint| v.source_bubble_radius * (-params.lambda * (v.position - origin.position).norm()).exp();
        let best = (0..n).max_by(|&a, &b| score(&vps[a]).total_cmp(&score(&vps[b]))).unwrap();
        let a = select_queue(&vps, &origin, &params)[0];
        let b = select_queue(&scaled, &origin, &params)[0];
        if a != b || a != best {
            bad.push(format!("set {set}: argmax {a} vs scaled {b} vs reference {best}"));
        }
        argmax_sets += 1;
    }
    Verdict {
        id: 6,
        name: "gain function",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("lambda=0 exact on 1000 draws, gain(2,0.5,2) within {GAIN_TOL:e}, argmax invariant on {argmax_sets} scaled sets")
        } else {
            bad.join("; ")
        },
    }
}

fn runs_of<'a>(runs: &'a [RunSummary], scenario: &str, frontend: FrontEnd) -> Vec<&'a RunSummary> {
    let f = frontend.to_string();
    runs.iter().filter(|r| r.scenario == scenario && r.frontend == f).collect()
}

fn frugality(runs: &[RunSummary], outcome: &BenchOutcome, took: Duration) -> Verdict {
    let mut pass = took < BENCH_BUDGET;
    let mut parts = Vec::new();
    for scenario in ["building", "forest"] {
        let bub = runs_of(runs, scenario, FrontEnd::Bubble);
        let base = runs_of(runs, scenario, FrontEnd::Baseline);
        let mut ratios = Vec::new();
        for b in &bub {
            if b.completion != Completion::Completed {
                continue;
            }
            let Some(o) = base.iter().find(|o| o.seed == b.seed) else { continue };
            let ratio = b.raycast_count as f64 / o.raycast_count as f64;
            pass &= ratio <= RAYCAST_RATIO_MAX;
            ratios.push(format!("{:.3}", ratio));
        }
        pass &= !ratios.is_empty();
        let vt = |f: FrontEnd| {
            outcome
                .timing
                .iter()
                .find(|t| t.scenario == scenario && t.frontend == f.to_string())
                .map_or(f64::NAN, |t| t.viewpoint_time.mean)
        };
        parts.push(format!(
            "{scenario}: bubble/baseline casts per seed [{}], mean viewpoint time {:.4} s vs {:.4} s",
            ratios.join(" "),
            vt(FrontEnd::Bubble),
            vt(FrontEnd::Baseline)
        ));
    }
    Verdict {
        id: 2,
        name: "ray-cast frugality",
        pass,
        detail: format!("{}; limit {RAYCAST_RATIO_MAX}; bench {} (budget {})", parts.join("; "), secs(took), secs(BENCH_BUDGET)),
    }
}

fn completion(runs: &[RunSummary], took: Duration) -> Verdict {
    let mut pass = took < BENCH_BUDGET;
    let mut parts = Vec::new();
    for scenario in ["building", "forest"] {
        let bub = runs_of(runs, scenario, FrontEnd::Bubble);
        pass &= bub.len() == SEEDS as usize;
        for r in &bub {
            let ok = r.completion == Completion::Completed
                && r.coverage >= COVERAGE_MIN
                && r.completion_time.is_some_and(|t| t <= TIME_LIMIT);
            pass &= ok;
            parts.push(format!(
                "{scenario}/{}: {:?} {:.1} s cov {:.4}",
                r.seed,
                r.completion,
                r.end_time,
                r.coverage
            ));
        }
    }
    let detail = format!("{}; bench {:.1} s (budget {:.1} s)", parts.join(", "), took.as_secs_f64(), BENCH_BUDGET.as_secs_f64());
    Verdict { id: 3, name: "exploration completion", pass, detail }
}

fn efficiency(runs: &[RunSummary]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for scenario in ["building", "forest"] {
        let cell = |f| runs_of(runs, scenario, f).into_iter().cloned().collect::<Vec<_>>();
        let (bub, base) = (cell(FrontEnd::Bubble), cell(FrontEnd::Baseline));
        for (what, a, b) in [
            ("time", compare::mean_completion_time(&bub), compare::mean_completion_time(&base)),
            ("distance", compare::mean_flight_distance(&bub), compare::mean_flight_distance(&base)),
        ] {
            let ord = compare::at_most(&a, &b);
            pass &= ord == Ordering::Holds;
            parts.push(format!("{scenario} {what} {a} vs {b} {ord:?}"));
        }
    }
    Verdict { id: 4, name: "efficiency ordering", pass, detail: parts.join(", ") }
}

fn kinodynamics(outcome: &BenchOutcome) -> Verdict {
    let mut pass = true;
    let mut worst_speed = 0.0f64;
    let mut worst_accel_ratio = 0.0f64;
    let mut worst_at = String::new();
    for job in &outcome.jobs {
        let samples = kinematics::load_trajectory(&job.dir.join(TRAJECTORY_TXT)).expect("trajectory");
        let b = kinematics::fd_bounds(&samples).expect("trajectory time stamps");
        let accel_ratio = b.max_accel / job.cfg.a_max;
        pass &= samples.len() > 1 && b.max_speed <= SPEED_MAX + SPEED_TOL && accel_ratio <= ACCEL_FACTOR;
        worst_speed = worst_speed.max(b.max_speed);
        if accel_ratio > worst_accel_ratio {
            worst_accel_ratio = accel_ratio;
            worst_at = format!("{}/{}/{} t={:.2}", job.cfg.name, job.cfg.frontend, job.cfg.seed, b.max_accel_t);
        }
    }
    Verdict {
        id: 7,
        name: "kinodynamic bounds",
        pass,
        detail: format!(
            "{} trajectories, max speed {worst_speed:.9} m/s (limit {}), max accel {worst_accel_ratio:.4} a_max at {worst_at} (limit {ACCEL_FACTOR})",
            outcome.jobs.len(),
            SPEED_MAX + SPEED_TOL
        ),
    }
}

fn determinism(dir: &Path) -> Verdict {
    let limit = format!("time_limit={RERUN_TIME_LIMIT:?}");
    let m = write_manifest(dir, "rerun.toml", 1, &[&limit]);
    let mut trees = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("rerun_{k}"));
        bench::run_bench(&m, &out, threads(), &[]).expect("rerun bench");
        trees.push(artifacts::reproducible_files(&out).expect("read rerun artifacts"));
    }
    let diff = artifacts::differing(&trees[0], &trees[1]);
    Verdict {
        id: 8,
        name: "determinism",
        pass: diff.is_empty() && !trees[0].is_empty(),
        detail: if diff.is_empty() {
            format!("{} CSV/JSON files byte-identical across two runs", trees[0].len())
        } else {
            format!("differing: {diff:?}")
        },
    }
}

/// Baseline sampling densities on a short window, for the record.
fn density_sweep(dir: &Path) {
    let mut cfg = ScenarioConfig::load(&dir.join("forest.toml")).expect("forest scenario");
    cfg.time_limit = 120.0;
    let truth = mapio::load_truth(&cfg.map_path(), &cfg.grid_config().unwrap()).expect("forest map");
    cfg.frontend = FrontEnd::Bubble;
    let bub = sim::run_episode_on(&cfg, &truth).expect("bubble run");
    println!(
        "INFO sweep forest seed 1, 120 s: bubble {} casts, {:.1} m",
        bub.metrics.raycast_count, bub.metrics.flight_distance
    );
    cfg.frontend = FrontEnd::Baseline;
    for (radii, az) in [(2, 8), (4, 12), (6, 16)] {
        let mut c = cfg.clone();
        c.baseline_radii = radii;
        c.baseline_az = az;
        let r = sim::run_episode_on(&c, &truth).expect("baseline run");
        println!(
            "INFO sweep forest seed 1, 120 s: baseline {radii} radii x {az} az x {} heights: {} casts ({:.3} of it from bubble), {:.1} m",
            c.baseline_heights,
            r.metrics.raycast_count,
            bub.metrics.raycast_count as f64 / r.metrics.raycast_count as f64,
            r.metrics.flight_distance
        );
    }
}

fn main() -> ExitCode {
    let dir = workdir();
    generate_worlds(&dir);

    let mut verdicts = vec![occlusion(), suites(), gain_checks()];

    let manifest = write_manifest(&dir, "bench.toml", SEEDS, &[]);
    let t0 = Instant::now();
    let outcome = bench::run_bench(&manifest, &dir.join("bench"), threads(), &[]).expect("bench");
    let took = t0.elapsed();
    print!("{}", bench::comparison_csv(&outcome.rows));
    let runs = compare::load_summaries(&dir.join("bench")).expect("bench summaries");
    verdicts.push(frugality(&runs, &outcome, took));
    verdicts.push(completion(&runs, took));
    verdicts.push(efficiency(&runs));
    verdicts.push(kinodynamics(&outcome));
    verdicts.push(determinism(&dir));
    density_sweep(&dir);

    verdicts.sort_by_key(|v| v.id);
    let mut ok = true;
    for v in &verdicts {
        ok &= v.pass;
        println!("{} [{}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
