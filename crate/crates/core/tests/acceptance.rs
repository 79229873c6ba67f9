//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! reach the output.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use failure_region::geometry::{InputDomain, Orientation, Point};
use failure_region::harness::{
    run_setting, sweep, ExperimentSetting, Matrix, RunOptions, RunRecord, SweepOptions,
};
use failure_region::measure::{
    convex_hull_2d, hull_volume, measure_run, point_in_hull, VolumeMethod,
};
use failure_region::oracles::{FnOracle, RegionOracle, RegionShape, RegionSpec};
use failure_region::search::{
    run_fsb, search_boundary, search_boundary_traced, Alg1Mode, FsbVariant, ProbeOutcome,
    RayParams, SearchConfig, Strategy,
};

const REPS: u32 = 50;
/// Monte-Carlo samples for the trend runs; d = 2 is measured exactly.
const MC_SAMPLES: usize = 20_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn options() -> RunOptions {
    RunOptions {
        mc_samples: MC_SAMPLES,
        record_timing: false,
        ..RunOptions::default()
    }
}

fn cell(d: usize, theta: f64, shape: RegionShape, delta: f64, gamma: f64, strategy: Strategy, n: usize) -> ExperimentSetting {
    ExperimentSetting {
        d,
        theta,
        shape,
        delta,
        gamma,
        strategy,
        n,
        lambda: 20,
        extension_length: 1.0,
        repetitions: REPS,
        base_seed: 2016,
    }
}

fn mean_ratio(setting: &ExperimentSetting) -> f64 {
    let records = run_setting(setting, &options());
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.status.is_success()).collect();
    assert!(!ok.is_empty(), "{}: no measured runs", setting.setting_id());
    ok.iter().map(|r| r.s_ratio).sum::<f64>() / ok.len() as f64
}

const STRATEGIES: [Strategy; 3] = [Strategy::Fsb1, Strategy::Fsb2, Strategy::Dsb];

// 1
fn bisection_accuracy() -> Outcome {
    let domain = InputDomain::unit(1).unwrap();
    let params = RayParams {
        extension_length: 1.0,
        lambda: 20,
        mode: Alg1Mode::Bracketing,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let width = rng.random_range(0.001..0.5);
        let lo = rng.random_range(0.0..1.0 - width);
        let hi = lo + width;
        let source = Point::new(vec![rng.random_range(lo..=hi)]).unwrap();
        let up = rng.random_bool(0.5);
        let orientation = Orientation::from_unit(vec![if up { 1.0 } else { -1.0 }]).unwrap();
        let mut oracle = FnOracle::new(1, move |p: &Point| (lo..=hi).contains(&p.coords()[0]));
        let ray = search_boundary(&source, &orientation, &params, &mut oracle, &domain, u64::MAX).unwrap();
        let truth = if up { hi } else { lo };
        let found = if ray.degenerate { source.coords()[0] } else { ray.boundary.coords()[0] };
        worst = worst.max((found - truth).abs());
    }
    outcome(worst <= 1e-4, format!("max |boundary - endpoint| over 1000 cases = {worst:.3e} (limit 1e-4)"))
}

/// Mini-sweep run at 8 and 1 workers; shared by criteria 2, 3 and 10.
struct MiniSweep {
    records: Vec<RunRecord>,
    csv_parallel: Vec<u8>,
    csv_serial: Vec<u8>,
    csv_repeat: Vec<u8>,
    cells: usize,
}

fn mini_sweep() -> MiniSweep {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mini-sweep.toml");
    let matrix = Matrix::load(&path).unwrap();
    let run = |jobs: usize, json: bool| {
        let dir = tempfile::tempdir().unwrap();
        let opts = SweepOptions {
            jobs,
            out_dir: dir.path().to_path_buf(),
            write_json: json,
            record_timing: false,
        };
        let report = sweep(&matrix, &opts).unwrap();
        assert!(!report.is_partial(), "mini-sweep had failed runs");
        let csv = fs::read(dir.path().join("records.csv")).unwrap();
        let mut records = Vec::new();
        if json {
            let mut names: Vec<_> = fs::read_dir(dir.path().join("runs"))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for p in names {
                records.push(serde_json::from_slice::<RunRecord>(&fs::read(p).unwrap()).unwrap());
            }
        }
        (csv, records)
    };
    let (csv_parallel, records) = run(8, true);
    let (csv_serial, _) = run(1, false);
    let (csv_repeat, _) = run(8, false);
    MiniSweep {
        records,
        csv_parallel,
        csv_serial,
        csv_repeat,
        cells: matrix.settings().len(),
    }
}

// 2
fn soundness(m: &MiniSweep) -> Outcome {
    let mut total = 0usize;
    let mut bad = 0usize;
    for r in &m.records {
        let spec = r.region.as_ref().expect("measured run has a region");
        let domain = InputDomain::unit(r.setting.d).unwrap();
        let mut oracle = RegionOracle::new(spec.clone());
        for p in &r.boundary_inputs {
            total += 1;
            use failure_region::oracles::Oracle;
            if !domain.contains(p) || !oracle.verdict(p).unwrap().is_fail() {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0 && total > 0,
        format!(
            "{} cells, {} runs, {total} boundary inputs re-verified, {bad} not failure-causing or out of domain",
            m.cells,
            m.records.len()
        ),
    )
}

// 3
fn convexity(m: &MiniSweep) -> Outcome {
    let mut worst_exact: f64 = 0.0;
    let mut worst_mc: f64 = f64::NEG_INFINITY;
    let mut violations = 0;
    for r in &m.records {
        match r.method {
            Some(VolumeMethod::MonteCarlo) => {
                let limit = 1.0 + 3.0 * r.stderr / r.s_rfr;
                worst_mc = worst_mc.max(r.s_ratio - limit);
                if r.s_ratio > limit {
                    violations += 1;
                }
            }
            Some(_) => {
                worst_exact = worst_exact.max(r.s_ratio);
                // hull and region areas agree up to rounding when every
                // corner was found
                if r.s_ratio > 1.0 + 1e-9 {
                    violations += 1;
                }
            }
            None => violations += 1,
        }
    }
    outcome(
        violations == 0,
        format!(
            "max exact s_ratio = 1{:+.1e}; max Monte-Carlo s_ratio - (1 + 3*stderr/s_rfr) = {worst_mc:+.4}; {violations} violations",
            worst_exact - 1.0
        ),
    )
}

// 4
fn n_monotonicity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in STRATEGIES {
        let small = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 1.0, 0.0, s, 100));
        let large = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 1.0, 0.0, s, 1000));
        pass &= large >= small - 0.02;
        parts.push(format!("{s}: N=100 {small:.3} -> N=1000 {large:.3}"));
    }
    outcome(pass, parts.join("; "))
}

// 5
fn dsb_rotation() -> Outcome {
    let means: Vec<f64> = [0.0, 30.0, 60.0, 90.0]
        .iter()
        .map(|&g| mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 10.0, g, Strategy::Dsb, 1000)))
        .collect();
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        spread <= 0.15,
        format!(
            "DSB mean s_ratio at 0/30/60/90 deg = {:.3}/{:.3}/{:.3}/{:.3}; spread {spread:.3} (limit 0.15)",
            means[0], means[1], means[2], means[3]
        ),
    )
}

// 6
fn fsb_alignment() -> Outcome {
    let aligned = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 100.0, 0.0, Strategy::Fsb1, 1000));
    let rotated = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 100.0, 30.0, Strategy::Fsb1, 1000));
    outcome(
        aligned >= 0.85 && rotated <= 0.35,
        format!("FSB-1 mean s_ratio at 0 deg = {aligned:.3} (>= 0.85), at 30 deg = {rotated:.3} (<= 0.35)"),
    )
}

// 7
fn degradation() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in STRATEGIES {
        let base = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 1.0, 30.0, s, 1000));
        let higher_d = mean_ratio(&cell(3, 0.001, RegionShape::Rectangle, 1.0, 30.0, s, 1000));
        let narrow = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 100.0, 30.0, s, 1000));
        pass &= higher_d <= base + 0.02 && narrow <= base + 0.02;
        parts.push(format!("{s}: (2,1) {base:.3}, (3,1) {higher_d:.3}, (2,100) {narrow:.3}"));
    }
    outcome(pass, parts.join("; "))
}

// 8
fn theta_insensitivity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in STRATEGIES {
        let a = mean_ratio(&cell(2, 0.001, RegionShape::Rectangle, 1.0, 0.0, s, 1000));
        let b = mean_ratio(&cell(2, 0.005, RegionShape::Rectangle, 1.0, 0.0, s, 1000));
        pass &= (a - b).abs() <= 0.05;
        parts.push(format!("{s}: {a:.3} vs {b:.3} (|diff| {:.3})", (a - b).abs()));
    }
    outcome(pass, parts.join("; "))
}

// 9
fn geometry_oracles() -> Outcome {
    let mut checks = Vec::new();

    // square region, FSB-1 from its center: the four axis extremes span a
    // rhombus of half the square's area
    let spec = RegionSpec {
        shape: RegionShape::Rectangle,
        theta: 0.04,
        delta: 1.0,
        gamma_deg: 0.0,
        center: Point::new(vec![0.5, 0.5]).unwrap(),
        half_extents: vec![0.1, 0.1],
        plane: Some((0, 1)),
    };
    let domain = InputDomain::unit(2).unwrap();
    let mut oracle = RegionOracle::new(spec.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let config = SearchConfig {
        strategy: Strategy::Fsb1,
        target: 4,
        ..SearchConfig::default()
    };
    let harvest = run_fsb(FsbVariant::Axes, &[spec.center.clone()], &config, &mut oracle, &domain, &mut rng).unwrap();
    let rhombus = measure_run(&harvest, &spec, &domain, 0, &mut rng).s_ratio;
    checks.push(((rhombus - 0.5).abs() <= 0.01, format!("rhombus ratio {rhombus:.4}")));

    // Monte-Carlo volumes against known values
    let cube: Vec<Point> = (0..8)
        .map(|m| Point::new((0..3).map(|i| ((m >> i) & 1) as f64).collect()).unwrap())
        .collect();
    let v = hull_volume(&cube, 3, 200_000, &mut rng);
    checks.push(((v.volume - 1.0).abs() <= 3.0 * v.stderr + 1e-12, format!("unit cube {:.4}±{:.4}", v.volume, v.stderr)));
    let octahedron: Vec<Point> = (0..6)
        .map(|k| {
            let mut c = vec![0.5; 3];
            c[k / 2] += if k % 2 == 0 { 0.5 } else { -0.5 };
            Point::new(c).unwrap()
        })
        .collect();
    let v = hull_volume(&octahedron, 3, 200_000, &mut rng);
    checks.push((
        (v.volume - 1.0 / 6.0).abs() <= 3.0 * v.stderr,
        format!("octahedron {:.4}±{:.4} (exact 0.1667)", v.volume, v.stderr),
    ));

    // LP membership against a polygon test on random 2-D hulls
    let mut agree = 0;
    let mut queries = 0;
    for _ in 0..20 {
        let pts: Vec<[f64; 2]> = (0..12).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let hull = convex_hull_2d(&pts);
        let vertices: Vec<Point> = pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect();
        for _ in 0..500 {
            let q = [rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1)];
            let inside_polygon = (0..hull.len()).all(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= -1e-12
            });
            queries += 1;
            if point_in_hull(&Point::new(q.to_vec()).unwrap(), &vertices) == inside_polygon {
                agree += 1;
            }
        }
    }
    checks.push((agree == queries, format!("LP vs polygon {agree}/{queries}")));

    let pass = checks.iter().all(|(ok, _)| *ok);
    outcome(pass, checks.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join("; "))
}

// 10
fn determinism(m: &MiniSweep) -> Outcome {
    let sorted = |bytes: &[u8]| {
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines.sort();
        lines.join("\n")
    };
    let same = sorted(&m.csv_parallel) == sorted(&m.csv_serial) && m.csv_parallel == m.csv_repeat;
    outcome(
        same,
        format!(
            "records.csv at 8 workers ({} bytes) vs 1 worker ({} bytes) vs repeat: {}",
            m.csv_parallel.len(),
            m.csv_serial.len(),
            if same { "identical" } else { "different" }
        ),
    )
}

// 11
fn literal_audit() -> Outcome {
    // region [0, 0.7] on a wide domain, source 0.1, L = 1, lambda = 3;
    // expected (offset, outcome, L after, sign after, retracted after)
    let golden: [(f64, bool, f64, i8, bool); 5] = [
        (1.0, false, 0.5, -1, true),
        (0.5, true, 0.25, 1, false),
        (0.75, false, 0.125, -1, true),
        (0.625, false, 0.0625, 1, true),
        (0.6875, false, 0.03125, -1, true),
    ];
    let domain = InputDomain::new(Point::new(vec![0.0]).unwrap(), Point::new(vec![4.0]).unwrap()).unwrap();
    let mut oracle = FnOracle::new(1, |p: &Point| (0.0..=0.7).contains(&p.coords()[0]));
    let params = RayParams {
        extension_length: 1.0,
        lambda: 3,
        mode: Alg1Mode::Literal,
    };
    let (ray, trace) = search_boundary_traced(
        &Point::new(vec![0.1]).unwrap(),
        &Orientation::from_unit(vec![1.0]).unwrap(),
        &params,
        &mut oracle,
        &domain,
        u64::MAX,
    )
    .unwrap();
    let trace_ok = trace.len() == golden.len()
        && trace.iter().zip(&golden).all(|(step, g)| {
            let state = step.literal.expect("literal state recorded");
            step.offset == g.0
                && (step.outcome == ProbeOutcome::Hit) == g.1
                && state.step_length == g.2
                && state.sign == g.3
                && state.retracted == g.4
        })
        && (ray.boundary.coords()[0] - 0.6).abs() < 1e-15;

    // consecutive-miss rate of the literal rule on simulated regions
    let lit = RunOptions {
        alg1_mode: Alg1Mode::Literal,
        ..options()
    };
    let setting = ExperimentSetting {
        repetitions: 20,
        ..cell(2, 0.001, RegionShape::Rectangle, 1.0, 0.0, Strategy::Dsb, 100)
    };
    let records = run_setting(&setting, &lit);
    let rays: u64 = records.iter().map(|r| r.rays).sum();
    let streaky: u64 = records.iter().map(|r| r.consecutive_miss_rays).sum();
    let found: usize = records.iter().map(|r| r.boundary_inputs.len()).sum();
    let rate = streaky as f64 / rays.max(1) as f64;

    // how far literal-mode boundary inputs sit from the analytic boundary
    let mut off = 0usize;
    let mut total = 0usize;
    for r in &records {
        let spec = r.region.as_ref().unwrap();
        let src = &r.source_inputs[0];
        for b in &r.boundary_inputs {
            let dist = b.distance(src);
            if dist == 0.0 {
                continue;
            }
            let dir: Vec<f64> = b.coords().iter().zip(src.coords()).map(|(x, s)| (x - s) / dist).collect();
            total += 1;
            if (spec.exit_distance(src, &dir) - dist).abs() > 1e-3 {
                off += 1;
            }
        }
    }
    let bracket = run_setting(&setting, &options());
    let b_rays: u64 = bracket.iter().map(|r| r.rays).sum();
    let b_streaky: u64 = bracket.iter().map(|r| r.consecutive_miss_rays).sum();

    outcome(
        trace_ok && rate > 0.5,
        format!(
            "golden trace {}; literal mode: {streaky}/{rays} rays ({:.1}%) ended on {} consecutive misses without a failure, {found} boundary inputs found, {off} of {total} measurable ones farther than 1e-3 from the true boundary; bracketing mode: {b_streaky}/{b_rays} rays",
            if trace_ok { "reproduced" } else { "MISMATCH" },
            100.0 * rate,
            setting.lambda
        ),
    )
}

fn guarded<F: FnOnce() -> Outcome>(f: F) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mini = panic::catch_unwind(mini_sweep).ok();
    let missing = || outcome(false, "mini-sweep did not complete".into());

    let mut results: BTreeMap<u32, (&str, Outcome)> = BTreeMap::new();
    results.insert(1, ("bisection accuracy", guarded(bisection_accuracy)));
    results.insert(2, ("soundness", mini.as_ref().map_or_else(missing, |m| guarded(|| soundness(m)))));
    results.insert(3, ("convexity bound", mini.as_ref().map_or_else(missing, |m| guarded(|| convexity(m)))));
    results.insert(4, ("N-monotonicity", guarded(n_monotonicity)));
    results.insert(5, ("DSB rotation-insensitivity", guarded(dsb_rotation)));
    results.insert(6, ("FSB alignment contrast", guarded(fsb_alignment)));
    results.insert(7, ("dimension/compactness degradation", guarded(degradation)));
    results.insert(8, ("theta-insensitivity", guarded(theta_insensitivity)));
    results.insert(9, ("geometry oracles", guarded(geometry_oracles)));
    results.insert(10, ("determinism", mini.as_ref().map_or_else(missing, |m| guarded(|| determinism(m)))));
    results.insert(11, ("literal-mode audit", guarded(literal_audit)));

    let mut failed = 0;
    for (n, (name, o)) in &results {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {:<36} {}  {}",
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
