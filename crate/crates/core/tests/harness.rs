use std::fs;
use std::path::Path;

use failure_region::harness::{
    read_records_csv, render_svg, run_repetition, run_setting, sweep, ExperimentSetting, Matrix,
    RenderError, RunOptions, RunRecord, RunStatus, SweepOptions, CSV_HEADER,
};
use failure_region::oracles::RegionShape;
use failure_region::search::Strategy;

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn setting(d: usize) -> ExperimentSetting {
    ExperimentSetting {
        d,
        theta: 0.001,
        shape: RegionShape::Rectangle,
        delta: 1.0,
        gamma: 0.0,
        strategy: Strategy::Dsb,
        n: 100,
        lambda: 20,
        extension_length: 1.0,
        repetitions: 50,
        base_seed: 1,
    }
}

fn quiet() -> RunOptions {
    RunOptions {
        mc_samples: 5_000,
        record_timing: false,
        ..RunOptions::default()
    }
}

#[test]
fn desk_scale_dsb_cell_reaches_high_ratio() {
    let records = run_setting(&setting(2), &quiet());
    assert_eq!(records.len(), 50);
    let mean = records.iter().map(|r| r.s_ratio).sum::<f64>() / 50.0;
    assert!(mean >= 0.8, "mean s_ratio {mean}");
}

#[test]
fn full_matrix_expands_to_504_cells_per_strategy() {
    let mut matrix = Matrix::load(&configs().join("full-matrix.toml")).unwrap();
    assert_eq!(matrix.settings().len(), 504 * 3);
    matrix.strategies = vec![Strategy::Fsb1];
    matrix.repetitions = 1;
    matrix.mc_samples = 500;
    assert_eq!(matrix.settings().len(), 504);

    let dir = tempfile::tempdir().unwrap();
    let opts = SweepOptions {
        write_json: false,
        record_timing: false,
        ..SweepOptions::new(dir.path())
    };
    let report = sweep(&matrix, &opts).unwrap();
    // 4-D hyperellipsoids at delta = 100, theta = 0.005 cannot fit
    assert_eq!(report.skipped.len(), 14);
    assert!(report.skipped.iter().all(|id| id.starts_with("d4-ellipse-t0.005-dl100-")));
    assert_eq!(report.rows, 490);
    assert_eq!(report.failed_runs, 0);
    let rows = read_records_csv(&dir.path().join("records.csv")).unwrap();
    assert_eq!(rows.len(), 490);
}

#[test]
fn empty_matrix_writes_header_only() {
    let text = r#"
dimensions = []
failure_rates = [0.001]
shapes = ["rectangle"]
compactness = [1]
rotations = [0]
strategies = ["dsb"]
boundary_counts = [100]
"#;
    let matrix = Matrix::from_toml_str(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&matrix, &SweepOptions::new(dir.path())).unwrap();
    assert_eq!(report.rows, 0);
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv, format!("{CSV_HEADER}\n"));
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn sweep_writes_json_that_remeasures() {
    let text = r#"
dimensions = [2, 3]
failure_rates = [0.005]
shapes = ["ellipse"]
compactness = [10]
rotations = [30]
strategies = ["fsb2"]
boundary_counts = [50]
repetitions = 2
base_seed = 5
mc_samples = 4000
"#;
    let matrix = Matrix::from_toml_str(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = sweep(&matrix, &SweepOptions { jobs: 3, ..SweepOptions::new(dir.path()) }).unwrap();
    assert_eq!(report.rows, 4);
    assert_eq!(report.summary.len(), 2);
    let mut files: Vec<_> = fs::read_dir(dir.path().join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 4);
    for f in files {
        let record: RunRecord = serde_json::from_slice(&fs::read(&f).unwrap()).unwrap();
        let again = serde_json::to_string(&record).unwrap();
        assert_eq!(serde_json::from_str::<RunRecord>(&again).unwrap(), record);
        let m = record.remeasure().unwrap();
        assert!((m.s_ratio - record.s_ratio).abs() <= 3.0 * record.stderr / record.s_rfr + 1e-12);
        assert!(record.wall_time_ms > 0.0);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let text = r#"
dimensions = [2]
failure_rates = [0.005]
shapes = ["rectangle", "ellipse"]
compactness = [1, 10]
rotations = [0, 45]
strategies = ["fsb1", "dsb"]
boundary_counts = [30]
repetitions = 2
mc_samples = 1000
"#;
    let matrix = Matrix::from_toml_str(text).unwrap();
    let run = |jobs| {
        let dir = tempfile::tempdir().unwrap();
        let opts = SweepOptions {
            jobs,
            write_json: false,
            record_timing: false,
            ..SweepOptions::new(dir.path())
        };
        sweep(&matrix, &opts).unwrap();
        (
            fs::read(dir.path().join("records.csv")).unwrap(),
            fs::read(dir.path().join("summary.csv")).unwrap(),
        )
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn render_two_dimensional_record() {
    let r = run_repetition(&setting(2), 0, &quiet());
    let svg = render_svg(&r, (0, 1)).unwrap();
    assert_eq!(svg.matches("<circle class=\"boundary\"").count(), r.boundary_inputs.len());
    assert_eq!(r.boundary_inputs.len(), 100);
    assert_eq!(svg.matches("class=\"source\"").count(), 1);
    assert_eq!(svg, render_svg(&r, (0, 1)).unwrap());
}

#[test]
fn render_projection_stays_in_viewport() {
    let s = ExperimentSetting {
        gamma: 30.0,
        delta: 10.0,
        ..setting(4)
    };
    let r = run_repetition(&s, 0, &quiet());
    assert_eq!(r.status, RunStatus::Ok);
    let svg = render_svg(&r, (0, 2)).unwrap();
    for cap in svg.split("cx=\"").skip(1) {
        let x: f64 = cap[..cap.find('"').unwrap()].parse().unwrap();
        assert!((20.0..=420.0).contains(&x), "cx {x}");
    }
    for cap in svg.split("cy=\"").skip(1) {
        let y: f64 = cap[..cap.find('"').unwrap()].parse().unwrap();
        assert!((20.0..=420.0).contains(&y), "cy {y}");
    }
    assert_eq!(render_svg(&r, (1, 1)), Err(RenderError::InvalidAxes(1, 1, 4)));
    assert_eq!(render_svg(&r, (0, 4)), Err(RenderError::InvalidAxes(0, 4, 4)));
}
