use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ges2n_core::io::parse_columns;
use ges2n_core::{compute_metrics, CyclicGrid, MetricParams};

fn ges2n(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ges2n")).args(args).output().expect("binary runs")
}

fn small_record(dir: &Path) -> String {
    let path = dir.join("rec.csv");
    let out = ges2n(&["synth", "--out", path.to_str().unwrap(), "--duration", "1.5", "--fault-snr-db", "-6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn quick_run(input: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--input", input, "--out", out.to_str().unwrap(), "--filter-length", "16", "--max-iter", "15"];
    args.extend_from_slice(extra);
    ges2n(&args)
}

#[test]
fn unknown_variant_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_record(dir.path());
    let out = quick_run(&input, &dir.path().join("o"), &["--variant", "GES2N-Median"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["GES2N-ICS2", "GES2N-Mean-Nf", "GES2N-Mean-Np", "GES2N-Max-Nf", "GES2N-Max-Np"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn missing_speed_column_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "time,accel\n0,1\n0.001,2\n0.002,3\n").unwrap();
    let out = quick_run(path.to_str().unwrap(), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unreadable_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = quick_run("/nonexistent/rec.csv", &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_artifacts_that_re_meter_identically() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_record(dir.path());
    let out_dir = dir.path().join("o");
    let out = quick_run(&input, &out_dir, &["--variant", "GES2N-Mean-Np"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["filtered.csv", "filter.csv", "ses_raw.csv", "ses_filtered.csv", "frf.csv", "metrics.json", "trace.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["variant"], "GES2N-Mean-Np");
    let cols = parse_columns(fs::File::open(out_dir.join("ses_filtered.csv")).unwrap(), &["alpha", "b"]).unwrap();
    let grid = CyclicGrid::with_len(cols[0][1], cols[0].len()).unwrap();
    assert_eq!(grid.alpha(), cols[0].as_slice());
    let m = compute_metrics(&cols[1], &grid, &MetricParams::default()).unwrap();
    for (key, value) in [("m1_filtered", m.m1), ("m2_filtered", m.m2), ("m3_filtered", m.m3), ("m4_filtered", m.m4)] {
        let stored = json[key].as_f64().unwrap();
        let value = value.unwrap();
        assert!((stored - value).abs() <= 1e-9 * stored.abs(), "{key}: {stored} vs {value}");
    }
    let frf = parse_columns(fs::File::open(out_dir.join("frf.csv")).unwrap(), &["freq_hz", "magnitude"]).unwrap();
    assert_eq!(frf[0].len(), 2049);
    let energy: f64 = frf[1].iter().map(|v| v * v).sum();
    assert!((energy - 1.0).abs() < 1e-12);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_record(dir.path());
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("# quick run\ninput = {input}\nfilter_length = 8\nmax-iter = 5\nvariant = GES2N-Max-Nf\n")).unwrap();
    let out_dir = dir.path().join("o");
    let out = ges2n(&["run", "--config", conf.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--filter-length", "12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["filter_length"], 12);
    assert_eq!(json["variant"], "GES2N-Max-Nf");
    fs::write(&conf, "colour = blue\n").unwrap();
    let out = ges2n(&["run", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_records_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("synth.conf"), "duration = 1.5\nfault-snr-db = -6\n").unwrap();
    fs::write(
        dir.path().join("sweep.conf"),
        "synth-config = synth.conf\nfilter-length = 8, 16\nband-width = 0.1, 0.2\nmax-iter = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("s");
    let out = ges2n(&["sweep", "--config", dir.path().join("sweep.conf").to_str().unwrap(), "--jobs", "2", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.contains("converged") || r.contains("max_iter")), "{summary}");
}

#[test]
fn failed_cells_do_not_stop_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("synth.conf"), "duration = 1.5\n").unwrap();
    fs::write(
        dir.path().join("sweep.conf"),
        "synth-config = synth.conf\nfilter-length = 1, 8\nmax-iter = 3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("s");
    let out = ges2n(&["sweep", "--config", dir.path().join("sweep.conf").to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("failed"));
    assert!(!rows[1].contains("failed"));
}

#[test]
fn synth_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = ges2n(&["synth", "--out", p.to_str().unwrap(), "--duration", "0.5", "--seed", "42"]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
