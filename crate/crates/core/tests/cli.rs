use std::path::Path;
use std::process::{Command, Output};

fn cartel(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartel"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(
        &["simulate", "--N", "1000", "--K", "2", "--a", "0.5", "--burn-in", "10", "--sweeps", "600", "--seed", "4"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let ts = read(dir.path(), "timeseries.csv");
    let mut lines = ts.lines();
    assert_eq!(lines.next(), Some("sweep,mean_w"));
    assert_eq!(lines.next().unwrap().split(',').next(), Some("11"));
    assert_eq!(ts.lines().count(), 601);
    let hist = read(dir.path(), "degree_hist.csv");
    assert!(hist.starts_with("k,count,n_snapshots\n"));
    let total: u64 = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1000 * 600);

    let o = cartel(&["analyze", "--segment-length", "128", "--K", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read(dir.path(), "spectrum.csv").starts_with("f,power\n"));
    let fit = read(dir.path(), "fit.csv");
    let keys: Vec<&str> = fit.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(keys, ["quantity", "alpha_low", "alpha_high", "tail_exponent", "k_min"]);
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(&["critical-a", "--K", "1", "--tol", "1e-6"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "critical_a.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "K,a_c,k_max,tol");
    let a_c_text = lines[1].split(',').nth(1).unwrap();
    let mantissa = a_c_text.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{a_c_text}");
    let a_c: f64 = a_c_text.parse().unwrap();
    assert!(a_c > 0.0 && a_c < 1.0);
}

#[test]
fn sweep_rows_are_sorted_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(
        &[
            "sweep", "--N", "500", "--K", "2,1", "--a", "0.5,0.1", "--replicates", "2", "--burn-in", "2", "--sweeps", "5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "sweep.csv");
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(csv.lines().next(), Some("K,a,seed,mean_w,var_w"));
    assert_eq!(rows.len(), 8);
    let keys: Vec<(u32, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert!(keys.windows(2).all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1)));
}

#[test]
fn relative_sweep_scales_by_critical_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(
        &["sweep", "--N", "300", "--K", "1", "--a", "0.5", "--a-relative", "true", "--burn-in", "1", "--sweeps", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "sweep.csv");
    let a: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let a_c = cartel::stability::find_critical_a(1, 1e-6).unwrap().a_c;
    assert!((a - 0.5 * a_c).abs() < 1e-12);
}

#[test]
fn master_eq_writes_trajectory_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(
        &["master-eq", "--K", "2", "--a", "0.3", "--n-w", "8", "--T", "4", "--snapshots", "0,2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = read(dir.path(), "master_traj.csv");
    assert!(traj.starts_with("t,mean_w\n"));
    assert_eq!(traj.lines().count(), 6);
    for name in ["P_t0.csv", "P_t2.csv"] {
        let snap = read(dir.path(), name);
        assert!(snap.starts_with("k,w,P\n"));
        let mass: f64 = snap.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn invalid_input_exits_one_with_single_line() {
    let dir = tempfile::tempdir().unwrap();
    for (args, needle) in [
        (vec!["simulate", "--K", "0", "--N", "100"], "K"),
        (vec!["simulate", "--N", "1"], "N"),
        (vec!["simulate", "--a", "1.5", "--N", "100"], "a"),
        (vec!["simulate", "--record-every", "0", "--N", "100"], "record-every"),
        (vec!["simulate", "--init", "sideways", "--N", "100"], "init"),
        (vec!["simulate", "--bogus", "1"], "bogus"),
        (vec!["critical-a", "--tol", "0"], "tol"),
        (vec!["master-eq", "--n-w", "1"], "n-w"),
        (vec!["sweep", "--workers", "0", "--N", "100"], "workers"),
    ] {
        let o = cartel(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: ") && err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn runtime_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(&["master-eq", "--K", "1", "--a", "0.9", "--n-w", "6", "--dt", "500", "--T", "1000"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: clipped mass"));

    let o = cartel(&["analyze", "--input", "/nonexistent/timeseries.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_series_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("timeseries.csv"), "sweep,mean_w\n1,0.5\n3,oops\n").unwrap();
    let o = cartel(&["analyze"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 3"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nN = 400\nK = 2\nsweeps = 7\nburn-in = 1\na = 0.9\n").unwrap();
    let o = cartel(&["simulate", "--config", cfg.to_str().unwrap(), "--sweeps", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let ts = read(dir.path(), "timeseries.csv");
    assert_eq!(ts.lines().count(), 4, "command line overrides the file");
    let hist = read(dir.path(), "degree_hist.csv");
    let total: u64 = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 400 * 3);

    std::fs::write(&cfg, "unknown-key = 3\n").unwrap();
    let o = cartel(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let o = Command::new(env!("CARGO_BIN_EXE_cartel")).arg("--help").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["simulate", "sweep", "critical-a", "master-eq", "analyze"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn fit_bands_parse_as_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let o = cartel(&["simulate", "--N", "300", "--sweeps", "2048", "--burn-in", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cartel(
        &["analyze", "--segment-length", "256", "--low-band", "0.01,0.1", "--high-band", "0.1,0.5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = read(dir.path(), "fit.csv");
    let alpha_low = fit.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_ne!(alpha_low, "nan");

    let o = cartel(&["analyze", "--low-band", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("low-band"));
    let o = cartel(&["analyze", "--segment-length", "256", "--high-band", "0.5,0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
