use elliptic_qybe::report::Report;
use elliptic_qybe::verify::Status;
use std::path::Path;
use std::process::{Command, Output};

fn qnk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnk"))
        .args(args)
        .output()
        .expect("qnk runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Report {
    Report::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap()
}

#[test]
fn passing_check_exits_zero() {
    let o = qnk(&["check", "qybe", "--n", "3", "--k", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert!(r.summary.total > 0);
    assert_eq!(r.summary.pass, r.summary.total);
    assert!(r.results.iter().all(|x| x.name.starts_with("qybe.")));
}

#[test]
fn header_lists_defaults() {
    let o = qnk(&["check", "inverse"]);
    let err = String::from_utf8(o.stderr).unwrap();
    let first = err.lines().next().unwrap();
    assert!(first.contains("eta=0.31+1.37i"), "{first}");
    assert!(first.contains("tau=0.1234+0.4321*eta"), "{first}");
}

#[test]
fn hilbert_dimensions() {
    let o = qnk(&["hilbert", "--n", "3", "--d-max", "4"]);
    assert_eq!(code(&o), 0);
    let dims: Vec<u64> = report(&o)
        .results
        .iter()
        .filter(|r| r.name == "hilbert.rank")
        .map(|r| r.observed.as_u64().unwrap())
        .collect();
    assert_eq!(dims, [1, 3, 6, 10, 15]);
}

#[test]
fn failing_check_exits_one() {
    let o = qnk(&["limits", "--no-timings"]);
    assert_eq!(code(&o), 1);
    assert!(std::str::from_utf8(&o.stdout).unwrap().contains("\"status\": \"fail\""));
}

#[test]
fn refused_counts_as_failure_unless_allowed() {
    let args = ["frobenius", "--n", "5", "--k", "2"];
    let o = qnk(&args);
    let r = report(&o);
    assert!(r.results.iter().any(|x| x.status == Status::Refused));
    assert_eq!(r.summary.fail, 0);
    assert_eq!(code(&o), 1);
    let o = qnk(&[&args[..], &["--allow-ambiguous"]].concat());
    assert_eq!(code(&o), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&qnk(&[])), 2);
    assert_eq!(code(&qnk(&["check", "nothing"])), 2);
    assert_eq!(code(&qnk(&["twist", "--eta", "1"])), 2);
    assert_eq!(code(&qnk(&["hilbert", "--d-max", "7"])), 2);
    assert_eq!(code(&qnk(&["check", "det", "--k", "3", "--n", "3"])), 2);
    assert_eq!(code(&qnk(&["check", "det", "--eta", "0.3,-1"])), 2);
    assert_eq!(code(&qnk(&["twist", "--config", "/nonexistent/cfg.json"])), 2);
    assert_eq!(code(&qnk(&["--help"])), 0);
}

#[test]
fn io_error_exits_two() {
    let o = qnk(&["check", "inverse", "--out", "/nonexistent/dir/r.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("report.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"n": 2, "k": 1, "seed": 7, "trials": 3, "timings": false, "out": {:?}, "checks": ["qybe", "inverse"]}}"#,
            out.display().to_string()
        ),
    )
    .unwrap();
    let o = qnk(&["report", "all", "--config", cfg.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r = Report::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((r.config.n, r.config.seed, r.config.trials), (2, 11, 3));
    assert!(r
        .results
        .iter()
        .all(|x| x.name.starts_with("qybe.") || x.name.starts_with("inverse.")));
    assert!(r.results.iter().all(|x| x.wall_time == 0.0));

    std::fs::write(&cfg, r#"{"n": 2, "unknown_key": 1}"#).unwrap();
    assert_eq!(code(&qnk(&["report", "all", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{"checks": ["qybe", "bogus"]}"#).unwrap();
    assert_eq!(code(&qnk(&["report", "all", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn byte_stable_and_round_trips() {
    let args = ["check", "transforms", "--no-timings", "--seed", "5"];
    let a = qnk(&args);
    let b = qnk(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    let again = r.to_json().unwrap() + "\n";
    assert_eq!(again.as_bytes(), &a.stdout[..]);
    let c = qnk(&["check", "transforms", "--no-timings", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = qnk(&["twist", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(Path::new(&out)).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    assert_eq!(&headers[0], "name");
    assert!(headers.iter().any(|h| h == "wall_time"));
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[0] == "twist.rank" && &r[7] == "pass"));
}
