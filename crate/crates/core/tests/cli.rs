use std::process::{Command, Output};

use serde_json::Value;

const KSTAR: [&str; 8] = [
    "--set",
    "k3=1/10",
    "--set",
    "k4=1/10",
    "--set",
    "k5=0.065",
    "--set",
    "eps=0.0071041",
];

fn cyclia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclia"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with(cmd: &[&str], extra: &[&str]) -> Vec<String> {
    cmd.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--format", "json"];
    a.extend_from_slice(args);
    serde_json::from_str(&stdout(&cyclia(&a))).unwrap()
}

#[test]
fn quantities_left_of_the_root_are_negative() {
    let v = json(&[
        "quantities",
        "--set",
        "k3=1/10",
        "--set",
        "k4=1/10",
        "--set",
        "k5=0.0514",
        "--n",
        "1",
    ]);
    assert_eq!(v["schema"], 1);
    assert!(v["g"][0]["decimal"].as_f64().unwrap() < 0.0);
    assert_eq!(v["oracle"]["g1"]["equal"], true);
}

#[test]
fn region_violation_names_the_inequality() {
    let o = cyclia(&["analyze", "--set", "k3=1/4", "--set", "k4=1/10", "--set", "k5=0.05"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("8 k3 < 1"));
}

#[test]
fn exit_codes_by_failure_kind() {
    let bad = cyclia(&["analyze", "--set", "k3=one", "--set", "k4=1/10", "--set", "k5=0.05"]);
    assert_eq!(bad.status.code(), Some(2));
    let mut args = vec!["quantities"];
    args.extend_from_slice(&KSTAR[..6]);
    args.extend_from_slice(&["--set", "eps=1/2"]);
    assert_eq!(cyclia(&args).status.code(), Some(4));
    let pole = cyclia(&["oracle", "eval", "g2", "1"]);
    assert_eq!(pole.status.code(), Some(5));
}

#[test]
fn simulate_first_seed_oscillates() {
    let args = with(&["--format", "csv", "simulate"], &KSTAR);
    let mut args: Vec<&str> = args.iter().map(String::as_str).collect();
    args.extend_from_slice(&["--x0", "3.9267,0.5,0.085", "--t", "400", "--dt", "0.5"]);
    let out = stdout(&cyclia(&args));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,X1,Y1,Z1"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 801);
    let late: Vec<f64> = rows.iter().filter(|r| r[0] > 200.0).map(|r| r[2]).collect();
    let (lo, hi) = late
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(*y), b.max(*y)));
    assert!(hi - lo > 1.0 && hi < 20.0 && lo > 0.0, "{lo} {hi}");
    let upward = late.windows(2).filter(|w| w[0] < 1.0 && w[1] >= 1.0).count();
    assert!((7..=9).contains(&upward), "{upward}");
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# example\nk3 = 1/10\nk4 = 1/10\nk5 = 0.0514\nn = 1\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["quantities", p]);
    assert!(v["g"][0]["decimal"].as_f64().unwrap() < 0.0);
    let v = json(&["quantities", p, "--set", "k5=0.052"]);
    assert!(v["g"][0]["decimal"].as_f64().unwrap() > 0.0);
}

fn commands() -> Vec<Vec<String>> {
    let k = ["--set", "k3=1/10", "--set", "k4=1/10", "--set", "k5=0.065"];
    vec![
        vec!["parse".to_string()],
        with(&["analyze"], &k),
        with(&["quantities", "--n", "2"], &k),
        with(&["quantities", "--n", "2", "--float"], &k),
        with(&["manifold"], &k),
        with(&["sweep", "--from", "0.05", "--to", "0.053", "--steps", "4"], &k),
        with(&["simulate", "--t", "20", "--dt", "1"], &KSTAR),
        with(&["cycles"], &KSTAR),
        with(&["unfold"], &k[..4]),
        with(&["oracle", "eval", "g1", "1/10", "1/10", "13/200"], &[]),
    ]
}

#[test]
fn every_command_honors_every_format() {
    for cmd in commands() {
        for fmt in ["json", "csv", "text"] {
            let mut args = vec!["--format", fmt];
            args.extend(cmd.iter().map(String::as_str));
            let out = stdout(&cyclia(&args));
            assert!(!out.trim().is_empty(), "{cmd:?} {fmt}");
            match fmt {
                "json" => {
                    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{cmd:?}: {e}"));
                    assert_eq!(v["schema"], 1, "{cmd:?}");
                }
                "csv" => {
                    let header = out.lines().next().unwrap();
                    let width = header.split(',').count();
                    assert!(width >= 2, "{cmd:?}: {header}");
                }
                _ => assert!(serde_json::from_str::<Value>(&out).is_err(), "{cmd:?}"),
            }
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    for cmd in commands() {
        for fmt in ["json", "csv"] {
            let mut args = vec!["--format", fmt];
            args.extend(cmd.iter().map(String::as_str));
            let a = cyclia(&args);
            let b = cyclia(&args);
            assert!(a.status.success());
            assert_eq!(a.stdout, b.stdout, "{cmd:?} {fmt}");
        }
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = with(
        &[
            "--format", "json", "sweep", "--from", "0.05", "--to", "0.053", "--steps", "6", "--set", "k3=1/10",
            "--set", "k4=1/10", "--set", "k5=0.05",
        ],
        &[],
    );
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_cyclia"))
            .args(&args)
            .env("CYCLIA_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}
