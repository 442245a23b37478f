use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn boundfa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundfa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn example_one(dir: &TempDir) {
    fs::write(dir.path().join("ex1.txt"), "a\na\n").unwrap();
}

#[test]
fn example_one_has_no_dfa() {
    let dir = tempfile::tempdir().unwrap();
    example_one(&dir);
    for backend in ["enumerate", "external"] {
        let out = boundfa(
            dir.path(),
            &["learn", "--mode", "two-bound", "--lower", "1", "--upper", "1", "--sample", "ex1.txt", "--backend", backend, "--out-dir", backend],
        );
        assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
        let report = json(&dir.path().join(backend).join("report.json"));
        assert_eq!(report["status"], "no-dfa-exists");
        assert_eq!(report["sizes_tried"].as_array().unwrap().len(), 3);
        assert!(!dir.path().join(backend).join("dfa.json").exists());
    }
}

#[test]
fn single_bound_zero_rejects_all() {
    let dir = tempfile::tempdir().unwrap();
    example_one(&dir);
    let out = boundfa(
        dir.path(),
        &["learn", "--mode", "single-bound-lower", "--lower", "0", "--states", "1", "--sample", "ex1.txt", "--backend", "enumerate"],
    );
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["accepted_count"], 0);
    assert_eq!(report["objective_value"], "0");
    let dfa = json(&dir.path().join("dfa.json"));
    assert_eq!(dfa["finals"].as_array().unwrap().len(), 0);
    assert!(fs::read_to_string(dir.path().join("dfa.dot")).unwrap().starts_with("digraph"));
}

#[test]
fn trivial_bounds_one_state() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "a b\nb\na b\n\n").unwrap();
    let out = boundfa(dir.path(), &["learn", "--lower", "0", "--upper", "4", "--sample", "s.txt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["states"], 1);
    assert_eq!(report["backend"], "external:highs-scipy");
}

#[test]
fn export_lp_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    example_one(&dir);
    let args = ["export-lp", "--lower", "1", "--upper", "1", "--states", "1", "--sample", "ex1.txt"];
    let a = boundfa(dir.path(), &args);
    let b = boundfa(dir.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let lp = String::from_utf8(a.stdout).unwrap();
    assert!(lp.contains(" lower_0: 2 a_1_0 >= 1\n"));
    assert!(lp.contains(" upper_0: 2 a_1_0 <= 1\n"));

    let out = boundfa(dir.path(), &["export-lp", "--lower", "1", "--upper", "1", "--states", "0", "--sample", "ex1.txt"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    example_one(&dir);
    for args in [
        &["learn", "--lower", "1", "--sample", "ex1.txt"][..],
        &["learn", "--mode", "single-bound-lower", "--lower", "1", "--upper", "2", "--states", "1", "--sample", "ex1.txt"],
        &["learn", "--mode", "single-bound-upper", "--upper", "1", "--sample", "ex1.txt"],
        &["learn", "--lower", "2", "--upper", "1", "--sample", "ex1.txt"],
        &["learn", "--mode", "sideways", "--sample", "ex1.txt"],
        &["learn", "--mode", "single-bound-lower", "--lower", "0", "--states", "1", "--lambda-sink", "1", "--sample", "ex1.txt"],
    ] {
        let out = boundfa(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn backend_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    example_one(&dir);
    let out = boundfa(dir.path(), &["learn", "--lower", "1", "--upper", "1", "--sample", "ex1.txt", "--backend-cmd", "false"]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn gen_eval_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    for out_dir in ["g1", "g2"] {
        let out = boundfa(dir.path(), &["gen", "--seed", "11", "--n-total", "120", "--out-dir", out_dir]);
        assert_eq!(code(&out), 0);
    }
    for f in ["train.txt", "test.tsv", "meta.json", "planted.json"] {
        assert_eq!(
            fs::read(dir.path().join("g1").join(f)).unwrap(),
            fs::read(dir.path().join("g2").join(f)).unwrap(),
            "{f}"
        );
    }
    let out = boundfa(
        dir.path(),
        &["eval", "--dfa", "g1/planted.json", "--labels", "g1/test.tsv", "--out", "m.json"],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("f1=1.0 "));
    assert_eq!(json(&dir.path().join("m.json"))["f1_exact"], "1");

    let out = boundfa(dir.path(), &["gen", "--planted", "contains:q", "--out-dir", "bad"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_rows_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = boundfa(dir.path(), &["sweep", "--seeds", "1", "--backend", "enumerate"]);
    assert_eq!(code(&out), 2);

    let args = [
        "sweep", "--seeds", "1", "--n-total", "100", "--sizes", "2", "--deltas", "0,0.02", "--backend", "enumerate", "--out", "s.csv",
    ];
    let out = boundfa(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "goal,mode,states,bound_relax,time_s,f1,accepted_count,status");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("planted-seed1,two-bound,2,0,"));
    assert!(lines[1].ends_with(",1,8,learned"), "{}", lines[1]);
    assert!(lines[2].starts_with("planted-seed1,two-bound,2,0.02,"));

    // reading the generated directory gives the same rows
    assert_eq!(code(&boundfa(dir.path(), &["gen", "--seed", "1", "--n-total", "100", "--out-dir", "d"])), 0);
    let out = boundfa(
        dir.path(),
        &["sweep", "--data", "d", "--sizes", "2", "--deltas", "0,0.02", "--backend", "enumerate", "--out", "t.csv"],
    );
    assert_eq!(code(&out), 0);
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .skip(1)
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[0] = "";
                f[4] = "";
                f.join(",")
            })
            .collect()
    };
    assert_eq!(strip(&csv), strip(&fs::read_to_string(dir.path().join("t.csv")).unwrap()));
}
