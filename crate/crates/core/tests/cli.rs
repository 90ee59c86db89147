use std::path::Path;
use std::process::{Command, Output};

use tubal::io::read_tns3;
use tubal::tensor::Norm;
use tubal::tsvd::minimal_error;

fn tubal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubal"))
        .args(args)
        .current_dir(dir)
        .env("TUBAL_THREADS", "2")
        .output()
        .unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_owned()).collect()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = tubal(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tubal(dir.path(), &["synth", "--kind", "nope"]).status.code(), Some(2));
    assert_eq!(tubal(dir.path(), &["turank", "--in", "x.tns3", "--b", "3", "--seed", "1"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_tubal"))
        .args(["tsvd", "--in", "x.tns3", "--k", "1"])
        .current_dir(dir.path())
        .env("TUBAL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = tubal(dir.path(), &["tsvd", "--in", "missing.tns3", "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tensor_i_reveals_rank_15() {
    let dir = tempfile::tempdir().unwrap();
    let synth = tubal(dir.path(), &["synth", "--kind", "tensorI", "--n1", "100", "--n2", "100", "--n3", "20", "--seed", "7", "--out", "a.tns3"]);
    assert!(synth.status.success());
    let out = tubal(
        dir.path(),
        &["turank", "--in", "a.tns3", "--tau", "0.05", "--b", "15", "--q", "1", "--seed", "7", "--metrics", "m.csv", "--sv-out", "sv.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(column(&csv, "tubal_rank"), vec!["15"]);
    assert_eq!(column(&csv, "multirank")[0], vec!["15"; 20].join(";"));
    let sv = std::fs::read_to_string(dir.path().join("sv.csv")).unwrap();
    assert_eq!(sv.lines().count(), 1 + 15 * 20);

    let tsvd = tubal(dir.path(), &["tsvd", "--in", "a.tns3", "--k", "15"]);
    assert!(tsvd.status.success());
    let re: f64 = column(&String::from_utf8(tsvd.stdout).unwrap(), "re")[0].parse().unwrap();
    let a = read_tns3(dir.path().join("a.tns3")).unwrap();
    let oracle = minimal_error(&a, 15, Norm::Frobenius).unwrap() / a.frobenius_norm();
    assert!((re - oracle).abs() <= 1e-9 * oracle, "{re} vs {oracle}");
}

#[test]
fn tau_energy_sets_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tubal(dir.path(), &["synth", "--kind", "lowrank", "--n1", "12", "--n2", "10", "--n3", "4", "--rank", "2", "--seed", "3", "--out", "a.tns3"])
        .status
        .success());
    let out = tubal(dir.path(), &["turank", "--in", "a.tns3", "--tau-energy", "0.3", "--b", "2", "--seed", "1"]);
    assert!(out.status.success());
    let a = read_tns3(dir.path().join("a.tns3")).unwrap();
    let tau: f64 = column(&String::from_utf8(out.stdout).unwrap(), "tau")[0].parse().unwrap();
    assert!((tau - 0.3 * a.frobenius_norm() / 4.0).abs() <= 1e-12 * tau);
}

#[test]
fn trpca_writes_parts_and_flags_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(tubal(d, &["synth", "--kind", "lowrank", "--n1", "20", "--n2", "20", "--n3", "4", "--rank", "2", "--seed", "1", "--out", "l.tns3"]).status.success());
    let l0 = read_tns3(d.join("l.tns3")).unwrap();
    let e0 = tubal::synth::sparse_corruption(20, 20, 4, 0.05, 1.0, 2).unwrap();
    tubal::io::write_tns3(&(&l0 + &e0), d.join("a.tns3")).unwrap();

    let ok = tubal(d, &["trpca", "--in", "a.tns3", "--truth", "l.tns3", "--out-l", "L.tns3", "--out-e", "E.tns3", "--metrics", "m.csv"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(column(&csv, "converged"), vec!["true"]);
    let re: f64 = column(&csv, "re")[0].parse().unwrap();
    assert!(re < 1e-3, "{re}");
    let (l, e) = (read_tns3(d.join("L.tns3")).unwrap(), read_tns3(d.join("E.tns3")).unwrap());
    assert_eq!(l.dims(), (20, 20, 4));
    assert_eq!(e.dims(), (20, 20, 4));

    let short = tubal(d, &["trpca", "--in", "a.tns3", "--max-iters", "3", "--metrics", "s.csv"]);
    assert_eq!(short.status.code(), Some(1));
    let csv = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(column(&csv, "converged"), vec!["false"]);
}

#[test]
fn bench_compare_emits_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(tubal(d, &["synth", "--kind", "tensorII", "--n1", "20", "--n2", "20", "--n3", "3", "--seed", "4", "--out", "a.tns3"]).status.success());
    let out = tubal(d, &["bench", "compare", "--in", "a.tns3", "--taus", "1e-2,1e-1", "--methods", "tsvd,turank,rtsvd", "--seeds", "1,2", "--b", "4", "--K", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let methods = column(&csv, "method");
    assert_eq!(methods.len(), 2 * 2 * 3);
    // tsvd runs at the tubal rank the preceding turank run revealed
    let nus = column(&csv, "tubal_rank");
    let ks = column(&csv, "K");
    for (i, m) in methods.iter().enumerate() {
        if m == "tsvd" {
            assert_eq!(methods[i - 1], "turank");
            assert_eq!(ks[i], nus[i - 1]);
        }
    }
}

#[test]
fn ingest_builds_stacks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let frames = d.join("frames");
    std::fs::create_dir(&frames).unwrap();
    for f in 0..3u8 {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend((0..6).map(|p| p * 10 + f));
        std::fs::write(frames.join(format!("f{f}.pgm")), bytes).unwrap();
    }
    assert!(tubal(d, &["ingest", "frames", "--layout", "frontal", "--out", "v.tns3"]).status.success());
    assert_eq!(read_tns3(d.join("v.tns3")).unwrap().dims(), (2, 3, 3));
    assert!(tubal(d, &["ingest", "frames", "frames", "frames", "--channels", "--out", "c.tns3"]).status.success());
    assert_eq!(read_tns3(d.join("c.tns3")).unwrap().dims(), (6, 3, 3));
    let empty = d.join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = tubal(d, &["ingest", "empty", "--out", "x.tns3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}
