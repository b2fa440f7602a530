use std::path::Path;
use std::process::{Command, Output};

use tet_assembly_lab::commands::read_records;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tet-assembly-lab"))
        .args(args)
        .env_remove("TAL_THREADS")
        .output()
        .expect("spawn binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn verify_passes_on_taylor_green() {
    let o = lab(&["verify", "--box", "4", "4", "4", "--init", "taylor-green"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 3);
}

#[test]
fn verify_other_fields_and_colored_scatter() {
    for init in ["zero", "constant:1:2:3", "shear:0.5", "random:4"] {
        let o = lab(&["verify", "--box", "3", "2", "2", "--init", init, "--threads", "3", "--scatter", "colored"]);
        assert_eq!(code(&o), 0, "{init}: {}", stdout(&o));
    }
}

#[test]
fn verify_rejects_empty_box() {
    let o = lab(&["verify", "--box", "0", "1", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("box dimensions"));
    assert!(stderr(&o).contains("--help"));
}

#[test]
fn verify_reports_injected_fault() {
    let o = lab(&["verify", "--box", "2", "2", "2", "--init", "random:1", "--inject-fault", "rs"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    let rs = out.lines().find(|l| l.starts_with("RS ")).unwrap();
    assert!(rs.contains("FAIL") && rs.contains("(17,1)"), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    let o = lab(&["bench", "--variant", "rspr"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown variant"));
    assert_eq!(code(&lab(&["bench", "--no-such-flag"])), 2);
    assert_eq!(code(&lab(&["verify", "--init", "vortex"])), 2);
    assert_eq!(code(&lab(&["verify", "--box", "1", "1", "1", "--vector-dim", "0"])), 2);
    assert_eq!(code(&lab(&["verify", "--mesh", "/nonexistent/x.mesh"])), 2);
    assert_eq!(code(&lab(&["verify", "--box", "1", "1", "1", "--mu", "-1"])), 2);
}

#[test]
fn bench_record_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("rsp.json");
    let csv = dir.path().join("rsp.csv");
    let o = lab(&["bench", "--box", "6", "6", "6", "--variant", "rsp", "--reps", "3", "--json", p(&json), "--csv", p(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = read_records(&json).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert!(r.melems_per_s > 0.0);
    assert!(r.min_time <= r.median_time && r.median_time <= r.max_time);
    assert_eq!(r.n_elems, 6 * 6 * 6 * 6);
    assert_eq!(r.verified, Some(true));
    assert_eq!(r.ledger.flops_per_elem, 561);
    // lossless: write again and re-read
    let again = dir.path().join("again.json");
    std::fs::write(&again, serde_json::to_string(&recs).unwrap()).unwrap();
    assert_eq!(read_records(&again).unwrap(), recs);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("variant,mesh,n_elems"));
}

#[test]
fn bench_reps_warning_and_checksum_digits() {
    let o = lab(&["bench", "--box", "2", "2", "2", "--variant", "b", "--reps", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("reps = 1"));
    let line = stdout(&o);
    let checksum = line.split("checksum ").nth(1).unwrap().split_whitespace().next().unwrap();
    let mantissa = checksum.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{checksum}");
}

#[test]
fn seeded_random_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = lab(&[
            "bench", "--box", "5", "4", "3", "--init", "random", "--seed", "1", "--reps", "3", "--stable-output", "--json",
            p(&path),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let recs = read_records(&dir.path().join("a.json")).unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.median_time == 0.0 && r.init == "random:1"));
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = Command::new(env!("CARGO_BIN_EXE_tet-assembly-lab"))
        .args(["bench", "--box", "2", "2", "2", "--variant", "rs", "--reps", "3", "--json", p(&path)])
        .env("TAL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(read_records(&path).unwrap()[0].n_threads, 2);
}

#[test]
fn sweep_csv_schema() {
    let o = lab(&["sweep", "--box", "4", "4", "4", "--variant", "rs,rsp", "--thread-list", "1,2", "--reps", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 9);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        let one: f64 = pair[0][7].parse().unwrap();
        assert_eq!(pair[0][8].parse::<f64>().unwrap(), one);
        assert!((pair[1][8].parse::<f64>().unwrap() - 2.0 * one).abs() <= 1e-9 * one);
    }
}

#[test]
fn roofline_gpu_preset_intensities() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gpu.csv");
    let gp = dir.path().join("gpu.dat");
    let o = lab(&["roofline", "--paper-preset", "gpu-table2", "--machine", "a100-sxm4-40g", "--csv", p(&csv), "--gnuplot", p(&gp)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let points: Vec<(String, f64)> = rdr
        .records()
        .map(Result::unwrap)
        .filter(|r| &r[3] != "roof")
        .map(|r| (r[0].to_string(), r[1].parse().unwrap()))
        .collect();
    let expect = [("B", 0.27), ("P", 0.33), ("RS", 1.42), ("RSP", 3.15), ("RSPR", 8.89)];
    assert_eq!(points.len(), expect.len());
    for ((label, ai), (l, e)) in points.iter().zip(expect) {
        assert_eq!(label, l);
        assert!((ai - e).abs() <= 0.01, "{label}: {ai}");
    }
    assert!(std::fs::read_to_string(gp).unwrap().starts_with("# roofline a100-sxm4-40g"));
}

#[test]
fn roofline_cpu_preset_baseline_compute_bound() {
    let o = lab(&["roofline", "--paper-preset", "cpu-table1", "--machine", "icelake-8360y-socket"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let b = out.lines().find(|l| l.starts_with("B ")).unwrap();
    assert!(b.contains("compute"), "{b}");
    assert_eq!(code(&lab(&["roofline", "--paper-preset", "gpu-table3"])), 2);
    assert_eq!(code(&lab(&["roofline", "--machine", "h100"])), 2);
}

#[test]
fn roofline_l2_series() {
    let o = lab(&["roofline", "--paper-preset", "cpu-table1", "--l2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("RSP-L2,")));
    assert_eq!(code(&lab(&["roofline", "--l2"])), 2);
}

#[test]
fn roofline_extra_roof_rows() {
    let o = lab(&["roofline", "--paper-preset", "gpu-table2", "--extra-roof", "7400"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l.starts_with("roof-extra,")));
}

#[test]
fn roofline_from_bench_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let all = dir.path().join("all.json");
    let o = lab(&["bench", "--box", "4", "4", "4", "--reps", "3", "--json", p(&all)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = lab(&["roofline", "--from-bench", p(&all), "--machine", "icelake-8360y-socket"]);
    assert_eq!(code(&o), 0);
    let measured = stdout(&o).lines().filter(|l| l.ends_with(",measured")).count();
    assert_eq!(measured, 3);

    let md = dir.path().join("report.md");
    let o = lab(&["report", p(&all), "--output", p(&md)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&md).unwrap();
    let b_row = text.lines().find(|l| l.contains("| B |") && l.contains("box 4x4x4")).unwrap();
    assert!(b_row.ends_with("| 1.00× |"), "{b_row}");
    let ratio: f64 = text.split("Flop reduction B/RS: ").nth(1).unwrap().split('×').next().unwrap().parse().unwrap();
    assert!(ratio >= 3.0);
}

#[test]
fn report_marks_missing_variants() {
    let dir = tempfile::tempdir().unwrap();
    let rs = dir.path().join("rs.json");
    assert_eq!(code(&lab(&["bench", "--box", "2", "2", "2", "--variant", "rs", "--reps", "3", "--json", p(&rs)])), 0);
    let o = lab(&["report", p(&rs)]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let b_row = out.lines().find(|l| l.contains("| B |") && l.contains("box")).unwrap();
    assert!(b_row.contains("—"));
    let rs_row = out.lines().find(|l| l.contains("| RS |") && l.contains("box")).unwrap();
    assert!(rs_row.ends_with("| — |"), "{rs_row}");
}

#[test]
fn report_rejects_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "{\"variant\": ").unwrap();
    let o = lab(&["report", p(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(p(&bad)));
}
