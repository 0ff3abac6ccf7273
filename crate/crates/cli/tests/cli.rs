use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydchain"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

const SMALL: &str = r#"
schema_version = 1
output_dir = "out"

[sweep]
models = ["XX_NN", "RYD_LRI"]
l = 4
l_min = 4
l_max = 7
length_n_min = 68
length_n_max = 70
thetas_k = [300.0, 4.0]
fit_l_min = 4

[sweep.detuning]
lo = 6.0
hi = 30.0
points = 5
refine_points = 2
"#;

#[test]
fn solve_writes_monotone_chain() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "--n", "70", "-L", "10", "--delta0-mhz", "-60"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("out/solution_n70_L10.json"));
    let s = floats(&v["spacings_um"]);
    assert_eq!(s.len(), 9);
    assert!((s[4] - 3.0).abs() < 1e-12);
    for i in 0..4 {
        assert!(s[i] > s[i + 1] && (s[i] - s[8 - i]).abs() < 1e-9);
    }
    assert!(v["meta"]["config_sha256"].as_str().unwrap().len() == 64);
    assert!(v["residual_norm"].as_f64().unwrap() < 1e-10);
}

#[test]
fn two_site_chain_is_pinned() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "-L", "2", "--delta0-mhz", "-40", "--out", "two.json"]);
    assert!(o.status.success());
    let v = json(&d.path().join("two.json"));
    assert_eq!(floats(&v["spacings_um"]), vec![3.0]);
    assert_eq!(floats(&v["site_detunings_mhz"]), vec![0.0, 0.0]);
}

#[test]
fn resonance_is_infeasible() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "--delta0-mhz", "188.3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resonance"));
}

#[test]
fn config_errors() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("typo.toml"), "[hardware]\ndx_min = 3.0\n").unwrap();
    let o = run(d.path(), &["-c", "typo.toml", "solve", "--delta0-mhz", "-60"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dx_min"));
    std::fs::write(d.path().join("v2.toml"), "schema_version = 2\n").unwrap();
    assert_eq!(run(d.path(), &["-c", "v2.toml", "fig3"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["-c", "missing.toml", "fig3"]).status.code(), Some(2));
    // n outside the shipped table
    assert_eq!(run(d.path(), &["solve", "--n", "30", "--delta0-mhz", "-60"]).status.code(), Some(2));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (h, rows)
}

fn column(h: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn evolve_traces() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(d.path(), &["solve", "-L", "6", "--delta0-mhz", "-80", "--out", "s.json"]).status.success());
    let o = run(d.path(), &["evolve", "--solution", "s.json", "--model", "XX_NN", "--points", "13", "--out", "xx.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.path().join("xx.csv")).unwrap();
    assert!(text.starts_with("# rydchain "));
    let (h, rows) = read_csv(&d.path().join("xx.csv"));
    let p = column(&h, &rows, "p_transport");
    // grid covers 3 t_pi in quarters
    assert!((p[4] - 1.0).abs() < 1e-9 && (p[12] - 1.0).abs() < 1e-9);
    assert!((column(&h, &rows, "p_return")[8] - 1.0).abs() < 1e-9);

    assert!(run(d.path(), &["evolve", "--solution", "s.json", "--points", "13", "--out", "ryd.csv"]).status.success());
    let (h, rows) = read_csv(&d.path().join("ryd.csv"));
    let (p, pd) = (column(&h, &rows, "p_transport"), column(&h, &rows, "p_transport_decayed"));
    assert!(p[4] > 0.8 && pd[4] < p[4] && pd[12] / p[12] < pd[4] / p[4]);

    assert_eq!(run(d.path(), &["evolve", "--solution", "s.json", "--points", "0"]).status.code(), Some(2));
}

#[test]
fn detuning_sweep_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.toml"), SMALL).unwrap();
    let args = ["-c", "small.toml", "sweep-detuning", "--n", "66"];
    assert!(run(d.path(), &args).status.success());
    let a = std::fs::read(d.path().join("out/sweep_detuning.csv")).unwrap();
    let s = json(&d.path().join("out/sweep_detuning_summary.json"));
    assert!(run(d.path(), &args).status.success());
    assert_eq!(a, std::fs::read(d.path().join("out/sweep_detuning.csv")).unwrap());

    let (h, rows) = read_csv(&d.path().join("out/sweep_detuning.csv"));
    assert_eq!(rows.len(), 5 + 5 + 2);
    let pu = column(&h, &rows, "p_pi_no_decay");
    assert!(pu[..5].iter().all(|p| (p - 1.0).abs() < 1e-9));
    let opt = &s["optima"][1];
    assert_eq!(opt["model"], "RYD_LRI");
    assert_eq!(opt["edge_optimum"], false);
    assert!(opt["truncation_delta"].as_f64().unwrap() < 1e-2);
    // a different config gives a different hash
    let o = run(d.path(), &["-c", "small.toml", "sweep-detuning", "--n", "67"]);
    assert!(o.status.success());
    let b = std::fs::read_to_string(d.path().join("out/sweep_detuning.csv")).unwrap();
    assert_ne!(String::from_utf8_lossy(&a).lines().nth(2), b.lines().nth(2));
}

#[test]
fn analyze_synthetic_series() {
    let d = tempfile::tempdir().unwrap();
    let mut text = String::from("# made by hand\nmodel,L,theta_K,n_star,p_star\n");
    for l in 8..=20 {
        text += &format!("RYD_LRI,{l},300,70,{}\n", (-0.01 * l as f64).exp());
    }
    std::fs::write(d.path().join("opt.csv"), text).unwrap();
    let o = run(d.path(), &["analyze", "--input", "opt.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("out/analysis_summary.json"));
    assert_eq!(v["channels"][0]["l_c"], 70);
    assert!((v["channels"][0]["rate"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    let (h, rows) = read_csv(&d.path().join("out/concurrence.csv"));
    let c = column(&h, &rows, "concurrence");
    assert!((c[0] - (2.0 * (-0.08f64).exp() - 1.0)).abs() < 1e-12);

    std::fs::write(d.path().join("bad.csv"), "theta_K,L,p_star\n300,8,0.9\n300,9,0.0\n").unwrap();
    assert_eq!(run(d.path(), &["analyze", "--input", "bad.csv"]).status.code(), Some(5));
}

#[test]
fn figure_pipelines_use_configured_defaults() {
    let d = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("l = 4\n", "").replace("models = [\"XX_NN\", \"RYD_LRI\"]", "models = [\"XX_NN\"]");
    std::fs::write(d.path().join("c.toml"), cfg).unwrap();
    let o = run(d.path(), &["-c", "c.toml", "fig3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&d.path().join("out/fig3_summary.json"));
    assert_eq!((s["n"].as_u64(), s["l"].as_u64()), (Some(70), Some(16)));

    std::fs::write(d.path().join("c5.toml"), SMALL).unwrap();
    let o = run(d.path(), &["-c", "c5.toml", "--workers", "1", "fig5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&d.path().join("out/fig5_optima.csv"));
    assert_eq!(rows.len(), 8);
    let p = column(&h, &rows, "p_star");
    // 4 K rows interleave with 300 K rows
    for k in 0..4 {
        assert!(p[2 * k + 1] >= p[2 * k]);
    }
    let v = json(&d.path().join("out/analysis_summary.json"));
    let ch = v["channels"].as_array().unwrap();
    assert_eq!(ch.len(), 2);
    assert!(ch[1]["l_c"].as_u64().unwrap() > ch[0]["l_c"].as_u64().unwrap());
}
