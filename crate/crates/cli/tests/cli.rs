use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fracmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmem"))
        .args(args)
        .env_remove("FRACMEM_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn interval(dir: &TempDir, n: usize) -> PathBuf {
    let h = 2.0 / n as f64;
    write(
        dir,
        "interval.json",
        &json!({"dim": 1, "origin": [-1.0], "h": h, "shape": [n],
                "domain": {"type": "rect", "min": [-1.0], "max": [1.0]}}),
    )
}

fn square(dir: &TempDir, name: &str, n: usize, half: f64) -> PathBuf {
    let h = 2.0 / n as f64;
    write(
        dir,
        name,
        &json!({"dim": 2, "origin": [-1.0, -1.0], "h": h, "shape": [n, n],
                "domain": {"type": "rect", "min": [-half, -half], "max": [half, half]}}),
    )
}

fn bump(dir: &TempDir, name: &str, origin: f64, center: f64) -> PathBuf {
    write(
        dir,
        name,
        &json!({"dim": 1, "origin": [origin], "h": 0.1, "shape": [8],
                "domain": {"type": "rect", "min": [-10.0], "max": [10.0]},
                "bump": {"center": [center], "width": 0.35}}),
    )
}

#[test]
fn eig_reports_lambda_and_provenance() {
    let dir = TempDir::new().unwrap();
    let dom = interval(&dir, 100);
    let v = stdout_json(&fracmem(&["eig", "--domain", s(&dom), "--s", "0.5", "--alpha", "0", "--tol", "1e-10"]));
    assert_eq!(v["tool"], "fracmem");
    assert_eq!(v["command"], "eig");
    assert!(v["version"].is_string());
    assert_eq!(v["config"]["args"]["form"]["s"], 0.5);
    let lambda = v["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 1.1526).abs() < 1e-3, "{lambda}");
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["result"]["vector"].as_array().unwrap().len(), 100);
}

#[test]
fn optimize_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let dom = square(&dir, "sq.json", 12, 0.7);
    let run = |out: &str| {
        let p = dir.path().join(out);
        let o = fracmem(&[
            "optimize", "--domain", s(&dom), "--s", "0.5", "--alpha", "5", "--c-frac", "0.3", "--seed", "3",
            "--starts", "4", "--format", "both", "--output", s(&p),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read_to_string(p.with_extension("csv")).unwrap(),
            std::fs::read_to_string(p.with_extension("json")).unwrap(),
        )
    };
    let (a, ja) = run("a.out");
    let (b, _) = run("b.out");
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert!(lines.next().unwrap().starts_with("# fracmem "));
    assert!(a.contains("seed=3"));
    assert_eq!(lines.next().unwrap(), "lambda,k,c_snapped,start_id,converged,rounds,d_cells");
    let v: Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["result"]["starts"], 4);
    let k = v["result"]["k"].as_u64().unwrap() as usize;
    assert_eq!(v["result"]["d_cells"].as_array().unwrap().len(), k);
}

#[test]
fn faber_krahn_with_rescaled_grid() {
    let dir = TempDir::new().unwrap();
    let dom = square(&dir, "sq.json", 8, 0.6);
    let v = stdout_json(&fracmem(&[
        "faber-krahn", "--domain", s(&dom), "--s", "0.5", "--alpha", "10", "--c-frac", "0.3", "--h", "0.125",
        "--starts", "4",
    ]));
    let r = &v["result"];
    assert_eq!(r["h"], 0.125);
    assert!(r["within_slack"].as_bool().unwrap());
    assert!(r["gap"].as_f64().unwrap() >= -0.02 * r["lambda_omega"].as_f64().unwrap());
}

#[test]
fn lieb_on_explicit_shifts() {
    let dir = TempDir::new().unwrap();
    let dom = interval(&dir, 16);
    let v = stdout_json(&fracmem(&[
        "lieb", "--domain1", s(&dom), "--domain2", s(&dom), "--s", "0.5", "--alpha1", "8", "--alpha2", "8",
        "--c1-frac", "0.3", "--c2-frac", "0.3", "--shift", "0", "--shift", "2", "--starts", "4",
    ]));
    let recs = v["result"]["records"].as_array().unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r["chain_holds"].as_bool().unwrap()));
    assert_eq!(v["result"]["witnesses"][0], json!([0, 0]));

    let csv = fracmem(&[
        "lieb", "--domain1", s(&dom), "--domain2", s(&dom), "--s", "0.5", "--alpha1", "8", "--alpha2", "8",
        "--c1-frac", "0.3", "--c2-frac", "0.3", "--stride", "4", "--format", "csv",
    ]);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("k0,k1,overlap,c_x,"));
}

#[test]
fn identity_on_bumps() {
    let dir = TempDir::new().unwrap();
    let u1 = bump(&dir, "u1.json", 0.0, 0.4);
    let u2 = bump(&dir, "u2.json", 0.3, 0.65);
    let v = stdout_json(&fracmem(&["identity", "--u1", s(&u1), "--u2", s(&u2), "--s", "0.4"]));
    let r = &v["result"];
    assert!(r["j1_rel_err"].as_f64().unwrap() < 1e-10);
    assert!(r["j3_rel_err"].as_f64().unwrap() < 1e-10);
    assert!(r["j2"].as_f64().unwrap() <= 0.0);
    assert!(r["lhs"].as_f64().unwrap() <= r["rhs"].as_f64().unwrap());
}

#[test]
fn rearrange_writes_profiles() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "f.json",
        &json!({"dim": 1, "origin": [0.0], "h": 1.0, "shape": [4],
                "domain": {"type": "rect", "min": [0.0], "max": [4.0]},
                "values": [1.0, 3.0, 0.0, 2.0]}),
    );
    let g = write(
        &dir,
        "g.json",
        &json!({"dim": 1, "origin": [0.0], "h": 1.0, "shape": [4],
                "domain": {"type": "rect", "min": [0.0], "max": [4.0]},
                "values": [2.0, 1.0, 4.0, 0.5]}),
    );
    let cells = dir.path().join("sym.csv");
    let out = fracmem(&[
        "rearrange", "--field", s(&f), "--with", s(&g), "--s", "0.5", "--field-csv", s(&cells), "--format", "both",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let (json_part, csv_part) = text.split_at(text.find("\n# fracmem").unwrap() + 1);
    let v: Value = serde_json::from_str(json_part).unwrap();
    assert_eq!(v["result"]["values"], json!([3.0, 2.0, 1.0, 0.0]));
    let (lo, mid) = (v["result"]["hardy_littlewood"][0].as_f64().unwrap(), v["result"]["hardy_littlewood"][1].as_f64().unwrap());
    assert!(lo <= mid);
    let ps = &v["result"]["polya_szego"];
    assert!(ps[0].as_f64().unwrap() <= ps[1].as_f64().unwrap() * 1.0000001);
    assert_eq!(csv_part.lines().nth(1).unwrap(), "xi,value");
    assert_eq!(csv_part.lines().count(), 2 + 4);
    let sym = std::fs::read_to_string(&cells).unwrap();
    assert_eq!(sym.lines().nth(1).unwrap(), "cell,radial_rank,value");
}

#[test]
fn sweeps_have_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let dom = interval(&dir, 16);
    let out = fracmem(&[
        "sweep", "--domain", s(&dom), "--s", "0.5", "--alphas", "1,2", "--c-fracs", "0.25,0.5", "--starts", "4",
        "--format", "csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "alpha,c,k,lambda");
    assert_eq!(text.lines().count(), 2 + 4);

    let out = fracmem(&["sweep", "--domain", s(&dom), "--s", "0.5", "--hs", "0.125,0.0625,0.03125", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].split(',').nth(2).unwrap().parse::<f64>().is_ok());

    let empty = fracmem(&["sweep", "--domain", s(&dom), "--s", "0.5", "--alphas", "1"]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let dom = interval(&dir, 100);

    let missing = fracmem(&["eig", "--domain", "/nonexistent/domain.json", "--s", "0.5"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("domain"));

    let bad_s = fracmem(&["eig", "--domain", s(&dom), "--s", "1.5"]);
    assert_eq!(bad_s.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_s.stderr).contains("`s`"));

    let bad_c = fracmem(&["optimize", "--domain", s(&dom), "--s", "0.5", "--alpha", "1", "--c-frac", "1.5"]);
    assert_eq!(bad_c.status.code(), Some(2));

    let threads = Command::new(env!("CARGO_BIN_EXE_fracmem"))
        .args(["eig", "--domain", s(&dom), "--s", "0.5"])
        .env("FRACMEM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));

    let unreachable = fracmem(&["eig", "--domain", s(&dom), "--s", "0.5", "--tol", "1e-300"]);
    assert_eq!(unreachable.status.code(), Some(3));

    let unknown = fracmem(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
}
