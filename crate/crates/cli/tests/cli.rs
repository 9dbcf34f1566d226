use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde_json::Value;

fn vgprice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vgprice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const REFERENCE_MODEL: [&str; 8] = ["--rate", "0.06", "--theta", "-0.1", "--sigma", "0.2", "--kappa", "0.2"];

fn price_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["price"];
    v.extend_from_slice(extra);
    v.extend_from_slice(&REFERENCE_MODEL);
    v
}

#[test]
fn american_put_tree() {
    let out = vgprice(&price_args(&[
        "--method", "tree", "--style", "am", "--type", "put", "--s0", "36", "--strike", "40", "--maturity", "1",
        "--steps", "2000",
    ]));
    let v = json(&out);
    let price = v["price"].as_f64().unwrap();
    assert!((price - 4.3173).abs() < 0.02, "{price}");
    assert_eq!(v["method"], "tree");
    assert_eq!(v["metadata"]["n_steps"], 2000);
    assert_eq!(v["metadata"]["probabilities"].as_array().unwrap().len(), 5);
    assert!(v.get("wall_time_ms").is_none());
}

#[test]
fn european_call_tree() {
    let out = vgprice(&price_args(&[
        "--method", "tree", "--style", "eu", "--type", "call", "--s0", "38", "--strike", "40", "--maturity", "1",
        "--steps", "2000",
    ]));
    let price = json(&out)["price"].as_f64().unwrap();
    assert!((price - 3.1051).abs() < 0.01, "{price}");
}

#[test]
fn quadrature_and_fd_prices() {
    let base = ["--style", "eu", "--type", "put", "--s0", "40", "--strike", "40", "--maturity", "1"];
    let mut args = vec!["--method", "quad"];
    args.extend_from_slice(&base);
    let quad = json(&vgprice(&price_args(&args)))["price"].as_f64().unwrap();
    let mut args = vec!["--method", "fd", "--steps", "2000"];
    args.extend_from_slice(&base);
    let fd = json(&vgprice(&price_args(&args)));
    let fd_price = fd["price"].as_f64().unwrap();
    assert!((fd_price - quad).abs() < 0.05, "{fd_price} vs {quad}");
    assert!(fd["metadata"]["grid"]["h"].as_f64().unwrap() > 0.0);
}

#[test]
fn quadrature_rejects_american() {
    let out = vgprice(&price_args(&[
        "--method", "quad", "--style", "am", "--type", "put", "--s0", "36", "--strike", "40", "--maturity", "1",
    ]));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("quadrature supports European only"));
    assert!(out.stdout.is_empty());
}

#[test]
fn exit_codes() {
    // bad parameter
    let out = vgprice(&[
        "price", "--method", "tree", "--type", "put", "--s0", "40", "--strike", "40", "--maturity", "1", "--sigma",
        "-0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag
    assert_eq!(vgprice(&["price", "--bogus"]).status.code(), Some(2));
    // negative lattice probabilities
    let out = vgprice(&[
        "price", "--method", "tree", "--type", "put", "--s0", "40", "--strike", "40", "--maturity", "1", "--theta",
        "-0.8", "--sigma", "0.1", "--kappa", "0.5", "--steps", "1000",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    // explicit scheme below its stability limit
    let out = vgprice(&price_args(&[
        "--method", "fd", "--type", "put", "--s0", "40", "--strike", "40", "--maturity", "1", "--fd-h", "0.05",
    ]));
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("unstable"));
}

#[test]
fn price_is_deterministic() {
    let args = price_args(&[
        "--method", "fd", "--type", "call", "--s0", "42", "--strike", "40", "--maturity", "1", "--steps", "500",
    ]);
    assert_eq!(vgprice(&args).stdout, vgprice(&args).stdout);
}

#[test]
fn timing_is_opt_in() {
    let out = vgprice(&price_args(&[
        "--method", "tree", "--type", "call", "--s0", "40", "--strike", "40", "--maturity", "1", "--steps", "50",
        "--timing",
    ]));
    assert!(json(&out)["wall_time_ms"].as_f64().is_some());
}

#[test]
fn european_table() {
    let out = vgprice(&["table", "--which", "european"]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0], ["S0", "quad_call", "tree_call", "quad_put", "tree_put"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1][0], "36");
    assert_eq!(rows[1][2], "2.1131");
    assert_eq!(rows[1][4], "3.7837");
    for row in &rows[1..] {
        for cell in &row[1..] {
            assert_eq!(cell.split('.').nth(1).unwrap().len(), 4, "{cell}");
        }
    }
}

#[test]
fn american_table_thread_invariant_and_sorted() {
    let one = vgprice(&["table", "--which", "american", "--steps", "400", "--threads", "1"]);
    let four = vgprice(&["table", "--which", "american", "--steps", "400", "--threads", "4"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert!(!one.stdout.windows(2).any(|w| w == b"\r\n"));
    let rows = csv_rows(&stdout(&one));
    assert_eq!(rows[0], ["S0", "T", "bs_eu_put", "vg_eu_put", "bs_am_put", "vg_am_put"]);
    let keys: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 10);
}

#[test]
fn american_table_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("am.csv");
    let out = vgprice(&["table", "--which", "american", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&path).unwrap());
    let row = rows.iter().find(|r| r[0] == "40" && r[1] == "2").unwrap();
    let vg_am: f64 = row[5].parse().unwrap();
    assert!((vg_am - 2.9997).abs() < 0.02, "{vg_am}");
}

fn p3(args: &[&str]) -> Vec<(f64, f64, f64)> {
    let mut v = vec!["p3-curve"];
    v.extend_from_slice(args);
    let out = vgprice(&v);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0], ["kbar", "p3_mm", "p3_pde"]);
    rows[1..]
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect()
}

#[test]
fn p3_curve_shape() {
    let pts = p3(&["--kbar-min", "0.1", "--kbar-max", "5", "--points", "50"]);
    assert_eq!(pts.len(), 50);
    assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
    let single = p3(&["--kbar-min", "1e-9", "--kbar-max", "1e-9", "--points", "1"]);
    assert!((single[0].1 - 0.5).abs() < 1e-9);
}

#[test]
fn p3_curve_matches_library() {
    let pts = p3(&["--kbar-min", "0.5", "--kbar-max", "20", "--points", "7", "--dt", "0.0005", "--c2", "0.042"]);
    let grid: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let lib = vg_core::pide_fd::p3_curve(&grid, 0.042, 0.0005).unwrap();
    for (a, b) in pts.iter().zip(lib) {
        assert_eq!(a.1, b.p3_mm);
        assert_eq!(a.2, b.p3_pde);
    }
}

#[test]
fn p3_curve_rejects_nonpositive_kbar() {
    let out = vgprice(&["p3-curve", "--kbar-min", "0", "--kbar-max", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = vgprice(&["p3-curve", "--kbar-min", "-1", "--kbar-max", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_csv(path: &Path, header: &str, values: &[f64]) {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    writeln!(f, "{header}").unwrap();
    for v in values {
        writeln!(f, "{v}").unwrap();
    }
}

#[test]
fn fit_synthetic_vg_returns() {
    let mut rng = StdRng::seed_from_u64(2024);
    let gamma = Gamma::new(5.0, 0.2).unwrap();
    let returns: Vec<f64> = (0..100_000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let g: f64 = gamma.sample(&mut rng);
            0.2 * g.sqrt() * z
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("returns.csv");
    let density = dir.path().join("density.csv");
    write_csv(&input, "ret", &returns);
    let out = vgprice(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--column",
        "ret",
        "--returns",
        "--bins",
        "40",
        "--density-out",
        density.to_str().unwrap(),
    ]);
    let v = json(&out);
    let kappa = v["vg"]["kappa"].as_f64().unwrap();
    assert!(((kappa - 0.2) / 0.2).abs() < 0.1, "{kappa}");
    assert!(v["fallback"].is_null());
    let rows = csv_rows(&std::fs::read_to_string(&density).unwrap());
    assert_eq!(rows[0], ["bin_center", "hist_density", "vg_density", "normal_density"]);
    assert_eq!(rows.len(), 41);
}

#[test]
fn fit_platykurtic_falls_back_to_normal() {
    // evenly spread prices ratios: kurtosis ~ 1.8
    let returns: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 2000.0 - 0.05).collect();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("r.csv");
    write_csv(&input, "r", &returns);
    let out = vgprice(&["fit", "--input", input.to_str().unwrap(), "--column", "r", "--returns"]);
    let v = json(&out);
    assert!(v["vg"].is_null());
    assert_eq!(v["fallback"]["model"], "normal");
    assert!(v["normal"]["sigma"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    let prices: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
    write_csv(&short, "close", &prices);
    let out = vgprice(&["fit", "--input", short.to_str().unwrap(), "--column", "close", "--prices"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("series too short"));

    let flat = dir.path().join("flat.csv");
    write_csv(&flat, "close", &[100.0; 60]);
    let out = vgprice(&["fit", "--input", flat.to_str().unwrap(), "--column", "close", "--prices"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zero variance"));

    let missing = dir.path().join("missing.csv");
    let out = vgprice(&["fit", "--input", missing.to_str().unwrap(), "--column", "close", "--prices"]);
    assert_eq!(out.status.code(), Some(2));

    let out = vgprice(&["fit", "--input", flat.to_str().unwrap(), "--column", "nope", "--prices"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not found"));
}
