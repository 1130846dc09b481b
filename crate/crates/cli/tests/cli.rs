use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orthocirc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthocirc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn record(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON record")
}

fn golden(name: &str) -> String {
    format!("{}/../core/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", path.to_str().unwrap()]);
    record(&orthocirc(&all));
    path
}

#[test]
fn generated_unitary_circuit_has_unit_partition_function() {
    let dir = TempDir::new().unwrap();
    let c = gen(
        dir.path(),
        "c.json",
        &["--vars", "6", "--domain", "3", "--k", "3", "--seed", "4"],
    );
    let path = c.to_str().unwrap();
    for method in ["oracle", "naive", "orthonormalize"] {
        let z = record(&orthocirc(&["partition", path, "--method", method]))["z"]
            .as_f64()
            .unwrap();
        assert!((z - 1.0).abs() < 1e-9, "{method}: {z}");
    }
    let v = record(&orthocirc(&["validate", path]));
    assert_eq!(v["orthonormal"], Value::Bool(true));
    assert_eq!(v["structured_decomposable"], Value::Bool(true));
}

#[test]
fn fast_and_oracle_marginals_agree() {
    let dir = TempDir::new().unwrap();
    let c = gen(
        dir.path(),
        "c.json",
        &["--vars", "5", "--k", "3", "--seed", "9"],
    );
    let path = c.to_str().unwrap();
    let query = |method: &str| {
        record(&orthocirc(&[
            "marginalize",
            path,
            "--keep",
            "X1=1,X3=0,X4=1",
            "--marg",
            "X2,X5",
            "--method",
            method,
        ]))["probability"]
            .as_f64()
            .unwrap()
    };
    let (fast, naive, oracle) = (query("fast"), query("naive"), query("oracle"));
    assert!((fast - oracle).abs() <= 1e-9 * oracle.abs());
    assert!((naive - oracle).abs() <= 1e-9 * oracle.abs());
}

#[test]
fn fast_marginal_rejects_generic_weights() {
    let dir = TempDir::new().unwrap();
    let c = gen(
        dir.path(),
        "c.json",
        &["--vars", "4", "--params", "generic", "--seed", "9"],
    );
    let out = orthocirc(&[
        "marginalize",
        c.to_str().unwrap(),
        "--keep",
        "X1=0",
        "--method",
        "fast",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("orthonormal"));
}

#[test]
fn eval_on_minimal_document() {
    let r = record(&orthocirc(&[
        "eval",
        &golden("minimal.json"),
        "--assign",
        "X1=1",
    ]));
    assert!((r["re"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert_eq!(r["im"].as_f64().unwrap(), 0.0);
}

#[test]
fn orthonormalize_writes_a_loadable_circuit() {
    let dir = TempDir::new().unwrap();
    let c = gen(
        dir.path(),
        "c.json",
        &["--vars", "4", "--params", "generic", "--seed", "2"],
    );
    let out = dir.path().join("o.json");
    let r = record(&orthocirc(&[
        "orthonormalize",
        c.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]));
    let beta = r["beta"].as_f64().unwrap();
    let z = record(&orthocirc(&["partition", c.to_str().unwrap()]))["z"]
        .as_f64()
        .unwrap();
    assert!((beta * beta * z - 1.0).abs() < 1e-9);
    let v = record(&orthocirc(&["validate", out.to_str().unwrap()]));
    assert_eq!(v["orthonormal"], Value::Bool(true));
}

#[test]
fn input_errors_exit_with_one() {
    assert_eq!(
        orthocirc(&["partition", "/nonexistent.json"]).status.code(),
        Some(1)
    );
    assert_eq!(
        orthocirc(&["eval", &golden("minimal.json"), "--assign", "X9=0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(orthocirc(&["gen"]).status.code(), Some(1));
    assert_eq!(orthocirc(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn singular_weights_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(golden("minimal.json"))
        .unwrap()
        .replace(
            "[[0.7071067811865476,0.0],[0.7071067811865476,0.0]]",
            "[[0.0,0.0],[0.0,0.0]]",
        );
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, text).unwrap();
    let out = dir.path().join("o.json");
    let status = orthocirc(&[
        "orthonormalize",
        zero.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ])
    .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bench_ratio_grows_with_chain_length() {
    let dir = TempDir::new().unwrap();
    let mut ratios = Vec::new();
    for d in [8usize, 16, 32] {
        let name = format!("chain{d}.json");
        let args = [
            "--vars",
            &d.to_string(),
            "--shape",
            "chain",
            "--kind",
            "kronecker",
            "--k",
            "4",
            "--seed",
            "1",
        ];
        let c = gen(dir.path(), &name, &args);
        let marg: Vec<String> = (d / 2 + 1..=d).map(|i| format!("X{i}")).collect();
        let r = record(&orthocirc(&[
            "bench",
            c.to_str().unwrap(),
            "--marg",
            &marg.join(","),
            "--repeat",
            "1",
        ]));
        ratios.push(r["mac_ratio"].as_f64().unwrap());
    }
    assert!(
        ratios[0] > 1.0 && ratios[1] > ratios[0] && ratios[2] > ratios[1],
        "{ratios:?}"
    );
}
