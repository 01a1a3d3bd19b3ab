//! End-to-end tests of the binary: exit-status contract, bundled examples,
//! JSON determinism, and the CSV trajectory format.

use std::path::Path;
use std::process::{Command, Output};

fn netdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netdetect"))
        .args(args)
        .env_remove("NETDETECT_RANK_TOL")
        .env_remove("NETDETECT_EPS_STAB")
        .env_remove("NETDETECT_MARGIN")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_example(dir: &Path, name: &str) -> std::path::PathBuf {
    let out = netdetect(&["examples", name]);
    assert_eq!(code(&out), 0, "examples {name} failed");
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, out.stdout).unwrap();
    path
}

#[test]
fn examples_lists_all_names() {
    let out = netdetect(&["examples"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let names: Vec<&str> = text.lines().collect();
    assert_eq!(
        names,
        vec!["slam2", "ring_h_identity", "ring_h_rows35", "ring_h_rows25"]
    );
}

#[test]
fn examples_unknown_name_is_an_input_error() {
    let out = netdetect(&["examples", "nonsense"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bundled_examples_reproduce_expected_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, expected) in [
        ("slam2", 0),
        ("ring_h_identity", 0),
        ("ring_h_rows35", 0),
        ("ring_h_rows25", 1),
    ] {
        let path = write_example(dir.path(), name);
        let out = netdetect(&["analyze", path.to_str().unwrap()]);
        assert_eq!(code(&out), expected, "{name}: {}", stdout(&out));
    }
}

#[test]
fn not_detectable_report_carries_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_rows25");
    let out = netdetect(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let witness = &report["components"][0]["witness"];
    assert!(witness.is_array());
    assert_eq!(witness.as_array().unwrap().len(), 36);
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let a = netdetect(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    let b = netdetect(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_matrix_row_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["A"][0] = serde_json::json!([1.0, 2.0]); // short row
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = netdetect(&["analyze", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["unexpected"] = serde_json::json!(1);
    let broken = dir.path().join("extra.json");
    std::fs::write(&broken, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = netdetect(&["analyze", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn reaches_of_funnel_graph() {
    // 3 nodes, edges 1->2 and 3->2: two reaches sharing node 2
    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "n": 1,
        "N": 3,
        "A": [[0.0]],
        "C": [[[1.0]], [[1.0]], [[1.0]]],
        "H": [[1.0]],
        "edges": [[1, 2], [3, 2]]
    });
    let path = dir.path().join("funnel.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = netdetect(&["reaches", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["n_reaches"], 2);
    assert_eq!(parsed["spanning_tree"], false);
    let reaches = parsed["components"][0]["reaches"].as_array().unwrap();
    let kv: Vec<f64> = reaches[0]["kernel_vector"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(kv, vec![1.0, 0.5, 0.0]);
}

#[test]
fn reaches_of_disconnected_graph_prints_components() {
    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "n": 1,
        "N": 2,
        "A": [[-1.0]],
        "C": [[[1.0]], [[1.0]]],
        "H": [[1.0]],
        "edges": []
    });
    let path = dir.path().join("disc.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = netdetect(&["reaches", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("disconnected"));
    assert!(text.contains("component 2"));
}

#[test]
fn simulate_zero_gains_on_integrator_plant_is_flat() {
    // slam2 has a zero plant matrix, so zero gains give a frozen error
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "slam2");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let zeros_lc = |rows: usize, cols: usize| {
        serde_json::json!(vec![vec![0.0; cols]; rows])
    };
    doc["gains"] = serde_json::json!({
        "L": [zeros_lc(6, 4), zeros_lc(6, 4)],
        "K": [zeros_lc(6, 2), zeros_lc(6, 2)]
    });
    let with_gains = dir.path().join("slam_gains.json");
    std::fs::write(&with_gains, serde_json::to_string(&doc).unwrap()).unwrap();
    let csv = dir.path().join("traj.csv");
    let out = netdetect(&[
        "simulate",
        with_gains.to_str().unwrap(),
        "--T",
        "1.0",
        "--dt",
        "0.01",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("final norm ratio |e(T)|/|e(0)|: 1.000000e0"));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = csv_text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t, e_1_1, e_1_2"));
    assert!(header.ends_with("e_2_6, norm"));
    assert_eq!(header.split(", ").count(), 14); // t + 12 states + norm
    // 17 significant digits
    let first_data = lines.next().unwrap();
    assert!(first_data.contains("1.0000000000000000e0"));
}

#[test]
fn simulate_without_gains_needs_certify() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let out = netdetect(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_unstable_open_loop_reports_growth() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let zeros = serde_json::json!(vec![vec![0.0; 2]; 6]);
    let zeros_k = serde_json::json!(vec![vec![0.0; 6]; 6]);
    doc["gains"] = serde_json::json!({
        "L": [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros],
        "K": [zeros_k.clone(), zeros_k.clone(), zeros_k.clone(), zeros_k.clone(), zeros_k.clone(), zeros_k]
    });
    let with_gains = dir.path().join("ring_zero_gains.json");
    std::fs::write(&with_gains, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = netdetect(&[
        "simulate",
        with_gains.to_str().unwrap(),
        "--T",
        "400",
        "--dt",
        "0.01",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    // open loop = plant spectrum, strictly unstable, and the norm overflow
    // is reported with its step index
    assert!(text.contains("spectral abscissa: 1.09"), "{text}");
    assert!(text.contains("divergence: error norm overflowed at step"), "{text}");
}

#[test]
fn simulate_certify_on_detectable_ring_converges() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let out = netdetect(&[
        "simulate",
        path.to_str().unwrap(),
        "--certify",
        "--T",
        "30",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("certified gain: spectral abscissa -"), "{text}");
}

#[test]
fn simulate_certify_refuses_undetectable_network() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_rows25");
    let out = netdetect(&["simulate", path.to_str().unwrap(), "--certify"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not detectable"));
}

#[test]
fn tolerance_env_overrides_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path(), "ring_h_identity");
    let out = Command::new(env!("CARGO_BIN_EXE_netdetect"))
        .args(["analyze", path.to_str().unwrap()])
        .env("NETDETECT_RANK_TOL", "1e-10")
        .output()
        .unwrap();
    assert_eq!(out.status.code().unwrap(), 0);
    let bad = Command::new(env!("CARGO_BIN_EXE_netdetect"))
        .args(["analyze", path.to_str().unwrap()])
        .env("NETDETECT_RANK_TOL", "banana")
        .output()
        .unwrap();
    assert_eq!(bad.status.code().unwrap(), 2);
}
