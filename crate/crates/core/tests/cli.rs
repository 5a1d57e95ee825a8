//! End-to-end checks of the command-line interface: file parsing,
//! exit codes, verdicts, and report determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn write(dir: &std::path::Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minexp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is a JSON report")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minexp-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CLASSICAL_PAIR: &str = r#"{
  "dim": 3,
  "block_dims": [1, 1, 1],
  "states": [
    {"label": "s0", "matrix": [[[0.5,0],[0,0],[0,0]],[[0,0],[0.25,0],[0,0]],[[0,0],[0,0],[0.25,0]]]},
    {"label": "s1", "matrix": [[[0.3333333333333333,0],[0,0],[0,0]],[[0,0],[0.3333333333333333,0],[0,0]],[[0,0],[0,0],[0.3333333333333333,0]]]}
  ]
}"#;

const SINGLE_STATE: &str = r#"{
  "dim": 2,
  "states": [
    {"label": "only", "matrix": [[[0.625,0],[0.1,0.05]],[[0.1,-0.05],[0.375,0]]]}
  ]
}"#;

const DUPLICATED_POVM: &str = r#"{
  "dim": 2,
  "effects": [
    {"label": "a", "matrix": [[[0.5,0],[0,0]],[[0,0],[0,0]]]},
    {"label": "b", "matrix": [[[0.5,0],[0,0]],[[0,0],[0,0]]]},
    {"label": "c", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}
  ]
}"#;

const QUBIT_PVM: &str = r#"{
  "dim": 2,
  "effects": [
    {"label": "0", "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]},
    {"label": "1", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}
  ]
}"#;

#[test]
fn minimize_classical_pair_merges_points() {
    let dir = temp_dir("minimize");
    let exp = write(&dir, "classical.json", CLASSICAL_PAIR);
    let out = run(&["minimize", exp.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["verdict"], "ok");
    let blocks = r["payload"]["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    for b in blocks {
        assert_eq!(b["d"], 1);
    }
    let minimal_dim = r["payload"]["minimal"]["dim"].as_u64().unwrap();
    assert_eq!(minimal_dim, 2);
    assert!(r["residuals"]["reconstruction"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn minimize_single_state_gives_one_block() {
    let dir = temp_dir("single");
    let exp = write(&dir, "single.json", SINGLE_STATE);
    let out = run(&["minimize", exp.to_str().unwrap()]);
    let r = report(&out);
    let blocks = r["payload"]["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0]["d"], 1);
    assert_eq!(blocks[0]["m"], 2);
}

#[test]
fn malformed_matrix_exits_one_with_field_path() {
    let dir = temp_dir("badmat");
    let exp = write(
        &dir,
        "bad.json",
        r#"{"dim":2,"states":[{"label":"a","matrix":[[[1,0]],[[0,0],[0,0]]]}]}"#,
    );
    let out = run(&["minimize", exp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("states[0].matrix"), "stderr: {err}");
}

#[test]
fn equiv_file_with_itself_is_isomorphic() {
    let dir = temp_dir("equiv");
    let exp = write(&dir, "classical.json", CLASSICAL_PAIR);
    let path = exp.to_str().unwrap();
    let out = run(&["equiv", path, path]);
    let r = report(&out);
    assert_eq!(r["verdict"], "isomorphic");
    assert!(r["residuals"]["conjugation"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn equiv_recognizes_ancilla_embedding() {
    use minexp::experiment::StatisticalExperiment;
    use minexp::io::ExperimentFile;
    use minexp::numerics::rand::random_density;
    use minexp::numerics::Tolerances;
    use rand::SeedableRng;

    let t = Tolerances::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let states = vec![
        ("a".to_string(), random_density(2, 2, &mut rng)),
        ("b".to_string(), random_density(2, 1, &mut rng)),
    ];
    let exp = StatisticalExperiment::new(2, states, None, &t).unwrap();
    let omega = random_density(2, 2, &mut rng);
    let embedded = exp.embed_with_ancilla(&omega, &t).unwrap();

    let dir = temp_dir("ancilla");
    let base = write(
        &dir,
        "base.json",
        &serde_json::to_string(&ExperimentFile::from_experiment(&exp)).unwrap(),
    );
    let emb = write(
        &dir,
        "embedded.json",
        &serde_json::to_string(&ExperimentFile::from_experiment(&embedded)).unwrap(),
    );
    let out = run(&["equiv", base.to_str().unwrap(), emb.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["verdict"], "isomorphic");
}

#[test]
fn povm_order_reports_equivalence_and_kernels() {
    let dir = temp_dir("order");
    let dup = write(&dir, "dup.json", DUPLICATED_POVM);
    let pvm = write(&dir, "pvm.json", QUBIT_PVM);
    let out = run(&["povm-order", dup.to_str().unwrap(), pvm.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["verdict"], "equivalent");
    assert!(r["payload"]["m_from_n"].is_object());
    assert!(r["payload"]["n_from_m"].is_object());
}

#[test]
fn povm_minimize_merges_and_maps() {
    let dir = temp_dir("pminimize");
    let dup = write(&dir, "dup.json", DUPLICATED_POVM);
    let out = run(&["povm-minimize", dup.to_str().unwrap(), "--dilate"]);
    let r = report(&out);
    assert_eq!(r["verdict"], "merged");
    assert_eq!(r["payload"]["merge_map"], serde_json::json!([0, 0, 1]));
    assert_eq!(
        r["payload"]["minimal"]["effects"].as_array().unwrap().len(),
        2
    );
    assert!(r["payload"]["dilation"]["gamma"].is_object());
}

#[test]
fn pvm_kernel_check_verdict_minimal() {
    let dir = temp_dir("kcheck");
    let pvm = write(&dir, "pvm.json", QUBIT_PVM);
    let out = run(&["povm-kernel-check", pvm.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["verdict"], "minimal");
    assert!(r["payload"]["lp_value"].as_f64().unwrap().abs() <= 1e-9);
}

#[test]
fn dilate_reports_tiny_factorization_residuals() {
    let dir = temp_dir("dilate");
    let dup = write(&dir, "dup.json", DUPLICATED_POVM);
    let out = run(&["dilate", dup.to_str().unwrap()]);
    let r = report(&out);
    assert!(r["residuals"]["factorization"].as_f64().unwrap() <= 1e-10);
    assert!(r["residuals"]["diagonal_restriction"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn reports_are_byte_identical_for_fixed_seed() {
    let dir = temp_dir("determinism");
    let exp = write(&dir, "single.json", SINGLE_STATE);
    let path = exp.to_str().unwrap();
    let out1 = run(&["--seed", "11", "minimize", path]);
    let out2 = run(&["--seed", "11", "minimize", path]);
    assert!(out1.status.success());
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn text_mode_renders_readable_report() {
    let dir = temp_dir("text");
    let pvm = write(&dir, "pvm.json", QUBIT_PVM);
    let out = run(&["--text", "povm-kernel-check", pvm.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verdict: minimal"));
    assert!(text.contains("command: povm-kernel-check"));
}
