use std::path::{Path, PathBuf};
use std::process::Command;

use effect_histories::cli::scenario_file::FamilySpec;
use effect_histories::cli::{load_scenario, ScenarioFile};
use effect_histories::numerics::ComplexMatrix;
use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(path: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_effhist"))
        .arg(path)
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_json(path: &Path, args: &[&str]) -> (i32, Value) {
    let (code, stdout, _) = run(path, args);
    (code, serde_json::from_str(&stdout).unwrap())
}

fn write_scenario(dir: &tempfile::TempDir, value: &Value) -> PathBuf {
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn minimal(vector: Value) -> Value {
    json!({
        "dimension": 2,
        "fiducial_time": 0.0,
        "hamiltonian": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        "initial_state": {"kind": "pure", "vector": vector},
    })
}

#[test]
fn minimal_qubit_scenario_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, &minimal(json!([[1.0, 0.0], [0.0, 0.0]])));
    let loaded = load_scenario(&path).unwrap();
    assert_eq!(
        loaded.scenario.initial_state(),
        &ComplexMatrix::from_diagonal(&[1.0, 0.0])
    );
    let (code, report) = run_json(&path, &["validate"]);
    assert_eq!(code, 0);
    assert_eq!(report["status"], "ok");
    assert_eq!(report["payload"]["valid"], true);
    assert_eq!(
        report["payload"]["initial_state"]["class"]["is_projector"],
        true
    );
}

#[test]
fn unnormalized_state_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, &minimal(json!([[1.0, 0.0], [1.0, 0.0]])));
    let (code, report) = run_json(&path, &["validate"]);
    assert_eq!(code, 3);
    assert_eq!(report["status"], "validation_error");
    assert_eq!(report["payload"]["field"], "initial_state.vector");
    let message = report["payload"]["message"].as_str().unwrap();
    assert!(message.starts_with("state not normalized"));
}

#[test]
fn non_effect_operator_is_named() {
    let (code, stdout, stderr) = run(&fixture("invalid_effect.json"), &["validate"]);
    assert_eq!(code, 3);
    assert!(stdout.contains("not an effect: big"));
    assert!(stderr.contains("operators.big"));
}

#[test]
fn unresolved_operator_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = minimal(json!([[1.0, 0.0], [0.0, 0.0]]));
    s["histories"] =
        json!({"h": {"kind": "homogeneous", "events": [{"time": 1.0, "operator": "missing"}]}});
    let path = write_scenario(&dir, &s);
    let (code, report) = run_json(&path, &["validate"]);
    assert_eq!(code, 3);
    assert_eq!(report["payload"]["field"], "histories.h.events[0].operator");
}

#[test]
fn usage_errors_exit_two() {
    let zz = fixture("z_basis.json");
    assert_eq!(run(&zz, &["decohere", "--family", "nope"]).0, 2);
    assert_eq!(
        run(&zz, &["prob", "--family", "zz", "--element", "h+?"]).0,
        2
    );
    assert_eq!(run(&zz, &["classop", "nope"]).0, 2);
    assert_eq!(run(&zz, &["frobnicate"]).0, 2);
    assert_eq!(
        run(&zz, &["decohere", "--family", "zz", "--kind", "third"]).0,
        2
    );
}

#[test]
fn probability_on_inconsistent_family_is_a_numerical_failure() {
    let (code, report) = run_json(
        &fixture("x_then_z.json"),
        &["prob", "--family", "xz", "--element", "h++"],
    );
    assert_eq!(code, 4);
    assert_eq!(report["status"], "numerical_failure");
}

#[test]
fn classop_of_projector_history() {
    // H = 0: C = Pz+ Pz+ = Pz+.
    let (code, report) = run_json(&fixture("z_basis.json"), &["classop", "h++"]);
    assert_eq!(code, 0);
    assert_eq!(report["payload"]["kind"], "first_kind");
    assert_eq!(
        report["payload"]["matrix"],
        json!([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]])
    );
}

#[test]
fn zz_queries() {
    let zz = fixture("z_basis.json");
    let (code, report) = run_json(&zz, &["prob", "--family", "zz", "--element", "h++"]);
    assert_eq!(code, 0);
    assert!((report["payload"]["probability"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let (_, report) = run_json(&zz, &["prob", "--family", "zz", "--element", "h-++h--"]);
    assert_eq!(report["payload"]["element"], json!(["h-+", "h--"]));
    assert!(report["payload"]["probability"].as_f64().unwrap().abs() < 1e-12);

    let (code, report) = run_json(
        &zz,
        &[
            "implies", "--family", "zz", "h++,h+-", "h++,h-+", "--via", "h++",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(report["payload"]["implies"], true);

    let (code, report) = run_json(&zz, &["implies", "--family", "zz", "1", "h--"]);
    assert_eq!(code, 0);
    assert_eq!(report["payload"]["implies"], false);

    let (code, report) = run_json(&zz, &["check-lattice", "--family", "zz"]);
    assert_eq!(code, 0);
    assert_eq!(report["payload"]["passed"], true);

    let (_, report) = run_json(&zz, &["decohere", "--family", "zz", "--kind", "extended"]);
    assert_eq!(report["payload"]["kind"], "extended");
    assert_eq!(report["payload"]["matrix"][0][0], json!([1.0, 0.0]));
}

#[test]
fn tolerance_flag_overrides_family_tolerance() {
    let xz = fixture("x_then_z.json");
    let (_, report) = run_json(&xz, &["consistent", "--family", "xz", "--tol", "0.5"]);
    assert_eq!(report["payload"]["consistent"], true);
    assert_eq!(report["payload"]["tolerance"], 0.5);
    assert_eq!(report["payload"]["worst_pair"], json!(["h++", "h-+"]));
}

#[test]
fn echoed_inputs_round_trip() {
    let path = fixture("x_then_z.json");
    let file: ScenarioFile =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (_, report) = run_json(&path, &["consistent", "--family", "xz"]);
    let echoed: FamilySpec =
        serde_json::from_value(report["payload"]["inputs"]["family"].clone()).unwrap();
    assert_eq!(echoed, file.families["xz"]);
    assert_eq!(report["payload"]["inputs"]["name"], "xz");
}

#[test]
fn text_format() {
    let (code, stdout, _) = run(
        &fixture("z_basis.json"),
        &[
            "prob",
            "--family",
            "zz",
            "--element",
            "h++",
            "--format",
            "text",
        ],
    );
    assert_eq!(code, 0);
    assert!(stdout.starts_with("command: prob\nstatus: ok\n"));
    assert!(stdout.contains("probability: 1.0000000000000000e0"));
}

#[test]
fn povm_report_in_validate() {
    let (_, report) = run_json(&fixture("z_basis.json"), &["validate"]);
    assert_eq!(report["payload"]["povms"]["x"]["passed"], true);
    assert_eq!(report["payload"]["povms"]["z"]["passed"], true);
}

#[test]
fn custom_valuation_from_file() {
    // Overriding the bottom element with 1/2 breaks the valuation condition.
    let dir = tempfile::tempdir().unwrap();
    let mut s: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("z_basis.json")).unwrap()).unwrap();
    let zero = vec![vec![json!([0.0, 0.0]); 4]; 4];
    let mut half_identity = zero.clone();
    for (i, row) in half_identity.iter_mut().enumerate() {
        row[i] = json!([0.5, 0.0]);
    }
    s["families"]["zz"]["valuation"] = json!([{ "element": "0", "matrix": half_identity }]);
    let path = write_scenario(&dir, &s);
    let (code, report) = run_json(&path, &["check-lattice", "--family", "zz"]);
    assert_eq!(code, 0);
    assert_eq!(report["payload"]["custom_valuation"], true);
    assert_eq!(report["payload"]["passed"], false);
}
