//! Black-box tests of the study binary: flags, exit codes, determinism.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stiga"))
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stiga-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn unit_box_study_writes_csv() {
    let out = temp_path("unit.csv");
    let status = bin()
        .args(["--case", "unit-box", "--degrees", "1,2", "--levels", "2"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "case,degree,level,dofs,h,err_dg,rate_dg,err_l2,rate_l2");
    assert_eq!(lines.len(), 1 + 4, "two degrees x two levels");
}

#[test]
fn identical_configs_give_byte_identical_output() {
    let a = temp_path("run_a.csv");
    let b = temp_path("run_b.csv");
    for out in [&a, &b] {
        let status = bin()
            .args(["--case", "moving-2d", "--degrees", "2", "--levels", "3"])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn json_format_parses_back() {
    let out = temp_path("table.json");
    let status = bin()
        .args(["--case", "unit-box", "--levels", "2", "--format", "json"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
    assert!(value["rows"][0]["rate_dg"].is_null());
    assert!(value["rows"][1]["rate_dg"].is_number());
}

#[test]
fn invalid_inputs_exit_nonzero() {
    // Unknown case name.
    let status = bin().args(["--case", "torus"]).status().unwrap();
    assert!(!status.success());
    // Degree out of range.
    let status = bin()
        .args(["--case", "unit-box", "--degrees", "0"])
        .status()
        .unwrap();
    assert!(!status.success());
    // Neither --case nor --geometry.
    let status = bin().args(["--levels", "2"]).status().unwrap();
    assert!(!status.success());
    // Unwritable output path.
    let status = bin()
        .args(["--case", "unit-box", "--levels", "1", "--out", "/nonexistent/dir/x.csv"])
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn geometry_file_flag_runs_custom_domain() {
    let geo = temp_path("two_slabs.json");
    std::fs::write(
        &geo,
        r#"{"patches":[
            {"degrees":[1,1],"knots":[[0,0,1,1],[0,0,1,1]],
             "control_points":[[0,0],[1,0],[0,1],[1,1]]},
            {"degrees":[1,1],"knots":[[0,0,1,1],[0,0,1,1]],
             "control_points":[[0,1],[1,1],[0,2],[1,2]]}
        ]}"#,
    )
    .unwrap();
    let out = temp_path("two_slabs.csv");
    let status = bin()
        .args(["--degrees", "2", "--levels", "2"])
        .arg("--geometry")
        .arg(&geo)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() == 3);
    assert!(text.contains("two_slabs"));
}
