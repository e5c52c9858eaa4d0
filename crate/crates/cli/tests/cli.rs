use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn eigexpand() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eigexpand"));
    // Keep the caller's overrides out of the tests.
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("EIGEXPAND_")) {
        cmd.env_remove(k);
    }
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn decompose_k2(out: &Path) -> Output {
    run(eigexpand().args(["--no-timestamp", "decompose", "--space"]).arg(fixture("k2_space.tsv")).arg("--graph").arg(fixture("k2_graph.tsv")).arg("--out").arg(out))
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn k2_graph_passes_with_two_simple_atoms() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k2");
    let o = decompose_k2(&out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["status"], "pass");
    let spectrum = r["spectrum"].as_array().unwrap();
    assert_eq!(spectrum.len(), 2);
    for (entry, lambda) in spectrum.iter().zip([0.0, 2.0]) {
        assert!((entry["lambda"].as_f64().unwrap() - lambda).abs() < 1e-12);
        assert_eq!(entry["multiplicity"], 1);
    }
    for c in r["checks"].as_array().unwrap() {
        for key in ["name", "status", "max_error", "tolerance"] {
            assert!(c.get(key).is_some(), "check lacks {key}: {c}");
        }
    }
    assert!(r["metadata"].get("timestamp").is_none());
    assert!(out.join("decomposition.json").exists());
    assert!(out.join("fibers.csv").exists());
}

#[test]
fn check_names_match_golden_list() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k2");
    decompose_k2(&out);
    let names: Vec<String> =
        report(&out)["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect();
    let golden = fs::read_to_string(fixture("decompose_checks.golden")).unwrap();
    assert_eq!(names, golden.lines().collect::<Vec<_>>());
}

#[test]
fn kernel_file_and_omega_file() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k2");
    let o = run(eigexpand()
        .args(["decompose", "--space"])
        .arg(fixture("k2_space.tsv"))
        .arg("--kernel")
        .arg(fixture("k2_kernel.tsv"))
        .arg("--omega")
        .arg(fixture("k2_omega.tsv"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&out);
    assert!(r["metadata"]["timestamp"].as_u64().is_some());
    // ω ≡ 1/2 on K2: ‖(L+i)⁻¹ M_ω‖²_HS = (1/4)(1 + 1/5) = 3/10.
    let hs = check(&r, "resolvent_hs_bound")["values"]["hs"].as_f64().unwrap();
    assert!((hs * hs - 0.3).abs() < 1e-12);
    let c = check(&r, "c_omega_aggregate");
    assert!((c["values"]["sum_sq"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn nonpositive_measure_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bad");
    let o = run(eigexpand().args(["decompose", "--space"]).arg(fixture("bad_measure.tsv")).arg("--graph").arg(fixture("k2_graph.tsv")).arg("--out").arg(&out));
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("measure must be positive"), "{msg}");
    assert!(msg.contains("bad_measure.tsv") && msg.contains("line 1"), "{msg}");
    assert!(!out.exists());
}

#[test]
fn non_hermitian_kernel_exits_2_naming_the_pair() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bad");
    let o = run(eigexpand().args(["decompose", "--space"]).arg(fixture("k2_space.tsv")).arg("--kernel").arg(fixture("nonhermitian_kernel.tsv")).arg("--out").arg(&out));
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("not Hermitian") && msg.contains("(\"a\", \"b\")"), "{msg}");
    assert!(!out.exists());
}

#[test]
fn malformed_config_exits_2_with_line() {
    let tmp = TempDir::new().unwrap();
    let o = run(eigexpand().args(["gasket", "--level", "1", "--config"]).arg(fixture("broken.ini")).arg("--out").arg(tmp.path().join("g")));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn env_override_can_fail_a_run_with_exit_1() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("strict");
    let o = run(eigexpand()
        .env("EIGEXPAND_TOL_VERIFY", "1e-300")
        .args(["--no-timestamp", "decompose", "--space"])
        .arg(fixture("p3_space.tsv"))
        .arg("--graph")
        .arg(fixture("p3_graph.tsv"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["metadata"]["config"]["tol_verify"], "1e-300");
    assert!(stderr(&o).contains("FAIL"));

    let bad = run(eigexpand().env("EIGEXPAND_SEED", "minus one").args(["gasket", "--level", "0", "--out"]).arg(tmp.path().join("g")));
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("EIGEXPAND_SEED"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(eigexpand()
            .args(["--no-timestamp", "decompose", "--space"])
            .arg(fixture("p3_space.tsv"))
            .arg("--graph")
            .arg(fixture("p3_graph.tsv"))
            .arg("--config")
            .arg(fixture("rotate1.ini"))
            .arg("--out")
            .arg(out));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for file in ["report.json", "decomposition.json", "fibers.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    for out in [tmp.path().join("g1"), tmp.path().join("g2")] {
        assert_eq!(code(&run(eigexpand().args(["--no-timestamp", "gasket", "--level", "3", "--out"]).arg(&out))), 0);
    }
    for file in ["report.json", "gasket.csv"] {
        assert_eq!(fs::read(tmp.path().join("g1").join(file)).unwrap(), fs::read(tmp.path().join("g2").join(file)).unwrap());
    }
}

#[test]
fn gasket_levels() {
    let tmp = TempDir::new().unwrap();

    let over = tmp.path().join("g7");
    let o = run(eigexpand().args(["gasket", "--level", "7", "--out"]).arg(&over));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("exceeds the cap 6"));
    assert!(!over.exists());

    let zero = tmp.path().join("g0");
    let o = run(eigexpand().args(["gasket", "--level", "0", "--out"]).arg(&zero));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(zero.join("gasket.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert_eq!(csv.lines().next().unwrap(), "level,eigen_index,lambda,persistent,lambda_coarse,s_m,increment_ratio");
    assert_eq!(report(&zero)["gasket"]["transition_fits"].as_array().unwrap().len(), 0);

    let two = tmp.path().join("g2");
    let o = run(eigexpand().args(["gasket", "--level", "2", "--out"]).arg(&two));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&two);
    let total: u64 = r["spectrum"].as_array().unwrap().iter().map(|e| e["multiplicity"].as_u64().unwrap()).sum();
    assert_eq!(total, 15);
    let constant = r["gasket"]["series"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["constant_mode"] == true)
        .expect("constant series");
    assert_eq!(constant["levels"], serde_json::json!([0, 1, 2]));
    assert_eq!(check(&r, "zero_mode")["status"], "pass");
    let csv = fs::read_to_string(two.join("gasket.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 + 15);

    let three = tmp.path().join("g3");
    assert_eq!(code(&run(eigexpand().args(["gasket", "--level", "3", "--out"]).arg(&three))), 0);
    let fit = &report(&three)["gasket"]["transition_fits"][2];
    assert_eq!(fit["confirmed"], true);
    let c = fit["coefficients"].as_array().unwrap();
    for (got, want) in c.iter().zip([-1.0, 5.0, 0.0]) {
        assert!((got.as_f64().unwrap() - want).abs() < 1e-8, "{fit}");
    }
}

#[test]
fn verify_identical_rotated_and_mismatched() {
    let tmp = TempDir::new().unwrap();
    let decompose = |space: &str, graph: &str, config: Option<&str>, out: &Path| {
        let mut cmd = eigexpand();
        cmd.args(["--no-timestamp", "decompose", "--space"]).arg(fixture(space)).arg("--graph").arg(fixture(graph));
        if let Some(c) = config {
            cmd.arg("--config").arg(fixture(c));
        }
        let o = run(cmd.arg("--out").arg(out));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out.join("decomposition.json")
    };
    let a = decompose("k3_space.tsv", "k3_graph.tsv", Some("rotate1.ini"), &tmp.path().join("a"));
    let b = decompose("k3_space.tsv", "k3_graph.tsv", Some("rotate2.ini"), &tmp.path().join("b"));
    let k2 = decompose("k2_space.tsv", "k2_graph.tsv", None, &tmp.path().join("k2"));
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let same = tmp.path().join("same");
    let o = run(eigexpand().args(["verify", "--a"]).arg(&a).arg("--b").arg(&a).arg("--out").arg(&same));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&same);
    assert_eq!(check(&r, "uniqueness_atoms")["max_error"].as_f64().unwrap(), 0.0);
    assert_eq!(check(&r, "uniqueness_gram")["max_error"].as_f64().unwrap(), 0.0);
    assert!(check(&r, "uniqueness_principal_angle")["max_error"].as_f64().unwrap() <= 1e-14);

    let rotated = tmp.path().join("rotated");
    let o = run(eigexpand().args(["verify", "--a"]).arg(&a).arg("--b").arg(&b).arg("--out").arg(&rotated));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&rotated);
    assert_eq!(r["spectrum"][1]["multiplicity"], 2);
    for c in r["checks"].as_array().unwrap() {
        assert!(c["max_error"].as_f64().unwrap() <= 1e-10, "{c}");
    }

    let mismatched = tmp.path().join("mismatched");
    let o = run(eigexpand().args(["verify", "--a"]).arg(&a).arg("--b").arg(&k2).arg("--out").arg(&mismatched));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("different kernels"), "{}", stderr(&o));
    assert!(!mismatched.exists());
}

#[test]
fn missing_operator_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(eigexpand().args(["decompose", "--space"]).arg(fixture("k2_space.tsv")).arg("--out").arg(tmp.path()));
    assert_eq!(code(&o), 2);
}
