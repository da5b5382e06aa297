use std::path::PathBuf;
use std::process::{Command, Output};

fn weakmeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakmeter")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_writes_csv() {
    let out = weakmeter(&["run", &scenario("imaginary_spin.toml")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "scenario,g,method,re_value,im_value,acceptance,std_error,bound,diverged");
    assert!(lines.next().unwrap().starts_with("imaginary-spin,,analytic,0.0,1.0,0.5,"));
    assert_eq!(text.lines().filter(|l| l.contains(",shots,")).count(), 3);
}

#[test]
fn output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("out{i}.json"))).collect();
    for f in &files {
        let o = weakmeter(&["run", &scenario("imaginary_spin.toml"), "--format", "json", "--seed", "9", "--out", f.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (a, b) = (std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let rows: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 7);
}

#[test]
fn seed_flag_changes_only_shot_rows() {
    let run = |seed: &str| stdout(&weakmeter(&["run", &scenario("imaginary_spin.toml"), "--seed", seed]));
    let (a, b) = (run("1"), run("2"));
    for (x, y) in a.lines().zip(b.lines()) {
        assert_eq!(x.contains(",shots,"), x != y);
    }
}

#[test]
fn sweep_overrides_couplings() {
    let out = weakmeter(&["sweep", &scenario("werner.toml"), "--g", "0.1,0.02,0.004"]);
    assert!(out.status.success());
    let gs: Vec<String> = stdout(&out).lines().skip(2).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(gs, ["0.1", "0.02", "0.004"]);
}

#[test]
fn sweep_rejects_strong_coupling() {
    let out = weakmeter(&["sweep", &scenario("werner.toml"), "--g", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep[0]"));
}

#[test]
fn shots_flag_enables_sampling() {
    let out = weakmeter(&["run", &scenario("werner.toml"), "--shots", "2000"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(",shots,")).count(), 2);
}

#[test]
fn orthogonal_selection_exits_3() {
    let out = weakmeter(&["run", &scenario("orthogonal.toml")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("orthogonal,,analytic,,,,,,true"));
}

#[test]
fn invalid_scenario_exits_2_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "name = \"bad\"\n[system]\nkind = \"werner\"\nlambda_pre = 0.5\nlambda_post = -2\n[observable]\nkind = \"axis\"\naxis = [0, 0, 1]\n",
    )
    .unwrap();
    let out = weakmeter(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["system.lambda_pre", "system.lambda_post", "observable"] {
        assert!(err.contains(field), "{err}");
    }
}

#[test]
fn malformed_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "name = \n").unwrap();
    assert_eq!(weakmeter(&["run", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_1() {
    assert_eq!(weakmeter(&["run", "/nonexistent/scenario.toml"]).status.code(), Some(1));
}

#[test]
fn every_example_scenario_parses() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios"].iter().collect();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let s = weakmeter_cli::scenario::parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = weakmeter_cli::scenario::parse_scenario(&weakmeter_cli::scenario::to_toml(&s)).unwrap();
        assert_eq!(again, s);
    }
}

#[test]
fn analytic_rows_respect_their_bound() {
    for name in ["imaginary_spin.toml", "amplified_spin.toml", "werner.toml", "product.toml", "mixed_qubit.toml"] {
        let out = weakmeter(&["run", &scenario(name), "--format", "json"]);
        let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let row = &rows[0];
        assert_eq!(row["method"], "analytic");
        let (re, im, bound) = (row["re_value"].as_f64().unwrap(), row["im_value"].as_f64().unwrap(), row["bound"].as_f64().unwrap());
        assert!(re.hypot(im) <= bound + 1e-9, "{name}");
    }
}

#[test]
fn check_prints_one_line_per_criterion() {
    let out = weakmeter(&["check"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("criterion {} ", i + 1)));
    }
}
