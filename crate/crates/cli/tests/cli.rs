use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tunnelvision"));
    c.env_remove("TUNNELVISION_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_valid(instance: &Value, schema_name: &str) {
    let schema = read_json(&schema_dir().join(format!("{schema_name}.schema.json")));
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(instance) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{schema_name}: {msgs:?}");
    };
}

fn write_domain(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

#[test]
fn dogbone_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ok = run(&["dogbone", "--eps", "0.1"], &tmp.path().join("a"));
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let report = read_json(&tmp.path().join("a/report.json"));
    assert_eq!(report["critical_points"].as_array().unwrap().len(), 2);
    assert_valid(&report, "dogbone_report");
    let csv = std::fs::read_to_string(tmp.path().join("a/axis_profile.csv")).unwrap();
    assert!(csv.starts_with("z,f,err\n") && !csv.contains('\r'));

    let wide = run(&["dogbone", "--eps", "0.45"], &tmp.path().join("b"));
    assert!(matches!(wide.status.code(), Some(0) | Some(2)));
    assert_valid(&read_json(&tmp.path().join("b/report.json")), "dogbone_report");

    let bad = run(&["dogbone", "--eps", "-1"], &tmp.path().join("c"));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(&["dogbone"], tmp.path()).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"], tmp.path()).status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn measure_disk_at_unit_height() {
    let tmp = TempDir::new().unwrap();
    let d = write_domain(tmp.path(), "disk1.json", r#"{"disk": {"c": [0, 0], "r": 1}}"#);
    let out = run(&["measure", "--domain", d.to_str().unwrap(), "--point", "0", "0", "1"], &tmp.path().join("m"));
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let value: f64 = stdout.split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 0.5).abs() < 1e-7, "{stdout}");
    let m = read_json(&tmp.path().join("m/measure.json"));
    assert_valid(&m, "measure");
    assert_eq!(m["value"].as_f64().unwrap(), value);
}

#[test]
fn malformed_domain_reports_location() {
    let tmp = TempDir::new().unwrap();
    let d = write_domain(tmp.path(), "bad.json", "{\"disk\": {\"c\": [0, 0], \"r\": }}");
    let out = run(&["measure", "--domain", d.to_str().unwrap(), "--point", "0", "0", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1 column"), "{err}");

    let d = write_domain(tmp.path(), "bad2.json", r#"{"disk": {"c": [0, "x"], "r": 1}}"#);
    let out = run(&["measure", "--domain", d.to_str().unwrap(), "--point", "0", "0", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("$.disk.c[1]"));
}

#[test]
fn polygon_genus_two() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["polygon", "--genus", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let p = read_json(&tmp.path().join("polygon.json"));
    assert_valid(&p, "polygon");
    let r = p["euclidean_inradius"].as_f64().unwrap();
    assert!((r - 0.64359).abs() < 1e-5, "{r}");
    let m = read_json(&tmp.path().join("manifest.json"));
    assert_valid(&m, "manifest");
    assert_eq!(m["outputs"], serde_json::json!(["polygon.json"]));
}

#[test]
fn quantize_dogbone() {
    let tmp = TempDir::new().unwrap();
    let d = write_domain(tmp.path(), "dogbone01.json", r#"{"dogbone": {"eps": 0.1}}"#);
    let out = run(&["quantize", "--domain", d.to_str().unwrap(), "--k", "2", "--ell", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = read_json(&tmp.path().join("configuration.json"));
    assert_valid(&c, "configuration");
    assert!((c["sum"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(c["ell"], 1);
}

#[test]
fn green_modes_validate() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 3] = [
        &["green", "flux", "--pole", "0.3", "-0.2", "0.8", "--radius", "0.5"],
        &["green", "eval", "--pole", "0", "0", "1", "--q", "0.5", "0.5", "0.5"],
        &["green", "quotient", "--genus", "2", "--shells", "4", "--pole", "0", "0", "1", "--q", "0.2", "0.1", "0.8"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let dir = tmp.path().join(i.to_string());
        let out = run(args, &dir);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_valid(&read_json(&dir.join("green.json")), "green");
        assert_valid(&read_json(&dir.join("manifest.json")), "manifest");
    }
    let flux = read_json(&tmp.path().join("0/green.json"));
    assert!((flux["value"].as_f64().unwrap() + 2.0 * std::f64::consts::PI).abs() < 1e-4);
}

#[test]
fn critical_and_group_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = write_domain(tmp.path(), "disk.json", r#"{"disk": {"c": [0, 0], "r": 1}}"#);
    let out = run(&["critical", "--domain", d.to_str().unwrap(), "--grid", "6"], &tmp.path().join("v"));
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&tmp.path().join("v/verdict.json"));
    assert_valid(&v, "verdict");
    assert_eq!(v["status"], "no_critical_point_found");

    let out = run(&["group", "--genus", "2", "--depth", "2", "--kind", "orbit"], &tmp.path().join("g"));
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("g/orbit.csv")).unwrap();
    assert!(csv.starts_with("re,im,word_length\n"));
    assert_eq!(csv.lines().count(), 1 + 1 + 8 + 56);
}

#[test]
fn replay_and_thread_count_reproduce_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = write_domain(tmp.path(), "dog.json", r#"{"dogbone": {"eps": 0.1}}"#);
    let args = ["profile", "--domain", d.to_str().unwrap(), "--zmin", "0.01", "--zmax", "10", "--samples", "40"];
    let a = tmp.path().join("a");
    assert_eq!(run(&args, &a).status.code(), Some(0));
    let b = tmp.path().join("b");
    let out = bin().arg("replay").arg(a.join("manifest.json")).arg("--out").arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let c = tmp.path().join("c");
    let out = bin().args(args).arg("--out").arg(&c).env("TUNNELVISION_THREADS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let reference = std::fs::read(a.join("axis_profile.csv")).unwrap();
    assert_eq!(reference, std::fs::read(b.join("axis_profile.csv")).unwrap());
    assert_eq!(reference, std::fs::read(c.join("axis_profile.csv")).unwrap());
    assert_eq!(read_json(&c.join("manifest.json"))["threads"], 1);
}
