use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cptorus(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptorus"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SCAN: &[&str] = &[
    "scan",
    "--tau",
    "0.369,1.573",
    "--center",
    "0,0",
    "--width",
    "10",
    "--height",
    "10",
    "--res",
    "8x8",
    "--depth",
    "40",
    "--out",
    "s.ppm",
    "--csv",
    "s.csv",
];

#[test]
fn happy_path_scan_writes_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(dir.path(), SMALL_SCAN);
    assert!(o.status.success(), "{}", stderr(&o));
    let ppm = fs::read(dir.path().join("s.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n# tau="));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv
        .lines()
        .any(|l| l.starts_with("# config={\"subcommand\":\"scan\"")));
    assert!(csv.lines().any(|l| l == "i,j,re_c,im_c,class,depth_used"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 64);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn negative_imaginary_modulus_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(dir.path(), &["calibrate", "--tau", "0.369,-1.573"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--tau"), "{}", stderr(&o));
}

#[test]
fn non_primitive_slope_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(
        dir.path(),
        &["centers", "--tau", "0,1", "--slope", "2/4", "--nmax", "1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--slope"), "{}", stderr(&o));
}

#[test]
fn malformed_resolution_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SCAN.to_vec();
    let k = args.iter().position(|a| *a == "8x8").unwrap();
    args[k] = "8by8";
    let o = cptorus(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--res"));
}

#[test]
fn config_and_subcommand_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), "{}").unwrap();
    let o = cptorus(dir.path(), &["--config", "c.json", "selftest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"subcommand":"calibrate","tau":[0.0,-1.0],"tol":1e-10}"#,
    )
    .unwrap();
    let o = cptorus(dir.path(), &["--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tau"));
}

#[test]
fn config_echo_reproduces_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cptorus(dir.path(), SMALL_SCAN).status.success());
    let ppm = fs::read(dir.path().join("s.ppm")).unwrap();
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let echo = csv.lines().find_map(|l| l.strip_prefix("# config=")).unwrap();
    fs::write(dir.path().join("run.json"), echo).unwrap();
    fs::remove_file(dir.path().join("s.ppm")).unwrap();
    fs::remove_file(dir.path().join("s.csv")).unwrap();
    let o = cptorus(dir.path(), &["--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("s.ppm")).unwrap(), ppm);
    assert_eq!(fs::read_to_string(dir.path().join("s.csv")).unwrap(), csv);
}

#[test]
fn calibrate_prints_json_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(dir.path(), &["calibrate", "--tau", "0,1"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("{\"config\":{\"subcommand\":\"calibrate\""));
    assert!(
        out.contains("\"b0\":[0.0000000000000000e0,0.0000000000000000e0]"),
        "{out}"
    );
    assert!(out.contains("\"tag\":\"DISCRETE_BQ\""));
}

#[test]
fn hexagonal_centers_are_collinear() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(
        dir.path(),
        &[
            "centers",
            "--tau",
            "0.5,0.8660254",
            "--slope",
            "1/0",
            "--nmax",
            "2",
            "--out",
            "c.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = fs::read_to_string(dir.path().join("c.json")).unwrap();
    assert!(out.contains("\"collinear\":true"));
    assert_eq!(out.matches("\"n\":").count(), 2);
}

#[test]
fn normdiff_starts_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(
        dir.path(),
        &[
            "normdiff",
            "--tau",
            "0.369,1.573",
            "--tmax",
            "1",
            "--out",
            "n.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("n.csv")).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("t,norm,ratio"));
    assert_eq!(
        rows.next(),
        Some("0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0")
    );
}

#[test]
fn ray_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(
        dir.path(),
        &[
            "ray", "--tau", "0,1", "--slope", "1/0", "--tmax", "1", "--out", "r.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "t,re_c,im_c,re_x,im_x,residual"));
    assert!(csv.contains("# slope=1/0 transversal=0/1"));
}

#[test]
fn selftest_passes_on_this_build() {
    let dir = tempfile::tempdir().unwrap();
    let o = cptorus(dir.path(), &["selftest", "--h", "2e-3", "--report", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().contains("\"pass\":true"));
}
