use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[array]
n_elements = 24

[angles]
count = 8
span_deg = 20.0

[grid]
nx = 24
nz = 32
z0 = 0.008

[phantom]
x_min = -0.003
x_max = 0.003
z_min = 0.0075
z_max = 0.013
speckle_density = 0.5
cyst_z = 0.0105
cyst_radius = 0.0012
pin_x = [-0.0015]
pin_z = [0.009]

[patches]
lateral_wavelengths = 12.0
axial_wavelengths = 8.0
"#;

fn svdbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svdbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(o),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn config(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn stage_by_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let common = ["--config", cfg.as_str(), "--out", out_s.as_str(), "--seed", "3"];
    let run = |sub: &[&str]| {
        let mut args: Vec<&str> = sub.to_vec();
        args.extend_from_slice(&common);
        svdbf(&args)
    };

    let o = run(&["phantom"]);
    assert_ok(&o);
    assert!(out.join("phantom.csv").exists());

    let phantom = out.join("phantom.csv").to_string_lossy().into_owned();
    let o = run(&["simulate", "--phantom", phantom.as_str()]);
    // The tiny config injects an angular law, which a scatterer file cannot carry.
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["simulate"]);
    assert_ok(&o);
    assert!(out.join("rf.ufrf").exists() && out.join("rf.ufrf.meta").exists());
    assert!(out.join("true_law.csv").exists());

    let rf = out.join("rf.ufrf").to_string_lossy().into_owned();
    assert_ok(&run(&["beamform", "--rf", rf.as_str()]));
    assert!(out.join("image_compound.pgm").exists());

    let ufcm = out.join("ufcm.ufcm").to_string_lossy().into_owned();
    let o = run(&["correct", "--ufcm", ufcm.as_str(), "--format", "csv"]);
    assert_ok(&o);
    assert!(out.join("image_corrected.csv").exists());
    assert!(out.join("patch_laws.csv").exists());

    let o = run(&["coherence", "--ufcm", ufcm.as_str()]);
    assert_ok(&o);
    assert!(stdout(&o).contains("patch = "));

    let truth = out.join("true_law.csv").to_string_lossy().into_owned();
    let o = run(&["metrics", "--ufcm", ufcm.as_str(), "--truth", truth.as_str()]);
    assert_ok(&o);
    let text = stdout(&o);
    assert!(text.contains("contrast_improvement_db = "), "{text}");
    assert!(text.contains("law_r2_median = "), "{text}");

    let o = run(&["sweep-patch", "--ufcm", ufcm.as_str(), "--sizes", "4x4,8x8,12x12"]);
    assert_ok(&o);
    assert_eq!(stdout(&o).lines().count(), 4);

    // Two pixels cannot resolve eight angles.
    let o = run(&["sweep-patch", "--ufcm", ufcm.as_str(), "--sizes", "1x2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn pipeline_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let mut manifests = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("run{threads}"));
        let out_s = out.to_string_lossy().into_owned();
        let o = svdbf(&["pipeline", "--config", cfg.as_str(), "--out", out_s.as_str(), "--threads", threads]);
        assert_ok(&o);
        manifests.push(std::fs::read_to_string(out.join("MANIFEST")).unwrap());
    }
    assert!(manifests[0].starts_with("status = complete"));
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[array]\nelements = 3\n").unwrap();
    let bad = bad.to_string_lossy().into_owned();
    assert_eq!(svdbf(&["phantom", "--config", bad.as_str(), "--out", out.as_str()]).status.code(), Some(2));

    assert_eq!(svdbf(&["phantom", "--format", "png", "--out", out.as_str()]).status.code(), Some(2));

    let missing = dir.path().join("nope.ufcm").to_string_lossy().into_owned();
    assert_eq!(
        svdbf(&["correct", "--ufcm", missing.as_str(), "--out", out.as_str()]).status.code(),
        Some(4)
    );

    let garbage = dir.path().join("garbage.ufcm");
    std::fs::write(&garbage, b"not a matrix").unwrap();
    let garbage = garbage.to_string_lossy().into_owned();
    assert_eq!(
        svdbf(&["correct", "--ufcm", garbage.as_str(), "--out", out.as_str()]).status.code(),
        Some(4)
    );

    assert_eq!(svdbf(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bench_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = svdbf(&["bench", "--patches", "1,4", "--angles", "3,6", "--out", out.as_str()]);
    assert_ok(&o);
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(stdout(&o).contains("machine = "));
}
