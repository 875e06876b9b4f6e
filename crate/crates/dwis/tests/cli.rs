use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dwis::sweep::{read_manifest, Status};

const SMALL: &str = r#"
[area]
x_min = 0.0
x_max = 40.0
y_min = 0.0
y_max = 40.0

[field]
n1 = 20
n2 = 20
sigma_a = 3.0
sigma_b = 10.0
amp_a = [0.5, 1.5]
amp_b = [0.5, 1.5]

[grid]
nx = 16
ny = 16

[sensors]
count = 300

[dwis]
m0 = 3
p = 3
spatial_iters = 4
temporal_steps = 3
pilot_fraction = 0.02
pdf_bins = 32
ridge_rel = 1e-8

[evolution]
dt = 1.0
drift_sigma = 1.0
amp_jitter = 0.05

[sweep]
schemes = ["U-SG", "LM-fix"]
mu = [0.3, 0.7]
delta0 = [0.2]
seeds = [1, 2]
"#;

fn dwis(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwis"))
        .args(args)
        .current_dir(dir)
        .env_remove("DWIS_OUT")
        .env_remove("DWIS_JOBS")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("cells")] {
        for entry in fs::read_dir(&sub).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                out.push((path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn validate_lists_the_cross_product() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    let out = dwis(&["validate", "s.toml"], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("ok, 8 cells"), "{stdout}");
    assert_eq!(stdout.lines().count(), 9);
    assert!(!tmp.path().join("dwis-out").exists());
}

#[test]
fn validate_rejects_bad_specs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (SMALL.replace("mu = [0.3, 0.7]", "mu = [0.3, 1.5]"), "0 <= mu <= 1"),
        (SMALL.replace("count = 300", ""), "`count`"),
        (SMALL.replace("nx = 16", "nx = 1"), "grid"),
        (SMALL.replace("\"LM-fix\"", "\"LM-fixed\""), "LM-fixed"),
    ];
    for (i, (spec, needle)) in cases.iter().enumerate() {
        let name = format!("bad{i}.toml");
        fs::write(tmp.path().join(&name), spec).unwrap();
        for cmd in ["validate", "run"] {
            let out = dwis(&[cmd, &name], tmp.path());
            assert_eq!(out.status.code(), Some(2), "{cmd} {name}");
            let err = text(&out.stderr);
            assert!(err.contains(needle), "{cmd} {name}: {err}");
        }
    }
    let out = dwis(&["validate", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_is_reproducible_and_replottable() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    let a = dwis(&["run", "s.toml", "--out", "a", "--jobs", "2"], tmp.path());
    assert!(a.status.success(), "{}", text(&a.stderr));
    let b = dwis(&["run", "s.toml", "--out", "b", "--jobs", "1"], tmp.path());
    assert!(b.status.success(), "{}", text(&b.stderr));

    let fa = files(&tmp.path().join("a"));
    assert_eq!(fa, files(&tmp.path().join("b")));
    assert_eq!(fa.iter().filter(|(n, _)| n.ends_with(".svg")).count(), 6);
    assert_eq!(fa.iter().filter(|(n, _)| n.starts_with("cells")).count(), 8);

    let manifest = read_manifest(&tmp.path().join("a/manifest.csv")).unwrap();
    assert_eq!(manifest.len(), 8);
    assert!(manifest.iter().all(|r| r.status == Status::Ok && r.error.is_empty()));

    let header = "phase,k,m,delta,cost,cum_cost,tracking_rmse,modeling_rmse,range_lo,range_hi";
    let first = text(&fs::read(tmp.path().join("a").join(&manifest[0].file)).unwrap());
    assert_eq!(first.lines().next(), Some(header));
    assert_eq!(first.lines().count(), 1 + 4 + 3 + 2);

    for f in fs::read_dir(tmp.path().join("a")).unwrap() {
        let p = f.unwrap().path();
        if p.extension().is_some_and(|e| e == "svg") {
            fs::remove_file(p).unwrap();
        }
    }
    let replot = dwis(&["plot", "a"], tmp.path());
    assert!(replot.status.success(), "{}", text(&replot.stderr));
    assert_eq!(files(&tmp.path().join("a")), fa);

    let db = dwis(&["plot", "a", "--db-axis"], tmp.path());
    assert!(db.status.success());
    let cost = text(&fs::read(tmp.path().join("a/fig4_temporal_cost.svg")).unwrap());
    assert!(cost.contains("replies (dB)"));
}

#[test]
fn empty_axes_give_an_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL.replace("seeds = [1, 2]", "seeds = []")).unwrap();
    let out = dwis(&["run", "s.toml", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(read_manifest(&tmp.path().join("o/manifest.csv")).unwrap().is_empty());
    assert!(text(&fs::read(tmp.path().join("o/manifest.csv")).unwrap()).starts_with("cell,scheme,"));
}

#[test]
fn failed_cells_are_recorded_and_others_kept() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    // A directory squatting on a cell's output path makes that cell fail.
    let blocked = "0002_U-SG_mu0.7_d0.2_s1.csv";
    fs::create_dir_all(tmp.path().join("o/cells").join(blocked)).unwrap();
    let out = dwis(&["run", "s.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(blocked.trim_end_matches(".csv")));
    let manifest = read_manifest(&tmp.path().join("o/manifest.csv")).unwrap();
    assert_eq!(manifest.len(), 8);
    let failed: Vec<_> = manifest.iter().filter(|r| r.status == Status::Failed).collect();
    assert_eq!(failed.len(), 1);
    assert!(!failed[0].error.is_empty() && failed[0].file.is_empty());
    for row in manifest.iter().filter(|r| r.status == Status::Ok) {
        assert!(tmp.path().join("o").join(&row.file).is_file());
    }
    assert!(tmp.path().join("o/fig1_spatial_rmse.svg").is_file());
}

#[test]
fn environment_overrides_output_and_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL.replace("seeds = [1, 2]", "seeds = [3]")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dwis"))
        .args(["run", "s.toml"])
        .current_dir(tmp.path())
        .env("DWIS_OUT", "from-env")
        .env("DWIS_JOBS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(read_manifest(&tmp.path().join("from-env/manifest.csv")).unwrap().len(), 4);
}
