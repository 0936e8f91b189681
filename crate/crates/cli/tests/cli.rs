use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPECIES: [&str; 3] = ["Adenomera", "Ameerega", "Hypsiboas"];

/// Three well-separated classes over eight MFCC-like columns, in the
/// column layout of the real file (padded names, extra taxonomy columns).
fn write_frogs(dir: &Path, rows: usize) -> PathBuf {
    let mut text = String::new();
    let header: Vec<String> = (1..=8).map(|j| format!("MFCCs_{j:>2}")).collect();
    text.push_str(&header.join(","));
    text.push_str(",Family,Genus,Species,RecordID\n");
    for i in 0..rows {
        let c = i % 3;
        let values: Vec<String> = (0..8)
            .map(|j| {
                let centre = ((c * 3 + j) % 5) as f64 * 0.8 - 1.5;
                let noise = 0.3 * ((i * 7 + j * 13) as f64 * 0.618).sin() + 0.1 * ((i * j) as f64).cos();
                format!("{:.6}", centre + noise)
            })
            .collect();
        text.push_str(&values.join(","));
        text.push_str(&format!(",Fam,Gen,{},{}\n", SPECIES[c], i % 4));
    }
    let path = dir.join("frogs.csv");
    fs::write(&path, text).unwrap();
    path
}

fn anura(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anura"))
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_run<'a>(data: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "run",
        "--data",
        data,
        "--out",
        out,
        "--cv-folds",
        "3",
        "--pca-components",
        "4",
        "--forms",
        "raw,clean,stand,pca,ica",
        "--models",
        "lda,knn,nb,cart",
    ]
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn help_exits_zero() {
    let o = anura(&["run", "--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("--k-sigma"));
}

#[test]
fn missing_data_file_is_a_config_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("no_such_file.csv");
    let out = tmp.path().join("out");
    let o = anura(&["run", "--data", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_file.csv"), "{}", stderr(&o));
}

#[test]
fn invalid_settings_exit_with_status_two() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 60);
    let data = data.to_str().unwrap();
    for bad in [
        vec!["--mode", "loose"],
        vec!["--cv-folds", "1"],
        vec!["--k-sigma", "-1"],
        vec!["--models", "rf"],
        vec!["--formats", "xml"],
    ] {
        let mut args = vec!["run", "--data", data];
        args.extend(bad.iter());
        let o = anura(&args);
        assert_eq!(o.status.code(), Some(2), "{bad:?}: {}", stderr(&o));
    }
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "k-sigma = 3.0\nunknown-key = 1\n").unwrap();
    let o = anura(&["run", "--data", data, "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown-key"), "{}", stderr(&o));
}

#[test]
fn pipeline_errors_exit_one_and_name_the_form() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 60);
    let out = tmp.path().join("out");
    let o = anura(&[
        "run",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--forms",
        "pca",
        "--pca-components",
        "12",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: pca"), "{}", stderr(&o));
}

#[test]
fn run_writes_every_artifact_and_prints_both_tables() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 150);
    let before = fs::read(&data).unwrap();
    let out = tmp.path().join("out");
    let o = anura(&small_run(data.to_str().unwrap(), out.to_str().unwrap()));
    assert!(o.status.success(), "{}", stderr(&o));

    for f in [
        "report.json",
        "table1.csv",
        "table1.md",
        "table2.csv",
        "table2.md",
        "correlation.csv",
        "describe.csv",
        "manifest.toml",
        "transforms/stand.json",
        "transforms/ica.json",
        "models/pca_knn.json",
        "models/raw_cart.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let table1 = fs::read_to_string(out.join("table1.csv")).unwrap();
    let mut lines = table1.lines();
    assert_eq!(lines.next(), Some("Data,LDA,KNN,CART,NB,Mean"));
    let rows: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["Raw", "Clean", "Stand", "PCA", "ICA"]);

    let corr = fs::read_to_string(out.join("correlation.csv")).unwrap();
    assert!(corr.starts_with(",MFCCs_1,MFCCs_2"));
    assert!(corr.lines().nth(1).unwrap().starts_with("MFCCs_1,1,"));

    let printed = stdout(&o);
    assert!(printed.contains("Cross-validation accuracy") && printed.contains("Test-split accuracy"));
    assert_eq!(printed.matches("| Raw |").count(), 2);
    assert_eq!(fs::read(&data).unwrap(), before, "input file was modified");
}

#[test]
fn rerun_from_manifest_is_byte_identical_for_any_job_count() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 120);
    let first = tmp.path().join("first");
    let mut args = small_run(data.to_str().unwrap(), first.to_str().unwrap());
    args.extend(["--mode", "paper", "--seed", "7"]);
    assert!(anura(&args).status.success());

    let manifest = first.join("manifest.toml");
    let second = tmp.path().join("second");
    let o = anura(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_tree(&first);
    let b = read_tree(&second);
    assert_eq!(a.len(), b.len());
    for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs");
    }
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("seed = 7") && text.contains("split-seed = 8") && text.contains("mode = \"paper\""));
}

#[test]
fn flags_override_config_file_values() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 90);
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, format!("data = {:?}\nk-sigma = 0.5\ncv-folds = 4\n", data.to_str().unwrap())).unwrap();
    let out = tmp.path().join("out");
    let o = anura(&["stats", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--k-sigma", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("removed: 0"));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("k-sigma = 100.0"));
    assert!(manifest.contains("cv-folds = 4"));
}

#[test]
fn stats_reports_cleaning_and_writes_tables_only() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 90);
    let out = tmp.path().join("out");
    let o = anura(&["stats", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--k-sigma", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let field = |name: &str| -> usize {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    assert_eq!(field("input rows:"), 90);
    assert!(field("removed:") > 0);
    assert_eq!(field("removed:") + field("output rows:"), 90);
    assert!(out.join("describe.csv").is_file() && out.join("correlation.csv").is_file());
    assert!(!out.join("report.json").exists() && !out.join("models").exists());

    let describe = fs::read_to_string(out.join("describe.csv")).unwrap();
    assert!(describe.starts_with("column,count,mean,std,min,q1,median,q3,max\nMFCCs_1,"));
}

#[test]
fn stats_on_a_single_row_is_too_few_rows() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 1);
    let o = anura(&["stats", "--data", data.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("need at least 2 rows, got 1"), "{}", stderr(&o));
}

#[test]
fn saved_models_and_transforms_apply_to_new_rows() {
    let tmp = TempDir::new().unwrap();
    let data = write_frogs(tmp.path(), 150);
    let out = tmp.path().join("out");
    assert!(anura(&small_run(data.to_str().unwrap(), out.to_str().unwrap())).status.success());

    let model = out.join("models/stand_lda.json");
    let o = anura(&["predict", "--model", model.to_str().unwrap(), "--input", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let predicted: Vec<String> = stdout(&o).lines().skip(1).map(str::to_owned).collect();
    assert_eq!(predicted.len(), 150);
    let hits = predicted.iter().enumerate().filter(|(i, p)| *p == SPECIES[i % 3]).count();
    assert!(hits >= 140, "{hits}/150");

    // Feature-only input works too.
    let text = fs::read_to_string(&data).unwrap();
    let unlabeled: String = text
        .lines()
        .map(|l| l.split(',').take(8).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let bare = tmp.path().join("bare.csv");
    fs::write(&bare, unlabeled).unwrap();
    let transform = out.join("transforms/pca.json");
    let target = tmp.path().join("pca.csv");
    let o = anura(&[
        "transform",
        "--transform",
        transform.to_str().unwrap(),
        "--input",
        bare.to_str().unwrap(),
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let z = fs::read_to_string(&target).unwrap();
    assert_eq!(z.lines().next(), Some("PC1,PC2,PC3,PC4"));
    assert_eq!(z.lines().count(), 151);

    let o = anura(&["predict", "--model", transform.to_str().unwrap(), "--input", bare.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kind"), "{}", stderr(&o));
}
