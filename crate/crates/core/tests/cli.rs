use std::path::{Path, PathBuf};
use std::process::Command;

use islandgp::apps::{feed, localisation};
use islandgp::harness::{read_csv, ConfigFile, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_islandgp"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("islandgp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_run(out: &Path) -> std::process::Output {
    bin()
        .args(["run", "--app", "feed", "--islands", "2", "--capacity", "6", "--generations", "6"])
        .args(["--iterations", "3", "--interval", "2", "--rate", "0.5", "--seed", "9", "--threads", "2"])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn rerun_writes_identical_csv() {
    let (a, b) = (scratch("a.csv"), scratch("b.csv"));
    assert!(small_run(&a).status.success());
    assert!(small_run(&b).status.success());
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    let rows = read_csv(x.as_slice()).unwrap();
    assert_eq!(rows.len(), 3 * 6 * 2);
}

#[test]
fn compare_prints_generations() {
    let a = scratch("cmp.csv");
    assert!(small_run(&a).status.success());
    let out = bin().arg("compare").arg(&a).arg(&a).args(["--threshold", "0.1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("threshold\t0.1"));
    assert!(text.contains("improvement\t"));
}

#[test]
fn bad_input_exits_nonzero() {
    let bad = scratch("bad.toml");
    std::fs::write(&bad, "islands = 0\n").unwrap();
    let out = bin().arg("run").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    std::fs::write(&bad, "colour = \"red\"\n").unwrap();
    assert_eq!(bin().arg("run").arg("--config").arg(&bad).output().unwrap().status.code(), Some(2));

    let out = bin().args(["run", "--rate", "1.5", "--iterations", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["compare", "/nonexistent/a.csv", "/nonexistent/b.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_load() {
    let tech = feed::FeedConfig::load(&configs().join("tech_reader.toml")).unwrap();
    let catalog = feed::FeedCatalog::default();
    assert_eq!(tech.catalog(), catalog);
    assert_eq!(tech.user(), feed::UserModel::tech_reader(&catalog));
    assert_eq!(
        localisation::World::load(&configs().join("world.toml")).unwrap(),
        localisation::World::default()
    );
    for name in ["feed_standalone.toml", "feed_islands.toml", "localisation_random.toml"] {
        let mut cfg = ExperimentConfig::default();
        ConfigFile::load(&configs().join(name)).unwrap().apply(&mut cfg).unwrap();
        cfg.validate().unwrap();
    }
}
