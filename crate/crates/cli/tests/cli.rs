use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ffiredt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffiredt"))
        .args(args)
        .env_remove("FFIREDT_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a 5-per-class 64x64 corpus and returns its manifest.
fn synth(dir: &Path, per_class: &str) -> PathBuf {
    let out = ffiredt(&[
        "synth", "--per-class", per_class, "--width", "64", "--height", "64", "--seed", "3", "--out", p(dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("manifest.csv")
}

fn extract(manifest: &Path, store: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["extract", "--manifest", p(manifest), "--out", p(store)];
    args.extend_from_slice(extra);
    ffiredt(&args)
}

#[test]
fn synth_writes_images_and_manifest() {
    let a = tempfile::tempdir().unwrap();
    let manifest = synth(a.path(), "5");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text.lines().next(), Some("path,label"));
    let pngs = std::fs::read_dir(a.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 10);

    let b = tempfile::tempdir().unwrap();
    synth(b.path(), "5");
    for name in ["fire_00003.png", "not_fire_00004.png", "manifest.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let again = ffiredt(&["synth", "--per-class", "5", "--out", p(a.path())]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn extract_builds_six_stores() {
    let corpus = tempfile::tempdir().unwrap();
    let manifest = synth(corpus.path(), "5");
    let store = tempfile::tempdir().unwrap();
    let out = extract(&manifest, store.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout(&out);
    assert_eq!(summary.lines().count(), 7);
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("10", "0"), "{line}");
    }
    for code in ["cl", "sc", "cs", "ct", "eh", "tb"] {
        assert!(store.path().join(format!("{code}.ffdt")).exists());
    }
    assert!(store.path().join("index.csv").exists());

    let refused = extract(&manifest, store.path(), &[]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--overwrite"));
    assert!(extract(&manifest, store.path(), &["--overwrite"]).status.success());
}

#[test]
fn bad_path_is_skipped() {
    let corpus = tempfile::tempdir().unwrap();
    let manifest = synth(corpus.path(), "5");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text = text.replace("fire_00002.png,fire", "missing.png,fire");
    std::fs::write(&manifest, text).unwrap();
    let store = tempfile::tempdir().unwrap();
    let out = extract(&manifest, store.path(), &["--fems", "cs,cl"]);
    assert!(out.status.success());
    let summary = stdout(&out);
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("9", "1"), "{line}");
    }
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn classify_and_query() {
    let corpus = tempfile::tempdir().unwrap();
    let manifest = synth(corpus.path(), "5");
    let store = tempfile::tempdir().unwrap();
    assert!(extract(&manifest, store.path(), &[]).status.success());
    let s = p(store.path());
    let fire = corpus.path().join("fire_00001.png");
    let not_fire = corpus.path().join("not_fire_00002.png");

    let out = ffiredt(&["classify", "--store", s, "--fem", "cs", "--ef", "eu", "--k", "1", p(&fire), p(&not_fire)]);
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines[0], "path,label,score");
    assert_eq!(lines[1], format!("{},fire,1.000000", fire.display()));
    assert_eq!(lines[2], format!("{},not_fire,0.000000", not_fire.display()));

    let empty = ffiredt(&["classify", "--store", s, "--fem", "cs", "--ef", "eu"]);
    assert_eq!(empty.status.code(), Some(0));
    assert!(empty.stdout.is_empty());

    let bad = ffiredt(&["classify", "--store", s, "--fem", "cs", "--ef", "xx", p(&fire)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("cb,eu,ch,ca,ku,jf"));

    let q = ffiredt(&["query", "--store", s, "--fem", "sc", "--ef", "cb", "--k", "1", p(&fire)]);
    assert!(q.status.success());
    let rows: Vec<String> = stdout(&q).lines().map(String::from).collect();
    assert_eq!(rows[0], "rank,image_id,path,label,distance");
    assert_eq!(rows[1], format!("1,1,{},fire,0", fire.display()));

    let all = ffiredt(&["query", "--store", s, "--fem", "eh", "--ef", "jf", "--k", "50", p(&fire)]);
    let text = stdout(&all);
    let distances: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(distances.len(), 10);
    assert!(distances.windows(2).all(|w| w[0] <= w[1]));

    let missing = ffiredt(&["classify", "--store", p(corpus.path()), "--fem", "cs", "--ef", "eu", p(&fire)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("ffiredt extract"));
}

#[test]
fn evaluate_grid_and_determinism() {
    let corpus = tempfile::tempdir().unwrap();
    let manifest = synth(corpus.path(), "10");
    let store = tempfile::tempdir().unwrap();
    assert!(extract(&manifest, store.path(), &[]).status.success());
    let r1 = tempfile::tempdir().unwrap();
    let r2 = tempfile::tempdir().unwrap();
    for r in [&r1, &r2] {
        let out = ffiredt(&["evaluate", "--store", p(store.path()), "--folds", "5", "--seed", "9", "--out", p(r.path())]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).lines().count(), 7);
        assert!(stdout(&out).contains('*'));
    }
    let grid = std::fs::read_to_string(r1.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 37);
    assert!(!grid.contains(",NA,"));
    for name in ["grid.csv", "pr.csv", "roc.csv", "pca.csv"] {
        assert_eq!(
            std::fs::read(r1.path().join(name)).unwrap(),
            std::fs::read(r2.path().join(name)).unwrap(),
            "{name}"
        );
    }
    for name in ["pr.svg", "roc.svg", "pca_cs.svg"] {
        let svg = std::fs::read_to_string(r1.path().join(name)).unwrap();
        assert!(svg.starts_with("<svg xmlns="));
    }

    let r3 = tempfile::tempdir().unwrap();
    let out = ffiredt(&[
        "evaluate", "--manifest", p(&manifest), "--fems", "cs,sc", "--efs", "cb,eu", "--folds", "5", "--out", p(r3.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(r3.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 5);
}

#[test]
fn bench_modes() {
    let out = ffiredt(&["bench", "--mode", "distance", "--evals", "1000000", "--dim", "256"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("ef,evals,dim,seconds,evals_per_sec,checksum"));

    let corpus = tempfile::tempdir().unwrap();
    let manifest = synth(corpus.path(), "5");
    let out = ffiredt(&["bench", "--mode", "extract", "--manifest", p(&manifest)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 7);

    assert_eq!(ffiredt(&["bench", "--mode", "fast"]).status.code(), Some(1));
    assert_eq!(ffiredt(&["bench", "--mode", "extract"]).status.code(), Some(1));
    assert_eq!(ffiredt(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "cl_grid = banana\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ffiredt"))
        .args(["bench", "--mode", "distance", "--evals", "1000000", "--dim", "4"])
        .env("FFIREDT_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}
