use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acsim")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = acsim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn corpus_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["corpus", "--videos", "100", "--frames", "200", "--gt-frac", "0.05", "--seed", "7"];
    ok(&[&args[..], &["--out-dir", p(&dir.path().join("a"))]].concat());
    ok(&[&args[..], &["--out-dir", p(&dir.path().join("b"))]].concat());
    let a = fs::read(dir.path().join("a/corpus.txt")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/corpus.txt")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# acsim corpus v1\n"));
    assert_eq!(text.lines().count(), 102);
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["job"]["command"], "corpus");
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn invalid_arguments_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    for args in [
        vec!["corpus", "--gt-frac", "1.5", "--out-dir", out],
        vec!["sim", "--epochs", "0", "--out-dir", out],
        vec!["sim", "--views", "3", "--out-dir", out],
        vec!["sim", "--set", "bogus=1", "--out-dir", out],
        vec!["sim", "--sampler", "sparse", "--out-dir", out],
        vec!["lr-dump", "--alpha", "0", "--out-dir", out],
        vec!["--workers", "0", "sim", "--out-dir", out],
        vec!["rerun", "--manifest", "/nonexistent/manifest.json"],
    ] {
        let res = acsim(&args);
        let code = res.status.code();
        // a missing manifest is an I/O failure
        let want = if args[0] == "rerun" { 3 } else { 2 };
        assert_eq!(code, Some(want), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = acsim(&["corpus", "--videos", "3", "--out-dir", p(&blocker.join("sub"))]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn noisy_corpus_summary() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sim", "--acs", "off", "--gt-frac", "0.02", "--epochs", "20", "--out-dir", p(dir.path())]);
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["noise_rate"].as_f64().unwrap() > 0.9);
    assert!(summary["overlap_gain"].is_null());
    assert!(!dir.path().join("baseline_report.csv").exists());
}

#[test]
fn paired_run_reports_overlap_gain() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sim", "--acs", "on", "--out-dir", p(dir.path())]);
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["overlap_gain"].as_f64().unwrap() >= 2.0, "{summary}");
    assert_eq!(summary["sim"]["epoch0_acs_draws"], 0);
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 202);
}

fn lr_rows(path: &Path) -> Vec<(usize, String, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn lr_dump_trace() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["lr-dump", "--total-iters", "2000", "--out-dir", p(&dir.path().join("a"))]);
    let rows = lr_rows(&dir.path().join("a/lr.csv"));
    assert_eq!(rows.len(), 2000);
    assert_eq!((rows[0].1.as_str(), rows[0].2), ("head", 1e-2));
    assert_eq!(rows.last().unwrap().2, 1e-5);

    ok(&["lr-dump", "--total-iters", "2000", "--alpha", "1", "--head-frac", "0", "--warmup-frac", "0", "--out-dir", p(&dir.path().join("b"))]);
    let rows = lr_rows(&dir.path().join("b/lr.csv"));
    let t_max = (rows.len() - 1) as f64;
    for (t, stage, lr) in rows {
        assert_eq!(stage, "main");
        let half = (PI * t as f64 / (2.0 * t_max)).sin();
        let want = 1e-3 - (1e-3 - 1e-5) * half * half;
        assert!(((lr - want) / want).abs() <= 1e-12, "t {t}: {lr} vs {want}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# small run\nvideos = 40\nepochs = 5\nacs = off\n").unwrap();
    let run = |extra: &[&str], name: &str| {
        let out = dir.path().join(name);
        ok(&[&["sim", "--config", p(&conf), "--out-dir", p(&out)], extra].concat());
        fs::read_to_string(out.join("report.csv")).unwrap().lines().count() - 2
    };
    assert_eq!(run(&[], "file"), 5);
    assert_eq!(run(&["--epochs", "7"], "flag"), 7);
    assert_eq!(run(&["--epochs", "7", "--set", "epochs=3"], "set"), 3);
    let manifest = json(&dir.path().join("flag/manifest.json"));
    let text = manifest["config_text"].as_str().unwrap();
    assert!(text.contains("epochs = 7\n") && text.contains("videos = 40\n") && text.contains("p-bg = 0.1\n"));
}

#[test]
fn resume_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (full, part, rest) = (dir.path().join("full"), dir.path().join("part"), dir.path().join("rest"));
    let common = ["sim", "--videos", "60", "--epochs", "12", "--seed", "2", "--baseline", "off"];
    ok(&[&common[..], &["--out-dir", p(&full)]].concat());
    ok(&[&common[..], &["--checkpoint-every", "5", "--out-dir", p(&part)]].concat());
    // checkpointing does not perturb the run
    assert_eq!(fs::read(full.join("report.csv")).unwrap(), fs::read(part.join("report.csv")).unwrap());
    let ckpt = part.join("checkpoint.json");
    assert_eq!(json(&ckpt)["rows"].as_array().unwrap().len(), 12);

    let res = acsim(&["sim", "--resume", p(&ckpt), "--epochs", "3", "--out-dir", p(&rest)]);
    assert_eq!(res.status.code(), Some(2));
    ok(&["sim", "--resume", p(&ckpt), "--baseline", "off", "--out-dir", p(&rest)]);
    assert_eq!(fs::read(full.join("report.csv")).unwrap(), fs::read(rest.join("report.csv")).unwrap());
    assert_eq!(json(&full.join("summary.json")), json(&rest.join("summary.json")));
}

#[test]
fn sim_reads_a_corpus_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["corpus", "--videos", "30", "--seed", "3", "--out-dir", p(dir.path())]);
    let corpus = dir.path().join("corpus.txt");
    ok(&["sim", "--corpus", p(&corpus), "--epochs", "4", "--seed", "3", "--out-dir", p(&dir.path().join("from-file"))]);
    ok(&["sim", "--videos", "30", "--epochs", "4", "--seed", "3", "--out-dir", p(&dir.path().join("generated"))]);
    let read = |d: &str| fs::read(dir.path().join(d).join("report.csv")).unwrap();
    assert_eq!(read("from-file"), read("generated"));
}

#[test]
fn ablate_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    fs::write(&grid, "videos = 50\nepochs = 10\n\n[w/o ACS]\nacs = off\n\n[w/ ACS]\nacs = on\n").unwrap();
    ok(&["ablate", "--grid", p(&grid), "--seeds", "2", "--out-dir", p(dir.path())]);
    let table = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "# acsim ablation v1");
    assert!(lines[2].starts_with("w/o ACS,off,continuous,2,") && lines[3].starts_with("w/ ACS,on,"));
}
