use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BENCH: &str = r#"
[instance]
p = 4
seed = 1

[plan]
p = 4
n_mpiruns = 3
msizes = [8, 1024]
funcs = ["bcast", "allreduce"]
nrep = 20
master_seed = 9

[plan.scheme]
scheme = "MS4"
sync = { kind = "window", method = "HCA", win_size = 1e-3 }

[plan.scheme.sync_config]
n_fitpts = 20
n_exchanges = 5

[report]
ntrial = 3
"#;

const SYNC: &str = r#"
[instance]
p = 4
seed = 2

[sync_eval]
grid = [[20, 5], [100, 30]]
seeds = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_benchlab"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("BENCHLAB_SEED").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    (header, rdr.records().collect::<Result<_, _>>().unwrap())
}

#[test]
fn bench_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bench.toml", BENCH);
    let out = dir.path().join("out");
    let o = run(&["bench", "--config", s(&cfg), "--out", s(&out), "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    let (h, raw) = csv_rows(&out.join("raw.csv"));
    assert_eq!(h[0], "mpirun_id");
    assert_eq!(raw.len(), 3 * 2 * 2 * 20);
    assert_eq!(csv_rows(&out.join("summary.csv")).1.len(), 3 * 2 * 2);
    assert_eq!(csv_rows(&out.join("windows.csv")).1.len(), 3 * 2 * 2);
}

#[test]
fn bench_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bench.toml", BENCH);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["bench", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(run(&["bench", "--config", s(&cfg), "--out", s(&b), "--jobs", "1"]).status.success());
    for f in ["raw.csv", "summary.csv", "windows.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    assert!(run(&["bench", "--config", s(&cfg), "--out", s(&c), "--seed", "77"]).status.success());
    assert_ne!(fs::read(a.join("raw.csv")).unwrap(), fs::read(c.join("raw.csv")).unwrap());
}

#[test]
fn compare_against_itself_stars_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bench.toml", BENCH);
    let out = dir.path().join("out");
    let o = run(&["compare", "--config", s(&cfg), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&out.join("comparison.csv"));
    let stars = h.iter().position(|c| c == "stars").unwrap();
    assert_eq!(rows.len(), 2 * 2);
    assert!(rows.iter().all(|r| r[stars].is_empty()));
    assert!(out.join("summary_a.csv").exists() && out.join("summary_b.csv").exists());
}

#[test]
fn compare_needs_two_matching_plans() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bench.toml", BENCH);
    let o = run(&["compare", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let other = write(dir.path(), "other.toml", &BENCH.replace("nrep = 20", "nrep = 21"));
    let o = run(&["compare", "--config", s(&cfg), "--config", s(&other), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different plans"));
}

#[test]
fn repro_writes_both_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bench.toml", BENCH);
    let out = dir.path().join("out");
    let o = run(&["repro", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("repro.csv")).1.len(), 2 * 2 * 3);
    assert_eq!(csv_rows(&out.join("repro_baseline.csv")).1.len(), 2 * 2 * 3);
}

#[test]
fn sync_eval_covers_the_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sync.toml", SYNC);
    let out = dir.path().join("out");
    let o = run(&["sync-eval", "--config", s(&cfg), "--out", s(&out), "--methods", "HCA,skampi"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&out.join("sync_pareto.csv"));
    assert_eq!(rows.len(), 2 * 2);
    let (f, x) = (h.iter().position(|c| c == "n_fitpts").unwrap(), h.iter().position(|c| c == "n_exchanges").unwrap());
    assert!(rows.iter().any(|r| &r[f] == "100" && &r[x] == "30"));
    assert!(out.join("sync_offsets.csv").exists());
}

#[test]
fn sync_eval_rejects_unknown_methods() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sync.toml", SYNC);
    let o = run(&["sync-eval", "--config", s(&cfg), "--out", s(dir.path()), "--methods", "ntp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HCA2"));
    let empty = write(dir.path(), "empty.toml", &format!("{SYNC}methods = []\n"));
    let o = run(&["sync-eval", "--config", s(&empty), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["bench", "--config", s(&missing)]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "[instance]\np = 'four'\n");
    assert_eq!(run(&["bench", "--config", s(&bad)]).status.code(), Some(2));
    let no_plan = write(dir.path(), "sync.toml", SYNC);
    let o = run(&["bench", "--config", s(&no_plan), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let unknown = write(dir.path(), "u.toml", &BENCH.replace("\"allreduce\"", "\"scan\""));
    assert_eq!(run(&["bench", "--config", s(&unknown), "--out", s(dir.path())]).status.code(), Some(2));
}

#[test]
fn empty_samples_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let tiny = BENCH.replace("master_seed = 9", "master_seed = 9\nauto_window = 1e-9").replace("win_size = 1e-3", "win_size = 1e-9");
    let cfg = write(dir.path(), "tiny.toml", &tiny);
    let o = run(&["bench", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("raw.csv").exists());
}
