//! End-to-end tests of the `pcfso` binary: exit codes, file outputs,
//! determinism of the CSV, and the validate negative control.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcfso"))
}

struct Scratch {
    dir: PathBuf,
}

impl Scratch {
    fn new() -> Self {
        static COUNTER: AtomicU32 = AtomicU32::new(0);
        let dir = std::env::temp_dir().join(format!(
            "pcfso-cli-test-{}-{}",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_SWEEP: &str = "\
model = lognormal
si = 0.5
n_b = 1.0
l_c = 4096
n_s = 10, 40
receivers = genie, trellis:4
min_errors = 0
max_bits = 131072
unit_bits = 32768
seed = 11
shards = 2
";

#[test]
fn sweep_writes_csv_and_log() {
    let scratch = Scratch::new();
    let config = scratch.write("run.conf", SMALL_SWEEP);
    let out_csv = scratch.path("result.csv");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));

    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "receiver,param,n_s,n_b,snr_db,bits,errors,ber,ci95,mean_d,forced_merges"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4, "2 receivers x 2 grid points");
    assert!(rows[0].starts_with("genie,,10,"));
    assert!(rows[2].starts_with("trellis,4,10,"));

    let log = std::fs::read_to_string(scratch.path("result.log")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.contains("seed=11"));
    assert!(log.contains("d_hist="));
}

#[test]
fn sweep_is_byte_deterministic() {
    let scratch = Scratch::new();
    let config = scratch.write("run.conf", SMALL_SWEEP);
    let mut csvs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out_csv = scratch.path(name);
        let output = bin()
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_csv)
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0));
        csvs.push(std::fs::read(&out_csv).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "same seed must give identical bytes");

    // Overriding the seed changes the outcome.
    let out_csv = scratch.path("c.csv");
    let output = bin()
        .args(["sweep", "--seed", "999", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert_ne!(csvs[0], std::fs::read(&out_csv).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let scratch = Scratch::new();
    // Missing config flag.
    let output = bin().arg("sweep").output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    // Unreadable config path.
    let output = bin()
        .args(["sweep", "--config"])
        .arg(scratch.path("missing.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // Bad value: diagnostic names the key and line.
    let config = scratch.write("bad.conf", "model = lognormal\nsi = -1\n");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("`si`"), "diagnostic must name the key: {err}");
    assert!(err.contains("line 2"), "diagnostic must give the line: {err}");

    // Unknown key.
    let config = scratch.write("unknown.conf", "model = constant\nwat = 1\n");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("`wat`"));
}

#[test]
fn unwritable_output_exits_1() {
    let scratch = Scratch::new();
    let config = scratch.write("run.conf", SMALL_SWEEP);
    let out_csv = scratch.path("no-such-dir").join("result.csv");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("cannot write"));
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let output = bin().args(["validate", "--quick"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let table = stdout(&output);
    assert!(table.contains("msd-equals-exhaustive"));
    assert!(table.contains("PASS"));
    assert!(!table.contains("FAIL"));

    let output = bin()
        .args(["validate", "--quick", "--inject-fault"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let table = stdout(&output);
    assert!(table.contains("FAIL"));
    assert!(stderr(&output).contains("msd-equals-exhaustive"));
}

#[test]
fn genie_bound_emits_semi_analytic_curve() {
    let scratch = Scratch::new();
    let config = scratch.write(
        "gb.conf",
        "model = constant\nh = 1.0\nn_b = 1.0\nn_s = 10\n",
    );
    let out_csv = scratch.path("bound.csv");
    let output = bin()
        .args(["genie-bound", "--quick", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("genie-bound,,10,"), "row: {row}");
    // Constant channel: the value is the exact conditional probability.
    let ber: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((ber - 9.38222e-3).abs() < 1e-7, "ber field: {ber}");
    // bits/errors are inapplicable for the analytic curve.
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[5], "");
    assert_eq!(fields[6], "");
}

#[test]
fn fading_stats_reports_moments() {
    let scratch = Scratch::new();
    let config = scratch.write("fs.conf", "model = lognormal\nsi = 0.5\n");
    let output = bin()
        .args(["fading-stats", "--quick", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("sample mean"));
    assert!(text.contains("analytic scintillation index: 0.5000"));
}
