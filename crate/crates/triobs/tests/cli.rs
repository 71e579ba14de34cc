//! End-to-end checks of the command-line binary: exit-code contract
//! (0 success, 1 usage/config, 2 numerical failure), deterministic
//! seeded output, lossless CSV, and the design/verify round trip.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triobs"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal kill")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 stderr")
}

/// Per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("triobs-cli-{}", std::process::id())).join(name);
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

/// Floats are written with 17 significant digits; parsing a field and
/// re-printing it must give back the exact byte string.
fn assert_lossless_float(field: &str, context: &str) {
    if field == "nan" {
        return;
    }
    let x: f64 = field.parse().unwrap_or_else(|_| panic!("unparsable float {field:?} in {context}"));
    assert_eq!(format!("{x:.16e}"), field, "lossy float field in {context}");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&["run", "--help"])), 0);
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["definitely-not-a-command"])), 1);

    // No scenario source: the error names the available presets.
    let o = cli(&["run"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("table3"), "error should list presets: {}", stderr(&o));

    assert_eq!(code(&cli(&["run", "--preset", "nope"])), 1);
    assert_eq!(code(&cli(&["run", "--preset", "table3", "--config", "x.toml"])), 1);
    assert_eq!(code(&cli(&["sweep", "--preset", "table3", "--L", "abc"])), 1);
    assert_eq!(code(&cli(&["verify", "--params", "/nonexistent/params.toml"])), 1);

    // Degree below the validity threshold for the decrease construction.
    let o = cli(&["design-gains", "--m", "4", "--d0", "-1", "--dV", "6"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("2m - 1"), "wrong rejection message: {}", stderr(&o));
}

#[test]
fn run_writes_lossless_trajectory_csv() {
    let out = scratch("run").join("traj.csv");
    let o = cli(&[
        "run", "--preset", "table3", "--L", "2", "--dt", "1e-3", "--T", "0.5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("final_errors="), "missing summary line: {text}");
    assert!(text.contains("peaking="), "missing peaking: {text}");

    let csv = fs::read_to_string(&out).expect("trajectory file written");
    let mut lines = csv.lines();
    let header = lines.next().expect("header");
    assert!(header.starts_with("t,z1,z2,z3,z4"), "unexpected header: {header}");
    let cols = header.split(',').count();
    let mut rows = 0;
    for line in lines {
        rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), cols, "ragged row: {line}");
        for f in fields {
            assert_lossless_float(f, "trajectory csv");
        }
    }
    assert!(rows >= 5, "expected several recorded rows, got {rows}");
}

#[test]
fn sweep_stdout_is_deterministic_and_lossless() {
    let args =
        ["sweep", "--preset", "table4", "--dt", "1e-3", "--T", "0.5", "--L", "2.5,3"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(code(&a), 0, "stderr: {}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b), "same seed must give identical bytes");

    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "L,e_z1,e_z2,e_z3,e_z4,peaking,converged,conv_time,seed"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 9);
        for field in [f[0], f[1], f[2], f[3], f[4], f[5], f[7]] {
            assert_lossless_float(field, "sweep csv");
        }
        assert!(f[6] == "true" || f[6] == "false");
        f[8].parse::<u64>().expect("seed column");
    }
}

#[test]
fn seed_and_noise_flags_control_reproducibility() {
    let base = ["run", "--preset", "table4", "--dt", "1e-3", "--T", "0.5"];
    let a = cli(&base);
    let b = cli(&base);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));

    let mut quiet_args = base.to_vec();
    quiet_args.push("--no-noise");
    let quiet = cli(&quiet_args);
    assert_eq!(code(&quiet), 0);
    assert_ne!(stdout(&a), stdout(&quiet), "dropping noise must change the run");
    let quiet2 = cli(&quiet_args);
    assert_eq!(stdout(&quiet), stdout(&quiet2));

    let mut reseeded_args = base.to_vec();
    reseeded_args.extend_from_slice(&["--seed", "9"]);
    let reseeded = cli(&reseeded_args);
    assert_eq!(code(&reseeded), 0);
    assert_ne!(stdout(&a), stdout(&reseeded), "a fresh seed must change the noise");
}

#[test]
fn design_verify_round_trip() {
    let dir = scratch("design");
    let gains = dir.join("gains.toml");
    let o = cli(&[
        "design-gains", "--m", "2", "--d0", "-1", "--samples", "5000",
        "--out", gains.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("certified rate lambda"), "missing certificate: {text}");
    assert!(text.contains("disturbance margins"), "missing margins: {text}");

    let v = cli(&["verify", "--params", gains.to_str().unwrap(), "--samples", "5000"]);
    assert_eq!(code(&v), 0, "stderr: {}", stderr(&v));
    let vt = stdout(&v);
    assert!(vt.contains("decrease: PASS"), "{vt}");
    assert!(vt.contains("robustness: PASS"), "{vt}");
}

#[test]
fn verify_rejects_zeroed_gains_with_witness() {
    let dir = scratch("zeroed");
    let path = dir.join("zeroed.toml");
    fs::write(
        &path,
        "m = 2\nd0 = -1.0\nd_v = 4.0\nk = [0.0, 0.0]\nsamples = 2000\nseed = 42\n",
    )
    .unwrap();
    let o = cli(&["verify", "--params", path.to_str().unwrap(), "--samples", "2000"]);
    assert_eq!(code(&o), 2, "stdout: {} stderr: {}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("decrease: FAIL"), "{}", stdout(&o));
    assert!(stdout(&o).contains("witness"), "{}", stdout(&o));

    let bad = dir.join("bad.toml");
    fs::write(&bad, "m = 2\nnot even toml [").unwrap();
    assert_eq!(code(&cli(&["verify", "--params", bad.to_str().unwrap()])), 1);

    let unknown = dir.join("unknown.toml");
    fs::write(
        &unknown,
        "m = 2\nd0 = -1.0\nd_v = 4.0\nk = [1.0, 1.0]\nsamples = 10\nseed = 1\nbogus = 3\n",
    )
    .unwrap();
    assert_eq!(code(&cli(&["verify", "--params", unknown.to_str().unwrap()])), 1);
}

/// Hand-tuned gains from the sliding-mode literature, checked decrease-only
/// (no stored level gains or margins). The report may pass or fail under
/// this Lyapunov family; the command must emit it either way.
#[test]
fn verify_handles_literature_gains_without_crashing() {
    let dir = scratch("literature");
    let path = dir.join("hand.toml");
    fs::write(&path, "m = 4\nd0 = -1.0\nd_v = 8.0\nk = [5.0, 8.77, 4.44, 1.1]\n").unwrap();
    let o = cli(&["verify", "--params", path.to_str().unwrap(), "--samples", "2000"]);
    let c = code(&o);
    assert!(c == 0 || c == 2, "must report, not crash: exit {c}, stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("decrease:"), "{}", stdout(&o));
}

#[test]
fn check_holder_reports_example_plant_admissibility() {
    let o = cli(&["check-holder", "--preset", "example-plant", "--samples", "32"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("line 3:"), "{text}");
    assert!(text.contains("line 4: unknown"), "{text}");
    assert!(
        text.contains("high-gain observer: admissible"),
        "line-3 nonlinearity should clear the high-gain order threshold: {text}"
    );
    assert!(
        text.contains("order requirements NOT met"),
        "line-3 order sits below the finite-time requirement: {text}"
    );
}

#[test]
fn chain_config_runs_and_checks_clean() {
    let dir = scratch("chain");
    let cfg = dir.join("chain.toml");
    fs::write(
        &cfg,
        "[system]\nkind = \"chain\"\ndim = 3\nz0 = [0.5, -0.2, 1.0]\n\n\
         [scenario]\nt_final = 0.5\ndt = 1e-3\n",
    )
    .unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("plant run complete"), "{}", stdout(&o));

    let h = cli(&["check-holder", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&h), 0, "stderr: {}", stderr(&h));
    assert!(stdout(&h).contains("identically zero"), "{}", stdout(&h));
}
