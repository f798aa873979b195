//! Process-level tests of the `sldg` binary: flag parsing, config-file and
//! environment precedence, output determinism, and the documented table
//! schemas, all through real argv/stdout/stderr.

use std::path::Path;
use std::process::{Command, Output};

fn sldg() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sldg"));
    // Tests control the variable explicitly; never inherit it.
    cmd.env_remove("SLDG_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    sldg().args(args).output().expect("spawning sldg")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

#[test]
fn malformed_flag_exits_nonzero_with_usage() {
    let out = run(&["accuracy", "--definitely-not-a-flag"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "stderr should carry usage: {err}");

    let out = run(&["no-such-subcommand"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_values_exit_nonzero() {
    for args in [
        &["accuracy", "--ic", "nonsense"][..],
        &["accuracy", "--order", "0"],
        &["accuracy", "--format", "xml"],
        &["accuracy", "--kernel", "turbo"],
        &["accuracy", "--threads", "zero"],
        &["bench", "--repeats", "0"],
        &["vlasov", "--dt", "-1.0"],
    ] {
        let out = run(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty(), "{args:?} should explain itself");
    }
}

#[test]
fn accuracy_csv_schema_and_reference_row() {
    let out = run(&[
        "accuracy", "--order", "3", "--cells", "32", "--steps", "25",
    ]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "order,n_double,error,error_mass");
    assert_eq!(lines.len(), 1 + 4, "one row per n_double in {{3,2,1,0}}");
    // First data row is the all-double reference: error must be exactly 0.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "3");
    assert_eq!(first[1], "3");
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.0);
    // Every row parses as (usize, usize, f64, f64).
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        cols[0].parse::<usize>().unwrap();
        cols[1].parse::<usize>().unwrap();
        assert!(cols[2].parse::<f64>().unwrap().is_finite());
        assert!(cols[3].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "accuracy", "--order", "3", "--cells", "64", "--steps", "40",
        "--ic", "oscillatory", "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(stdout(&a), stdout(&b));

    // An explicit thread count must not change a single output byte.
    let c = run(&[
        "accuracy", "--order", "3", "--cells", "64", "--steps", "40",
        "--ic", "oscillatory", "--seed", "7", "--threads", "2",
    ]);
    assert_eq!(stdout(&a), stdout(&c));
}

#[test]
fn accuracy_json_is_parseable() {
    let out = run(&[
        "accuracy", "--order", "2", "--cells", "32", "--steps", "10",
        "--format", "json",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["n_double"], 2);
    assert_eq!(rows[0]["error"], 0.0);
}

#[test]
fn thread_environment_variable_is_the_flag_fallback() {
    let base = [
        "accuracy", "--order", "2", "--cells", "32", "--steps", "10",
    ];
    // A valid variable is accepted on its own.
    let out = sldg().args(base).env("SLDG_THREADS", "2").output().unwrap();
    assert!(out.status.success());
    // A malformed variable fails the run...
    let out = sldg().args(base).env("SLDG_THREADS", "junk").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("SLDG_THREADS"));
    // ...unless --threads overrides it, because the flag wins.
    let out = sldg()
        .args(base)
        .args(["--threads", "1"])
        .env("SLDG_THREADS", "junk")
        .output()
        .unwrap();
    assert!(out.status.success());
}

fn snapshot_cells(path: &Path) -> u64 {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[..5], b"SLDG1");
    u64::from_le_bytes(bytes[5..13].try_into().unwrap())
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "# demonstrator settings\norder = 3\ncells = 32\ndouble-coeffs = 1\nsteps = 4\n",
    )
    .unwrap();

    // File alone decides the grid size...
    let snap_a = dir.path().join("a.sldg");
    let out = run(&[
        "advect", "--config", cfg_path.to_str().unwrap(),
        "--output", snap_a.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(snapshot_cells(&snap_a), 32);

    // ...and an explicit flag overrides the file's entry.
    let snap_b = dir.path().join("b.sldg");
    let out = run(&[
        "advect", "--config", cfg_path.to_str().unwrap(),
        "--cells", "16", "--output", snap_b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(snapshot_cells(&snap_b), 16);

    // Unknown keys are rejected loudly.
    std::fs::write(&cfg_path, "cellz = 32\n").unwrap();
    let out = run(&["advect", "--config", cfg_path.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn advect_zero_shift_and_full_rotation_reproduce_the_projection() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| {
        let p = dir.path().join(name);
        p.to_str().unwrap().to_owned()
    };
    let common = ["advect", "--order", "4", "--double-coeffs", "2", "--cells", "16"];

    let initial = path("initial.sldg");
    let out = run(&[&common[..], &["--steps", "0", "--output", &initial]].concat());
    assert!(stdout(&out).contains("mass="));

    // ν = 0 leaves every byte in place.
    let frozen = path("frozen.sldg");
    run(&[&common[..], &["--nu", "0.0", "--steps", "9", "--output", &frozen]].concat());
    assert_eq!(std::fs::read(&initial).unwrap(), std::fs::read(&frozen).unwrap());

    // 4 cells/step × 8 steps = 32 ≡ 0 (mod 16): integer full rotations.
    let rotated = path("rotated.sldg");
    run(&[&common[..], &["--nu", "4.0", "--steps", "8", "--output", &rotated]].concat());
    assert_eq!(std::fs::read(&initial).unwrap(), std::fs::read(&rotated).unwrap());
}

#[test]
fn advect_defaults_to_snapshot_file_in_cwd() {
    let dir = tempfile::tempdir().unwrap();
    let out = sldg()
        .args(["advect", "--cells", "8", "--steps", "1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("snapshot.sldg").exists());
}

#[test]
fn vlasov_zero_steps_emits_header_and_one_row() {
    let out = run(&[
        "vlasov", "--cells", "8", "--order", "2", "--steps", "0",
    ]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "step,time,mass,electric_energy,l2_norm");
    assert!(lines[1].starts_with("0,0,"));
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols.len(), 5);
    assert!(cols[2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn vlasov_rows_march_in_time() {
    let out = run(&[
        "vlasov", "--cells", "8", "--order", "2", "--steps", "3", "--dt", "0.05",
    ]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    for (s, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<usize>().unwrap(), s);
        let t = cols[1].parse::<f64>().unwrap();
        assert!((t - s as f64 * 0.05).abs() < 1e-15);
    }
}

#[test]
fn bench_small_json_run_parses_with_two_rows() {
    let out = run(&[
        "bench", "--order", "2", "--double-coeffs", "1", "--cells", "4096",
        "--steps", "2", "--repeats", "1", "--warmup", "0", "--format", "json",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2, "baseline row then mixed row");
    assert_eq!(rows[0]["n_double"], 2);
    assert_eq!(rows[0]["speedup"], 1.0);
    assert_eq!(rows[1]["n_double"], 1);
    assert_eq!(rows[1]["memorydown"], 4.0 / 3.0);
}

#[test]
fn bench_streaming_example_prints_documented_table() {
    // The documented large-run invocation, shortened to a single timed
    // repeat so the test stays minutes-free on small machines.
    let out = run(&[
        "bench", "--order", "4", "--double-coeffs", "1",
        "--cells", "16777216", "--steps", "50",
        "--repeats", "1", "--warmup", "0",
    ]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "order,n_double,bandwidth_gbs,speedup,memorydown");
    assert_eq!(lines.len(), 3, "baseline and target rows");

    let base: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(base[0], "4");
    assert_eq!(base[1], "4");
    assert!(base[2].parse::<f64>().unwrap() > 0.0);
    assert_eq!(base[3].parse::<f64>().unwrap(), 1.0);
    assert_eq!(base[4].parse::<f64>().unwrap(), 1.0);

    let target: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(target[0], "4");
    assert_eq!(target[1], "1");
    assert!(target[2].parse::<f64>().unwrap() > 0.0);
    assert!(target[3].parse::<f64>().unwrap() > 0.0);
    assert_eq!(target[4].parse::<f64>().unwrap(), 1.6);
}

#[test]
fn output_flag_writes_the_table_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let out = run(&[
        "accuracy", "--order", "2", "--cells", "32", "--steps", "5",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "table goes to the file, not stdout");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("order,n_double,error,error_mass\n"));
}
