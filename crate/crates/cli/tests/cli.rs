use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_nvelectro");

fn nvelectro(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("NVELECTRO_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

/// Runs `cmd` with `config` into a fresh directory; panics unless it exits 0.
fn run_ok(cmd: &str, config: &str, extra: &[&str]) -> TempDir {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), config);
    let out = dir.path().join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = nvelectro(&args);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    dir
}

fn read(dir: &TempDir, file: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(file)).unwrap()
}

fn tsv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn sidecar_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

const SMALL_FIELD: &str = "[solver]\nspacing = 0.05\n[scan]\nx_start = -2.0\nx_stop = 2.0\nx_step = 0.05\nn_avg = 10000\n";

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[scan]\nx_stepp = 0.1\n");
    let o = nvelectro(&["ac-scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x_stepp"));
}

#[test]
fn invalid_value_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[readout]\ncontrast = 1.5\n");
    let o = nvelectro(&["sensitivity", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("readout.contrast"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[scan\nx_step = \n");
    let o = nvelectro(&["odmr", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_iteration_cap_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[solver]\nspacing = 0.1\nmax_iterations = 2\n");
    let o = nvelectro(&["solve-field", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_threads_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = nvelectro(&["sensitivity", "--threads", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn odmr_zero_field_single_dip_at_d() {
    let dir = run_ok(
        "odmr",
        "[species]\nmodel = \"electron-only\"\n[environment]\nb = [0.0, 0.0, 0.0]\n",
        &[],
    );
    let side = read(&dir, "odmr.txt");
    assert_eq!(sidecar_value(&side, "dips"), Some("1"));
    let f: f64 = sidecar_value(&side, "dip_0").unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((f - 2870.0).abs() < 0.05, "{f}");
}

#[test]
fn odmr_default_has_two_dips() {
    let dir = run_ok("odmr", "", &[]);
    let side = read(&dir, "odmr.txt");
    assert_eq!(sidecar_value(&side, "dips"), Some("2"));
    assert!(sidecar_value(&side, "engine_version").is_some());
    assert_eq!(sidecar_value(&side, "command"), Some("odmr"));
}

#[test]
fn lockin_sweep_reproduces_high_pass() {
    let dir = run_ok("lockin-sweep", "[lockin]\nfrequencies_khz = [4.0, 35.4, 800.0]\n", &[]);
    let rows = tsv(&read(&dir, "lockin.tsv"));
    let num = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    assert_eq!(rows.len(), 3);
    assert!((num(0, 6) - 83.55).abs() < 0.01);
    assert!((num(1, 4) - 0.5f64.sqrt()).abs() < 1e-6);
    assert!((num(1, 6) - 45.0).abs() < 1e-6);
    assert!((num(2, 4) - 1.0).abs() < 2e-3);
    assert_eq!(rows[0][1], "ramsey-train");
    assert_eq!(rows[2][1], "decoupling");
}

#[test]
fn sensitivity_table() {
    let dir = run_ok("sensitivity", "[sensitivity]\ntrials = 2000\n", &[]);
    let rows = tsv(&read(&dir, "sensitivity.tsv"));
    assert_eq!(rows[0][0], "closed-form");
    let eta: f64 = rows[0][1].parse().unwrap();
    assert!((eta - 0.026).abs() / 0.026 < 0.01);
    let grad: f64 = rows[0][3].parse().unwrap();
    assert!((grad - 2.0).abs() / 2.0 < 0.01);
    assert_eq!(rows[1][0], "monte-carlo");
    let mc: f64 = rows[1][1].parse().unwrap();
    assert!((mc - eta).abs() / eta < 0.15);
}

#[test]
fn null_motion_dc_scan_is_zero_with_warning() {
    let cfg = format!("{SMALL_FIELD}[motion]\namplitude = 0.0\nbeta = 0.0\n");
    let dir = run_ok("dc-scan", &cfg, &[]);
    let bytes = fs::read(dir.path().join("out/dc_scan.bin")).unwrap();
    assert_eq!(bytes.len(), 81 * 8);
    assert!(bytes.chunks_exact(8).all(|c| f64::from_le_bytes(c.try_into().unwrap()) == 0.0));
    assert!(read(&dir, "dc_scan.txt").contains("warning="));
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = format!("{SMALL_FIELD}[readout]\nshot_noise = true\n");
    let a = run_ok("ac-scan", &cfg, &["--threads", "1"]);
    let b = run_ok("ac-scan", &cfg, &["--threads", "6"]);
    assert_eq!(outputs(&a.path().join("out")), outputs(&b.path().join("out")));
}

#[test]
fn seed_flag_changes_noise_only_when_enabled() {
    let noisy = format!("{SMALL_FIELD}[readout]\nshot_noise = true\n");
    let a = run_ok("ac-scan", &noisy, &["--seed", "1"]);
    let b = run_ok("ac-scan", &noisy, &["--seed", "2"]);
    assert_ne!(
        fs::read(a.path().join("out/ac_scan.bin")).unwrap(),
        fs::read(b.path().join("out/ac_scan.bin")).unwrap()
    );
    assert!(read(&b, "ac_scan.txt").contains("seed=2"));
}

#[test]
fn replay_is_bit_exact() {
    for (cmd, stem) in [("ac-scan", "ac_scan"), ("dc-scan", "dc_scan"), ("solve-field", "field"), ("ramsey", "ramsey")] {
        let cfg = format!("{SMALL_FIELD}[readout]\nshot_noise = true\n[run]\nseed = 11\n");
        let first = run_ok(cmd, &cfg, &[]);
        let sidecar = first.path().join("out").join(format!("{stem}.txt"));
        let again = first.path().join("again");
        let o = nvelectro(&["replay", sidecar.to_str().unwrap(), "--out", again.to_str().unwrap(), "--threads", "3"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(outputs(&first.path().join("out")), outputs(&again), "{cmd}");
    }
}

#[test]
fn sidecar_is_accepted_as_config() {
    let first = run_ok("sensitivity", "[sensitivity]\ntrials = 0\namplitude = 0.02\n", &[]);
    let sidecar = first.path().join("out/sensitivity.txt");
    let again = first.path().join("again");
    let o = nvelectro(&["sensitivity", "--config", sidecar.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(first.path().join("out/sensitivity.tsv")).unwrap(),
        fs::read(again.join("sensitivity.tsv")).unwrap()
    );
}

#[test]
fn env_var_sets_output_directory() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(BIN)
        .args(["sensitivity"])
        .env("NVELECTRO_OUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("sensitivity.tsv").exists());
    // --out wins over the environment.
    let flag = dir.path().join("from-flag");
    let o = Command::new(BIN)
        .args(["sensitivity", "--out", flag.to_str().unwrap()])
        .env("NVELECTRO_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag.join("sensitivity.tsv").exists());
}

#[test]
fn golden_ac_scan() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = golden.join("ac_small.toml");
    let o = nvelectro(&["ac-scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = golden.join("ac_small");
    if std::env::var_os("NVELECTRO_BLESS").is_some() {
        fs::create_dir_all(&expected).unwrap();
        for (name, bytes) in outputs(&out) {
            fs::write(expected.join(name), bytes).unwrap();
        }
    }
    assert_eq!(
        outputs(&out),
        outputs(&expected),
        "golden outputs differ; if the change is intended, rerun with NVELECTRO_BLESS=1"
    );
}
