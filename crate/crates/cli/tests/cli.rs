use std::path::PathBuf;
use std::process::{Command, Output};

fn etdfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etdfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("etdfem-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn alpha_outside_range_is_a_config_error() {
    let out = etdfem(&["solve", "--alpha", "2.5"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = scratch("badkey");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "alpha = [1.6]\nwidth = 3\n").unwrap();
    let out = etdfem(&["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn solve_at_time_zero_returns_the_initial_data() {
    let dir = scratch("t0");
    let out = etdfem(&[
        "solve", "--example", "1", "--alpha", "1.6", "--n", "8", "--tau", "1/8", "--t-end", "0",
        "--scheme", "etdrdp", "--out", dir.to_str().unwrap(), "--cache-dir", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("solution_ex1_a1.6_n8_etdrdp.csv")).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let err: f64 = r[3].parse().unwrap();
        assert!(err <= 1e-15, "{r:?}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = scratch("merge");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "example = 1\nalpha = [1.4]\nn = [8]\ntau = [0.125]\nscheme = \"cn\"\nout = \"{}\"\ncache-dir = \"{}\"\n",
            dir.display(),
            dir.display()
        ),
    )
    .unwrap();
    let out = etdfem(&["--config", cfg.to_str().unwrap(), "solve", "--alpha", "1.8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("solution_ex1_a1.8_n8_cn.csv").exists());
}

#[test]
fn convergence_csv_is_deterministic_apart_from_timing() {
    let run = |name: &str| {
        let dir = scratch(name);
        let out = etdfem(&[
            "converge", "--example", "2", "--alpha", "1.6", "--n", "4,8", "--out", dir.to_str().unwrap(),
            "--cache-dir", dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.join("convergence_2_1.6.csv")).unwrap();
        // drop wall_time_s
        data_rows(&text)
            .into_iter()
            .map(|mut r| {
                r.remove(6);
                r
            })
            .collect::<Vec<_>>()
    };
    let a = run("det-a");
    assert_eq!(a.len(), 4);
    assert_eq!(a, run("det-b"));
}

#[test]
fn validate_passes() {
    let out = etdfem(&["validate"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
}
