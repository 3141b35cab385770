//! End-to-end CLI tests driving the compiled binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rlb-las"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rlb-las-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const CONFIG: &str = "\
# small smoke experiment
k = 2
n = 2
snr_grid_db = 6, 10
runs = 10
vectors_per_run = 2
detectors = mf, rlb-mf
master_seed = 9
";

#[test]
fn run_emits_csv_and_is_deterministic() {
    let dir = scratch_dir("run");
    let cfg = dir.join("sim.cfg");
    fs::write(&cfg, CONFIG).unwrap();

    let out1 = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(
        out1.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out1.stderr)
    );
    let text = stdout(&out1);
    assert!(text.starts_with(
        "detector,K,N,snr_db,bits_total,bit_errors,ber,avg_flops_per_symbol,avg_restarts,avg_las_iterations\n"
    ));
    assert_eq!(text.lines().count(), 1 + 2 * 2);

    // Same seed, different worker count: byte-identical output.
    let out2 = bin()
        .args(["run", "--workers", "3", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(text, stdout(&out2));

    // Seed override changes the records.
    let out3 = bin()
        .args(["run", "--seed", "10", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_ne!(text, stdout(&out3));

    // File outputs.
    let csv = dir.join("out.csv");
    let plot = dir.join("plot.dat");
    let out4 = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .arg("--plot-out")
        .arg(&plot)
        .output()
        .unwrap();
    assert!(out4.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap(), text);
    let plot_text = fs::read_to_string(&plot).unwrap();
    assert!(plot_text.starts_with("# mf\n"));
    assert!(plot_text.contains("\n\n# rlb-mf\n"));

    // Detector override applies.
    let out5 = bin()
        .args(["run", "--detectors", "mmse", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out5.status.success());
    assert!(stdout(&out5).lines().nth(1).unwrap().starts_with("mmse,"));

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_with_code_1() {
    let dir = scratch_dir("cfg");

    // Missing file.
    let out = bin()
        .args(["run", "--config"])
        .arg(dir.join("absent.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Unknown key.
    let cfg = dir.join("bad_key.cfg");
    fs::write(&cfg, "k = 2\nn = 2\nsnr_grid_db = 6\nturbo = yes\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Unknown detector name.
    let cfg = dir.join("bad_det.cfg");
    fs::write(&cfg, "k = 2\nn = 2\nsnr_grid_db = 6\ndetectors = sphere\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Infeasible exhaustive detector.
    let cfg = dir.join("ml_too_big.cfg");
    fs::write(
        &cfg,
        "k = 12\nn = 12\nsnr_grid_db = 6\ndetectors = ml\nruns = 1\n",
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing required keys.
    let cfg = dir.join("incomplete.cfg");
    fs::write(&cfg, "k = 2\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_and_oracle_compare_subcommands() {
    let out = bin()
        .args([
            "sweep",
            "--k-list",
            "2,3",
            "--target-ber",
            "0.2",
            "--snr-grid",
            "4,8",
            "--min-bits",
            "500",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.starts_with("K,snr_db,ber,avg_flops_per_symbol\n"));
    assert!(text.lines().any(|l| l.starts_with("2,")));

    let out = bin()
        .args([
            "oracle-compare",
            "--k",
            "2",
            "--snr",
            "10",
            "--trials",
            "200",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("oracle cost matches"));
    assert!(text.contains("trials: 200"));

    let out = bin()
        .args(["oracle-compare", "--k", "2", "--trials", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
