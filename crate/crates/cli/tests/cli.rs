use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cbim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// CSV text with the trailing wall-time column removed.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| line.rsplit_once(',').map_or(line, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

const SMALL: &str = "\
# small run
dataset = synthetic:60:2
k = 2
l = 3
iterations = 2
rounds = 40
batch_size = 32
update_every = 8
hidden = 8,8
";

#[test]
fn train_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.cfg"), SMALL).unwrap();
    for alg in ["mcbim", "random"] {
        let mut csvs = Vec::new();
        for run in ["a", "b"] {
            let prefix = format!("{alg}-{run}");
            let out = cbim(
                &[
                    "train",
                    "--config",
                    "x.cfg",
                    "--seed",
                    "7",
                    "--algorithm",
                    alg,
                    "--output",
                    &prefix,
                ],
                dir.path(),
            );
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(stdout(&out).contains("SR "));
            csvs.push(fs::read_to_string(dir.path().join(format!("{prefix}.csv"))).unwrap());
        }
        assert_eq!(csvs[0].lines().count(), 81);
        assert_eq!(without_wall_time(&csvs[0]), without_wall_time(&csvs[1]));
    }
    assert!(dir.path().join("mcbim-a.ckpt").exists());
    assert!(!dir.path().join("random-a.ckpt").exists());
}

#[test]
fn summarize_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.cfg"), SMALL).unwrap();
    let out = cbim(
        &[
            "train", "--config", "x.cfg", "--seed", "3", "--output", "run",
        ],
        dir.path(),
    );
    assert!(out.status.success());

    let out = cbim(&["summarize", "run.csv", "--rho", "0.1"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for key in ["SR ", "SER ", "ROP_max "] {
        assert!(text.contains(key), "{text}");
    }
    let stored = fs::read_to_string(dir.path().join("run.summary.txt")).unwrap();
    assert_eq!(text, stored);

    let out = cbim(
        &[
            "evaluate",
            "--checkpoint",
            "run.ckpt",
            "--config",
            "x.cfg",
            "--output",
            "eval",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("eval.csv").exists());
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cbim(&["oracle-check", "--trials", "1000"], dir.path());
    assert!(out.status.success());
    assert_eq!(stdout(&out).matches("PASS").count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| cbim(args, dir.path()).status.code();
    assert_eq!(code(&["train", "--bogus"]), Some(1));
    assert_eq!(
        code(&["train", "--config", "missing.cfg", "--seed", "1"]),
        Some(1)
    );
    assert_eq!(code(&["train", "--iterations", "1"]), Some(1));
    assert_eq!(code(&["train", "--seed", "1", "--set", "kappa=2"]), Some(1));
    assert_eq!(
        code(&["train", "--seed", "1", "--dataset", "missing.txt"]),
        Some(2)
    );
    assert_eq!(code(&["summarize", "missing.csv"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}
