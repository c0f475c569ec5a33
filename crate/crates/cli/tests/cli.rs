use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn secsel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secsel"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("run secsel")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn baseline_sweep_without_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.gamma_t_db = [0, 6]\ndata.m_test = 5000\n");
    let out = secsel(dir.path(), &["sop-sweep", "--config", &cfg, "--models", "", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "sop_sweep.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# table=sop_sweep");
    assert!(lines[1].starts_with("# config_hash=") && lines[1].len() == "# config_hash=".len() + 16);
    assert_eq!(lines[2], "# seed=7");
    assert_eq!(lines[3], "gamma_t_db,model,sop,stderr,gap,gap_stderr,p_s,feasible");
    assert_eq!(lines.len(), 6);
    assert!(lines[4].starts_with("0,conventional,1,0,,,0,false"));
    assert!(lines[5].starts_with("6,conventional,"));
}

#[test]
fn seed_changes_results_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.gamma_t_db = [8]\ndata.m_test = 3000\nmodels = []\n");
    let mut seen = Vec::new();
    for seed in ["1", "2"] {
        assert!(secsel(dir.path(), &["sop-sweep", "--config", &cfg, "--seed", seed]).status.success());
        seen.push(read(dir.path(), "sop_sweep.csv"));
    }
    assert_ne!(seen[0], seen[1]);
    let hash = |s: &str| s.lines().nth(1).unwrap().to_string();
    assert_ne!(hash(&seen[0]), hash(&seen[1]));
}

#[test]
fn complexity_table() {
    let dir = tempfile::tempdir().unwrap();
    assert!(secsel(dir.path(), &["complexity"]).status.success());
    let csv = read(dir.path(), "complexity.csv");
    assert!(csv.contains("\nconventional,4,4,32\n"));
    assert!(csv.contains("\nlstm,4,169600,16\n"));
    assert!(csv.contains("\nknn,4,16,16\n"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "system.kk = 4\n");
    let out = secsel(dir.path(), &["complexity", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kk"));
}

#[test]
fn unknown_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = secsel(dir.path(), &["complexity", "--models", "lstm,forest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("forest"));
}

#[test]
fn grad_check_refuses_non_neural_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = secsel(dir.path(), &["grad-check", "--models", "knn"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_needs_trained_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "data.m_train = 50\ndata.m_test = 50\n");
    assert!(secsel(dir.path(), &["gen-data", "--config", &cfg]).status.success());
    let out = secsel(dir.path(), &["evaluate", "--config", &cfg, "--models", "gnb"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gnb.model"));
}

#[test]
fn binary_datasets_feed_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "data.m_train = 200\ndata.m_test = 300\nmodels = [\"gnb\", \"knn\"]\n");
    assert!(secsel(dir.path(), &["gen-data", "--config", &cfg, "--format", "bin"]).status.success());
    let train_bin = dir.path().join("out/train.bin");
    let test_bin = dir.path().join("out/test.bin");
    let out = secsel(dir.path(), &["train", "--config", &cfg, "--data", train_bin.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = secsel(dir.path(), &["evaluate", "--config", &cfg, "--data", test_bin.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "evaluation.csv");
    let overall: Vec<&str> = csv.lines().filter(|l| l.contains(",all,")).collect();
    assert_eq!(overall.len(), 2);
    assert!(overall.iter().all(|l| l.contains(",300,")));
}
