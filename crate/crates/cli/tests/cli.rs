use std::path::Path;
use std::process::{Command, Output};

fn qrobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrobust"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn tiny_config(dir: &Path, extra: serde_json::Value) -> String {
    let mut cfg = serde_json::json!({
        "train_count": 40,
        "test_count": 20,
        "epochs": 1,
        "long_epochs": 2,
        "snapshot_epochs": [1, 2],
        "seeds": [0],
        "epsilons": [0.0, 0.1],
        "attack_samples": 4,
        "attack_steps": 2,
        "lipschitz_probes": 2
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().map(str::to_string).collect()
}

#[test]
fn gen_data_writes_both_splits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), serde_json::json!({}));
    let out = dir.path().join("data");
    let res = qrobust(&["gen-data", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(stdout_lines(&res).len(), 2);
    let train = std::fs::read(out.join("train.qads")).unwrap();
    let test = std::fs::read(out.join("test.qads")).unwrap();
    assert!(train.len() > test.len());
}

#[test]
fn train_then_attack_transfer_and_certify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), serde_json::json!({"model": "fourier"}));
    let ckdir = dir.path().join("ck");
    let res = qrobust(&["train", "--config", &cfg, "--out", ckdir.to_str().unwrap(), "--seed", "7"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let ckpts = stdout_lines(&res);
    assert_eq!(ckpts.len(), 1);
    assert!(ckpts[0].ends_with("fourier_seed7_epoch1.json"));

    let cfg = tiny_config(dir.path(), serde_json::json!({"model": "fourier", "checkpoints": ckpts}));
    for (cmd, file) in [("attack", "attack_sweep.csv"), ("transfer", "transfer.csv"), ("lipschitz", "lipschitz.csv")] {
        let out = dir.path().join(cmd);
        let res = qrobust(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        assert!(text.lines().count() >= 2, "{cmd}: {text}");
    }
    let lip = std::fs::read_to_string(dir.path().join("lipschitz/lipschitz.csv")).unwrap();
    assert!(lip.contains("fourier,sdp"), "{lip}");
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), serde_json::json!({"model": "convnet", "lambda": 0.5}));
    let res = qrobust(&["train", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = qrobust(&["train", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = qrobust(&["attack", "--config", &tiny_config(dir.path(), serde_json::json!({}))]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(qrobust(&["frobnicate"]).status.code(), Some(2));
}
