use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn linerblc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linerblc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = linerblc(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: &str = r#"{
  "preprocess": {"k": 32, "resize": [48, 48]},
  "param": {"epochs": 2, "batch_size": 4},
  "blc": {"epochs": 1, "batch_size": 4},
  "augment": {"enabled": false},
  "eval_fraction": 0.25,
  "folds": 2
}"#;

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["synth", "--n", "12", "--liners", "4", "--size", "32", "--k", "32", "--seed", "3", "--out", p(&data)]);
    let manifest = data.join("manifest.json");
    assert!(manifest.is_file());
    let lock: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("config.lock.json")).unwrap()).unwrap();
    assert_eq!(lock["command"], "synth");
    assert_eq!(lock["config"]["synth"]["n"], 12);
    assert_eq!(lock["config"]["synth"]["seed"], 3);

    let blcs = tmp.path().join("blc");
    ok(&["blc", "--manifest", p(&manifest), "--k", "32", "--out", p(&blcs)]);
    assert_eq!(fs::read(blcs.join("s0000.txt")).unwrap(), fs::read(data.join("blc/s0000.txt")).unwrap());

    let params = tmp.path().join("params");
    let out = ok(&["params", p(&data.join("blc/s0000.txt")), p(&data.join("depth/s0001.htdp")), "--k", "32", "--out", p(&params)]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(rows[0]["k_params"]["sk"].as_f64().unwrap() > 0.0);
    assert!(params.join("params.csv").is_file());

    let config = tmp.path().join("tiny.json");
    fs::write(&config, TINY).unwrap();
    let pre = tmp.path().join("pre");
    ok(&["preprocess", p(&data.join("rgb/s0002.png")), "--config", p(&config), "--out", p(&pre)]);
    let stack = fs::read_to_string(pre.join("s0002.stack.csv")).unwrap();
    assert_eq!(stack.lines().count(), 33);
    assert_eq!(fs::read_to_string(pre.join("features.csv")).unwrap().lines().count(), 2);

    let train = tmp.path().join("train");
    ok(&["train", "--manifest", p(&manifest), "--config", p(&config), "--seed", "5", "--out", p(&train)]);
    let model = train.join("model.bin");
    assert!(model.is_file());
    assert!(train.join("eval/report.csv").is_file());
    assert!(train.join("eval/quartile_scatter.svg").is_file());
    assert!(train.join("config.lock.json").is_file());

    let pred = tmp.path().join("pred");
    ok(&["predict", "--model", p(&model), p(&data.join("rgb/s0003.png")), "--out", p(&pred)]);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(pred.join("s0003.json")).unwrap()).unwrap();
    assert_eq!(sidecar["k"], 32);
    assert_eq!(sidecar["model_sha256"].as_str().unwrap().len(), 64);
    let curve: Vec<f64> = fs::read_to_string(pred.join("s0003.blc.txt")).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(curve.len(), 32);
    assert!(curve.windows(2).all(|w| w[0] >= w[1]));

    let eval1 = tmp.path().join("eval1");
    let eval2 = tmp.path().join("eval2");
    ok(&["eval", "--model", p(&model), "--manifest", p(&manifest), "--out", p(&eval1)]);
    ok(&["eval", "--model", p(&model), "--manifest", p(&manifest), "--out", p(&eval2)]);
    for f in ["report.csv", "samples.csv", "quartiles.csv", "hours_bins.csv", "report.json"] {
        assert_eq!(fs::read(eval1.join(f)).unwrap(), fs::read(eval2.join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(eval1.join("report.csv")).unwrap();
    assert!(report.starts_with("Run,W1 ± std,Sk MAE (MAPE) ± std,Vvv MAE ± std,Vmp MAE ± std\n"));

    let cv = tmp.path().join("cv");
    ok(&["crossval", "--manifest", p(&manifest), "--config", p(&config), "--out", p(&cv)]);
    let table = fs::read_to_string(cv.join("crossval.csv")).unwrap();
    let runs: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(runs, ["1", "2", "Avg.", "Std."]);
    assert!(cv.join("fold1/samples.csv").is_file());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(linerblc(&["train", "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(linerblc(&["no-such-command"]).status.code(), Some(2));
    let missing = tmp.path().join("missing.json");
    assert_eq!(linerblc(&["eval", "--model", "m.bin", "--manifest", p(&missing), "--out", p(&out)]).status.code(), Some(3));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"folds\": \"five\"}").unwrap();
    assert_eq!(linerblc(&["train", "--config", p(&bad), "--out", p(&out)]).status.code(), Some(2));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(linerblc(&["synth", "--n", "2", "--liners", "1", "--out", p(&blocker.join("sub"))]).status.code(), Some(3));

    let data = tmp.path().join("data");
    ok(&["synth", "--n", "8", "--liners", "4", "--size", "32", "--k", "32", "--out", p(&data)]);
    let cfg = tmp.path().join("explode.json");
    fs::write(
        &cfg,
        r#"{"preprocess": {"k": 32, "resize": [32, 32]}, "param": {"epochs": 3, "batch_size": 1, "lr": 1e300},
            "blc": {"epochs": 1}, "augment": {"enabled": false}, "eval_fraction": 0.25}"#,
    )
    .unwrap();
    let manifest = data.join("manifest.json");
    let run = linerblc(&["train", "--manifest", p(&manifest), "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(4), "{}", String::from_utf8_lossy(&run.stderr));

    let garbage = tmp.path().join("garbage.bin");
    fs::write(&garbage, b"not a model").unwrap();
    assert_eq!(linerblc(&["eval", "--model", p(&garbage), "--manifest", p(&manifest), "--out", p(&out)]).status.code(), Some(2));
}
