use std::path::Path;
use std::process::{Command, Output};

fn stparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stparse")).args(args).env_remove("STPARSE_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path, name: &str, builtin: &str, seed: u64) -> String {
    let out = dir.join(name).to_str().unwrap().to_string();
    let o = stparse(&["synth", "--builtin", builtin, "--out", &out, "--seed", &seed.to_string()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn validate_good_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = synth(dir.path(), "good.json", "exchange", 1);
    assert_eq!(code(&stparse(&["validate", "--data", &good])), 0);

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&good).unwrap().replacen("\"version\"", "\"versio\"", 1);
    std::fs::write(&bad, text).unwrap();
    let o = stparse(&["validate", "--data", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("versio"));

    // a dataset is not a model
    assert_eq!(code(&stparse(&["validate", "--model", &good])), 1);
    assert_eq!(code(&stparse(&["validate", "--data", "/nonexistent/file.json"])), 1);
}

#[test]
fn usage_errors_exit_two() {
    let o = stparse(&["infer", "--data", "d.json", "--out", "s.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--model"));
    assert_eq!(code(&stparse(&["train", "--data", "d.json", "--out", "m.json", "--bogus"])), 2);
    assert_eq!(code(&stparse(&["validate"])), 2);
    assert_eq!(code(&stparse(&["validate", "--data", "a", "--model", "b"])), 2);
    assert_eq!(code(&stparse(&["synth", "--builtin", "no-such-scene", "--out", "x.json"])), 2);
    assert_eq!(code(&stparse(&["--help"])), 0);
}

#[test]
fn seed_is_printed_and_taken_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let o = Command::new(env!("CARGO_BIN_EXE_stparse"))
        .args(["synth", "--builtin", "queue", "--out", a.to_str().unwrap()])
        .env("STPARSE_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 17"));
    let b = synth(dir.path(), "b.json", "queue", 17);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(b).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_stparse"))
        .args(["synth", "--builtin", "queue", "--out", a.to_str().unwrap()])
        .env("STPARSE_SEED", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn train_infer_eval_render_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let mut args = vec!["train".to_string()];
    for (i, name) in ["exchange+queue+picnic", "tour+frisbee+picnic", "exchange+tour"].iter().enumerate() {
        args.extend(["--data".into(), synth(dir.path(), &format!("t{i}.json"), name, i as u64)]);
    }
    args.extend(["--out".into(), p("model.json"), "--k".into(), "12".into()]);
    let o = stparse(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&stparse(&["validate", "--model", &p("model.json")])), 0);

    let test = synth(dir.path(), "test.json", "exchange+tour", 50);
    let o = stparse(&["infer", "--data", &test, "--model", &p("model.json"), "--out", &p("sol.json"), "--outer-iters", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 0"));

    let o = stparse(&["eval", "--truth", &test, "--pred", &p("sol.json")]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["groupingPrecision", "groupingRecall", "groupingF", "eventAccuracy", "roleAccuracy"] {
        let v = report[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("grouping F"));

    let o = stparse(&["render", "--data", &test, "--solution", &p("sol.json"), "--out", &p("fig.svg")]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(p("fig.svg")).unwrap().starts_with("<svg"));
}
