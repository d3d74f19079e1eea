use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn equidist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equidist"))
        .args(args)
        .env_remove("EQUIDIST_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn degenerate_weyl_vector() {
    let o = equidist(&["degenerate", "--family", "weyl", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "(1,-3,3,-1)");
    let o = equidist(&["degenerate", "--family", "multiplicative", "--M", "5"]);
    assert_eq!(stdout(&o).trim(), "(5,-1)");
}

#[test]
fn gamma_source_indices() {
    let o = equidist(&["gamma", "--count", "4", "--bits", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let sources: Vec<&str> = text
        .lines()
        .map(|l| l.split("from ").nth(1).unwrap())
        .collect();
    assert_eq!(sources, ["X_{1}", "X_{2}", "X_{4}", "X_{7}"]);
}

#[test]
fn gamma_from_bit_file() {
    let dir = scratch("gamma-bits");
    let bits = dir.join("ones.bin");
    fs::write(&bits, [0xffu8; 16]).unwrap();
    let o = equidist(&["gamma", "--count", "3", "--bits", "8", "--bit-file", bits.to_str().unwrap(), "--output", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for u in report["result"]["uniforms"].as_array().unwrap() {
        assert_eq!(u["value"].as_f64(), Some(255.0 / 256.0));
    }
    let o = equidist(&["gamma", "--count", "30", "--bits", "8", "--bit-file", bits.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("length error"), "{}", stderr(&o));
}

#[test]
fn weyl_flags_degenerate_pair_and_exits_2() {
    let dir = scratch("weyl");
    let out = dir.join("weyl.json");
    let o = equidist(&[
        "weyl", "--family", "multiplicative", "--M", "2", "--d", "2", "--m-radius", "2", "--N", "10000",
        "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("flagged m = (2,-1)"));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "refuted");
    assert_eq!(report["result"]["flagged"], serde_json::json!(["(2,-1)"]));
    assert!((report["result"]["worst"]["abs"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config"]["family"], "multiplicative");
    let grid = report["checkpoints"].as_array().unwrap();
    assert_eq!(grid.first().unwrap(), 26);
    assert_eq!(grid.last().unwrap(), 10000);
}

#[test]
fn weyl_passes_on_factorial() {
    let o = equidist(&["weyl", "--family", "factorial", "--d", "2", "--N", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn reports_are_deterministic_and_config_round_trips() {
    let dir = scratch("determinism");
    let conf = dir.join("run.conf");
    fs::write(
        &conf,
        "# factorial WCUD check\ncommand=wcud\nfamily=factorial\nd=2\nm=1,-1\nN=400\nn-seeds=16\nseed-bits=128\nrng-seed=7\n",
    )
    .unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.join(name);
        let mut args = vec!["wcud", "--config", conf.to_str().unwrap(), "--output", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = equidist(&args);
        assert!(matches!(o.status.code(), Some(0)), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    let saved = dir.join("saved.conf");
    let a = run("a.json", &["--save-config", saved.to_str().unwrap()]);
    let b = run("a.json", &["--threads", "1"]);
    let c = run("a.json", &["--threads", "3"]);
    let strip = |bytes: &[u8]| {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v["config"].as_object_mut().unwrap().remove("threads");
        v["config"].as_object_mut().unwrap().remove("save-config");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&b), strip(&c));
    assert_eq!(run("a.json", &[]), run("a.json", &[]));

    let text = fs::read_to_string(&saved).unwrap();
    assert!(text.starts_with("command=wcud\n"));
    assert!(!text.contains("save-config"));
    let o = equidist(&["wcud", "--config", saved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn wcud_refutes_degenerate_pair() {
    let o = equidist(&[
        "wcud", "--family", "multiplicative", "--M", "2", "--d", "2", "--m", "2,-1", "--N", "1000", "--n-seeds", "4",
        "--output", "-",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for v in report["result"]["estimates"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn covariance_tests() {
    let o = equidist(&["covariance", "--test", "certificate", "--family", "factorial", "--m", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("c(m) = 0"));
    let o = equidist(&[
        "covariance", "--test", "lemma3", "--family", "multiplicative", "--M", "2", "--d", "2", "--m", "2,-1",
        "--N", "256", "--n-seeds", "4", "--pairs", "4",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = equidist(&[
        "covariance", "--test", "moment", "--family", "factorial", "--k", "3", "--l", "2", "--n-seeds", "64",
        "--seed-bits", "64", "--output", "-",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = report["result"]["estimate"].as_array().unwrap();
    let norm = est[0].as_f64().unwrap().hypot(est[1].as_f64().unwrap());
    assert!(norm <= 4.0 * report["result"]["stderr"].as_f64().unwrap());
}

#[test]
fn discrepancy_csv_and_env_output_dir() {
    let dir = scratch("env-dir");
    let o = Command::new(env!("CARGO_BIN_EXE_equidist"))
        .args(["discrepancy", "--family", "weyl", "--p", "1", "--N", "500", "--format", "csv"])
        .env("EQUIDIST_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.join("discrepancy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,value,kind"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.first().unwrap().starts_with("26,"));
    assert!(rows.last().unwrap().starts_with("500,"));
}

#[test]
fn generate_writes_points() {
    let o = equidist(&[
        "generate", "--family", "weyl", "--p", "1", "--seed", "1/7", "--N", "3", "--format", "csv", "--output", "-",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let expected = format!("k,x1\n1,{}\n2,{}\n3,{}\n", 1.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0);
    assert_eq!(stdout(&o), expected);
}

#[test]
fn errors_are_precise_and_exit_1() {
    let o = equidist(&["weyl", "--family", "multiplicative", "--d", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--M is required"), "{}", stderr(&o));

    let o = equidist(&["wcud", "--family", "factorial", "--N", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--N must be positive"), "{}", stderr(&o));

    let o = equidist(&["generate", "--family", "koksma", "--N", "30000"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("N = 30000") && err.contains("precision budget"), "{err}");

    let dir = scratch("bad-config");
    let conf = dir.join("bad.conf");
    fs::write(&conf, "family=factorial\nwidth=3\n").unwrap();
    let o = equidist(&["wcud", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2") && stderr(&o).contains("width"), "{}", stderr(&o));
}
