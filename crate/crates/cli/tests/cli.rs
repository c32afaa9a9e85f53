use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsec")).args(args).output().expect("spawn bsec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen_pure(dir: &Path, n: usize) -> String {
    let path = dir.join("pure.json");
    let p = path.to_str().unwrap().to_string();
    let o = bsec(&["gen", "--family", "pure_green", "--n", &n.to_string(), "--seed", "3", "--out", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn gen_writes_loadable_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 30);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["elements"].as_array().unwrap().len(), 30);

    // stdout and --out agree
    let o = bsec(&["gen", "--family", "pure_green", "--n", "30", "--seed", "3"]);
    assert_eq!(stdout(&o), fs::read_to_string(&p).unwrap());
}

#[test]
fn gen_family_params_and_errors() {
    let o = bsec(&["gen", "--family", "lower_bound", "--n", "8", "--param", "num_reds=3", "--param", "states=50"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("r0"), "lower bound output names its reds");

    let o = bsec(&["gen", "--family", "nonsense", "--n", "8"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bsec(&["gen", "--family", "pure_green", "--n", "8", "--param", "novalue"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_instance_emits_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 50);
    let o = bsec(&["run", "--instance", &p, "--algo", "dynkin", "--trials", "4000", "--seed", "9", "--payoff", "max_success"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("algo,family,n,K,trials,seed,success_rate"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[4], "4000");
    assert_eq!(row[5], "9");
    let rate: f64 = row[6].parse().unwrap();
    assert!((rate - 0.37).abs() < 0.05, "dynkin rate {rate}");
}

#[test]
fn run_is_reproducible_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 40);
    let strip = |s: String| s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    let a = bsec(&["run", "--instance", &p, "--algo", "two_checkpoint", "--trials", "2000", "--seed", "5"]);
    let b = bsec(&["run", "--instance", &p, "--algo", "two_checkpoint", "--trials", "2000", "--seed", "5"]);
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn run_from_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    gen_pure(dir.path(), 30);
    let cfg = dir.path().join("exp.json");
    fs::write(&cfg, r#"{"instance": "pure.json", "algo": "random", "trials": 500, "seed": 1}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let o = bsec(&["run", "--config", c]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",500,1,"));

    let o = bsec(&["run", "--config", c, "--trials", "700", "--algo", "dynkin"]);
    assert!(o.status.success());
    let row = stdout(&o);
    assert!(row.contains(",700,1,"));
    assert!(row.contains("dynkin"));
}

#[test]
fn run_family_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fam.json");
    fs::write(
        &cfg,
        r#"{"family": {"family": "hard_single_item", "n": 32, "params": {}, "seed": 2},
            "algo": "two_checkpoint", "trials": 300}"#,
    )
    .unwrap();
    let o = bsec(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 10);

    // no algo
    assert_eq!(bsec(&["run", "--instance", &p]).status.code(), Some(2));
    // unknown algorithm
    assert_eq!(bsec(&["run", "--instance", &p, "--algo", "oracle_magic"]).status.code(), Some(2));
    // missing file
    assert_eq!(bsec(&["run", "--instance", "/nonexistent/x.json", "--algo", "random"]).status.code(), Some(2));
    // unknown config field
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"instance": "pure.json", "algo": "random", "trials": 10, "colour": "red"}"#).unwrap();
    assert_eq!(bsec(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    // zero trials
    assert_eq!(bsec(&["run", "--instance", &p, "--algo", "random", "--trials", "0"]).status.code(), Some(2));
    // bad payoff name
    assert_eq!(bsec(&["run", "--instance", &p, "--algo", "random", "--payoff", "vibes"]).status.code(), Some(2));
}

#[test]
fn oracle_reports_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 20);
    let inst: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    let mut values: Vec<f64> =
        inst["elements"].as_array().unwrap().iter().map(|e| e["value"].as_f64().unwrap()).collect();
    values.sort_by(|a, b| b.total_cmp(a));

    // single item: V* is the second-largest green
    let o = bsec(&["oracle", "--instance", &p]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"][0]["value"].as_f64().unwrap(), values[1]);

    // uniform r=3: next three after g_max
    let o = bsec(&["oracle", "--instance", &p, "--constraint", "uniform:3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"][0]["value"].as_f64().unwrap(), values[1] + values[2] + values[3]);
    assert_eq!(v["states"][0]["set"].as_array().unwrap().len(), 3);
}

#[test]
fn oracle_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 20);
    let o = bsec(&["oracle", "--instance", &p, "--constraint", "knapsack:0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle"));
    // unknown constraint is a config problem, not an oracle one
    assert_eq!(bsec(&["oracle", "--instance", &p, "--constraint", "bogus"]).status.code(), Some(2));
}

#[test]
fn report_merges_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen_pure(dir.path(), 30);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (algo, out) in [("random", &a), ("dynkin", &b)] {
        let o = bsec(&["run", "--instance", &p, "--algo", algo, "--trials", "300", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());

    let o = bsec(&["report", "--in", a, "--in", b]);
    assert!(o.status.success());
    let md = stdout(&o);
    assert!(md.starts_with('|'));
    assert!(md.contains("random") && md.contains("dynkin"));

    let o = bsec(&["report", "--in", a, "--in", b, "--format", "csv"]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(csv.lines().nth(1).unwrap(), fs::read_to_string(a).unwrap().lines().nth(1).unwrap());

    assert_eq!(bsec(&["report", "--in", "/nonexistent.csv"]).status.code(), Some(2));
}
