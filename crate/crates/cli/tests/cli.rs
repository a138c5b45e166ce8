use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn polarq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarq"))
        .args(args)
        .env_remove("POLARQ_THREADS")
        .output()
        .expect("spawn polarq")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rm_code(m: &str, r: &str) -> Value {
    let o = polarq(&["construct", "--rm", m, r]);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn small_config(dir: &Path, pm_rule: &str) -> PathBuf {
    let cfg = json!({
        "code": rm_code("4", "1"),
        "channel": "q3",
        "decoder": { "algebra": "ternary", "list_size": 4, "pm_rule": pm_rule },
        "sweep": [1.0, 2.0],
        "stop": { "min_errors": 20, "max_frames": 20000 },
        "seed": 3
    });
    let p = dir.join(format!("cfg-{pm_rule}.json"));
    fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

#[test]
fn construct_rm_8_2_has_37_information_bits() {
    let code = rm_code("8", "2");
    assert_eq!(code["k"], 37);
    assert_eq!(code["n"], 256);
    assert_eq!(code["info_set"].as_array().unwrap().len(), 37);
}

#[test]
fn construct_by_density_evolution_writes_code_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("code.json");
    let args = [
        "construct",
        "--de",
        "--m",
        "6",
        "--k",
        "32",
        "--design-ebn0",
        "3",
        "--model",
        "biawgn-exact",
        "--out",
        path_str(&out),
    ];
    let o = polarq(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let code: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(code["k"], 32);
    assert_eq!(
        code["construction"]["density_evolution"]["model"],
        "biawgn_exact"
    );
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("code.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "construct");
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    // second run refuses, --force replaces
    let o = polarq(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(polarq(&forced).status.success());
}

#[test]
fn construct_needs_a_method() {
    assert_eq!(polarq(&["construct"]).status.code(), Some(1));
    assert_eq!(
        polarq(&["construct", "--rm", "3", "4"]).status.code(),
        Some(1)
    );
}

#[test]
fn sim_run_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "refined");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&a),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_polarq"))
        .args([
            "sim",
            "run",
            "--config",
            path_str(&cfg),
            "--out",
            path_str(&b),
        ])
        .env("POLARQ_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let header = fs::read_to_string(&a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    for col in [
        "ebn0_db",
        "frames",
        "pm_fer",
        "lml_fer",
        "list_fer",
        "mllb_fer",
        "pm_ci95_low",
        "mllb_ci95_high",
    ] {
        assert!(header.split(',').any(|c| c == col), "missing {col}");
    }
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["code_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["git_describe"].is_string());

    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&a),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sim_run_with_epmu_stores_tables_beside_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "epmu");
    let out = dir.path().join("fer.csv");
    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("fer.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    let tables = manifest["epmu_tables"].as_array().unwrap();
    assert_eq!(tables.len(), 2);
    assert_eq!(tables[1]["ebn0_db"], 2.0);
    let table: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fer.csv.epmu1.json")).unwrap())
            .unwrap();
    assert_eq!(table["code_hash"], manifest["code_hash"]);
    assert_eq!(table["entries"].as_array().unwrap().len(), 16);
}

#[test]
fn invalid_configs_exit_with_one_and_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"code\": 3,\n").unwrap();
    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&broken),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let cfg = small_config(dir.path(), "refined");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    v["stop"]["min_errors"] = json!(0);
    fs::write(&cfg, v.to_string()).unwrap();
    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("min_errors"), "{}", stderr(&o));

    v["stop"]["min_errors"] = json!(10);
    v["channel"] = json!("biawgn");
    fs::write(&cfg, v.to_string()).unwrap();
    let o = polarq(&[
        "sim",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn gap_between_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    fs::write(
        &csv,
        "ebn0_db,frames,errors_pm,errors_lml,errors_list,errors_mllb,pm_fer,lml_fer,list_fer,mllb_fer,\
pm_ci95_low,pm_ci95_high,lml_ci95_low,lml_ci95_high,list_ci95_low,list_ci95_high,mllb_ci95_low,mllb_ci95_high,coherence_violations\n\
2.0,10000,100,80,70,60,0.01,0.008,0.007,0.006,0,1,0,1,0,1,0,1,0\n\
3.0,1000000,100,80,70,60,0.0001,0.00008,0.00007,0.00006,0,1,0,1,0,1,0,1,0\n",
    )
    .unwrap();
    let o = polarq(&["gap", path_str(&csv), path_str(&csv), "--fer", "1e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.00 dB");

    // pm crosses at 2.5 dB, lml at 2.5 + log10(0.8)/2 dB
    let o = polarq(&[
        "gap",
        path_str(&csv),
        path_str(&csv),
        "--metric",
        "pm",
        "--metric-b",
        "lml",
    ]);
    let want = -(0.8f64).log10() / 2.0;
    assert_eq!(stdout(&o).trim(), format!("{want:.2} dB"));

    let o = polarq(&["gap", path_str(&csv), path_str(&csv), "--fer", "1e-6"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        polarq(&["gap", path_str(&csv), "missing.csv"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn channel_info_is_consistent_between_snr_forms() {
    let a: Value = serde_json::from_str(&stdout(&polarq(&[
        "channel-info",
        "--ebn0",
        "4.5",
        "--rate",
        "0.5",
    ])))
    .unwrap();
    let es = a["esn0_db"].as_f64().unwrap();
    let b: Value = serde_json::from_str(&stdout(&polarq(&[
        "channel-info",
        "--esn0",
        &es.to_string(),
    ])))
    .unwrap();
    assert_eq!(a["delta"], b["delta"]);
    let total = ["p_correct", "p_erase", "p_error"]
        .iter()
        .map(|k| a[k].as_f64().unwrap())
        .sum::<f64>();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(a["q3_capacity_bits"].as_f64() < a["biawgn_capacity_bits"].as_f64());
}

#[test]
fn de_rates_writes_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.csv");
    let o = polarq(&[
        "de",
        "rates",
        "--from",
        "-1",
        "--to",
        "0",
        "--step",
        "0.5",
        "--m-eval",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("ebn0_db,capacity_bits,rate_unq_unq,rate_unq_3q,rate_3q_3q"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn epmu_build_matches_the_code() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("code.json");
    fs::write(&code, rm_code("5", "2").to_string()).unwrap();
    let out = dir.path().join("t.json");
    let o = polarq(&[
        "epmu",
        "build",
        "--code",
        path_str(&code),
        "--ebn0",
        "2.5",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t["ebn0_db"], 2.5);
    let entries = t["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 32);
    for row in entries {
        for cell in row
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|q| q.as_array().unwrap())
        {
            assert!(cell.as_f64().unwrap() >= 0.0);
        }
    }
}
