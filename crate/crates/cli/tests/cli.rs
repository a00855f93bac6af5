use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn encost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_encost"))
        .args(args)
        .output()
        .expect("spawn encost")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("data");
    let mut args = vec!["synth", "--out", p(&out), "--reproducible"];
    args.extend_from_slice(extra);
    let o = encost(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn write_y4m(path: &Path, w: usize, h: usize, frames: usize, truncate: bool, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = format!("YUV4MPEG2 W{w} H{h} F30:1 Ip A1:1 C420jpeg\n").into_bytes();
    for i in 0..frames {
        bytes.extend_from_slice(b"FRAME\n");
        bytes.extend((0..w * h).map(|_| rng.random::<u8>()));
        if truncate && i + 1 == frames {
            break;
        }
        bytes.extend(std::iter::repeat_n(128u8, 2 * (w / 2) * (h / 2)));
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn fit_then_predict_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let model = dir.path().join("model.json");
    let o = encost(&[
        "fit",
        "--records",
        p(&data.join("records.csv")),
        "--descriptors",
        p(&data.join("descriptors")),
        "--out",
        p(&model),
        "--reproducible",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let tp = &doc["time_params"];
    assert!((tp["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!((tp["beta"].as_f64().unwrap() + 0.45).abs() < 1e-4);
    assert!(doc["fit_metadata"]["training_mape"].as_f64().unwrap() < 0.1);
    assert!(doc["fit_metadata"].get("date").is_none());
    assert!(doc["manifest"]["dataset_hash"].as_str().unwrap().len() == 64);
    assert_eq!(doc["fit_metadata"]["preset_range"], serde_json::json!([1, 13]));

    let o = encost(&[
        "predict",
        "--model",
        p(&model),
        "--descriptors",
        p(&data.join("descriptors/classA_seq00.json")),
        "--preset",
        "8",
        "--crf",
        "43",
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pred: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let records = fs::read_to_string(data.join("records.csv")).unwrap();
    let measured: f64 = records
        .lines()
        .find(|l| l.starts_with("classA_seq00,") && l.contains(",8,43,"))
        .and_then(|l| l.split(',').nth(10))
        .unwrap()
        .parse()
        .unwrap();
    let rel = (pred["time_s"].as_f64().unwrap() - measured).abs() / measured;
    assert!(rel < 1e-3, "relative error {rel}");
    assert_eq!(pred["extrapolated"], Value::Bool(false));
    assert!(pred["energy_j"].as_f64().unwrap() > 0.0);
}

#[test]
fn predict_flags_extrapolation() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--no-energy"]);
    let model = dir.path().join("m.json");
    let records = data.join("records.csv");
    let o = encost(&[
        "fit",
        "--records",
        p(&records),
        "--spatial",
        "none",
        "--temporal",
        "none",
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!(doc.get("energy_params").is_none());
    assert!(doc["fit_metadata"]["date"].is_string());
    let o = encost(&[
        "predict",
        "--model",
        p(&model),
        "--preset",
        "5",
        "--crf",
        "20",
        "--width",
        "640",
        "--height",
        "360",
        "--frames",
        "300",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let pred: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(pred["extrapolated"], Value::Bool(true));
    assert_eq!(pred["n_intra"], 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside the training ranges"));
}

#[test]
fn evaluate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--time-noise", "0.02"]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = encost(&[
            "evaluate",
            "--records",
            p(&data.join("records.csv")),
            "--descriptors",
            p(&data.join("descriptors")),
            "--seed",
            "7",
            "--out",
            p(&out),
            "--reproducible",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(out).unwrap(), o.stdout)
    };
    let (a, sa) = run("a.json");
    let (b, sb) = run("b.json");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    let doc: Value = serde_json::from_slice(&a).unwrap();
    assert!(doc["report"]["mean_mape"].as_f64().unwrap() < 4.0);
    assert!(doc["manifest"].get("created_at").is_none());
}

#[test]
fn evaluate_grid_prints_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--time-noise", "0.02"]);
    let out = dir.path().join("grid.json");
    let o = encost(&[
        "evaluate",
        "--grid",
        "--records",
        p(&data.join("records.csv")),
        "--descriptors",
        p(&data.join("descriptors")),
        "--energy",
        "off",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("Encoding time MAPE"));
    assert!(!text.contains("Encoding energy MAPE"));
    assert!(text.contains("Content-blind (C = 1):"));
    let doc: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["grid"]["cells"].as_array().unwrap().len(), 11);
    assert!(doc["manifest"]["created_at"].is_string());
}

#[test]
fn analyze_batch_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.y4m");
    let bad = dir.path().join("bad.y4m");
    write_y4m(&good, 96, 64, 3, false, 1);
    write_y4m(&bad, 64, 64, 2, true, 2);
    let out = dir.path().join("desc");

    let o = encost(&[
        "analyze",
        "-i",
        p(&good),
        "--ultrafast-time",
        "2",
        "--out",
        p(&out),
        "--reproducible",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d: Value = serde_json::from_str(&fs::read_to_string(out.join("good.json")).unwrap()).unwrap();
    for key in ["c_s_si", "c_s_vca", "c_s_var", "c_t_ti", "c_t_vca", "c_t_flow"] {
        assert!(d[key].as_f64().unwrap() >= 0.0, "{key}");
    }
    let expected_uf = 2.0 / (96.0 * 64.0 / 1000.0 * 3.0);
    assert!((d["c_ultrafast"].as_f64().unwrap() - expected_uf).abs() < 1e-12);
    assert_eq!(d["manifest"]["command"], "analyze");

    let o = encost(&["analyze", "-i", p(&good), "-i", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.y4m"));

    let o = encost(&["analyze", "-i", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 3);

    let o = encost(&["analyze", "-i", p(&good), "--block-size", "48", "--out", p(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_respects_thread_cap_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let clip = dir.path().join("c.y4m");
    write_y4m(&clip, 64, 64, 2, false, 3);
    let out = dir.path().join("d");
    let o = Command::new(env!("CARGO_BIN_EXE_encost"))
        .args(["analyze", "-i", p(&clip), "--descriptors", "si,ti", "--out", p(&out)])
        .env("ENCOST_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d: Value = serde_json::from_str(&fs::read_to_string(out.join("c.json")).unwrap()).unwrap();
    assert!(d["c_s_si"].is_number() && d["c_t_ti"].is_number());
    assert!(d.get("c_s_vca").is_none() && d.get("c_t_flow").is_none());

    let o = Command::new(env!("CARGO_BIN_EXE_encost"))
        .args(["analyze", "-i", p(&clip), "--out", p(&out)])
        .env("ENCOST_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn ingest_power_reports_energy_and_decision() {
    let dir = tempfile::tempdir().unwrap();
    let total = dir.path().join("total.csv");
    let idle = dir.path().join("idle.csv");
    let series = dir.path().join("series.csv");
    fs::write(&total, "t_s,power_w\n0,30\n4,30\n10,30\n").unwrap();
    fs::write(&idle, "t_s,power_w\n0,20\n10,20\n").unwrap();
    fs::write(&series, "energy_j\n100\n100\n100\n104\n").unwrap();
    let o = encost(&[
        "ingest-power",
        "--total",
        p(&total),
        "--idle",
        p(&idle),
        "--duration",
        "10",
        "--series",
        p(&series),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["energy"]["energy_j"].as_f64().unwrap(), 100.0);
    assert_eq!(r["confidence"]["satisfied"], Value::Bool(false));
    assert_eq!(r["confidence"]["m"], 4);

    let o = encost(&["ingest-power", "--series", p(&series), "--beta", "1.5"]);
    assert_eq!(code(&o), 1);
    let o = encost(&["ingest-power", "--total", p(&total)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn oracle_writes_factor_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let csv = dir.path().join("oracle.csv");
    let o = encost(&[
        "oracle",
        "--records",
        p(&data.join("records.csv")),
        "--out",
        p(&csv),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r["oracle_mape"].as_f64().unwrap() < r["blind_mape"].as_f64().unwrap());
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sequence_id,class_id,factor,std,n"));
    assert_eq!(lines.count(), 18);
}

#[test]
fn data_and_usage_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("m.json");
    assert_eq!(code(&encost(&["fit", "--records", p(&missing), "--out", p(&out)])), 3);
    assert_eq!(code(&encost(&["fit", "--nonsense"])), 1);
    assert_eq!(code(&encost(&["--help"])), 0);

    let data = synth(dir.path(), &[]);
    let records = data.join("records.csv");
    let o = encost(&["fit", "--records", p(&records), "--out", p(&out)]);
    assert_eq!(code(&o), 1, "content-aware fit without descriptors is a usage error");
    let o = encost(&[
        "fit",
        "--records",
        p(&records),
        "--objective",
        "cubic",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 1);

    // one descriptor file missing from the join
    let desc = data.join("descriptors");
    fs::remove_file(desc.join("classB_seq03.json")).unwrap();
    let o = encost(&[
        "fit",
        "--records",
        p(&records),
        "--descriptors",
        p(&desc),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("classB_seq03"));
}
