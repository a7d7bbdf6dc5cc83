use std::fs;
use std::process::{Command, Output};

use memwall::{decoder_generate_cost, preset, Workload};
use tempfile::TempDir;

fn memwall(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memwall"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses CSV output into (header, rows).
fn table(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(out);
    let mut lines = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    let header = lines.next().expect("header");
    (header, lines.collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_matches_library_totals() {
    let (header, rows) = table(&memwall(&["analyze", "gpt2", "--seq", "128"]));
    let cost = decoder_generate_cost(&preset("gpt2").unwrap(), &Workload::new(128).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "mode")], "decoder");
    assert_eq!(rows[0][column(&header, "total_flops")], cost.total_flops().to_string());
    assert_eq!(rows[0][column(&header, "total_mops")], cost.total_mops().to_string());
}

#[test]
fn sweep_rows_follow_argument_order() {
    let (header, rows) = table(&memwall(&["analyze", "bert-base", "gpt2", "--seq", "512,32,256,64,128"]));
    let seq = column(&header, "seq_len");
    let model = column(&header, "model");
    let got: Vec<(&str, &str)> = rows.iter().map(|r| (r[model].as_str(), r[seq].as_str())).collect();
    let mut want = Vec::new();
    for m in ["bert-base", "gpt2"] {
        for s in ["512", "32", "256", "64", "128"] {
            want.push((m, s));
        }
    }
    assert_eq!(got, want);
}

#[test]
fn fp16_doubles_mops() {
    let (h, int8) = table(&memwall(&["analyze", "bert-base"]));
    let (_, fp16) = table(&memwall(&["analyze", "bert-base", "--precision", "fp16"]));
    let mops = column(&h, "total_mops");
    let flops = column(&h, "total_flops");
    let a: u64 = int8[0][mops].parse().unwrap();
    let b: u64 = fp16[0][mops].parse().unwrap();
    assert_eq!(2 * a, b);
    assert_eq!(int8[0][flops], fp16[0][flops]);
}

#[test]
fn per_layer_rows_sum_to_total() {
    let (h, rows) = table(&memwall(&["analyze", "gpt2", "--seq", "8", "--per-layer", "--elementwise"]));
    let (th, total) = table(&memwall(&["analyze", "gpt2", "--seq", "8", "--elementwise"]));
    let sum: u64 = rows.iter().map(|r| r[column(&h, "flops")].parse::<u64>().unwrap()).sum();
    assert_eq!(sum.to_string(), total[0][column(&th, "total_flops")]);
    assert!(rows.iter().any(|r| r[column(&h, "kernel")] == "softmax"));
}

#[test]
fn model_file_and_mode_override() {
    let dir = TempDir::new().unwrap();
    let json = preset("gpt2").unwrap().with_arch_class(memwall::ArchClass::Encoder).to_json();
    let path = write(&dir, "gpt2-enc.json", &json);
    let (h, from_file) = table(&memwall(&["analyze", &path]));
    let (_, forced) = table(&memwall(&["analyze", "gpt2", "--mode", "encoder"]));
    let flops = column(&h, "total_flops");
    assert_eq!(from_file[0][flops], forced[0][flops]);
    assert_eq!(from_file[0][column(&h, "mode")], "encoder");
}

#[test]
fn roofline_single_model_normalizes_to_one() {
    let (h, rows) = table(&memwall(&["roofline", "bert-base", "--hardware", "v100-sxm2"]));
    assert_eq!(rows[0][column(&h, "normalized_latency")], "1");
}

#[test]
fn decoder_is_memory_bound_on_high_ridge_hardware() {
    let dir = TempDir::new().unwrap();
    let hw = write(
        &dir,
        "hw.json",
        r#"{"name":"wide","year":2024.0,"peak_flops":1e15,"dram_bw":1e12,"mem_capacity":80000000000,"interconnect_bw":null}"#,
    );
    let (h, rows) = table(&memwall(&["roofline", "bert-base", "gpt2", "--hardware", &hw, "--seq", "128,256"]));
    let bound = column(&h, "bound");
    let model = column(&h, "model");
    for row in &rows {
        if row[model] == "gpt2" {
            assert_eq!(row[bound], "memory_bound");
        }
    }
    assert_eq!(rows.len(), 4);
}

#[test]
fn hardware_csv_requires_known_device() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        &dir,
        "hw.csv",
        "name,year,peak_flops,dram_bw,mem_capacity,interconnect_bw\na,2020,1e12,1e11,1000,\nb,2021,2e12,1e11,1000,1e10\n",
    );
    let ok = memwall(&["roofline", "gpt2", "--hardware", &csv, "--device", "b"]);
    let (h, rows) = table(&ok);
    assert_eq!(rows[0][column(&h, "hardware")], "b");
    let missing = memwall(&["roofline", "gpt2", "--hardware", &csv, "--device", "c"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn trends_recovers_doubling() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("metric,year,value\n");
    for i in 0..10 {
        csv.push_str(&format!("x,{},{}\n", 2000 + 2 * i, 2f64.powi(i)));
    }
    let path = write(&dir, "t.csv", &csv);
    let (h, rows) = table(&memwall(&["trends", &path]));
    let rate: f64 = rows[0][column(&h, "rate_per_2yr")].parse().unwrap();
    assert!((rate - 2.0).abs() < 1e-9);
    assert_eq!(rows[0][column(&h, "status")], "ok");
}

#[test]
fn trends_degenerate_series_is_reported() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "t.csv", "metric,year,value\nx,2000,1\nx,2000,2\ny,2000,1\ny,2002,2\n");
    let out = memwall(&["trends", &path]);
    let (h, rows) = table(&out);
    assert_eq!(rows[0][column(&h, "status")], "degenerate");
    assert_eq!(rows[1][column(&h, "status")], "ok");
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn trends_malformed_row_names_line() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "t.csv", "# comment\nmetric,year,value\nx,2000,1\nx,twenty,2\n");
    let out = memwall(&["trends", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    assert_eq!(memwall(&["analyze", "/no/such/model.json"]).status.code(), Some(2));
    assert_eq!(memwall(&["trends", "/no/such/trends.csv"]).status.code(), Some(2));
    assert_eq!(memwall(&["trends", "--metric", "nonexistent"]).status.code(), Some(3));
    assert_eq!(memwall(&["memory", "bert-base", "--checkpoint-every", "13"]).status.code(), Some(3));
    assert_eq!(memwall(&["analyze", "bert-base", "--seq", "0"]).status.code(), Some(3));
    assert_eq!(memwall(&["analyze", "--bogus"]).status.code(), Some(3));
    assert_eq!(memwall(&["--help"]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"name":"x","num_layers":2,"hidden_dim":10,"num_heads":3,"vocab_size":1,"max_positions":1,"arch_class":"encoder"}"#);
    assert_eq!(memwall(&["analyze", &bad]).status.code(), Some(3));
}

#[test]
fn overflow_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let huge = write(
        &dir,
        "huge.json",
        r#"{"name":"huge","num_layers":4000000000,"hidden_dim":4000000000,"num_heads":1,"vocab_size":1,"max_positions":1,"arch_class":"decoder"}"#,
    );
    assert_eq!(memwall(&["analyze", &huge]).status.code(), Some(4));
}

#[test]
fn memory_optimizer_and_checkpointing() {
    let (h, rows) = table(&memwall(&["memory", "bert-base", "--optimizer", "sgd", "--checkpoint-every", "1"]));
    assert_eq!(rows[0][column(&h, "optimizer_state")], "0");
    assert_eq!(rows[0][column(&h, "recompute_overhead")], "0");

    let (h, rows) = table(&memwall(&["memory", "bert-base", "--optimizer", "adam"]));
    let weights: u64 = rows[0][column(&h, "weights")].parse().unwrap();
    let state: u64 = rows[0][column(&h, "optimizer_state")].parse().unwrap();
    assert_eq!(state, 2 * weights);
}

#[test]
fn checkpoint_sweep_is_u_shaped_when_boundaries_dominate() {
    let dir = TempDir::new().unwrap();
    let deep = write(
        &dir,
        "deep.json",
        r#"{"name":"deep","num_layers":100,"hidden_dim":1024,"num_heads":1,"vocab_size":1,"max_positions":1,"arch_class":"encoder"}"#,
    );
    let (h, rows) = table(&memwall(&[
        "memory", &deep, "--retained-tensors", "1", "--seq", "1", "--checkpoint-sweep",
    ]));
    assert_eq!(rows.len(), 100);
    let bytes: Vec<u64> = rows.iter().map(|r| r[column(&h, "activation_bytes")].parse().unwrap()).collect();
    let (argmin, min) = bytes.iter().enumerate().min_by_key(|(_, b)| **b).unwrap();
    assert!(argmin > 0 && argmin < 99);
    assert!(bytes[0] > *min && bytes[99] > *min);
    let overhead: Vec<f64> = rows.iter().map(|r| r[column(&h, "recompute_overhead")].parse().unwrap()).collect();
    assert!(overhead.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn json_output_has_rows_and_digest() {
    let out = stdout(&memwall(&["analyze", "bert-base", "gpt2", "--format", "json"]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["command"], "analyze");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert_eq!(doc["inputs_digest"].as_str().unwrap().len(), 64);

    let other = stdout(&memwall(&["analyze", "bert-base", "--format", "json"]));
    let other: serde_json::Value = serde_json::from_str(&other).unwrap();
    assert_ne!(doc["inputs_digest"], other["inputs_digest"]);
}

#[test]
fn gnuplot_emit_comments_header() {
    let out = stdout(&memwall(&["memory", "gpt2", "--checkpoint-sweep", "--emit", "gnuplot-data"]));
    let plain = stdout(&memwall(&["memory", "gpt2", "--checkpoint-sweep"]));
    let (header, body) = out.split_once('\n').unwrap();
    let (plain_header, plain_body) = plain.split_once('\n').unwrap();
    assert_eq!(header, format!("# {}", plain_header.replace(',', " ")));
    assert_eq!(body, plain_body);
}

#[test]
fn preset_command_round_trips() {
    let out = stdout(&memwall(&["preset", "bert-large"]));
    assert_eq!(memwall::load_config(&out).unwrap(), preset("bert-large").unwrap());
}
