use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn kernel_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("kernels").join(format!("{name}.scop.dsl"))
}

fn stackdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stackdist")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stackdist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn running_example_verifies_on_two_lines() {
    let path = kernel_path("running");
    let o = stackdist(&[path.to_str().unwrap(), "--mode", "verify", "--line-size", "4", "--cache", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("compulsory 4, capacity 2"), "{text}");
    assert!(text.contains("model and simulator agree"), "{text}");
}

#[test]
fn missing_file_exits_2() {
    let o = stackdist(&["/nonexistent/kernel.scop.dsl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn parse_error_exits_2_with_position() {
    let p = scratch_file("bad.scop.dsl", "array A[4];\nfor i = 0 .. 3 { S0: A[i] = ; }\n");
    let o = stackdist(&[p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.scop.dsl:2:"), "{err}");
}

#[test]
fn bad_cache_configuration_exits_2() {
    let path = kernel_path("running");
    let o = stackdist(&[path.to_str().unwrap(), "--cache", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stackdist(&[path.to_str().unwrap(), "--cache", "lots"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn undeclared_override_exits_2() {
    let path = kernel_path("matmul");
    let o = stackdist(&[path.to_str().unwrap(), "-D", "Q=3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn matmul_verifies_at_defaults() {
    let path = kernel_path("matmul");
    let o = stackdist(&[path.to_str().unwrap(), "--mode", "verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn json_totals_are_sums_of_statements() {
    let path = kernel_path("gemver");
    let o = stackdist(&[path.to_str().unwrap(), "--mode", "verify", "--format", "json", "-D", "N=8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "verify");
    assert_eq!(v["line_size"], 64);
    assert_eq!(v["levels"], serde_json::json!([32768, 1048576]));
    assert!(v["diff"]["entries"].as_array().unwrap().is_empty());
    assert!(v["model"]["pieces"].as_u64().unwrap() > 0);
    for counts in [&v["model"]["counts"], &v["simulator"]["counts"]] {
        let statements = counts["statements"].as_array().unwrap();
        let total = &counts["total"];
        let sum = |f: &dyn Fn(&Value) -> u64| statements.iter().map(f).sum::<u64>();
        assert_eq!(total["accesses"].as_u64(), Some(sum(&|s| s["accesses"].as_u64().unwrap())));
        for k in 0..2 {
            for field in ["compulsory", "capacity", "hits"] {
                let want = sum(&|s| s["levels"][k][field].as_u64().unwrap());
                assert_eq!(total["levels"][k][field].as_u64(), Some(want), "{field} at level {k}");
            }
        }
    }
}

#[test]
fn simulate_mode_reports_only_the_simulator() {
    let path = kernel_path("transpose");
    let o = stackdist(&[path.to_str().unwrap(), "--mode", "simulate", "--format", "json", "-D", "N=8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["model"].is_null());
    assert!(v["diff"].is_null());
    assert_eq!(v["simulator"]["trace_length"], 128);
}

#[test]
fn csv_has_one_row_per_statement_level_and_source() {
    let path = kernel_path("running");
    let o = stackdist(&[path.to_str().unwrap(), "--mode", "verify", "--format", "csv", "--line-size", "4", "--cache", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "source,statement,level_bytes,accesses,compulsory,capacity,hits");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines.contains(&"model,total,8,8,4,2,2"));
    assert!(lines.contains(&"simulator,total,8,8,4,2,2"));
}

#[test]
fn ablation_flags_keep_counts() {
    let path = kernel_path("strided");
    let base = stackdist(&[path.to_str().unwrap(), "--format", "csv", "-D", "N=6"]);
    let off = stackdist(&[
        path.to_str().unwrap(),
        "--format",
        "csv",
        "-D",
        "N=6",
        "--no-equalization",
        "--no-rasterization",
        "--no-partial-enumeration",
    ]);
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(off.status.code(), Some(0));
    assert_eq!(stdout(&base), stdout(&off));
}

#[test]
fn dump_trace_writes_classified_records() {
    let path = kernel_path("running");
    let dump = scratch_file("trace.csv", "");
    let o = stackdist(&[
        path.to_str().unwrap(),
        "--line-size",
        "4",
        "--cache",
        "8",
        "--dump-trace",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seq,stmt,instance,access,array,line,distance,class@L1");
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[1], "0,S0,(0),0,M,(0),inf,compulsory");
    let capacity = lines.iter().filter(|l| l.ends_with(",capacity")).count();
    assert_eq!(capacity, 2);
}

#[test]
fn bench_emits_one_csv_row_per_scale() {
    let path = kernel_path("matmul");
    let o = stackdist(&[path.to_str().unwrap(), "--bench-scales", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scale,accesses,pieces,model_seconds,simulator_seconds,agree");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("8,2048,"), "{}", lines[1]);
    assert!(lines[1].ends_with(",true"));

    let o = stackdist(&[path.to_str().unwrap(), "--bench-scales", "8,12", "--line-size", "32"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}
