//! Black-box tests of the `dqi` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn dqi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dqi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const CYCLES: &str = "dqi-1
schema { visible A/1; hidden R/2; }
constraints { A(x) -> exists y. R(x, y); R(x, y) -> exists z. R(y, z); }
query Q {
  exists x. R(x, x)
  | exists x, y. R(x, y) & R(y, x)
  | exists x, y, z. R(x, y) & R(y, z) & R(z, x)
}
instance V { A(a). }
";

#[test]
fn medical_negative_implication_holds() {
    let o = dqi(&["check", "nqi", "--file", &fixture("medical.dqi"), "--query", "Q", "--instance", "Empty"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn medical_positive_implication_fails_with_witness() {
    let o = dqi(&["check", "pqi", "--file", &fixture("medical.dqi"), "--instance", "Smith", "--json"]);
    assert_eq!(code(&o), 1);
    let j = json(&o);
    assert_eq!(j["verdict"], "false");
    assert_eq!(j["certificate"]["kind"], "witness");
}

#[test]
fn psb_positive_implication_holds() {
    let o = dqi(&["check", "pqi", "--file", &fixture("psbvscertain.dqi"), "--query", "Q", "--instance", "V"]);
    assert_eq!(code(&o), 0);
    let o = dqi(&["check", "owq", "--file", &fixture("psbvscertain.dqi"), "--query", "Q", "--instance", "V"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn exists_with_disjunctive_heads_is_a_class_error() {
    let o = dqi(&["exists", "pqi", "--file", &fixture("disjunctive.dqi")]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("disjunctive"));
    let o = dqi(&["exists", "pqi", "--file", &fixture("disjunctive.dqi"), "--json"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["verdict"], "error");
}

#[test]
fn budget_exhaustion_is_unknown() {
    let f = tmp("cycles.dqi");
    std::fs::write(&f, CYCLES).unwrap();
    let o = dqi(&["check", "pqi", "--file", f.to_str().unwrap(), "--budget", "50", "--json"]);
    assert_eq!(code(&o), 2);
    let j = json(&o);
    assert_eq!(j["verdict"], "unknown");
    assert_eq!(j["exact"], false);
    assert_eq!(j["budget"]["max_nodes"], 50);
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&dqi(&["check", "bogus", "--file", "x"])), 3);
    assert_eq!(code(&dqi(&["check", "pqi", "--file", "/nonexistent.dqi"])), 3);
    assert_eq!(code(&dqi(&[])), 3);
    assert_eq!(code(&dqi(&["--help"])), 0);
}

#[test]
fn json_exit_codes_agree_and_are_reproducible() {
    let runs: Vec<Vec<String>> = [
        vec!["check", "nqi", "--file", &fixture("medical.dqi"), "--instance", "Empty"],
        vec!["check", "nqi", "--file", &fixture("adom.dqi")],
        vec!["check", "realizable", "--file", &fixture("nonrealizable.dqi")],
        vec!["check", "pqi", "--file", &fixture("disjunctive.dqi"), "--query", "QB"],
        vec!["exists", "nqi", "--file", &fixture("adom.dqi")],
        vec!["oracle", "nqi", "--file", &fixture("adom.dqi"), "--extra-values", "1"],
        vec!["chase", "classical", "--file", &fixture("psbvscertain.dqi")],
        vec!["gfp", "eval", "--file", &fixture("medical.dqi"), "--instance", "Smith"],
    ]
    .iter()
    .map(|v| v.iter().map(|s| s.to_string()).collect())
    .collect();
    for args in runs {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.push("--json");
        let o1 = dqi(&a);
        let o2 = dqi(&a);
        let (mut j1, mut j2) = (json(&o1), json(&o2));
        assert_eq!(j1["exit_code"].as_i64(), Some(code(&o1) as i64), "{args:?}");
        for j in [&mut j1, &mut j2] {
            j.as_object_mut().unwrap().remove("wall_time_ms");
        }
        assert_eq!(j1, j2, "{args:?}");
    }
}

#[test]
fn reductions_write_parseable_files() {
    let cases = [
        ("ucq2cq", "disjunctive.dqi", vec!["--query", "Q"]),
        ("disj2const", "disjunctive.dqi", vec!["--query", "QB"]),
        ("pqi2nqi", "psbvscertain.dqi", vec!["--connected"]),
        ("owq2pqi", "psbvscertain.dqi", vec![]),
        ("owq2epqi", "psbvscertain.dqi", vec![]),
        ("nqi2real", "adom.dqi", vec![]),
        ("real2nqi", "nonrealizable.dqi", vec![]),
        ("ensb2owq", "adom.dqi", vec![]),
    ];
    for (r, f, extra) in cases {
        let out = tmp(&format!("{r}.dqi"));
        let mut a = vec!["reduce", r, "--file", &fixture(f)].into_iter().map(String::from).collect::<Vec<_>>();
        a.extend(extra.iter().map(|s| s.to_string()));
        a.push("--out".into());
        a.push(out.display().to_string());
        let args: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = dqi(&args);
        assert_eq!(code(&o), 0, "{r}: {}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        dqi_core::parse(&text).unwrap_or_else(|e| panic!("{r}: {e}"));
    }
}

#[test]
fn reduced_problem_keeps_answer() {
    let out = tmp("psb_nqi.dqi");
    let o = dqi(&["reduce", "pqi2nqi", "--file", &fixture("psbvscertain.dqi"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&dqi(&["check", "nqi", "--file", out.to_str().unwrap()])), 0);
}

#[test]
fn chase_trace_is_written() {
    let trace = tmp("trace.tsv");
    let o = dqi(&[
        "chase", "visible", "--file", &fixture("medical.dqi"), "--instance", "Smith", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("#node\t"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn gnfo_and_gfp_outputs() {
    let o = dqi(&["emit", "gnfo", "nqi", "--file", &fixture("medical.dqi"), "--instance", "Empty"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("dqi-gnfo-1"));
    let o = dqi(&["gfp", "build", "--file", &fixture("medical.dqi")]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Goal :- Appointment(Smith, a, Jones, y)."));
    let o = dqi(&["gfp", "eval", "--file", &fixture("medical.dqi"), "--instance", "Empty"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn gen_is_seeded() {
    let a = dqi(&["gen", "--seed", "7", "--shape", "general"]);
    let b = dqi(&["gen", "--seed", "7", "--shape", "general"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    dqi_core::parse(&String::from_utf8_lossy(&a.stdout)).unwrap();
}
