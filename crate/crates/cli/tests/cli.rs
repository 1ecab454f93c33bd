use std::path::{Path, PathBuf};
use std::process::Command;

struct Run {
    stdout: String,
    stderr: String,
    code: i32,
}

fn mlcc(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_mlcc")).args(args).output().expect("spawn mlcc");
    Run {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        code: out.status.code().expect("exit code"),
    }
}

fn repo(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join(rel).display().to_string()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn compile_writes_three_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let src = repo("corpus/contracts/lists.mlc");
    for out in [&a, &b] {
        let r = mlcc(&["compile", &src, "-o", p(out)]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    for ext in ["evm", "asm", "gasmap"] {
        let x = std::fs::read(a.join(format!("lists.{ext}"))).unwrap();
        let y = std::fs::read(b.join(format!("lists.{ext}"))).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{ext} differs between runs");
    }
    let hex = std::fs::read_to_string(a.join("lists.evm")).unwrap();
    assert!(hex::decode(hex.trim()).is_ok());
}

#[test]
fn compile_empty_file_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("empty.mlc");
    std::fs::write(&src, "").unwrap();
    let r = mlcc(&["compile", p(&src), "-o", p(dir.path())]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("ParseError"), "{}", r.stderr);
    assert!(!dir.path().join("empty.evm").exists());
}

#[test]
fn compile_json_lists_selectors() {
    let dir = tempfile::tempdir().unwrap();
    let r = mlcc(&["--json", "compile", &repo("corpus/contracts/lists.mlc"), "-o", p(dir.path())]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["code_size"].as_u64().unwrap() > 0);
    assert!(!v["selectors"].as_array().unwrap().is_empty());
}

#[test]
fn missing_source_is_io_error() {
    let r = mlcc(&["compile", "/nonexistent/x.mlc"]);
    assert_eq!(r.code, 2);
}

#[test]
fn check_gas_passes_corpus_and_notes_skips() {
    for c in ["lists", "trading", "market"] {
        let r = mlcc(&["check-gas", &repo(&format!("corpus/contracts/{c}.mlc"))]);
        assert_eq!(r.code, 0, "{c}: {}", r.stdout);
        assert!(r.stdout.trim_end().ends_with("PASS"));
    }
    let r = mlcc(&["check-gas", &repo("corpus/contracts/lists.mlc")]);
    assert!(r.stdout.contains("SKIP"), "{}", r.stdout);
}

#[test]
fn check_gas_fails_on_mutated_annotation() {
    let src = std::fs::read_to_string(repo("corpus/contracts/lists.mlc")).unwrap();
    let at = src.find("add_gas ").expect("lists.mlc has annotations") + "add_gas ".len();
    let end = at + src[at..].find(|c: char| !c.is_ascii_digit()).unwrap();
    let n: u64 = src[at..end].parse().unwrap();
    let mutated = format!("{}{}{}", &src[..at], n - 1, &src[end..]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lists.mlc");
    std::fs::write(&path, mutated).unwrap();
    let r = mlcc(&["check-gas", p(&path)]);
    assert_eq!(r.code, 1, "{}", r.stdout);
    assert!(r.stdout.contains("FAIL"));
    let r = mlcc(&["--json", "check-gas", p(&path)]);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn check_gas_schedule_override() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("costly.txt");
    let src = repo("corpus/contracts/lists.mlc");
    std::fs::write(&sched, bemp_evm::schedule::DEFAULT_SCHEDULE).unwrap();
    assert_eq!(mlcc(&["check-gas", &src, "--schedule", p(&sched)]).code, 0);
    let costly: String = bemp_evm::GasSchedule::default()
        .entries()
        .map(|(op, c)| format!("{op} {}\n", if op == "MLOAD" { c + 100 } else { c }))
        .collect();
    std::fs::write(&sched, costly).unwrap();
    let r = mlcc(&["check-gas", &src, "--schedule", p(&sched)]);
    assert_eq!(r.code, 1, "{}", r.stdout);
    std::fs::write(&sched, "NOTANOP 3\n").unwrap();
    assert_eq!(mlcc(&["check-gas", &src, "--schedule", p(&sched)]).code, 2);
}

fn code_file(dir: &Path, hex: &str) -> PathBuf {
    let f = dir.join("code.evm");
    std::fs::write(&f, hex).unwrap();
    f
}

// 1 + 2 stored at slot 0, then returned as one word.
const ADD_STORE_RETURN: &str = "600160020180600055600052602060";
const RETURN_TAIL: &str = "00f3";

#[test]
fn run_reports_outcome_gas_and_storage() {
    let dir = tempfile::tempdir().unwrap();
    let f = code_file(dir.path(), &format!("{ADD_STORE_RETURN}{RETURN_TAIL}"));
    let r = mlcc(&["run", p(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains(&format!("outcome return 0x{:064x}", 3)), "{}", r.stdout);
    assert!(r.stdout.contains("storage 0x0 0x0 -> 0x3"));
    assert!(r.stdout.contains("gas_used "));

    let r = mlcc(&["run", p(&f), "--trace"]);
    let steps = r.stdout.lines().filter(|l| l.starts_with("pc=")).count();
    assert_eq!(steps, 11);

    let r = mlcc(&["--json", "run", p(&f), "--calldata", "0xdeadbeef"]);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["gas_used"].as_u64().unwrap() > 20_000);
    assert_eq!(v["storage_delta"]["0x0"][1], "0x3");
}

#[test]
fn run_with_zero_gas_is_out_of_gas() {
    let dir = tempfile::tempdir().unwrap();
    let f = code_file(dir.path(), &format!("{ADD_STORE_RETURN}{RETURN_TAIL}"));
    let r = mlcc(&["run", p(&f), "--gas", "0"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("outcome out of gas"), "{}", r.stdout);
    assert!(!r.stdout.contains("storage"));
}

#[test]
fn run_bad_hex_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = code_file(dir.path(), "6001");
    assert_eq!(mlcc(&["run", p(&f), "--calldata", "zz"]).code, 2);
    let g = code_file(dir.path(), "60x1");
    assert_eq!(mlcc(&["run", p(&g)]).code, 2);
}

#[test]
fn match_worked_instance() {
    let r = mlcc(&["match", &data("worked_2x2.book"), "--oracle"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let trades: Vec<&str> = r.stdout.lines().filter(|l| l.starts_with("trade ")).collect();
    assert_eq!(
        trades,
        ["trade seller 0 buyer 0 amount 3", "trade seller 0 buyer 1 amount 1", "trade seller 1 buyer 1 amount 1"]
    );
    assert!(r.stdout.contains("total 5"));
    assert!(r.stdout.contains("oracle 5"));
    assert!(r.stdout.contains("optimal yes"));

    let r = mlcc(&["--json", "match", &data("worked_2x2.book"), "--oracle"]);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["trades"].as_array().unwrap().len(), 3);
    assert_eq!(v["total"], "5");
    assert_eq!(v["oracle"], "5");
    assert_eq!(v["optimal"], true);
}

#[test]
fn match_incompatible_book_has_no_trades() {
    let r = mlcc(&["match", &data("incompatible.book"), "--oracle"]);
    assert_eq!(r.code, 0);
    assert!(!r.stdout.contains("trade "));
    assert!(r.stdout.contains("total 0"));
}

#[test]
fn match_unsorted_book_names_the_pair() {
    let r = mlcc(&["match", &data("unsorted.book")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("not sorted"), "{}", r.stderr);
    assert!(r.stderr.contains("0") && r.stderr.contains("1"));
}

#[test]
fn scenario_happy_path_and_reverts_are_green() {
    for s in ["happy_path", "guards", "recording", "multi_trade", "stipend_seller"] {
        let r = mlcc(&["scenario", &repo(&format!("corpus/scenarios/{s}.json")), "--mode", "both"]);
        assert_eq!(r.code, 0, "{s}: {}{}", r.stdout, r.stderr);
        assert!(r.stdout.trim_end().ends_with("PASS"));
    }
}

#[test]
fn scenario_injected_fault_is_step_mismatch() {
    let r = mlcc(&[
        "scenario",
        &repo("corpus/scenarios/guards.json"),
        "--inject-fault",
        "ExistingSmartMeter:OnlyOwner",
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("step 3"), "{}", r.stderr);
}

#[test]
fn scenario_json_report() {
    let r = mlcc(&["--json", "scenario", &repo("corpus/scenarios/happy_path.json"), "--mode", "native"]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["name"], "happy_path");
}

#[test]
fn usage_errors_exit_two_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let r = mlcc(&["--json", "--quiet", "compile", &repo("corpus/contracts/lists.mlc"), "-o", p(&out)]);
    assert_eq!(r.code, 2);
    assert!(!out.exists());
    assert_eq!(mlcc(&["scenario", "x.json", "--mode", "sideways"]).code, 2);
    assert_eq!(mlcc(&["frobnicate"]).code, 2);
    assert_eq!(mlcc(&["scenario", &repo("corpus/scenarios/guards.json"), "--inject-fault", "nocolon"]).code, 2);
}

#[test]
fn quiet_suppresses_success_output() {
    let r = mlcc(&["--quiet", "match", &data("worked_2x2.book")]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
}
