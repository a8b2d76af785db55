use std::path::PathBuf;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn corps(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_corps"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn on(cmd: &str, file: &str, rest: &[&str]) -> Run {
    let path = fixture(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(rest);
    corps(&args)
}

/// Splits a printed `replay: corps ...` line back into arguments.
fn replay_args(stdout: &str) -> Vec<String> {
    let line = stdout
        .lines()
        .find_map(|l| l.strip_prefix("replay: corps "))
        .expect("a replay line");
    let mut args = Vec::new();
    let mut rest = line;
    while !rest.is_empty() {
        rest = rest.trim_start();
        if let Some(quoted) = rest.strip_prefix('\'') {
            let end = quoted.find('\'').unwrap();
            args.push(quoted[..end].to_string());
            rest = &quoted[end + 1..];
        } else {
            let end = rest.find(' ').unwrap_or(rest.len());
            args.push(rest[..end].to_string());
            rest = &rest[end..];
        }
    }
    args
}

#[test]
fn check_prints_the_main_type() {
    let r = on("check", "p4.corps", &[]);
    assert_eq!((r.code, r.stdout.trim()), (0, "OK : [B] unit"));
}

#[test]
fn check_rejects_the_t_axiom_at_down() {
    let r = on("check", "t_axiom.corps", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("error[Down]"), "{}", r.stderr);
    assert!(r.stderr.contains("candown([], [A])"), "{}", r.stderr);
    assert!(r.stderr.contains("t_axiom.corps:2:"), "{}", r.stderr);
}

#[test]
fn topology_flag_overrides_the_header() {
    assert_eq!(
        on("check", "t_axiom.corps", &["--topology", "choreo"]).code,
        1
    );
    let r = on("check", "p4.corps", &["--topology", "doxastic"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("error[Send]"), "{}", r.stderr);
}

#[test]
fn derivation_reads_as_points_of_view() {
    let r = on("check", "p3.corps", &["--derivation"]);
    assert_eq!(r.code, 0);
    assert!(r
        .stdout
        .contains("Down: from [A]'s point of view, down [A] x : unit"));
    assert!(r.stdout.contains("Up: from [A]'s point of view"));
}

#[test]
fn missing_file_and_bad_usage_exit_4() {
    assert_eq!(on("check", "no_such.corps", &[]).code, 4);
    assert_eq!(corps(&["check"]).code, 4);
    assert_eq!(corps(&["frobnicate"]).code, 4);
    assert_eq!(on("check", "p4.corps", &["--topology", "nowhere"]).code, 4);
    assert_eq!(corps(&["--help"]).code, 0);
}

#[test]
fn parse_errors_exit_2_with_a_position() {
    let r = on("check", "syntax_error.corps", &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("syntax_error.corps:1:22"), "{}", r.stderr);
}

#[test]
fn normalize_in_both_modes() {
    let r = on("normalize", "p4.corps", &["--mode", "positive"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.lines().next(), Some("B.()"));
    let r = on("normalize", "p4.corps", &["--mode", "comm-free"]);
    assert_eq!(r.stdout.lines().next(), Some("send A.() to [B]"));
    assert!(r.stdout.contains("CommNeutral"));
    assert_eq!(on("normalize", "p4.corps", &["--fuel", "0"]).code, 4);
}

#[test]
fn normalize_writes_a_step_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("steps.jsonl");
    let r = on(
        "normalize",
        "p3.corps",
        &["--trace", trace.to_str().unwrap()],
    );
    assert_eq!(r.code, 0);
    let rules: Vec<String> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["rule"].to_string())
        .collect();
    assert_eq!(rules, ["\"up\"", "\"modal-let\"", "\"down\""]);
}

#[test]
fn project_single_addresses_and_all() {
    assert_eq!(
        on("project", "p4.corps", &["--agent", "[A]"]).stdout.trim(),
        "send_to [B] ()"
    );
    assert_eq!(
        on("project", "p4.corps", &["--agent", "B"]).stdout.trim(),
        "recv_from [A]"
    );
    assert_eq!(
        on("project", "p4.corps", &["--agent", "[C]"]).stdout.trim(),
        "skip"
    );
    let all = on("project", "p4.corps", &["--all"]);
    assert_eq!(all.stdout.lines().count(), 3);
    assert_eq!(on("project", "p4.corps", &[]).code, 4);
}

#[test]
fn merge_conflict_exits_1_with_the_site() {
    let r = on("project", "merge_conflict.corps", &["--all"]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.contains("branches disagree at [A.A]"),
        "{}",
        r.stderr
    );
    assert!(r.stderr.contains("merge_conflict.corps:2:"), "{}", r.stderr);
}

#[test]
fn simulate_agrees_on_the_send_program() {
    let r = on("simulate", "p4.corps", &["--runs", "50"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("AGREE: 51 schedules yield () at [B]"));
}

#[test]
fn simulate_writes_a_json_lines_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.jsonl");
    let r = on(
        "simulate",
        "p4.corps",
        &["--schedule", "rr", "--trace", trace.to_str().unwrap()],
    );
    assert_eq!(r.code, 0);
    let events: Vec<serde_json::Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let send = events.iter().find(|e| e["action"] == "Send").unwrap();
    assert_eq!(
        (&send["address"], &send["peer"]),
        (&"[A]".into(), &"[B]".into())
    );
    assert_eq!(events.iter().filter(|e| e["action"] == "Recv").count(), 1);
}

#[test]
fn cyclic_network_deadlocks_with_a_replay_line() {
    let net = fixture("cyclic.json");
    let r = corps(&["simulate", "--network", net.to_str().unwrap()]);
    assert_eq!(r.code, 3);
    assert!(
        r.stdout.contains("waiting: [A] -> [B] [B] -> [A]"),
        "{}",
        r.stdout
    );
    let again = corps(
        &replay_args(&r.stdout)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    assert_eq!(again.code, 3);
    assert_eq!(again.stdout, r.stdout);
}

#[test]
fn emitted_network_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    assert_eq!(
        on(
            "project",
            "p3.corps",
            &["--all", "--emit", net.to_str().unwrap()]
        )
        .code,
        0
    );
    let r = corps(&["simulate", "--network", net.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("[A] = ()"));
}

#[test]
fn simulate_needs_a_closed_program() {
    assert_eq!(on("simulate", "ni_secure.corps", &[]).code, 4);
}

#[test]
fn ni_verdicts() {
    let r = on("ni", "ni_secure.corps", &["--observe", "[A]"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("Secure"), "{}", r.stdout);
    let r = on("ni", "ni_flow.corps", &["--observe", "[A]"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("FlowPermitted"), "{}", r.stdout);
}

#[test]
fn forced_interference_replays() {
    let r = on("ni", "ni_flow.corps", &["--observe", "[A]", "--force"]);
    assert_eq!(r.code, 3);
    assert!(r.stdout.starts_with("InterferenceFound"));
    let again = corps(
        &replay_args(&r.stdout)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    assert_eq!(again.code, 3);
    assert_eq!(again.stdout, r.stdout);
}

#[test]
fn output_is_deterministic() {
    for args in [
        ["--observe", "[A]", "--seed", "9"],
        ["--observe", "[A]", "--trials", "3"],
    ] {
        assert_eq!(
            on("ni", "ni_secure.corps", &args).stdout,
            on("ni", "ni_secure.corps", &args).stdout
        );
    }
    assert_eq!(
        on("simulate", "p3.corps", &["--seed", "4"]).stdout,
        on("simulate", "p3.corps", &["--seed", "4"]).stdout
    );
}
