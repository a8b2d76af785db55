mod common;

use corps::netsim::{
    check_deadlock_free, epp_agreement, run, standard_schedules, Action, SchedulerPolicy,
};
use corps::nicheck::{ni_check, parse_values, NiConfig, Verdict};
use corps::normalize::{normalize, EvalMode, NormalFormClass};
use corps::project::{project, project_network, LocalExpr, ProjectError};
use corps::typecheck::{check_program, CheckedProgram, Rule};
use corps::{parse_program, resolve_topology, GenAgent};

use common::tests_dir;

fn load(name: &str) -> CheckedProgram {
    let dir = tests_dir().join("programs");
    let text = std::fs::read_to_string(dir.join(name)).unwrap();
    let p = parse_program(&text).unwrap();
    let topo = resolve_topology(p.topology.as_ref(), Some(&dir)).unwrap();
    check_program(&p, &topo).unwrap_or_else(|e| panic!("{name}: {}", e[0]))
}

fn at(path: &str) -> GenAgent {
    GenAgent::from_dotted(path).unwrap()
}

#[test]
fn send_program_checks_and_normalizes() {
    let p = load("p4.corps");
    assert_eq!(p.main_ty.to_string(), "[B] unit");
    let pos = normalize(EvalMode::PositiveComm, &p.closed_main(), 100).unwrap();
    assert_eq!(pos.term.to_string(), "B.()");
    assert_eq!(pos.class, NormalFormClass::Value);
    let free = normalize(EvalMode::CommFree, &p.closed_main(), 100).unwrap();
    assert_eq!(free.term.to_string(), "send A.() to [B]");
    assert_eq!(free.class, NormalFormClass::CommNeutral);
}

#[test]
fn send_program_projects_to_a_message_pair() {
    let p = load("p4.corps");
    assert_eq!(project(&p, &at("A")).unwrap().to_string(), "send_to [B] ()");
    assert_eq!(project(&p, &at("B")).unwrap().to_string(), "recv_from [A]");
    assert_eq!(project(&p, &GenAgent::root()).unwrap(), LocalExpr::Skip);
    assert_eq!(project(&p, &at("C")).unwrap(), LocalExpr::Skip);
    let net = project_network(&p).unwrap();
    let addrs: Vec<String> = net.addresses().map(ToString::to_string).collect();
    assert_eq!(addrs, ["[]", "[A]", "[B]"]);
    assert_eq!(net.result_address, at("B"));
}

#[test]
fn send_program_runs_with_one_message() {
    let net = project_network(&load("p4.corps")).unwrap();
    let res = run(&net, SchedulerPolicy::RoundRobin, 1000).unwrap();
    assert_eq!(res.finals[&at("B")], LocalExpr::Unit);
    assert_eq!(res.finals[&at("A")], LocalExpr::Skip);
    let count = |a| res.trace.iter().filter(|e| e.action == a).count();
    assert_eq!((count(Action::Send), count(Action::Recv)), (1, 1));
}

#[test]
fn send_program_agrees_under_all_schedules() {
    let report = epp_agreement(&load("p4.corps"), &standard_schedules(1, 50), 1000).unwrap();
    assert!(report.agreed());
    assert_eq!(report.outcomes.len(), 51);
}

#[test]
fn self_down_is_a_two_message_chain() {
    let p = load("p3.corps");
    let net = project_network(&p).unwrap();
    assert_eq!(net.result_address, at("A"));
    let res = run(&net, SchedulerPolicy::RoundRobin, 1000).unwrap();
    let sends: Vec<(String, String)> = res
        .trace
        .iter()
        .filter(|e| e.action == Action::Send)
        .map(|e| (e.address.to_string(), e.peer.as_ref().unwrap().to_string()))
        .collect();
    assert_eq!(
        sends,
        [
            ("[A]".into(), "[A.A]".into()),
            ("[A.A]".into(), "[A]".into())
        ]
    );
    assert!(epp_agreement(&p, &standard_schedules(1, 50), 1000)
        .unwrap()
        .agreed());
    assert!(check_deadlock_free(&p, 20, 3).unwrap().is_deadlock_free());
}

#[test]
fn pure_program_has_no_communication() {
    let net = project_network(&load("pure.corps")).unwrap();
    assert!(net.processes.values().all(|l| !l.communicates()));
    assert_eq!(net.processes[&at("A")], LocalExpr::Unit);
}

#[test]
fn t_axiom_is_rejected_at_down() {
    let dir = tests_dir().join("programs");
    let p = parse_program(&std::fs::read_to_string(dir.join("t_axiom.corps")).unwrap()).unwrap();
    let topo = resolve_topology(p.topology.as_ref(), Some(&dir)).unwrap();
    let errs = check_program(&p, &topo).unwrap_err();
    assert_eq!(errs[0].rule, Rule::Down);
    assert_eq!(
        errs[0].query.as_ref().unwrap().to_string(),
        "candown([], [A])"
    );
}

#[test]
fn knowledge_of_choice_violation_is_not_projectable() {
    let p = load("merge_conflict.corps");
    assert!(matches!(
        project_network(&p),
        Err(ProjectError::MergeConflict { .. })
    ));
    assert!(epp_agreement(&p, &standard_schedules(1, 2), 1000).is_err());
}

#[test]
fn unrelated_observer_is_secure() {
    let p = load("ni_secure.corps");
    let values = parse_values("B.(inl () : unit + unit), B.(inr () : unit + unit)").unwrap();
    let verdict = ni_check(&p, &NiConfig::new("b", at("A"), values)).unwrap();
    assert!(matches!(verdict, Verdict::Secure { .. }), "{verdict}");
}

#[test]
fn direct_edge_permits_flow() {
    let p = load("ni_flow.corps");
    let values = parse_values("B.(inl () : unit + unit), B.(inr () : unit + unit)").unwrap();
    let verdict = ni_check(&p, &NiConfig::new("b", at("A"), values)).unwrap();
    assert!(
        matches!(verdict, Verdict::FlowPermitted { .. }),
        "{verdict}"
    );
}
