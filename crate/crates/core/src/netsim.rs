//! Interleaving simulator for projected networks.
//!
//! Sends are asynchronous and never block; receives block on an empty FIFO
//! channel. Each scheduler step picks one enabled process and performs its
//! leftmost call-by-value redex.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::normalize::{normalize, EvalMode, NormalFormClass};
use crate::project::{
    alpha_eq_local, project_network, simplify, subst_local, value_share, LocalExpr, Network,
    ProjectError,
};
use crate::syntax::GenAgent;
use crate::typecheck::CheckedProgram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchedulerPolicy {
    RoundRobin,
    Random(u64),
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerPolicy::RoundRobin => f.write_str("round-robin"),
            SchedulerPolicy::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    /// `round-robin`, `random:SEED`, or `random` (seed 0).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "round-robin" | "rr" => Ok(SchedulerPolicy::RoundRobin),
            "random" => Ok(SchedulerPolicy::Random(0)),
            other => other
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(SchedulerPolicy::Random)
                .ok_or_else(|| format!("unknown schedule `{other}` (round-robin or random:SEED)")),
        }
    }
}

/// RoundRobin followed by `Random(seed0)` .. `Random(seed0 + n - 1)`.
pub fn standard_schedules(seed0: u64, n: u64) -> Vec<SchedulerPolicy> {
    std::iter::once(SchedulerPolicy::RoundRobin)
        .chain((seed0..seed0 + n).map(SchedulerPolicy::Random))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    LocalStep,
    Send,
    Recv,
    Blocked,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub address: GenAgent,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peer: Option<GenAgent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

pub fn write_trace_jsonl(trace: &[TraceEvent], mut w: impl Write) -> io::Result<()> {
    for ev in trace {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadlockReport {
    /// Blocked process -> the address it waits on.
    pub waiting: BTreeMap<GenAgent, GenAgent>,
    pub cycle: Option<Vec<GenAgent>>,
    pub residuals: BTreeMap<GenAgent, LocalExpr>,
}

impl fmt::Display for DeadlockReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "deadlock; waiting:")?;
        for (w, on) in &self.waiting {
            write!(f, " {w} -> {on}")?;
        }
        if let Some(c) = &self.cycle {
            let names: Vec<String> = c.iter().map(ToString::to_string).collect();
            write!(f, "; cycle: {}", names.join(" -> "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Error)]
pub enum RunError {
    #[error("{report}")]
    Deadlock {
        report: DeadlockReport,
        trace: Vec<TraceEvent>,
    },
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted {
        steps: usize,
        trace: Vec<TraceEvent>,
    },
    #[error("process {address} is stuck at `{term}`")]
    Stuck {
        address: GenAgent,
        term: LocalExpr,
        trace: Vec<TraceEvent>,
    },
    #[error("all processes finished with {count} undelivered message(s)")]
    Undelivered {
        count: usize,
        trace: Vec<TraceEvent>,
    },
}

impl RunError {
    pub fn trace(&self) -> &[TraceEvent] {
        match self {
            RunError::Deadlock { trace, .. }
            | RunError::FuelExhausted { trace, .. }
            | RunError::Stuck { trace, .. }
            | RunError::Undelivered { trace, .. } => trace,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub finals: BTreeMap<GenAgent, LocalExpr>,
    pub trace: Vec<TraceEvent>,
    pub steps: usize,
}

/// What a process's next redex needs.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Peek {
    Value,
    Local,
    Send,
    Recv(GenAgent),
    Stuck,
}

fn peek(e: &LocalExpr) -> Peek {
    use LocalExpr as L;
    // leftmost non-value child in evaluation order, if any
    let first_pending = |cs: &[&LocalExpr]| cs.iter().find(|c| !c.is_value()).map(|c| peek(c));
    match e {
        L::Unit | L::Skip | L::Lam(..) => Peek::Value,
        L::Var(_) => Peek::Stuck,
        L::RecvFrom(src) => Peek::Recv(src.clone()),
        L::Pair(a, b) => first_pending(&[a, b]).unwrap_or(Peek::Value),
        L::Inl(v) | L::Inr(v) => first_pending(&[v]).unwrap_or(Peek::Value),
        L::App(f, a) => first_pending(&[f, a]).unwrap_or(match **f {
            L::Lam(..) | L::Skip => Peek::Local,
            _ => Peek::Stuck,
        }),
        L::Fst(p) | L::Snd(p) => first_pending(&[p]).unwrap_or(match **p {
            L::Pair(..) | L::Skip => Peek::Local,
            _ => Peek::Stuck,
        }),
        L::Case { scrut, .. } => first_pending(&[scrut]).unwrap_or(match **scrut {
            L::Inl(_) | L::Inr(_) => Peek::Local,
            _ => Peek::Stuck,
        }),
        L::Absurd(v) => first_pending(&[v]).unwrap_or(Peek::Stuck),
        L::Let { bound: a, .. } | L::Seq(a, _) => first_pending(&[a]).unwrap_or(Peek::Local),
        L::SendTo { payload, .. } => first_pending(&[payload]).unwrap_or(Peek::Send),
    }
}

/// Communication performed by a step.
enum Effect {
    Internal,
    Sent(GenAgent, LocalExpr),
    Received(GenAgent, LocalExpr),
}

/// Performs the redex `peek` found. `recv` is only consulted for a receive
/// that `peek` reported as ready.
fn reduce(e: &LocalExpr, recv: &mut dyn FnMut(&GenAgent) -> LocalExpr) -> (LocalExpr, Effect) {
    use LocalExpr as L;
    let bx = Box::new;
    macro_rules! sub {
        ($child:expr, $rebuild:expr) => {{
            let (n, eff) = reduce($child, recv);
            #[allow(clippy::redundant_closure_call)]
            return ($rebuild(bx(n)), eff);
        }};
    }
    match e {
        L::RecvFrom(src) => {
            let v = recv(src);
            (v.clone(), Effect::Received(src.clone(), v))
        }
        L::Pair(a, b) if !a.is_value() => sub!(a, |n| L::Pair(n, b.clone())),
        L::Pair(a, b) => sub!(b, |n| L::Pair(a.clone(), n)),
        L::Inl(v) => sub!(v, L::Inl),
        L::Inr(v) => sub!(v, L::Inr),
        L::Absurd(v) => sub!(v, L::Absurd),
        L::App(f, a) if !f.is_value() => sub!(f, |n| L::App(n, a.clone())),
        L::App(f, a) if !a.is_value() => sub!(a, |n| L::App(f.clone(), n)),
        L::App(f, a) => match &**f {
            L::Lam(x, body) => (subst_local(body, x, a), Effect::Internal),
            _ => (L::Skip, Effect::Internal),
        },
        L::Fst(p) | L::Snd(p) if !p.is_value() => {
            let fst = matches!(e, L::Fst(_));
            sub!(p, |n| if fst { L::Fst(n) } else { L::Snd(n) })
        }
        L::Fst(p) | L::Snd(p) => match &**p {
            L::Pair(a, b) => {
                let out = if matches!(e, L::Fst(_)) { a } else { b };
                ((**out).clone(), Effect::Internal)
            }
            _ => (L::Skip, Effect::Internal),
        },
        L::Case { scrut, left, right } if !scrut.is_value() => sub!(scrut, |n| L::Case {
            scrut: n,
            left: left.clone(),
            right: right.clone(),
        }),
        L::Case { scrut, left, right } => match &**scrut {
            L::Inl(v) => (subst_local(&left.1, &left.0, v), Effect::Internal),
            L::Inr(v) => (subst_local(&right.1, &right.0, v), Effect::Internal),
            _ => unreachable!("peek reported a case redex"),
        },
        L::Let { name, bound, body } if !bound.is_value() => sub!(bound, |n| L::Let {
            name: name.clone(),
            bound: n,
            body: body.clone(),
        }),
        L::Let { name, bound, body } => (subst_local(body, name, bound), Effect::Internal),
        L::Seq(a, b) if !a.is_value() => sub!(a, |n| L::Seq(n, b.clone())),
        L::Seq(_, b) => ((**b).clone(), Effect::Internal),
        L::SendTo { dest, payload } if !payload.is_value() => sub!(payload, |n| L::SendTo {
            dest: dest.clone(),
            payload: n,
        }),
        L::SendTo { dest, payload } => (L::Skip, Effect::Sent(dest.clone(), (**payload).clone())),
        L::Unit | L::Skip | L::Lam(..) | L::Var(_) => unreachable!("reduce on a non-redex"),
    }
}

struct Machine {
    addrs: Vec<GenAgent>,
    procs: Vec<LocalExpr>,
    done: Vec<bool>,
    queues: BTreeMap<(GenAgent, GenAgent), VecDeque<LocalExpr>>,
    trace: Vec<TraceEvent>,
}

impl Machine {
    fn event(&mut self, i: usize, action: Action, peer: Option<GenAgent>, payload: Option<String>) {
        self.trace.push(TraceEvent {
            step: self.trace.len(),
            address: self.addrs[i].clone(),
            action,
            peer,
            payload,
        });
    }

    fn queue_len(&self, src: &GenAgent, dst: &GenAgent) -> usize {
        self.queues
            .get(&(src.clone(), dst.clone()))
            .map_or(0, VecDeque::len)
    }

    fn mark_done(&mut self) {
        for i in 0..self.procs.len() {
            if !self.done[i] && self.procs[i].is_value() {
                self.done[i] = true;
                self.event(i, Action::Done, None, None);
            }
        }
    }
}

/// Runs `net` to completion under `policy`, for at most `fuel` process steps.
pub fn run(net: &Network, policy: SchedulerPolicy, fuel: usize) -> Result<RunResult, RunError> {
    let mut m = Machine {
        addrs: net.processes.keys().cloned().collect(),
        procs: net.processes.values().cloned().collect(),
        done: vec![false; net.processes.len()],
        queues: BTreeMap::new(),
        trace: Vec::new(),
    };
    let mut rng = match policy {
        SchedulerPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        SchedulerPolicy::RoundRobin => None,
    };
    let mut cursor = 0;
    let mut steps = 0;
    m.mark_done();
    loop {
        let mut enabled = Vec::new();
        let mut waiting = BTreeMap::new();
        for i in 0..m.procs.len() {
            match peek(&m.procs[i]) {
                Peek::Value => {}
                Peek::Local | Peek::Send => enabled.push(i),
                Peek::Recv(src) => {
                    if m.queue_len(&src, &m.addrs[i]) > 0 {
                        enabled.push(i);
                    } else {
                        waiting.insert(i, src);
                    }
                }
                Peek::Stuck => {
                    return Err(RunError::Stuck {
                        address: m.addrs[i].clone(),
                        term: m.procs[i].clone(),
                        trace: m.trace,
                    })
                }
            }
        }
        if enabled.is_empty() {
            if waiting.is_empty() {
                let count = m.queues.values().map(VecDeque::len).sum();
                if count > 0 {
                    return Err(RunError::Undelivered {
                        count,
                        trace: m.trace,
                    });
                }
                let finals = m.addrs.into_iter().zip(m.procs).collect();
                return Ok(RunResult {
                    finals,
                    trace: m.trace,
                    steps,
                });
            }
            for (&i, src) in &waiting {
                m.event(i, Action::Blocked, Some(src.clone()), None);
            }
            let waiting: BTreeMap<GenAgent, GenAgent> = waiting
                .into_iter()
                .map(|(i, src)| (m.addrs[i].clone(), src))
                .collect();
            let report = DeadlockReport {
                cycle: find_cycle(&waiting),
                waiting,
                residuals: m
                    .addrs
                    .iter()
                    .cloned()
                    .zip(m.procs.iter().cloned())
                    .collect(),
            };
            return Err(RunError::Deadlock {
                report,
                trace: m.trace,
            });
        }
        if steps == fuel {
            return Err(RunError::FuelExhausted {
                steps,
                trace: m.trace,
            });
        }
        let i = match rng.as_mut() {
            Some(rng) => enabled[rng.gen_range(0..enabled.len())],
            None => {
                let n = m.procs.len();
                let pick = (0..n)
                    .map(|k| (cursor + k) % n)
                    .find(|j| enabled.contains(j))
                    .expect("some process is enabled");
                cursor = (pick + 1) % n;
                pick
            }
        };
        steps += 1;
        let me = m.addrs[i].clone();
        let queues = &mut m.queues;
        let (next, effect) = reduce(&m.procs[i], &mut |src| {
            queues
                .get_mut(&(src.clone(), me.clone()))
                .and_then(VecDeque::pop_front)
                .expect("peek saw a message")
        });
        m.procs[i] = next;
        match effect {
            Effect::Internal => m.event(i, Action::LocalStep, None, None),
            Effect::Sent(dst, v) => {
                let text = v.to_string();
                m.queues.entry((me, dst.clone())).or_default().push_back(v);
                m.event(i, Action::Send, Some(dst), Some(text));
            }
            Effect::Received(src, v) => m.event(i, Action::Recv, Some(src), Some(v.to_string())),
        }
        m.mark_done();
    }
}

/// Follows the waits-for edges; every blocked process waits on exactly one.
fn find_cycle(waiting: &BTreeMap<GenAgent, GenAgent>) -> Option<Vec<GenAgent>> {
    for start in waiting.keys() {
        let mut path: Vec<&GenAgent> = vec![start];
        let mut cur = start;
        while let Some(next) = waiting.get(cur) {
            if let Some(pos) = path.iter().position(|p| *p == next) {
                return Some(path[pos..].iter().map(|g| (*g).clone()).collect());
            }
            path.push(next);
            cur = next;
        }
    }
    None
}

#[derive(Clone, Debug, Error)]
pub enum AgreementError {
    #[error(transparent)]
    NotProjectable(#[from] ProjectError),
    #[error("the program communicates functions: {0}")]
    FunctionPayload(String),
    #[error("the program has free inputs; substitute values first")]
    OpenProgram,
    #[error("the choreography does not normalize to a value: {0}")]
    NoValue(String),
}

#[derive(Clone, Debug)]
pub struct ScheduleOutcome {
    pub policy: SchedulerPolicy,
    pub result: Result<LocalExpr, RunError>,
    pub agrees: bool,
}

#[derive(Clone, Debug)]
pub struct AgreementReport {
    pub network: Network,
    pub expected: LocalExpr,
    pub outcomes: Vec<ScheduleOutcome>,
}

impl AgreementReport {
    pub fn agreed(&self) -> bool {
        self.outcomes.iter().all(|o| o.agrees)
    }

    pub fn deadlocks(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o.result, Err(RunError::Deadlock { .. })))
            .count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ScheduleOutcome> {
        self.outcomes.iter().filter(|o| !o.agrees)
    }
}

/// What the process at the result address should end with: its share of the
/// choreography's positive-mode normal form.
pub fn expected_result(p: &CheckedProgram, fuel: usize) -> Result<LocalExpr, AgreementError> {
    let main = p.closed_main();
    if !main.is_closed() {
        return Err(AgreementError::OpenProgram);
    }
    let nf = normalize(EvalMode::PositiveComm, &main, fuel)
        .map_err(|e| AgreementError::NoValue(e.to_string()))?;
    if nf.class != NormalFormClass::Value {
        return Err(AgreementError::NoValue(nf.term.to_string()));
    }
    value_share(&nf.term, &GenAgent::root(), &p.result_address())
        .ok_or_else(|| AgreementError::NoValue(nf.term.to_string()))
}

/// Projects `p`, runs the network under every policy, and compares the value
/// at the result address with the choreography's normal form.
pub fn epp_agreement(
    p: &CheckedProgram,
    schedules: &[SchedulerPolicy],
    fuel: usize,
) -> Result<AgreementReport, AgreementError> {
    let network = project_network(p)?;
    if let Some(f) = network.flagged.first() {
        return Err(AgreementError::FunctionPayload(f.clone()));
    }
    let expected = expected_result(p, fuel)?;
    let outcomes = schedules
        .iter()
        .map(|&policy| {
            let result = run(&network, policy, fuel).map(|r| {
                simplify(
                    r.finals
                        .get(&network.result_address)
                        .unwrap_or(&LocalExpr::Skip),
                )
            });
            let agrees = matches!(&result, Ok(v) if alpha_eq_local(v, &expected));
            ScheduleOutcome {
                policy,
                result,
                agrees,
            }
        })
        .collect();
    Ok(AgreementReport {
        network,
        expected,
        outcomes,
    })
}

#[derive(Clone, Debug, Default)]
pub struct DeadlockFreedomReport {
    pub trials: usize,
    pub deadlocks: Vec<(SchedulerPolicy, DeadlockReport, Vec<TraceEvent>)>,
    /// Runs that failed for another reason.
    pub other_failures: Vec<(SchedulerPolicy, String)>,
}

impl DeadlockFreedomReport {
    pub fn is_deadlock_free(&self) -> bool {
        self.deadlocks.is_empty()
    }
}

/// Runs `trials` random schedules seeded `seed0..`.
pub fn check_network_deadlock_free(
    net: &Network,
    trials: usize,
    seed0: u64,
    fuel: usize,
) -> DeadlockFreedomReport {
    let mut report = DeadlockFreedomReport {
        trials,
        ..Default::default()
    };
    for k in 0..trials as u64 {
        let policy = SchedulerPolicy::Random(seed0.wrapping_add(k));
        match run(net, policy, fuel) {
            Ok(_) => {}
            Err(RunError::Deadlock { report: d, trace }) => {
                report.deadlocks.push((policy, d, trace))
            }
            Err(other) => report.other_failures.push((policy, other.to_string())),
        }
    }
    report
}

pub const DEFAULT_FUEL: usize = 100_000;

pub fn check_deadlock_free(
    p: &CheckedProgram,
    trials: usize,
    seed0: u64,
) -> Result<DeadlockFreedomReport, ProjectError> {
    let net = project_network(p)?;
    Ok(check_network_deadlock_free(
        &net,
        trials,
        seed0,
        DEFAULT_FUEL,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::topology::load_preset;
    use crate::typecheck::check_program;
    use LocalExpr as L;

    fn checked(topo: &str, src: &str) -> CheckedProgram {
        check_program(&parse_program(src).unwrap(), &load_preset(topo).unwrap()).unwrap()
    }

    fn cyclic() -> Network {
        Network {
            processes: BTreeMap::from([
                (GenAgent::of(&["A"]), L::RecvFrom(GenAgent::of(&["B"]))),
                (GenAgent::of(&["B"]), L::RecvFrom(GenAgent::of(&["A"]))),
            ]),
            result_address: GenAgent::root(),
            flagged: vec![],
        }
    }

    #[test]
    fn single_message() {
        let p = checked("choreo", "main : [B] unit = send A.() to [B];");
        let net = project_network(&p).unwrap();
        let r = run(&net, SchedulerPolicy::RoundRobin, 100).unwrap();
        assert_eq!(r.finals[&GenAgent::of(&["B"])], L::Unit);
        assert_eq!(r.finals[&GenAgent::of(&["A"])], L::Skip);
        let count = |a| r.trace.iter().filter(|e| e.action == a).count();
        assert_eq!((count(Action::Send), count(Action::Recv)), (1, 1));
        assert_eq!(count(Action::Done), 3);
    }

    #[test]
    fn all_skip_network_finishes_immediately() {
        let net = Network {
            processes: BTreeMap::from([(GenAgent::root(), L::Skip)]),
            result_address: GenAgent::root(),
            flagged: vec![],
        };
        let r = run(&net, SchedulerPolicy::Random(3), 10).unwrap();
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn cyclic_wait_is_a_deadlock() {
        let err = run(&cyclic(), SchedulerPolicy::RoundRobin, 10).unwrap_err();
        let RunError::Deadlock { report, trace } = err else {
            panic!("expected deadlock")
        };
        assert_eq!(report.cycle.as_ref().map(Vec::len), Some(2));
        assert_eq!(report.waiting.len(), 2);
        assert!(trace.iter().all(|e| e.action == Action::Blocked));
        let r = check_network_deadlock_free(&cyclic(), 5, 0, 10);
        assert_eq!(r.deadlocks.len(), 5);
        assert!(check_network_deadlock_free(&cyclic(), 0, 0, 10)
            .deadlocks
            .is_empty());
    }

    #[test]
    fn agreement_on_small_programs() {
        for (topo, src) in [
            ("choreo", "main : [B] unit = send A.() to [B];"),
            (
                "doxastic",
                "main : [A] unit = let [] [A] x = A.(up [A] ()) in A.(down [A] x);",
            ),
            (
                "choreo",
                "main : [C] (unit * unit) = let [] [B] p = send A.((), ()) to [B] in \
                 send B.(fst p, snd p) to [C];",
            ),
        ] {
            let p = checked(topo, src);
            let rep = epp_agreement(&p, &standard_schedules(1, 50), 1000).unwrap();
            assert!(rep.agreed(), "{src}: {:?}", rep.failures().next());
        }
    }

    #[test]
    fn random_runs_are_reproducible() {
        let p = checked(
            "choreo",
            "main : [C] unit * [D] unit = (send A.() to [C], send B.() to [D]);",
        );
        let net = project_network(&p).unwrap();
        let a = run(&net, SchedulerPolicy::Random(7), 100).unwrap();
        let b = run(&net, SchedulerPolicy::Random(7), 100).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn fuel_is_enforced() {
        let p = checked("choreo", "main : [B] unit = send A.() to [B];");
        let net = project_network(&p).unwrap();
        assert!(matches!(
            run(&net, SchedulerPolicy::RoundRobin, 1),
            Err(RunError::FuelExhausted { .. })
        ));
    }

    #[test]
    fn function_payloads_are_refused() {
        let p = checked(
            "choreo",
            "main : [B] (unit -> unit) = send A.(fun x -> x : unit -> unit) to [B];",
        );
        assert!(matches!(
            epp_agreement(&p, &[SchedulerPolicy::RoundRobin], 100),
            Err(AgreementError::FunctionPayload(_))
        ));
    }

    #[test]
    fn policies_parse() {
        assert_eq!("round-robin".parse(), Ok(SchedulerPolicy::RoundRobin));
        assert_eq!("random:42".parse(), Ok(SchedulerPolicy::Random(42)));
        assert!("fifo".parse::<SchedulerPolicy>().is_err());
    }

    #[test]
    fn trace_json_fields() {
        let p = checked("choreo", "main : [B] unit = send A.() to [B];");
        let net = project_network(&p).unwrap();
        let r = run(&net, SchedulerPolicy::RoundRobin, 100).unwrap();
        let mut buf = Vec::new();
        write_trace_jsonl(&r.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let send = text.lines().find(|l| l.contains("\"Send\"")).unwrap();
        let v: serde_json::Value = serde_json::from_str(send).unwrap();
        assert_eq!(v["address"], "[A]");
        assert_eq!(v["peer"], "[B]");
        assert_eq!(v["payload"], "()");
    }
}
