use std::collections::{BTreeMap, VecDeque};

use proptest::prelude::*;

use corps::gen::ProgramGen;
use corps::netsim::{run, Action, SchedulerPolicy, TraceEvent};
use corps::normalize::{normalize, EvalMode, NormalFormClass};
use corps::project::project_network;
use corps::syntax::{Entry, TopologyRef};
use corps::typecheck::{check, check_program, infer};
use corps::{
    expr_equal, load_preset, locks_of, normalize_context, parse_expr, path_concat, substitute,
    Agent, GenAgent, Topology, TypeExpr, TypingContext,
};

fn path() -> impl Strategy<Value = GenAgent> {
    prop::collection::vec(prop::sample::select(vec!["A", "B", "C", "D"]), 0..5)
        .prop_map(|names| GenAgent::new(names.into_iter().map(Agent::new).collect()))
}

fn entry() -> impl Strategy<Value = Entry> {
    prop_oneof![
        path().prop_map(Entry::Lock),
        (prop::sample::select(vec!["x", "y"]), path()).prop_map(|(n, tag)| Entry::Binding {
            name: n.into(),
            ty: TypeExpr::Unit,
            tag,
        }),
    ]
}

fn preset() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["doxastic", "choreo", "siblings"])
}

fn program_at(preset: &str, seed: u64) -> (Topology, corps::Program) {
    let topo = load_preset(preset).unwrap();
    let p = ProgramGen::new(&topo, seed).program(Some(TopologyRef::Preset(preset.into())));
    (topo, p)
}

proptest! {
    #[test]
    fn concat_is_a_monoid(a in path(), b in path(), c in path()) {
        let root = GenAgent::root();
        prop_assert_eq!(path_concat(&a, &root), a.clone());
        prop_assert_eq!(path_concat(&root, &a), a.clone());
        prop_assert_eq!(
            path_concat(&path_concat(&a, &b), &c),
            path_concat(&a, &path_concat(&b, &c))
        );
    }

    #[test]
    fn strip_prefix_inverts_concat(a in path(), b in path()) {
        let ab = path_concat(&a, &b);
        prop_assert!(a.is_prefix_of(&ab));
        prop_assert_eq!(ab.strip_prefix(&a), Some(b));
    }

    #[test]
    fn dotted_form_round_trips(a in path()) {
        prop_assert_eq!(GenAgent::from_dotted(&a.dotted()), Some(a));
    }

    #[test]
    fn context_normalization_keeps_locks(entries in prop::collection::vec(entry(), 0..8)) {
        let ctx = TypingContext::from_entries(entries);
        let norm = normalize_context(&ctx);
        prop_assert_eq!(locks_of(&norm), locks_of(&ctx));
        prop_assert!(norm.is_canonical());
        prop_assert_eq!(normalize_context(&norm), norm.clone());
        let usable = |c: &TypingContext, x: &str| c.lookup(x).ok().cloned();
        prop_assert_eq!(usable(&norm, "x"), usable(&ctx, "x"));
        prop_assert_eq!(usable(&norm, "y"), usable(&ctx, "y"));
    }

    #[test]
    fn substituting_an_absent_variable_is_identity(p in preset(), seed in any::<u64>()) {
        let (_, prog) = program_at(p, seed);
        let v = parse_expr("()").unwrap();
        let e = &prog.main;
        prop_assert!(expr_equal(&substitute(e, "fresh_var", &v), e));
    }

    #[test]
    fn substitution_removes_the_variable(p in preset(), seed in any::<u64>()) {
        let (_, prog) = program_at(p, seed);
        let v = parse_expr("()").unwrap();
        for x in prog.main.free_vars() {
            let after = substitute(&prog.main, &x, &v);
            let mut expected = prog.main.free_vars();
            expected.remove(&x);
            prop_assert_eq!(after.free_vars(), expected);
        }
    }

    #[test]
    fn alpha_equality_respects_substitution(seed in any::<u64>()) {
        let e1 = parse_expr("fun a -> (a, z)").unwrap();
        let e2 = parse_expr("fun b -> (b, z)").unwrap();
        prop_assert!(expr_equal(&e1, &e2));
        let v = if seed % 2 == 0 { parse_expr("()").unwrap() } else { parse_expr("inl ()").unwrap() };
        prop_assert!(expr_equal(&substitute(&e1, "z", &v), &substitute(&e2, "z", &v)));
        prop_assert!(expr_equal(&substitute(&e1, "a", &v), &e1));
    }

    #[test]
    fn inferred_types_check(p in preset(), seed in any::<u64>()) {
        let (topo, prog) = program_at(p, seed);
        let checked = check_program(&prog, &topo).unwrap();
        let main = checked.closed_main();
        let ctx = TypingContext::new();
        let ty = infer(&topo, &ctx, &main).unwrap();
        prop_assert_eq!(&ty, &checked.main_ty);
        prop_assert!(check(&topo, &ctx, &main, &ty).is_ok());
    }

    #[test]
    fn normalization_is_deterministic(p in preset(), seed in any::<u64>()) {
        let (topo, prog) = program_at(p, seed);
        let main = check_program(&prog, &topo).unwrap().closed_main();
        for mode in [EvalMode::CommFree, EvalMode::PositiveComm] {
            let a = normalize(mode, &main, 100_000).unwrap();
            let b = normalize(mode, &main, 100_000).unwrap();
            prop_assert!(expr_equal(&a.term, &b.term));
            prop_assert_eq!(a.steps, b.steps);
        }
    }

    #[test]
    fn simulation_is_reproducible(p in preset(), seed in any::<u64>(), sched in any::<u64>()) {
        let (topo, prog) = program_at(p, seed);
        let checked = check_program(&prog, &topo).unwrap();
        if let Ok(net) = project_network(&checked) {
            let a = run(&net, SchedulerPolicy::Random(sched), 100_000);
            let b = run(&net, SchedulerPolicy::Random(sched), 100_000);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.trace, b.trace);
                    prop_assert_eq!(a.finals, b.finals);
                }
                (Err(a), Err(b)) => prop_assert_eq!(a.trace(), b.trace()),
                (a, b) => prop_assert!(false, "outcomes differ: {:?} / {:?}", a.is_ok(), b.is_ok()),
            }
        }
    }

    #[test]
    fn channels_are_fifo_and_conserve_messages(p in preset(), seed in any::<u64>(), sched in any::<u64>()) {
        let (topo, prog) = program_at(p, seed);
        let checked = check_program(&prog, &topo).unwrap();
        if let Ok(net) = project_network(&checked) {
            if let Ok(res) = run(&net, SchedulerPolicy::Random(sched), 100_000) {
                fifo_holds(&res.trace)?;
            }
        }
    }

    #[test]
    fn beliefs_cannot_be_extracted_without_down(seed in any::<u64>()) {
        let topo = load_preset("doxastic").unwrap();
        let mut g = ProgramGen::new(&topo, seed);
        let ty = corps::parse_type("[A] (unit + unit) -> unit + unit").unwrap();
        let ctx = TypingContext::new();
        let mut candidates: Vec<_> = (0..6).filter_map(|_| g.term(&ctx, &ty, 6)).collect();
        candidates.extend((0..20).map(|_| g.untyped_expr(5)));
        for f in candidates {
            if check(&topo, &ctx, &f, &ty).is_err() {
                continue;
            }
            let apply = |arg: &str| {
                let e = corps::Expr::app(
                    corps::Expr::annot(f.clone(), ty.clone()),
                    parse_expr(arg).unwrap(),
                );
                normalize(EvalMode::PositiveComm, &e, 100_000).unwrap()
            };
            let l = apply("A.(inl () : unit + unit)");
            let r = apply("A.(inr () : unit + unit)");
            if l.class != NormalFormClass::Value || r.class != NormalFormClass::Value {
                continue;
            }
            let (l, r) = (l.term, r.term);
            prop_assert!(expr_equal(&l, &r), "{} distinguishes A's beliefs: {} vs {}", f, l, r);
        }
    }
}

fn fifo_holds(trace: &[TraceEvent]) -> Result<(), TestCaseError> {
    let mut channels: BTreeMap<(GenAgent, GenAgent), VecDeque<Option<String>>> = BTreeMap::new();
    let (mut sent, mut received) = (0, 0);
    for ev in trace {
        match ev.action {
            Action::Send => {
                sent += 1;
                let to = ev.peer.clone().unwrap();
                channels
                    .entry((ev.address.clone(), to))
                    .or_default()
                    .push_back(ev.payload.clone());
            }
            Action::Recv => {
                received += 1;
                let from = ev.peer.clone().unwrap();
                let queue = channels.entry((from, ev.address.clone())).or_default();
                prop_assert_eq!(queue.pop_front(), Some(ev.payload.clone()));
            }
            _ => {}
        }
    }
    prop_assert_eq!(sent, received);
    prop_assert!(channels.values().all(VecDeque::is_empty));
    Ok(())
}
