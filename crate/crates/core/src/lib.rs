//! A hierarchical choreographic calculus: syntax, typechecking, evaluation,
//! endpoint projection and a message-passing network simulator.
#![allow(clippy::result_large_err)]

pub mod gen;
pub mod netsim;
pub mod nicheck;
pub mod normalize;
pub mod parser;
pub mod pretty;
pub mod project;
pub mod syntax;
pub mod topology;
pub mod typecheck;

pub use netsim::{epp_agreement, run, SchedulerPolicy};
pub use nicheck::{ni_check, NiConfig, Verdict};
pub use normalize::{normalize, EvalMode, NormalFormClass};
pub use parser::{parse_expr, parse_path, parse_program, parse_type, ParseError};
pub use pretty::pretty_print;
pub use project::{project, project_network, LocalExpr, Network};
pub use syntax::{
    expr_equal, locks_of, normalize_context, path_concat, program_equal, substitute, Agent, Entry,
    Expr, ExprKind, GenAgent, Program, Span, TypeExpr, TypingContext,
};
pub use topology::{
    flow_reachable, load_preset, load_topology, parse_topology, relation_holds, resolve_topology,
    RelationKind, Topology,
};
pub use typecheck::{check, check_program, infer, CheckedProgram, Rule, TypeError};
