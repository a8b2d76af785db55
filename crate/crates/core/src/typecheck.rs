//! Bidirectional typechecker (equivalently, proof checker).
//!
//! Besides the type, every successful judgment returns an *elaborated* term in
//! which each function, injection and `absurd` carries its checked type as an
//! annotation. Elaborated terms infer (not just check) their type, which keeps
//! them typeable after substitution during normalization.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{
    desugar_defs, Expr, ExprKind, GenAgent, LookupError, Program, Span, TypeExpr, TypingContext,
};
use crate::topology::{RelationKind, Topology};

/// The typing rule a judgment (or a rejection) belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    Axiom,
    BelievesI,
    BelievesE,
    Send,
    Up,
    Down,
    ArrowI,
    ArrowE,
    ProductI,
    ProductE,
    SumI,
    SumE,
    UnitI,
    VoidE,
    Annot,
    Conversion,
    Declaration,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationQuery {
    pub kind: RelationKind,
    pub from: GenAgent,
    pub to: GenAgent,
}

impl fmt::Display for RelationQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.from, self.to)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("[{rule}] {message} (viewpoint {viewpoint})")]
pub struct TypeError {
    pub rule: Rule,
    pub span: Option<Span>,
    pub viewpoint: GenAgent,
    pub message: String,
    pub query: Option<RelationQuery>,
}

/// One relation query issued during checking, with the viewpoint it was asked from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub query: RelationQuery,
    pub viewpoint: GenAgent,
    pub rule: Rule,
    pub held: bool,
}

/// A node of the typing derivation.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub viewpoint: GenAgent,
    pub term: Expr,
    pub ty: TypeExpr,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// Indented proof tree, one judgment per line, leaves last.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "{}{}: from {}'s point of view, {} : {}",
            "  ".repeat(depth),
            self.rule,
            self.viewpoint,
            self.term,
            self.ty
        );
        for p in &self.premises {
            p.render_into(out, depth + 1);
        }
    }
}

#[derive(Clone, Debug)]
pub struct Typed {
    pub ty: TypeExpr,
    pub term: Expr,
    pub derivation: Option<Derivation>,
}

pub struct Checker<'t> {
    topology: &'t Topology,
    record_derivation: bool,
    record_queries: bool,
    queries: Vec<QueryRecord>,
}

type TResult = Result<Typed, TypeError>;

impl<'t> Checker<'t> {
    pub fn new(topology: &'t Topology) -> Self {
        Checker {
            topology,
            record_derivation: false,
            record_queries: false,
            queries: Vec::new(),
        }
    }

    pub fn with_derivations(mut self) -> Self {
        self.record_derivation = true;
        self
    }

    pub fn with_query_log(mut self) -> Self {
        self.record_queries = true;
        self
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    fn error(&self, rule: Rule, e: &Expr, ctx: &TypingContext, message: String) -> TypeError {
        TypeError {
            rule,
            span: e.span,
            viewpoint: ctx.locks(),
            message,
            query: None,
        }
    }

    fn judge(
        &self,
        rule: Rule,
        ctx: &TypingContext,
        term: Expr,
        ty: TypeExpr,
        premises: Vec<Option<Derivation>>,
    ) -> Typed {
        let derivation = self.record_derivation.then(|| Derivation {
            rule,
            viewpoint: ctx.locks(),
            term: term.clone(),
            ty: ty.clone(),
            premises: premises.into_iter().flatten().collect(),
        });
        Typed {
            ty,
            term,
            derivation,
        }
    }

    /// Asks the topology; a failed query becomes a `rule` error.
    fn require(
        &mut self,
        rule: Rule,
        kind: RelationKind,
        from: GenAgent,
        to: GenAgent,
        e: &Expr,
        ctx: &TypingContext,
    ) -> Result<(), TypeError> {
        let held = self.topology.relation_holds(kind, &from, &to);
        let query = RelationQuery { kind, from, to };
        if self.record_queries {
            self.queries.push(QueryRecord {
                query: query.clone(),
                viewpoint: ctx.locks(),
                rule,
                held,
            });
        }
        if held {
            Ok(())
        } else {
            let mut err = self.error(rule, e, ctx, format!("{query} does not hold"));
            err.query = Some(query);
            Err(err)
        }
    }

    pub fn infer(&mut self, ctx: &TypingContext, e: &Expr) -> TResult {
        use ExprKind::*;
        let here = ctx.locks();
        match &e.kind {
            Var(x) => match ctx.lookup(x) {
                Ok(ty) => Ok(self.judge(Rule::Axiom, ctx, e.clone(), ty.clone(), vec![])),
                Err(LookupError::Unbound) => Err(self.error(
                    Rule::Axiom,
                    e,
                    ctx,
                    format!("unbound variable `{x}`"),
                )),
                Err(LookupError::LockMismatch { tag, locks }) => Err(self.error(
                    Rule::Axiom,
                    e,
                    ctx,
                    format!(
                        "`{x}` is held at {tag} relative to its binding, but the locks since its binding spell {locks}"
                    ),
                )),
            },
            Unit => Ok(self.judge(Rule::UnitI, ctx, e.clone(), TypeExpr::Unit, vec![])),
            Located(agent, body) => {
                let inner = self.infer(&ctx.with_lock(&GenAgent::new(vec![agent.clone()])), body)?;
                let ty = TypeExpr::believes(agent.clone(), inner.ty);
                let term = Expr::new(Located(agent.clone(), Box::new(inner.term)), e.span);
                Ok(self.judge(Rule::BelievesI, ctx, term, ty, vec![inner.derivation]))
            }
            ModalLet {
                outer,
                inner,
                name,
                bound,
                body,
            } => {
                let (b, payload_ty) = self.modal_bound(ctx, e, outer, inner, bound)?;
                let body_ctx = ctx.with_binding(name.clone(), payload_ty, outer.concat(inner));
                let d = self.infer(&body_ctx, body)?;
                let term = rebuild_let(e, b.term, d.term.clone());
                Ok(self.judge(
                    Rule::BelievesE,
                    ctx,
                    term,
                    d.ty,
                    vec![b.derivation, d.derivation],
                ))
            }
            Send { payload, dest } => {
                let p = self.infer(ctx, payload)?;
                let Some((source, inner)) = p.ty.split_stack(dest.len()) else {
                    return Err(self.error(
                        Rule::Send,
                        e,
                        ctx,
                        format!(
                            "payload of type {} does not carry {} modalities to match {dest}",
                            p.ty,
                            dest.len()
                        ),
                    ));
                };
                let inner = inner.clone();
                self.require(
                    Rule::Send,
                    RelationKind::CanSend,
                    here.concat(&source),
                    here.concat(dest),
                    e,
                    ctx,
                )?;
                let ty = TypeExpr::stack(dest, inner);
                let term = Expr::new(
                    Send {
                        payload: Box::new(p.term),
                        dest: dest.clone(),
                    },
                    e.span,
                );
                Ok(self.judge(Rule::Send, ctx, term, ty, vec![p.derivation]))
            }
            Up { path, body } => {
                let b = self.infer(ctx, body)?;
                self.require(
                    Rule::Up,
                    RelationKind::CanUp,
                    here.clone(),
                    here.concat(path),
                    e,
                    ctx,
                )?;
                let ty = TypeExpr::stack(path, b.ty);
                let term = Expr::new(
                    Up {
                        path: path.clone(),
                        body: Box::new(b.term),
                    },
                    e.span,
                );
                Ok(self.judge(Rule::Up, ctx, term, ty, vec![b.derivation]))
            }
            Down { path, body } => {
                let b = self.infer(ctx, body)?;
                let Some(inner) = b.ty.strip_stack(path) else {
                    return Err(self.error(
                        Rule::Down,
                        e,
                        ctx,
                        format!("expected a {path} stack, found {}", b.ty),
                    ));
                };
                let inner = inner.clone();
                self.require(
                    Rule::Down,
                    RelationKind::CanDown,
                    here.clone(),
                    here.concat(path),
                    e,
                    ctx,
                )?;
                let term = Expr::new(
                    Down {
                        path: path.clone(),
                        body: Box::new(b.term),
                    },
                    e.span,
                );
                Ok(self.judge(Rule::Down, ctx, term, inner, vec![b.derivation]))
            }
            Lam(..) => Err(self.error(
                Rule::ArrowI,
                e,
                ctx,
                "cannot infer the type of a function; add an annotation".into(),
            )),
            App(f, a) => {
                let ft = self.infer(ctx, f)?;
                let TypeExpr::Arrow(dom, cod) = &ft.ty else {
                    return Err(self.error(
                        Rule::ArrowE,
                        e,
                        ctx,
                        format!("applying a non-function of type {}", ft.ty),
                    ));
                };
                let (dom, cod) = ((**dom).clone(), (**cod).clone());
                let at = self.check(ctx, a, &dom)?;
                let term = Expr::new(App(Box::new(ft.term), Box::new(at.term)), e.span);
                Ok(self.judge(Rule::ArrowE, ctx, term, cod, vec![ft.derivation, at.derivation]))
            }
            Pair(a, b) => {
                let at = self.infer(ctx, a)?;
                let bt = self.infer(ctx, b)?;
                let ty = TypeExpr::product(at.ty, bt.ty);
                let term = Expr::new(Pair(Box::new(at.term), Box::new(bt.term)), e.span);
                Ok(self.judge(Rule::ProductI, ctx, term, ty, vec![at.derivation, bt.derivation]))
            }
            Fst(p) | Snd(p) => {
                let pt = self.infer(ctx, p)?;
                let TypeExpr::Product(l, r) = &pt.ty else {
                    return Err(self.error(
                        Rule::ProductE,
                        e,
                        ctx,
                        format!("projecting from a non-pair of type {}", pt.ty),
                    ));
                };
                let is_fst = matches!(e.kind, Fst(_));
                let ty = if is_fst { (**l).clone() } else { (**r).clone() };
                let inner = Box::new(pt.term);
                let term = Expr::new(if is_fst { Fst(inner) } else { Snd(inner) }, e.span);
                Ok(self.judge(Rule::ProductE, ctx, term, ty, vec![pt.derivation]))
            }
            Inl(_) | Inr(_) => Err(self.error(
                Rule::SumI,
                e,
                ctx,
                "cannot infer the type of an injection; add an annotation".into(),
            )),
            Absurd(_) => Err(self.error(
                Rule::VoidE,
                e,
                ctx,
                "cannot infer the type of `absurd`; add an annotation".into(),
            )),
            Case { scrut, left, right } => {
                let (st, lt, rt) = self.case_scrutinee(ctx, e, scrut)?;
                let lctx = ctx.with_binding(left.0.clone(), lt, GenAgent::root());
                let rctx = ctx.with_binding(right.0.clone(), rt, GenAgent::root());
                let (l, r) = match self.infer(&lctx, &left.1) {
                    Ok(l) => {
                        let r = self.check(&rctx, &right.1, &l.ty)?;
                        (l, r)
                    }
                    Err(left_err) => match self.infer(&rctx, &right.1) {
                        Ok(r) => {
                            let l = self.check(&lctx, &left.1, &r.ty)?;
                            (l, r)
                        }
                        Err(_) => return Err(left_err),
                    },
                };
                let ty = l.ty.clone();
                let term = rebuild_case(e, st.term, l.term, r.term);
                Ok(self.judge(
                    Rule::SumE,
                    ctx,
                    term,
                    ty,
                    vec![st.derivation, l.derivation, r.derivation],
                ))
            }
            Annot(inner, ty) => {
                let c = self.check(ctx, inner, ty)?;
                let term = match &c.term.kind {
                    Annot(_, t) if t == ty => c.term,
                    _ => Expr::new(Annot(Box::new(c.term), ty.clone()), e.span),
                };
                Ok(self.judge(Rule::Annot, ctx, term, ty.clone(), vec![c.derivation]))
            }
        }
    }

    fn modal_bound(
        &mut self,
        ctx: &TypingContext,
        e: &Expr,
        outer: &GenAgent,
        inner: &GenAgent,
        bound: &Expr,
    ) -> Result<(Typed, TypeExpr), TypeError> {
        let bctx = ctx.with_lock(outer);
        let b = self.infer(&bctx, bound)?;
        match b.ty.strip_stack(inner) {
            Some(t) => {
                let t = t.clone();
                Ok((b, t))
            }
            None => Err(self.error(
                Rule::BelievesE,
                e,
                ctx,
                format!(
                    "bound expression has type {}, expected a {inner} stack",
                    b.ty
                ),
            )),
        }
    }

    fn case_scrutinee(
        &mut self,
        ctx: &TypingContext,
        e: &Expr,
        scrut: &Expr,
    ) -> Result<(Typed, TypeExpr, TypeExpr), TypeError> {
        let st = self.infer(ctx, scrut)?;
        match &st.ty {
            TypeExpr::Sum(l, r) => {
                let (l, r) = ((**l).clone(), (**r).clone());
                Ok((st, l, r))
            }
            other => Err(self.error(
                Rule::SumE,
                e,
                ctx,
                format!("case on a non-sum of type {other}"),
            )),
        }
    }

    pub fn check(&mut self, ctx: &TypingContext, e: &Expr, goal: &TypeExpr) -> TResult {
        use ExprKind::*;
        match (&e.kind, goal) {
            (Lam(x, body), TypeExpr::Arrow(dom, cod)) => {
                let bctx = ctx.with_binding(x.clone(), (**dom).clone(), GenAgent::root());
                let b = self.check(&bctx, body, cod)?;
                let lam = Expr::new(Lam(x.clone(), Box::new(b.term)), e.span);
                let term = Expr::new(Annot(Box::new(lam), goal.clone()), e.span);
                Ok(self.judge(Rule::ArrowI, ctx, term, goal.clone(), vec![b.derivation]))
            }
            (Lam(..), _) => Err(self.error(
                Rule::ArrowI,
                e,
                ctx,
                format!("function checked against non-function type {goal}"),
            )),
            (Inl(v) | Inr(v), TypeExpr::Sum(l, r)) => {
                let is_left = matches!(e.kind, Inl(_));
                let side = if is_left { l } else { r };
                let c = self.check(ctx, v, side)?;
                let inj = Box::new(c.term);
                let inj = Expr::new(if is_left { Inl(inj) } else { Inr(inj) }, e.span);
                let term = Expr::new(Annot(Box::new(inj), goal.clone()), e.span);
                Ok(self.judge(Rule::SumI, ctx, term, goal.clone(), vec![c.derivation]))
            }
            (Inl(_) | Inr(_), _) => Err(self.error(
                Rule::SumI,
                e,
                ctx,
                format!("injection checked against non-sum type {goal}"),
            )),
            (Absurd(v), _) => {
                let c = self.check(ctx, v, &TypeExpr::Void)?;
                let inner = Expr::new(Absurd(Box::new(c.term)), e.span);
                let term = Expr::new(Annot(Box::new(inner), goal.clone()), e.span);
                Ok(self.judge(Rule::VoidE, ctx, term, goal.clone(), vec![c.derivation]))
            }
            (Pair(a, b), TypeExpr::Product(l, r)) => {
                let at = self.check(ctx, a, l)?;
                let bt = self.check(ctx, b, r)?;
                let term = Expr::new(Pair(Box::new(at.term), Box::new(bt.term)), e.span);
                Ok(self.judge(
                    Rule::ProductI,
                    ctx,
                    term,
                    goal.clone(),
                    vec![at.derivation, bt.derivation],
                ))
            }
            (Located(agent, body), _) => {
                let TypeExpr::Believes(want, inner) = goal else {
                    return Err(self.error(
                        Rule::BelievesI,
                        e,
                        ctx,
                        format!("term located at {agent} checked against non-modal type {goal}"),
                    ));
                };
                if want != agent {
                    return Err(self.error(
                        Rule::BelievesI,
                        e,
                        ctx,
                        format!("term located at {agent} checked against {goal}"),
                    ));
                }
                let bctx = ctx.with_lock(&GenAgent::new(vec![agent.clone()]));
                let b = self.check(&bctx, body, inner)?;
                let term = Expr::new(Located(agent.clone(), Box::new(b.term)), e.span);
                Ok(self.judge(Rule::BelievesI, ctx, term, goal.clone(), vec![b.derivation]))
            }
            (
                ModalLet {
                    outer,
                    inner,
                    name,
                    bound,
                    body,
                },
                _,
            ) => {
                let (b, payload_ty) = self.modal_bound(ctx, e, outer, inner, bound)?;
                let body_ctx = ctx.with_binding(name.clone(), payload_ty, outer.concat(inner));
                let d = self.check(&body_ctx, body, goal)?;
                let term = rebuild_let(e, b.term, d.term);
                Ok(self.judge(
                    Rule::BelievesE,
                    ctx,
                    term,
                    goal.clone(),
                    vec![b.derivation, d.derivation],
                ))
            }
            (Case { scrut, left, right }, _) => {
                let (st, lt, rt) = self.case_scrutinee(ctx, e, scrut)?;
                let lctx = ctx.with_binding(left.0.clone(), lt, GenAgent::root());
                let rctx = ctx.with_binding(right.0.clone(), rt, GenAgent::root());
                let l = self.check(&lctx, &left.1, goal)?;
                let r = self.check(&rctx, &right.1, goal)?;
                let term = rebuild_case(e, st.term, l.term, r.term);
                Ok(self.judge(
                    Rule::SumE,
                    ctx,
                    term,
                    goal.clone(),
                    vec![st.derivation, l.derivation, r.derivation],
                ))
            }
            (Up { path, body }, _) => {
                let Some(inner) = goal.strip_stack(path) else {
                    return Err(self.error(
                        Rule::Up,
                        e,
                        ctx,
                        format!("`up {path}` produces a {path} stack, but {goal} was expected"),
                    ));
                };
                let b = self.check(ctx, body, inner)?;
                let here = ctx.locks();
                self.require(
                    Rule::Up,
                    RelationKind::CanUp,
                    here.clone(),
                    here.concat(path),
                    e,
                    ctx,
                )?;
                let term = Expr::new(
                    Up {
                        path: path.clone(),
                        body: Box::new(b.term),
                    },
                    e.span,
                );
                Ok(self.judge(Rule::Up, ctx, term, goal.clone(), vec![b.derivation]))
            }
            _ => {
                let t = self.infer(ctx, e)?;
                if &t.ty == goal {
                    Ok(t)
                } else {
                    Err(self.error(
                        Rule::Conversion,
                        e,
                        ctx,
                        format!("expected {goal}, found {}", t.ty),
                    ))
                }
            }
        }
    }
}

fn rebuild_let(e: &Expr, bound: Expr, body: Expr) -> Expr {
    let ExprKind::ModalLet {
        outer, inner, name, ..
    } = &e.kind
    else {
        unreachable!("rebuild_let on non-let")
    };
    Expr::new(
        ExprKind::ModalLet {
            outer: outer.clone(),
            inner: inner.clone(),
            name: name.clone(),
            bound: Box::new(bound),
            body: Box::new(body),
        },
        e.span,
    )
}

fn rebuild_case(e: &Expr, scrut: Expr, el: Expr, er: Expr) -> Expr {
    let ExprKind::Case { left, right, .. } = &e.kind else {
        unreachable!("rebuild_case on non-case")
    };
    Expr::new(
        ExprKind::Case {
            scrut: Box::new(scrut),
            left: (left.0.clone(), Box::new(el)),
            right: (right.0.clone(), Box::new(er)),
        },
        e.span,
    )
}

/// Infers the type of `e` in `ctx`.
pub fn infer(t: &Topology, ctx: &TypingContext, e: &Expr) -> Result<TypeExpr, TypeError> {
    Checker::new(t).infer(ctx, e).map(|j| j.ty)
}

/// Checks `e` against `ty` in `ctx`.
pub fn check(t: &Topology, ctx: &TypingContext, e: &Expr, ty: &TypeExpr) -> Result<(), TypeError> {
    Checker::new(t).check(ctx, e, ty).map(|_| ())
}

/// A program that passed checking, with elaborated bodies.
#[derive(Clone, Debug)]
pub struct CheckedProgram {
    pub program: Program,
    pub topology: Topology,
    pub defs: Vec<(String, TypeExpr, Expr)>,
    pub main: Expr,
    pub main_ty: TypeExpr,
}

impl CheckedProgram {
    /// Context holding the declared inputs, tagged at the root viewpoint.
    pub fn input_context(&self) -> TypingContext {
        input_context(&self.program)
    }

    /// Elaborated main with the definitions bound in front of it. Free only
    /// in the declared inputs.
    pub fn closed_main(&self) -> Expr {
        desugar_defs(
            self.defs.iter().map(|(n, _, e)| (n.as_str(), e)),
            self.main.clone(),
        )
    }

    /// Where the value of main materializes: the modalities on its type.
    pub fn result_address(&self) -> GenAgent {
        self.main_ty.full_stack().0
    }
}

pub(crate) fn input_context(p: &Program) -> TypingContext {
    let mut ctx = TypingContext::new();
    for input in &p.inputs {
        ctx.push_binding(input.name.clone(), input.ty.clone(), GenAgent::root());
    }
    ctx
}

/// Checks every definition and main in order, collecting all errors.
pub fn check_program(p: &Program, t: &Topology) -> Result<CheckedProgram, Vec<TypeError>> {
    check_program_with(&mut Checker::new(t), p)
}

pub fn check_program_with(
    checker: &mut Checker<'_>,
    p: &Program,
) -> Result<CheckedProgram, Vec<TypeError>> {
    let mut errors = Vec::new();
    let mut names = BTreeSet::new();
    let mut ctx = TypingContext::new();
    for input in &p.inputs {
        if !names.insert(input.name.clone()) {
            errors.push(TypeError {
                rule: Rule::Declaration,
                span: input.span,
                viewpoint: GenAgent::root(),
                message: format!("`{}` declared twice", input.name),
                query: None,
            });
        }
        ctx.push_binding(input.name.clone(), input.ty.clone(), GenAgent::root());
    }
    let mut defs = Vec::new();
    for def in &p.defs {
        if !names.insert(def.name.clone()) {
            errors.push(TypeError {
                rule: Rule::Declaration,
                span: def.span,
                viewpoint: GenAgent::root(),
                message: format!("`{}` declared twice", def.name),
                query: None,
            });
        }
        match checker.check(&ctx, &def.body, &def.ty) {
            Ok(j) => defs.push((def.name.clone(), def.ty.clone(), j.term)),
            Err(e) => errors.push(e),
        }
        ctx.push_binding(def.name.clone(), def.ty.clone(), GenAgent::root());
    }
    let main = match checker.check(&ctx, &p.main, &p.main_ty) {
        Ok(j) => Some(j.term),
        Err(e) => {
            errors.push(e);
            None
        }
    };
    match main {
        Some(main) if errors.is_empty() => Ok(CheckedProgram {
            program: p.clone(),
            topology: checker.topology().clone(),
            defs,
            main,
            main_ty: p.main_ty.clone(),
        }),
        _ => Err(errors),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_program, parse_type};
    use crate::topology::{load_preset, parse_topology};

    fn infer_str(topo: &str, src: &str) -> Result<TypeExpr, TypeError> {
        let t = load_preset(topo).unwrap();
        infer(&t, &TypingContext::new(), &parse_expr(src).unwrap())
    }

    fn check_str(topo: &Topology, src: &str) -> Result<CheckedProgram, Vec<TypeError>> {
        check_program(&parse_program(src).unwrap(), topo)
    }

    #[test]
    fn send_under_choreo() {
        assert_eq!(
            infer_str("choreo", "send (A.()) to [B]").unwrap(),
            parse_type("[B] unit").unwrap()
        );
    }

    #[test]
    fn self_up_under_doxastic() {
        assert_eq!(
            infer_str("doxastic", "A.(up [A] ())").unwrap(),
            parse_type("[A.A] unit").unwrap()
        );
    }

    #[test]
    fn t_axiom_is_rejected() {
        let err = infer_str("doxastic", "down [A] (A.())").unwrap_err();
        assert_eq!(err.rule, Rule::Down);
        assert_eq!(
            err.query,
            Some(RelationQuery {
                kind: RelationKind::CanDown,
                from: GenAgent::root(),
                to: GenAgent::of(&["A"]),
            })
        );
        assert_eq!(err.viewpoint, GenAgent::root());
    }

    #[test]
    fn check_mode_examples() {
        let t = load_preset("choreo").unwrap();
        let ctx = TypingContext::new();
        check(
            &t,
            &ctx,
            &parse_expr("fun x -> x").unwrap(),
            &parse_type("unit -> unit").unwrap(),
        )
        .unwrap();
        check(
            &t,
            &ctx,
            &parse_expr("inl ()").unwrap(),
            &parse_type("unit + void").unwrap(),
        )
        .unwrap();
        let err = check(
            &t,
            &ctx,
            &parse_expr("A.()").unwrap(),
            &parse_type("[B] unit").unwrap(),
        )
        .unwrap_err();
        assert_eq!(err.rule, Rule::BelievesI);
    }

    #[test]
    fn self_down_program() {
        let t = load_preset("doxastic").unwrap();
        let p = check_str(
            &t,
            "main : [A] unit = let [] [A] x = A.(up [A] ()) in A.(down [A] x);",
        )
        .unwrap();
        assert_eq!(p.result_address(), GenAgent::of(&["A"]));
    }

    #[test]
    fn speaksfor_transport() {
        let src = "main : [B] unit = send A.() to [B];";
        let lit = parse_topology("cansend: A => B").unwrap();
        check_str(&lit, src).unwrap();
        let errs = check_str(&load_preset("doxastic").unwrap(), src).unwrap_err();
        assert_eq!(errs[0].rule, Rule::Send);
    }

    #[test]
    fn axiom_lock_mismatch() {
        let t = load_preset("choreo").unwrap();
        let errs = check_str(&t, "main : unit = let [] [A] x = A.() in x;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].rule, Rule::Axiom);
    }

    #[test]
    fn shadowing_never_falls_back() {
        let t = load_preset("choreo").unwrap();
        // inner x is bound at [A] and shadows the usable outer one
        let errs = check_str(
            &t,
            "input x : unit; main : unit = let [] [A] x = A.() in x;",
        )
        .unwrap_err();
        assert_eq!(errs[0].rule, Rule::Axiom);
    }

    #[test]
    fn lambda_variables_are_viewpoint_local() {
        let t = load_preset("choreo").unwrap();
        let errs = check_str(&t, "main : unit -> [A] unit = fun x -> A.x;").unwrap_err();
        assert_eq!(errs[0].rule, Rule::Axiom);
        check_str(&t, "main : [A] (unit -> unit) = A.(fun x -> x);").unwrap();
    }

    #[test]
    fn case_branches_must_agree() {
        let t = load_preset("choreo").unwrap();
        check_str(
            &t,
            "main : unit = case (inl () : unit + unit) of inl a -> a | inr b -> ();",
        )
        .unwrap();
        let errs = check_str(
            &t,
            "main : unit = case (inl () : unit + unit) of inl a -> (a, a) | inr b -> ();",
        )
        .unwrap_err();
        assert_eq!(errs[0].rule, Rule::Conversion);
    }

    #[test]
    fn elaborated_terms_infer_their_type() {
        let t = load_preset("choreo").unwrap();
        let p = check_str(
            &t,
            "main : [B] (unit + void) * (unit -> unit) = (send A.(inl () : unit + void) to [B], fun x -> x);",
        )
        .unwrap();
        assert_eq!(
            infer(&t, &TypingContext::new(), &p.main).unwrap(),
            p.main_ty
        );
    }

    #[test]
    fn duplicate_declarations() {
        let t = load_preset("choreo").unwrap();
        let errs =
            check_str(&t, "def d : unit = (); def d : unit = (); main : unit = d;").unwrap_err();
        assert_eq!(errs[0].rule, Rule::Declaration);
    }

    #[test]
    fn derivation_mentions_viewpoints() {
        let t = load_preset("doxastic").unwrap();
        let mut c = Checker::new(&t).with_derivations();
        let j = c
            .infer(&TypingContext::new(), &parse_expr("A.(up [A] ())").unwrap())
            .unwrap();
        let text = j.derivation.unwrap().render();
        assert!(
            text.contains("BelievesI: from []'s point of view"),
            "{text}"
        );
        assert!(text.contains("Up: from [A]'s point of view"), "{text}");
    }

    #[test]
    fn queries_are_asked_from_the_current_viewpoint() {
        let t = parse_topology("cansend: true\ncanup: true").unwrap();
        let mut c = Checker::new(&t).with_query_log();
        c.infer(
            &TypingContext::new(),
            &parse_expr("C.(send (A.(up [B] ())) to [D])").unwrap(),
        )
        .unwrap();
        let qs = c.queries();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].query.from, GenAgent::of(&["C", "A"]));
        assert_eq!(qs[0].viewpoint, GenAgent::of(&["C", "A"]));
        assert_eq!(qs[1].query.kind, RelationKind::CanSend);
        assert_eq!(qs[1].viewpoint, GenAgent::of(&["C"]));
        assert_eq!(qs[1].query.from, GenAgent::of(&["C", "A"]));
    }
}
