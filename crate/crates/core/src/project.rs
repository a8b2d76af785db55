//! Endpoint projection: one local program per address of the process tree.
//!
//! A choreographic value at viewpoint `L` is spread over the addresses at or
//! above `L`: the part under `A.` lives at `L.A`, and so on. The projection of
//! a term at address `a` computes `a`'s share of the term's value, exchanging
//! messages for every communication that moves data into or out of `a`.
//! Shares that carry no data are `skip`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Expr, ExprKind, GenAgent, Span, TypeExpr, TypingContext};
use crate::topology::Topology;
use crate::typecheck::{CheckedProgram, Checker, TypeError};

/// The local language: the functional core plus messaging.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalExpr {
    Var(String),
    Unit,
    Skip,
    Lam(String, Box<LocalExpr>),
    App(Box<LocalExpr>, Box<LocalExpr>),
    Pair(Box<LocalExpr>, Box<LocalExpr>),
    Fst(Box<LocalExpr>),
    Snd(Box<LocalExpr>),
    Inl(Box<LocalExpr>),
    Inr(Box<LocalExpr>),
    Case {
        scrut: Box<LocalExpr>,
        left: (String, Box<LocalExpr>),
        right: (String, Box<LocalExpr>),
    },
    Absurd(Box<LocalExpr>),
    Let {
        name: String,
        bound: Box<LocalExpr>,
        body: Box<LocalExpr>,
    },
    Seq(Box<LocalExpr>, Box<LocalExpr>),
    SendTo {
        dest: GenAgent,
        payload: Box<LocalExpr>,
    },
    RecvFrom(GenAgent),
}

use LocalExpr as L;

fn bx(e: LocalExpr) -> Box<LocalExpr> {
    Box::new(e)
}

impl LocalExpr {
    pub fn seq(a: LocalExpr, b: LocalExpr) -> Self {
        L::Seq(bx(a), bx(b))
    }

    pub fn send_to(dest: GenAgent, payload: LocalExpr) -> Self {
        L::SendTo {
            dest,
            payload: bx(payload),
        }
    }

    pub fn pair(a: LocalExpr, b: LocalExpr) -> Self {
        L::Pair(bx(a), bx(b))
    }

    pub fn is_value(&self) -> bool {
        match self {
            L::Unit | L::Skip | L::Lam(..) => true,
            L::Pair(a, b) => a.is_value() && b.is_value(),
            L::Inl(v) | L::Inr(v) => v.is_value(),
            _ => false,
        }
    }

    /// Whether any messaging construct occurs, including under binders.
    pub fn communicates(&self) -> bool {
        match self {
            L::SendTo { .. } | L::RecvFrom(_) => true,
            _ => self.children().into_iter().any(LocalExpr::communicates),
        }
    }

    pub fn children(&self) -> Vec<&LocalExpr> {
        match self {
            L::Var(_) | L::Unit | L::Skip | L::RecvFrom(_) => vec![],
            L::Lam(_, b)
            | L::Fst(b)
            | L::Snd(b)
            | L::Inl(b)
            | L::Inr(b)
            | L::Absurd(b)
            | L::SendTo { payload: b, .. } => vec![b],
            L::App(a, b) | L::Pair(a, b) | L::Seq(a, b) => vec![a, b],
            L::Let { bound, body, .. } => vec![bound, body],
            L::Case { scrut, left, right } => vec![scrut, &left.1, &right.1],
        }
    }
}

/// `e[x := v]` for closed `v`; stops at binders that shadow `x`.
pub fn subst_local(e: &LocalExpr, x: &str, v: &LocalExpr) -> LocalExpr {
    let go = |b: &LocalExpr| bx(subst_local(b, x, v));
    match e {
        L::Var(y) if y == x => v.clone(),
        L::Var(_) | L::Unit | L::Skip | L::RecvFrom(_) => e.clone(),
        L::Lam(y, _) if y == x => e.clone(),
        L::Lam(y, b) => L::Lam(y.clone(), go(b)),
        L::App(a, b) => L::App(go(a), go(b)),
        L::Pair(a, b) => L::Pair(go(a), go(b)),
        L::Seq(a, b) => L::Seq(go(a), go(b)),
        L::Fst(b) => L::Fst(go(b)),
        L::Snd(b) => L::Snd(go(b)),
        L::Inl(b) => L::Inl(go(b)),
        L::Inr(b) => L::Inr(go(b)),
        L::Absurd(b) => L::Absurd(go(b)),
        L::SendTo { dest, payload } => L::SendTo {
            dest: dest.clone(),
            payload: go(payload),
        },
        L::Let { name, bound, body } => L::Let {
            name: name.clone(),
            bound: go(bound),
            body: if name == x { body.clone() } else { go(body) },
        },
        L::Case { scrut, left, right } => {
            let branch = |(y, b): &(String, Box<LocalExpr>)| {
                (y.clone(), if y == x { b.clone() } else { go(b) })
            };
            L::Case {
                scrut: go(scrut),
                left: branch(left),
                right: branch(right),
            }
        }
    }
}

/// Alpha-equivalence of local programs.
pub fn alpha_eq_local(a: &LocalExpr, b: &LocalExpr) -> bool {
    fn go(a: &LocalExpr, b: &LocalExpr, la: &mut Vec<String>, lb: &mut Vec<String>) -> bool {
        fn under(
            (xa, ba): (&str, &LocalExpr),
            (xb, bb): (&str, &LocalExpr),
            la: &mut Vec<String>,
            lb: &mut Vec<String>,
        ) -> bool {
            la.push(xa.to_string());
            lb.push(xb.to_string());
            let ok = go(ba, bb, la, lb);
            la.pop();
            lb.pop();
            ok
        }
        match (a, b) {
            (L::Var(x), L::Var(y)) => {
                match (
                    la.iter().rposition(|v| v == x),
                    lb.iter().rposition(|v| v == y),
                ) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (L::Unit, L::Unit) | (L::Skip, L::Skip) => true,
            (L::RecvFrom(p), L::RecvFrom(q)) => p == q,
            (L::Lam(x, p), L::Lam(y, q)) => under((x, p), (y, q), la, lb),
            (L::App(a1, b1), L::App(a2, b2))
            | (L::Pair(a1, b1), L::Pair(a2, b2))
            | (L::Seq(a1, b1), L::Seq(a2, b2)) => go(a1, a2, la, lb) && go(b1, b2, la, lb),
            (L::Fst(p), L::Fst(q))
            | (L::Snd(p), L::Snd(q))
            | (L::Inl(p), L::Inl(q))
            | (L::Inr(p), L::Inr(q))
            | (L::Absurd(p), L::Absurd(q)) => go(p, q, la, lb),
            (
                L::SendTo {
                    dest: d1,
                    payload: p1,
                },
                L::SendTo {
                    dest: d2,
                    payload: p2,
                },
            ) => d1 == d2 && go(p1, p2, la, lb),
            (
                L::Let {
                    name: n1,
                    bound: b1,
                    body: d1,
                },
                L::Let {
                    name: n2,
                    bound: b2,
                    body: d2,
                },
            ) => go(b1, b2, la, lb) && under((n1, d1), (n2, d2), la, lb),
            (
                L::Case {
                    scrut: s1,
                    left: l1,
                    right: r1,
                },
                L::Case {
                    scrut: s2,
                    left: l2,
                    right: r2,
                },
            ) => {
                go(s1, s2, la, lb)
                    && under((&l1.0, &l1.1), (&l2.0, &l2.1), la, lb)
                    && under((&r1.0, &r1.1), (&r2.0, &r2.1), la, lb)
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}

fn is_value_or_var(e: &LocalExpr) -> bool {
    matches!(e, L::Var(_)) || e.is_value()
}

/// Bottom-up cleanup of projections. Also the canonical form used when
/// comparing final values.
pub fn simplify(e: &LocalExpr) -> LocalExpr {
    let s = |b: &LocalExpr| simplify(b);
    match e {
        L::Var(_) | L::Unit | L::Skip | L::RecvFrom(_) => e.clone(),
        L::Pair(a, b) => match (s(a), s(b)) {
            (L::Skip, L::Skip) => L::Skip,
            (a, b) => L::pair(a, b),
        },
        L::Fst(p) | L::Snd(p) => match s(p) {
            L::Skip => L::Skip,
            p if matches!(e, L::Fst(_)) => L::Fst(bx(p)),
            p => L::Snd(bx(p)),
        },
        L::App(f, a) => match (s(f), s(a)) {
            (L::Skip, a) => simplify_seq(a, L::Skip),
            (f, a) => L::App(bx(f), bx(a)),
        },
        L::Seq(a, b) => simplify_seq(s(a), s(b)),
        L::Let { name, bound, body } => match s(bound) {
            L::Skip => simplify(&subst_local(body, name, &L::Skip)),
            b => L::Let {
                name: name.clone(),
                bound: bx(b),
                body: bx(s(body)),
            },
        },
        L::Lam(x, b) => match s(b) {
            L::Skip => L::Skip,
            b => L::Lam(x.clone(), bx(b)),
        },
        L::Inl(b) => L::Inl(bx(s(b))),
        L::Inr(b) => L::Inr(bx(s(b))),
        L::Absurd(b) => L::Absurd(bx(s(b))),
        L::SendTo { dest, payload } => L::send_to(dest.clone(), s(payload)),
        L::Case { scrut, left, right } => L::Case {
            scrut: bx(s(scrut)),
            left: (left.0.clone(), bx(s(&left.1))),
            right: (right.0.clone(), bx(s(&right.1))),
        },
    }
}

fn simplify_seq(a: LocalExpr, b: LocalExpr) -> LocalExpr {
    if is_value_or_var(&a) {
        b
    } else {
        L::seq(a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProjectError {
    #[error("{construct} at {viewpoint} is not projectable: {message}")]
    NotProjectable {
        construct: &'static str,
        viewpoint: GenAgent,
        span: Option<Span>,
        message: String,
    },
    #[error("case at {viewpoint}: branches disagree at {address} (`{left}` vs `{right}`)")]
    MergeConflict {
        viewpoint: GenAgent,
        address: GenAgent,
        span: Option<Span>,
        left: LocalExpr,
        right: LocalExpr,
    },
    #[error(transparent)]
    IllTyped(#[from] TypeError),
}

/// Equality merge: identical behaviours merge, anything else conflicts.
pub fn merge(l1: &LocalExpr, l2: &LocalExpr) -> Option<LocalExpr> {
    alpha_eq_local(l1, l2).then(|| l1.clone())
}

/// Relative addresses holding data of a value of type `ty`.
pub fn positions(ty: &TypeExpr) -> BTreeSet<GenAgent> {
    match ty {
        TypeExpr::Believes(a, t) => {
            let head = GenAgent::new(vec![a.clone()]);
            positions(t).iter().map(|p| head.concat(p)).collect()
        }
        TypeExpr::Product(l, r) => {
            let mut out = positions(l);
            out.extend(positions(r));
            out
        }
        _ => BTreeSet::from([GenAgent::root()]),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub processes: BTreeMap<GenAgent, LocalExpr>,
    pub result_address: GenAgent,
    /// Communications whose payload type contains a function.
    #[serde(default)]
    pub flagged: Vec<String>,
}

impl Network {
    pub fn addresses(&self) -> impl Iterator<Item = &GenAgent> {
        self.processes.keys()
    }

    /// `process [A.B]: <local program>` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (addr, p) in &self.processes {
            let _ = writeln!(out, "process {addr}: {p}");
        }
        out
    }
}

/// A communication found while walking the choreography.
struct Comm {
    sender: GenAgent,
    receiver: GenAgent,
    rels: BTreeSet<GenAgent>,
}

struct Projector<'t> {
    checker: Checker<'t>,
}

type PResult = Result<LocalExpr, ProjectError>;

impl<'t> Projector<'t> {
    fn type_of(&mut self, ctx: &TypingContext, e: &Expr) -> Result<TypeExpr, ProjectError> {
        Ok(self.checker.infer(ctx, e)?.ty)
    }

    fn comm(&mut self, ctx: &TypingContext, e: &Expr) -> Result<(Comm, bool), ProjectError> {
        let here = ctx.locks();
        let (sender, receiver, payload_ty) = match &e.kind {
            ExprKind::Send { payload, dest } => {
                let ty = self.type_of(ctx, payload)?;
                let (src, inner) =
                    ty.split_stack(dest.len())
                        .ok_or_else(|| ProjectError::NotProjectable {
                            construct: "send",
                            viewpoint: here.clone(),
                            span: e.span,
                            message: format!("payload type {ty} is too shallow"),
                        })?;
                (here.concat(&src), here.concat(dest), inner.clone())
            }
            ExprKind::Up { path, body } => {
                let ty = self.type_of(ctx, body)?;
                (here.clone(), here.concat(path), ty)
            }
            ExprKind::Down { path, body } => {
                let ty = self.type_of(ctx, body)?;
                let inner =
                    ty.strip_stack(path)
                        .cloned()
                        .ok_or_else(|| ProjectError::NotProjectable {
                            construct: "down",
                            viewpoint: here.clone(),
                            span: e.span,
                            message: format!("body type {ty} lacks the {path} stack"),
                        })?;
                (here.concat(path), here.clone(), inner)
            }
            _ => unreachable!("comm on a non-communication"),
        };
        let positive = payload_ty.is_positive();
        Ok((
            Comm {
                sender,
                receiver,
                rels: positions(&payload_ty),
            },
            positive,
        ))
    }

    fn local_sum(
        &self,
        construct: &'static str,
        ctx: &TypingContext,
        e: &Expr,
        ty: &TypeExpr,
    ) -> Result<(TypeExpr, TypeExpr), ProjectError> {
        match ty {
            TypeExpr::Sum(l, r) if ty.is_local() => Ok(((**l).clone(), (**r).clone())),
            _ => Err(ProjectError::NotProjectable {
                construct,
                viewpoint: ctx.locks(),
                span: e.span,
                message: format!("sum type {ty} carries data away from {}", ctx.locks()),
            }),
        }
    }

    /// Addresses the term involves, plus flagged communications.
    fn collect(
        &mut self,
        ctx: &TypingContext,
        e: &Expr,
        out: &mut BTreeSet<GenAgent>,
        flagged: &mut Vec<String>,
    ) -> Result<(), ProjectError> {
        use ExprKind::*;
        out.insert(ctx.locks());
        match &e.kind {
            Located(a, body) => self.collect(
                &ctx.with_lock(&GenAgent::new(vec![a.clone()])),
                body,
                out,
                flagged,
            ),
            ModalLet {
                outer,
                inner,
                name,
                bound,
                body,
            } => {
                let bctx = ctx.with_lock(outer);
                self.collect(&bctx, bound, out, flagged)?;
                let ty = self.type_of(&bctx, bound)?;
                let payload = ty.strip_stack(inner).cloned().unwrap_or(ty);
                let body_ctx = ctx.with_binding(name.clone(), payload, outer.concat(inner));
                self.collect(&body_ctx, body, out, flagged)
            }
            Send { payload: b, .. } | Up { body: b, .. } | Down { body: b, .. } => {
                let (comm, positive) = self.comm(ctx, e)?;
                if !positive {
                    flagged.push(format!(
                        "{} from {} to {} carries a function",
                        comm_name(e),
                        comm.sender,
                        comm.receiver
                    ));
                }
                for rel in &comm.rels {
                    out.insert(comm.sender.concat(rel));
                    out.insert(comm.receiver.concat(rel));
                }
                self.collect(ctx, b, out, flagged)
            }
            Annot(inner, TypeExpr::Arrow(dom, _)) if matches!(inner.kind, Lam(..)) => {
                let Lam(x, body) = &inner.kind else {
                    unreachable!()
                };
                let bctx = ctx.with_binding(x.clone(), (**dom).clone(), GenAgent::root());
                self.collect(&bctx, body, out, flagged)
            }
            Lam(..) => Err(unannotated(ctx, e)),
            Case { scrut, left, right } => {
                self.collect(ctx, scrut, out, flagged)?;
                let ty = self.type_of(ctx, scrut)?;
                let (lt, rt) = self.local_sum("case", ctx, e, &ty)?;
                let lctx = ctx.with_binding(left.0.clone(), lt, GenAgent::root());
                self.collect(&lctx, &left.1, out, flagged)?;
                let rctx = ctx.with_binding(right.0.clone(), rt, GenAgent::root());
                self.collect(&rctx, &right.1, out, flagged)
            }
            _ => {
                for c in e.children() {
                    self.collect(ctx, c, out, flagged)?;
                }
                Ok(())
            }
        }
    }

    /// Projection of `e` (typed in `ctx`) at address `a`.
    fn proj(&mut self, ctx: &TypingContext, e: &Expr, a: &GenAgent) -> PResult {
        use ExprKind::*;
        let here = ctx.locks();
        if !here.is_prefix_of(a) {
            return Ok(L::Skip);
        }
        let at_here = &here == a;
        Ok(match &e.kind {
            Var(x) => L::Var(x.clone()),
            Unit if at_here => L::Unit,
            Unit => L::Skip,
            Located(agent, body) => {
                self.proj(&ctx.with_lock(&GenAgent::new(vec![agent.clone()])), body, a)?
            }
            ModalLet {
                outer,
                inner,
                name,
                bound,
                body,
            } => {
                let bctx = ctx.with_lock(outer);
                let pb = self.proj(&bctx, bound, a)?;
                let ty = self.type_of(&bctx, bound)?;
                let payload = ty.strip_stack(inner).cloned().unwrap_or(ty);
                let body_ctx = ctx.with_binding(name.clone(), payload, outer.concat(inner));
                let pd = self.proj(&body_ctx, body, a)?;
                L::Let {
                    name: name.clone(),
                    bound: bx(pb),
                    body: bx(pd),
                }
            }
            Send { payload: b, .. } | Up { body: b, .. } | Down { body: b, .. } => {
                let (comm, _) = self.comm(ctx, e)?;
                let mut out = self.proj(ctx, b, a)?;
                if let Some(rel) = a.strip_prefix(&comm.sender) {
                    if comm.rels.contains(&rel) {
                        out = L::send_to(comm.receiver.concat(&rel), out);
                    }
                }
                if let Some(rel) = a.strip_prefix(&comm.receiver) {
                    if comm.rels.contains(&rel) {
                        out = L::seq(out, L::RecvFrom(comm.sender.concat(&rel)));
                    }
                }
                out
            }
            Annot(inner, ty) => match (&inner.kind, ty) {
                (Lam(x, body), TypeExpr::Arrow(dom, _)) => {
                    let bctx = ctx.with_binding(x.clone(), (**dom).clone(), GenAgent::root());
                    L::Lam(x.clone(), bx(self.proj(&bctx, body, a)?))
                }
                (Inl(v) | Inr(v), _) => {
                    self.local_sum("injection", ctx, e, ty)?;
                    let p = self.proj(ctx, v, a)?;
                    match (&inner.kind, at_here) {
                        (Inl(_), true) => L::Inl(bx(p)),
                        (Inr(_), true) => L::Inr(bx(p)),
                        _ => p,
                    }
                }
                (Absurd(v), _) => {
                    let p = self.proj(ctx, v, a)?;
                    if at_here {
                        L::Absurd(bx(p))
                    } else {
                        L::seq(p, L::Skip)
                    }
                }
                _ => self.proj(ctx, inner, a)?,
            },
            Lam(..) | Inl(_) | Inr(_) | Absurd(_) => return Err(unannotated(ctx, e)),
            App(f, x) => L::App(bx(self.proj(ctx, f, a)?), bx(self.proj(ctx, x, a)?)),
            Pair(l, r) => L::pair(self.proj(ctx, l, a)?, self.proj(ctx, r, a)?),
            Fst(p) => L::Fst(bx(self.proj(ctx, p, a)?)),
            Snd(p) => L::Snd(bx(self.proj(ctx, p, a)?)),
            Case { scrut, left, right } => {
                let ps = self.proj(ctx, scrut, a)?;
                let ty = self.type_of(ctx, scrut)?;
                let (lt, rt) = self.local_sum("case", ctx, e, &ty)?;
                let lctx = ctx.with_binding(left.0.clone(), lt, GenAgent::root());
                let rctx = ctx.with_binding(right.0.clone(), rt, GenAgent::root());
                let pl = self.proj(&lctx, &left.1, a)?;
                let pr = self.proj(&rctx, &right.1, a)?;
                if at_here {
                    L::Case {
                        scrut: bx(ps),
                        left: (left.0.clone(), bx(pl)),
                        right: (right.0.clone(), bx(pr)),
                    }
                } else {
                    // above the decider the branch variables carry no data
                    let pl = simplify(&subst_local(&pl, &left.0, &L::Skip));
                    let pr = simplify(&subst_local(&pr, &right.0, &L::Skip));
                    let merged = merge(&pl, &pr).ok_or_else(|| ProjectError::MergeConflict {
                        viewpoint: here.clone(),
                        address: a.clone(),
                        span: e.span,
                        left: pl.clone(),
                        right: pr.clone(),
                    })?;
                    L::seq(ps, merged)
                }
            }
        })
    }
}

fn comm_name(e: &Expr) -> &'static str {
    match e.kind {
        ExprKind::Send { .. } => "send",
        ExprKind::Up { .. } => "up",
        _ => "down",
    }
}

fn unannotated(ctx: &TypingContext, e: &Expr) -> ProjectError {
    ProjectError::NotProjectable {
        construct: "term",
        viewpoint: ctx.locks(),
        span: e.span,
        message: "projection needs the elaborated (annotated) term".into(),
    }
}

/// Projects an elaborated expression typed in `ctx` at a single address.
pub fn project_expr(
    topology: &Topology,
    ctx: &TypingContext,
    e: &Expr,
    address: &GenAgent,
) -> Result<LocalExpr, ProjectError> {
    let mut p = Projector {
        checker: Checker::new(topology),
    };
    Ok(simplify(&p.proj(ctx, e, address)?))
}

pub fn project(p: &CheckedProgram, address: &GenAgent) -> Result<LocalExpr, ProjectError> {
    project_expr(&p.topology, &p.input_context(), &p.closed_main(), address)
}

/// Address universe of an elaborated expression: every viewpoint and
/// communication endpoint, closed under prefixes.
pub fn universe(
    topology: &Topology,
    ctx: &TypingContext,
    e: &Expr,
) -> Result<BTreeSet<GenAgent>, ProjectError> {
    let mut p = Projector {
        checker: Checker::new(topology),
    };
    let mut out = BTreeSet::new();
    p.collect(ctx, e, &mut out, &mut Vec::new())?;
    Ok(close_under_prefixes(out))
}

fn close_under_prefixes(set: BTreeSet<GenAgent>) -> BTreeSet<GenAgent> {
    set.iter().flat_map(|g| g.prefixes()).collect()
}

/// Projects `e` (of type `ty`) at every address of its universe.
pub fn project_network_expr(
    topology: &Topology,
    ctx: &TypingContext,
    e: &Expr,
    ty: &TypeExpr,
) -> Result<Network, ProjectError> {
    let mut p = Projector {
        checker: Checker::new(topology),
    };
    let mut addrs = BTreeSet::new();
    let mut flagged = Vec::new();
    p.collect(ctx, e, &mut addrs, &mut flagged)?;
    let result_address = ty.full_stack().0;
    addrs.insert(result_address.clone());
    let mut processes = BTreeMap::new();
    for a in close_under_prefixes(addrs) {
        let local = simplify(&p.proj(ctx, e, &a)?);
        processes.insert(a, local);
    }
    Ok(Network {
        processes,
        result_address,
        flagged,
    })
}

pub fn project_network(p: &CheckedProgram) -> Result<Network, ProjectError> {
    project_network_expr(
        &p.topology,
        &p.input_context(),
        &p.closed_main(),
        &p.main_ty,
    )
}

/// The share of a choreographic value held at address `a`, when the value
/// sits at viewpoint `at`. `None` for functions and non-values.
pub fn value_share(v: &Expr, at: &GenAgent, a: &GenAgent) -> Option<LocalExpr> {
    if !at.is_prefix_of(a) {
        return Some(L::Skip);
    }
    let here = at == a;
    Some(match &v.peel().kind {
        ExprKind::Unit if here => L::Unit,
        ExprKind::Unit => L::Skip,
        ExprKind::Located(agent, w) => value_share(w, &at.child(agent.clone()), a)?,
        ExprKind::Pair(l, r) => simplify(&L::pair(value_share(l, at, a)?, value_share(r, at, a)?)),
        ExprKind::Inl(w) if here => L::Inl(bx(value_share(w, at, a)?)),
        ExprKind::Inr(w) if here => L::Inr(bx(value_share(w, at, a)?)),
        ExprKind::Inl(w) | ExprKind::Inr(w) => value_share(w, at, a)?,
        _ => return None,
    })
}

// Local syntax printing, mirroring the surface grammar.

const LX_TOP: u8 = 0;
const LX_APP: u8 = 1;
const LX_UNARY: u8 = 2;
const LX_ATOM: u8 = 3;

fn local_level(e: &LocalExpr) -> u8 {
    match e {
        L::Lam(..) | L::Let { .. } | L::Case { .. } | L::Seq(..) => LX_TOP,
        L::App(..) => LX_APP,
        L::Fst(_) | L::Snd(_) | L::Inl(_) | L::Inr(_) | L::Absurd(_) | L::SendTo { .. } => LX_UNARY,
        L::Var(_) | L::Unit | L::Skip | L::Pair(..) | L::RecvFrom(_) => LX_ATOM,
    }
}

fn write_local(out: &mut String, e: &LocalExpr, level: u8) {
    if local_level(e) < level {
        out.push('(');
        write_local(out, e, LX_TOP);
        out.push(')');
        return;
    }
    match e {
        L::Var(x) => out.push_str(x),
        L::Unit => out.push_str("()"),
        L::Skip => out.push_str("skip"),
        L::RecvFrom(g) => {
            let _ = write!(out, "recv_from {g}");
        }
        L::Pair(a, b) => {
            out.push('(');
            write_local(out, a, LX_TOP);
            out.push_str(", ");
            write_local(out, b, LX_TOP);
            out.push(')');
        }
        L::SendTo { dest, payload } => {
            let _ = write!(out, "send_to {dest} ");
            write_local(out, payload, LX_UNARY);
        }
        L::Fst(a) | L::Snd(a) | L::Inl(a) | L::Inr(a) | L::Absurd(a) => {
            out.push_str(match e {
                L::Fst(_) => "fst ",
                L::Snd(_) => "snd ",
                L::Inl(_) => "inl ",
                L::Inr(_) => "inr ",
                _ => "absurd ",
            });
            write_local(out, a, LX_UNARY);
        }
        L::App(f, a) => {
            write_local(out, f, LX_APP);
            out.push(' ');
            write_local(out, a, LX_ATOM);
        }
        L::Lam(x, b) => {
            let _ = write!(out, "fun {x} -> ");
            write_local(out, b, LX_TOP);
        }
        L::Let { name, bound, body } => {
            let _ = write!(out, "let {name} = ");
            write_local(out, bound, LX_TOP);
            out.push_str(" in ");
            write_local(out, body, LX_TOP);
        }
        L::Seq(a, b) => {
            write_local(out, a, LX_APP);
            out.push_str(" ; ");
            write_local(out, b, LX_TOP);
        }
        L::Case { scrut, left, right } => {
            out.push_str("case ");
            write_local(out, scrut, LX_APP);
            let _ = write!(out, " of inl {} -> ", left.0);
            write_local(out, &left.1, LX_APP);
            let _ = write!(out, " | inr {} -> ", right.0);
            write_local(out, &right.1, LX_TOP);
        }
    }
}

impl fmt::Display for LocalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_local(&mut s, self, LX_TOP);
        f.write_str(&s)
    }
}
