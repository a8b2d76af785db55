//! Small-step call-by-value semantics of choreographies.
//!
//! The strategy is leftmost-outermost: the head redex fires if there is one,
//! otherwise the first evaluation-position child that can step does. A child
//! stuck on a frozen communication does not block its right siblings. Nothing
//! reduces under `fun`, inside case branches, or in the body of a `let` whose
//! bound expression has not yet become a value.

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{substitute, Agent, Expr, ExprKind, GenAgent, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvalMode {
    /// Communications never fire; only logical cuts are eliminated.
    CommFree,
    /// Communications fire when their payload is a lambda-free value.
    PositiveComm,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::CommFree => "comm-free",
            EvalMode::PositiveComm => "positive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NormalFormClass {
    Value,
    CommNeutral,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Beta,
    Fst,
    Snd,
    CaseInl,
    CaseInr,
    ModalLet,
    Send,
    Up,
    Down,
}

impl StepRule {
    pub fn is_comm(self) -> bool {
        matches!(self, StepRule::Send | StepRule::Up | StepRule::Down)
    }

    pub fn tag(self) -> &'static str {
        match self {
            StepRule::Beta => "beta",
            StepRule::Fst => "fst",
            StepRule::Snd => "snd",
            StepRule::CaseInl => "case-inl",
            StepRule::CaseInr => "case-inr",
            StepRule::ModalLet => "modal-let",
            StepRule::Send => "send",
            StepRule::Up => "up",
            StepRule::Down => "down",
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One reduction, as recorded in traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub rule: StepRule,
    pub span: Option<Span>,
}

#[derive(Clone, Debug, Error)]
pub enum NormalizeError {
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { last: Expr, steps: usize },
    #[error("stuck on a closed term that is neither a value nor a frozen communication: {term}")]
    StuckUnexpected { term: Expr, steps: usize },
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub term: Expr,
    pub class: NormalFormClass,
    pub steps: usize,
    pub trace: Vec<StepRecord>,
}

pub fn is_value(e: &Expr) -> bool {
    use ExprKind::*;
    match &e.kind {
        Unit | Lam(..) => true,
        Pair(a, b) => is_value(a) && is_value(b),
        Inl(v) | Inr(v) | Located(_, v) | Annot(v, _) => is_value(v),
        _ => false,
    }
}

pub fn is_positive_value(e: &Expr) -> bool {
    use ExprKind::*;
    match &e.kind {
        Unit => true,
        Pair(a, b) => is_positive_value(a) && is_positive_value(b),
        Inl(v) | Inr(v) | Located(_, v) | Annot(v, _) => is_positive_value(v),
        _ => false,
    }
}

/// For a value `A1.(...An.(v))` (annotations anywhere in the stack), returns `v`.
pub fn strip_located(e: &Expr, path: &GenAgent) -> Option<Expr> {
    let mut cur = e;
    for agent in path.segments() {
        match &cur.peel().kind {
            ExprKind::Located(a, body) if a == agent => cur = body,
            _ => return None,
        }
    }
    Some(cur.clone())
}

pub fn wrap_located(path: &GenAgent, v: Expr) -> Expr {
    path.segments()
        .iter()
        .rev()
        .fold(v, |acc, a: &Agent| Expr::located(a.clone(), acc))
}

fn head_step(mode: EvalMode, e: &Expr) -> Option<(Expr, StepRule)> {
    use ExprKind::*;
    let positive = mode == EvalMode::PositiveComm;
    match &e.kind {
        App(f, a) if is_value(a) => match &f.peel().kind {
            Lam(x, body) => Some((substitute(body, x, a), StepRule::Beta)),
            _ => None,
        },
        Fst(p) | Snd(p) if is_value(p) => match &p.peel().kind {
            Pair(l, r) => {
                let is_fst = matches!(e.kind, Fst(_));
                let out = if is_fst { l } else { r };
                Some((
                    (**out).clone(),
                    if is_fst { StepRule::Fst } else { StepRule::Snd },
                ))
            }
            _ => None,
        },
        Case { scrut, left, right } if is_value(scrut) => match &scrut.peel().kind {
            Inl(v) => Some((substitute(&left.1, &left.0, v), StepRule::CaseInl)),
            Inr(v) => Some((substitute(&right.1, &right.0, v), StepRule::CaseInr)),
            _ => None,
        },
        ModalLet {
            inner,
            name,
            bound,
            body,
            ..
        } if is_value(bound) => {
            let v = strip_located(bound, inner)?;
            Some((substitute(body, name, &v), StepRule::ModalLet))
        }
        Send { payload, dest } if positive && is_positive_value(payload) => {
            let v = strip_located(payload, &source_path(payload, dest.len())?)?;
            Some((wrap_located(dest, v), StepRule::Send))
        }
        Up { path, body } if positive && is_positive_value(body) => {
            Some((wrap_located(path, (**body).clone()), StepRule::Up))
        }
        Down { path, body } if positive && is_positive_value(body) => {
            Some((strip_located(body, path)?, StepRule::Down))
        }
        _ => None,
    }
}

/// The first `n` located frames of a value, as a path.
fn source_path(v: &Expr, n: usize) -> Option<GenAgent> {
    let mut out = Vec::with_capacity(n);
    let mut cur = v;
    while out.len() < n {
        match &cur.peel().kind {
            ExprKind::Located(a, body) => {
                out.push(a.clone());
                cur = body;
            }
            _ => return None,
        }
    }
    Some(GenAgent::new(out))
}

/// Child positions that evaluate, in source order.
fn eval_children(e: &Expr) -> Vec<&Expr> {
    use ExprKind::*;
    match &e.kind {
        Var(_) | Unit | Lam(..) => vec![],
        Located(_, b) | Send { payload: b, .. } | Up { body: b, .. } | Down { body: b, .. } => {
            vec![b]
        }
        Fst(b) | Snd(b) | Inl(b) | Inr(b) | Absurd(b) | Annot(b, _) => vec![b],
        App(a, b) | Pair(a, b) => vec![a, b],
        ModalLet { bound, .. } => vec![bound],
        Case { scrut, .. } => vec![scrut],
    }
}

fn replace_eval_child(e: &Expr, idx: usize, new: Expr) -> Expr {
    use ExprKind::*;
    let b = Box::new(new);
    let kind = match (&e.kind, idx) {
        (Located(a, _), 0) => Located(a.clone(), b),
        (Send { dest, .. }, 0) => Send {
            payload: b,
            dest: dest.clone(),
        },
        (Up { path, .. }, 0) => Up {
            path: path.clone(),
            body: b,
        },
        (Down { path, .. }, 0) => Down {
            path: path.clone(),
            body: b,
        },
        (Fst(_), 0) => Fst(b),
        (Snd(_), 0) => Snd(b),
        (Inl(_), 0) => Inl(b),
        (Inr(_), 0) => Inr(b),
        (Absurd(_), 0) => Absurd(b),
        (Annot(_, t), 0) => Annot(b, t.clone()),
        (App(_, r), 0) => App(b, r.clone()),
        (App(l, _), 1) => App(l.clone(), b),
        (Pair(_, r), 0) => Pair(b, r.clone()),
        (Pair(l, _), 1) => Pair(l.clone(), b),
        (
            ModalLet {
                outer,
                inner,
                name,
                body,
                ..
            },
            0,
        ) => ModalLet {
            outer: outer.clone(),
            inner: inner.clone(),
            name: name.clone(),
            bound: b,
            body: body.clone(),
        },
        (Case { left, right, .. }, 0) => Case {
            scrut: b,
            left: left.clone(),
            right: right.clone(),
        },
        _ => unreachable!("no evaluation child {idx}"),
    };
    Expr::new(kind, e.span)
}

/// One step with the rule that fired and the span of the redex.
pub fn step_traced(mode: EvalMode, e: &Expr) -> Option<(Expr, StepRule, Option<Span>)> {
    if let Some((next, rule)) = head_step(mode, e) {
        return Some((next, rule, e.span));
    }
    for (i, child) in eval_children(e).into_iter().enumerate() {
        if let Some((next, rule, span)) = step_traced(mode, child) {
            return Some((replace_eval_child(e, i, next), rule, span));
        }
    }
    None
}

pub fn step(mode: EvalMode, e: &Expr) -> Option<Expr> {
    step_traced(mode, e).map(|(next, _, _)| next)
}

/// Whether a normal form has a communication left unreduced in an evaluated
/// position, i.e. one the given mode freezes.
fn has_frozen_comm(e: &Expr) -> bool {
    use ExprKind::*;
    matches!(e.kind, Send { .. } | Up { .. } | Down { .. })
        || eval_children(e).into_iter().any(has_frozen_comm)
}

/// Classifies a term that no longer steps.
pub fn classify(e: &Expr) -> Option<NormalFormClass> {
    if is_value(e) {
        Some(NormalFormClass::Value)
    } else if !e.is_closed() {
        Some(NormalFormClass::Open)
    } else if has_frozen_comm(e) {
        Some(NormalFormClass::CommNeutral)
    } else {
        None
    }
}

pub fn normalize(mode: EvalMode, e: &Expr, fuel: usize) -> Result<Normalized, NormalizeError> {
    normalize_with(mode, e, fuel, |_, _| {})
}

/// Like [`normalize`], calling `on_step` after every reduction with the new term.
pub fn normalize_with(
    mode: EvalMode,
    e: &Expr,
    fuel: usize,
    mut on_step: impl FnMut(&StepRecord, &Expr),
) -> Result<Normalized, NormalizeError> {
    let mut cur = e.clone();
    let mut trace = Vec::new();
    loop {
        match step_traced(mode, &cur) {
            Some((next, rule, span)) => {
                if trace.len() == fuel {
                    return Err(NormalizeError::FuelExhausted {
                        last: cur,
                        steps: trace.len(),
                    });
                }
                let rec = StepRecord {
                    index: trace.len(),
                    rule,
                    span,
                };
                on_step(&rec, &next);
                trace.push(rec);
                cur = next;
            }
            None => {
                let steps = trace.len();
                return match classify(&cur) {
                    Some(class) => Ok(Normalized {
                        term: cur,
                        class,
                        steps,
                        trace,
                    }),
                    None => Err(NormalizeError::StuckUnexpected { term: cur, steps }),
                };
            }
        }
    }
}

/// Communications in evaluated positions whose payload is already a positive
/// value. Empty for every positive-mode normal form.
pub fn positive_comm_residuals(e: &Expr) -> Vec<Expr> {
    use ExprKind::*;
    let mut out = Vec::new();
    let mut stack = vec![e];
    while let Some(cur) = stack.pop() {
        match &cur.kind {
            Send { payload: b, .. } | Up { body: b, .. } | Down { body: b, .. }
                if is_positive_value(b) =>
            {
                out.push(cur.clone())
            }
            _ => {}
        }
        stack.extend(eval_children(cur));
    }
    out
}

pub fn write_trace_jsonl(trace: &[StepRecord], mut w: impl Write) -> io::Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
