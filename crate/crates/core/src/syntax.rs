//! Abstract syntax: agents, generalized agents (paths), types, expressions,
//! lock contexts and programs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Byte range into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// A named principal. Names compare by exact string equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agent(String);

impl Agent {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty());
        Agent(name)
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Agent {
    fn from(s: &str) -> Self {
        Agent::new(s)
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A generalized agent: a path of agents from the root of the process tree.
/// The empty path is the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenAgent(Vec<Agent>);

impl GenAgent {
    pub fn root() -> Self {
        GenAgent(Vec::new())
    }

    pub fn new(segments: Vec<Agent>) -> Self {
        GenAgent(segments)
    }

    /// Builds a path from agent names, e.g. `GenAgent::of(&["A", "B"])`.
    pub fn of(names: &[&str]) -> Self {
        GenAgent(names.iter().map(|n| Agent::new(*n)).collect())
    }

    pub fn segments(&self) -> &[Agent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&Agent> {
        self.0.last()
    }

    pub fn child(&self, agent: Agent) -> GenAgent {
        let mut segs = self.0.clone();
        segs.push(agent);
        GenAgent(segs)
    }

    pub fn concat(&self, other: &GenAgent) -> GenAgent {
        let mut segs = Vec::with_capacity(self.0.len() + other.0.len());
        segs.extend_from_slice(&self.0);
        segs.extend_from_slice(&other.0);
        GenAgent(segs)
    }

    pub fn is_prefix_of(&self, other: &GenAgent) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn strip_prefix(&self, prefix: &GenAgent) -> Option<GenAgent> {
        self.0
            .strip_prefix(prefix.0.as_slice())
            .map(|rest| GenAgent(rest.to_vec()))
    }

    /// All prefixes, from the root up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = GenAgent> + '_ {
        (0..=self.0.len()).map(move |n| GenAgent(self.0[..n].to_vec()))
    }

    /// Dot-joined names without brackets; the root is the empty string.
    pub fn dotted(&self) -> String {
        self.0.iter().map(Agent::name).collect::<Vec<_>>().join(".")
    }

    pub fn from_dotted(s: &str) -> Option<GenAgent> {
        let s = s.trim();
        if s.is_empty() {
            return Some(GenAgent::root());
        }
        let mut segs = Vec::new();
        for part in s.split('.') {
            let part = part.trim();
            if !is_agent_name(part) {
                return None;
            }
            segs.push(Agent::new(part));
        }
        Some(GenAgent(segs))
    }
}

impl FromIterator<Agent> for GenAgent {
    fn from_iter<I: IntoIterator<Item = Agent>>(iter: I) -> Self {
        GenAgent(iter.into_iter().collect())
    }
}

impl fmt::Display for GenAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.dotted())
    }
}

impl Serialize for GenAgent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GenAgent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        GenAgent::from_dotted(trimmed)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid address `{s}`")))
    }
}

/// Monoid action on paths: `g1` followed by `g2`.
pub fn path_concat(g1: &GenAgent, g2: &GenAgent) -> GenAgent {
    g1.concat(g2)
}

pub(crate) fn is_agent_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Types, read as formulae.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Unit,
    Void,
    Believes(Agent, Box<TypeExpr>),
    Product(Box<TypeExpr>, Box<TypeExpr>),
    Sum(Box<TypeExpr>, Box<TypeExpr>),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn believes(agent: impl Into<Agent>, body: TypeExpr) -> Self {
        TypeExpr::Believes(agent.into(), Box::new(body))
    }

    pub fn product(l: TypeExpr, r: TypeExpr) -> Self {
        TypeExpr::Product(Box::new(l), Box::new(r))
    }

    pub fn sum(l: TypeExpr, r: TypeExpr) -> Self {
        TypeExpr::Sum(Box::new(l), Box::new(r))
    }

    pub fn arrow(d: TypeExpr, c: TypeExpr) -> Self {
        TypeExpr::Arrow(Box::new(d), Box::new(c))
    }

    /// Wraps `body` in one modality per segment of `path`, outermost first.
    pub fn stack(path: &GenAgent, body: TypeExpr) -> Self {
        path.segments()
            .iter()
            .rev()
            .fold(body, |acc, a| TypeExpr::Believes(a.clone(), Box::new(acc)))
    }

    /// Removes exactly the modalities named by `path`.
    pub fn strip_stack(&self, path: &GenAgent) -> Option<&TypeExpr> {
        let mut ty = self;
        for agent in path.segments() {
            match ty {
                TypeExpr::Believes(a, body) if a == agent => ty = body,
                _ => return None,
            }
        }
        Some(ty)
    }

    /// Splits off the outermost `n` modalities, whatever their agents.
    pub fn split_stack(&self, n: usize) -> Option<(GenAgent, &TypeExpr)> {
        let mut ty = self;
        let mut path = Vec::with_capacity(n);
        for _ in 0..n {
            match ty {
                TypeExpr::Believes(a, body) => {
                    path.push(a.clone());
                    ty = body;
                }
                _ => return None,
            }
        }
        Some((GenAgent(path), ty))
    }

    /// Splits off every outermost modality.
    pub fn full_stack(&self) -> (GenAgent, &TypeExpr) {
        let mut ty = self;
        let mut path = Vec::new();
        while let TypeExpr::Believes(a, body) = ty {
            path.push(a.clone());
            ty = body;
        }
        (GenAgent(path), ty)
    }

    /// No function types anywhere.
    pub fn is_positive(&self) -> bool {
        match self {
            TypeExpr::Unit | TypeExpr::Void => true,
            TypeExpr::Arrow(..) => false,
            TypeExpr::Believes(_, t) => t.is_positive(),
            TypeExpr::Product(l, r) | TypeExpr::Sum(l, r) => l.is_positive() && r.is_positive(),
        }
    }

    /// Built only from unit, void, products and sums: all data lives at one address.
    pub fn is_local(&self) -> bool {
        match self {
            TypeExpr::Unit | TypeExpr::Void => true,
            TypeExpr::Arrow(..) | TypeExpr::Believes(..) => false,
            TypeExpr::Product(l, r) | TypeExpr::Sum(l, r) => l.is_local() && r.is_local(),
        }
    }
}

/// Expression node. Equality ignores spans and is structural, not alpha.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Option<Span>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Located(Agent, Box<Expr>),
    /// `let [outer] [inner] name = bound in body`
    ModalLet {
        outer: GenAgent,
        inner: GenAgent,
        name: String,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    Send {
        payload: Box<Expr>,
        dest: GenAgent,
    },
    Up {
        path: GenAgent,
        body: Box<Expr>,
    },
    Down {
        path: GenAgent,
        body: Box<Expr>,
    },
    Lam(String, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Inl(Box<Expr>),
    Inr(Box<Expr>),
    Case {
        scrut: Box<Expr>,
        left: (String, Box<Expr>),
        right: (String, Box<Expr>),
    },
    Unit,
    Absurd(Box<Expr>),
    Annot(Box<Expr>, TypeExpr),
}

impl From<ExprKind> for Expr {
    fn from(kind: ExprKind) -> Self {
        Expr { kind, span: None }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Option<Span>) -> Self {
        Expr { kind, span }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn var(name: impl Into<String>) -> Self {
        ExprKind::Var(name.into()).into()
    }

    pub fn unit() -> Self {
        ExprKind::Unit.into()
    }

    pub fn located(agent: impl Into<Agent>, body: Expr) -> Self {
        ExprKind::Located(agent.into(), Box::new(body)).into()
    }

    /// `A1.(A2.(... body))` for every segment of `path`.
    pub fn located_stack(path: &GenAgent, body: Expr) -> Self {
        path.segments()
            .iter()
            .rev()
            .fold(body, |acc, a| Expr::located(a.clone(), acc))
    }

    pub fn modal_let(
        outer: GenAgent,
        inner: GenAgent,
        name: impl Into<String>,
        bound: Expr,
        body: Expr,
    ) -> Self {
        ExprKind::ModalLet {
            outer,
            inner,
            name: name.into(),
            bound: Box::new(bound),
            body: Box::new(body),
        }
        .into()
    }

    pub fn send(payload: Expr, dest: GenAgent) -> Self {
        ExprKind::Send {
            payload: Box::new(payload),
            dest,
        }
        .into()
    }

    pub fn up(path: GenAgent, body: Expr) -> Self {
        ExprKind::Up {
            path,
            body: Box::new(body),
        }
        .into()
    }

    pub fn down(path: GenAgent, body: Expr) -> Self {
        ExprKind::Down {
            path,
            body: Box::new(body),
        }
        .into()
    }

    pub fn lam(param: impl Into<String>, body: Expr) -> Self {
        ExprKind::Lam(param.into(), Box::new(body)).into()
    }

    pub fn app(f: Expr, a: Expr) -> Self {
        ExprKind::App(Box::new(f), Box::new(a)).into()
    }

    pub fn pair(l: Expr, r: Expr) -> Self {
        ExprKind::Pair(Box::new(l), Box::new(r)).into()
    }

    pub fn fst(e: Expr) -> Self {
        ExprKind::Fst(Box::new(e)).into()
    }

    pub fn snd(e: Expr) -> Self {
        ExprKind::Snd(Box::new(e)).into()
    }

    pub fn inl(e: Expr) -> Self {
        ExprKind::Inl(Box::new(e)).into()
    }

    pub fn inr(e: Expr) -> Self {
        ExprKind::Inr(Box::new(e)).into()
    }

    pub fn case(
        scrut: Expr,
        xl: impl Into<String>,
        el: Expr,
        xr: impl Into<String>,
        er: Expr,
    ) -> Self {
        ExprKind::Case {
            scrut: Box::new(scrut),
            left: (xl.into(), Box::new(el)),
            right: (xr.into(), Box::new(er)),
        }
        .into()
    }

    pub fn absurd(e: Expr) -> Self {
        ExprKind::Absurd(Box::new(e)).into()
    }

    pub fn annot(e: Expr, ty: TypeExpr) -> Self {
        ExprKind::Annot(Box::new(e), ty).into()
    }

    /// Strips any number of type annotations.
    pub fn peel(&self) -> &Expr {
        let mut e = self;
        while let ExprKind::Annot(inner, _) = &e.kind {
            e = inner;
        }
        e
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Immediate subexpressions, in source order.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Var(_) | Unit => vec![],
            Located(_, e) | Send { payload: e, .. } | Up { body: e, .. } | Down { body: e, .. } => {
                vec![e]
            }
            Lam(_, e) | Fst(e) | Snd(e) | Inl(e) | Inr(e) | Absurd(e) | Annot(e, _) => vec![e],
            ModalLet { bound, body, .. } => vec![bound, body],
            App(a, b) | Pair(a, b) => vec![a, b],
            Case { scrut, left, right } => vec![scrut, &left.1, &right.1],
        }
    }
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    use ExprKind::*;
    match &e.kind {
        Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Lam(x, body) => {
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        ModalLet {
            name,
            bound: b,
            body,
            ..
        } => {
            collect_free(b, bound, out);
            bound.push(name.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Case { scrut, left, right } => {
            collect_free(scrut, bound, out);
            for (x, body) in [left, right] {
                bound.push(x.clone());
                collect_free(body, bound, out);
                bound.pop();
            }
        }
        _ => {
            for c in e.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// Picks a name based on `base` that is not in `avoid`.
pub(crate) fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (0..)
        .map(|n| format!("{stem}{n}"))
        .find(|cand| !avoid.contains(cand))
        .expect("unbounded range")
}

/// Capture-avoiding substitution `e[x := v]`.
pub fn substitute(e: &Expr, x: &str, v: &Expr) -> Expr {
    let fv = v.free_vars();
    subst(e, x, v, &fv)
}

fn subst(e: &Expr, x: &str, v: &Expr, fv: &BTreeSet<String>) -> Expr {
    use ExprKind::*;
    let sub = |c: &Expr| Box::new(subst(c, x, v, fv));
    let kind = match &e.kind {
        Var(y) if y == x => return v.clone(),
        Var(_) | Unit => return e.clone(),
        Located(a, b) => Located(a.clone(), sub(b)),
        ModalLet {
            outer,
            inner,
            name,
            bound,
            body,
        } => {
            let (name, body) = under_binder(name, body, x, v, fv);
            ModalLet {
                outer: outer.clone(),
                inner: inner.clone(),
                name,
                bound: sub(bound),
                body: Box::new(body),
            }
        }
        Send { payload, dest } => Send {
            payload: sub(payload),
            dest: dest.clone(),
        },
        Up { path, body } => Up {
            path: path.clone(),
            body: sub(body),
        },
        Down { path, body } => Down {
            path: path.clone(),
            body: sub(body),
        },
        Lam(p, body) => {
            let (p, body) = under_binder(p, body, x, v, fv);
            Lam(p, Box::new(body))
        }
        App(a, b) => App(sub(a), sub(b)),
        Pair(a, b) => Pair(sub(a), sub(b)),
        Fst(a) => Fst(sub(a)),
        Snd(a) => Snd(sub(a)),
        Inl(a) => Inl(sub(a)),
        Inr(a) => Inr(sub(a)),
        Case { scrut, left, right } => {
            let (xl, el) = under_binder(&left.0, &left.1, x, v, fv);
            let (xr, er) = under_binder(&right.0, &right.1, x, v, fv);
            Case {
                scrut: sub(scrut),
                left: (xl, Box::new(el)),
                right: (xr, Box::new(er)),
            }
        }
        Absurd(a) => Absurd(sub(a)),
        Annot(a, t) => Annot(sub(a), t.clone()),
    };
    Expr::new(kind, e.span)
}

fn under_binder(
    binder: &str,
    body: &Expr,
    x: &str,
    v: &Expr,
    fv: &BTreeSet<String>,
) -> (String, Expr) {
    if binder == x {
        return (binder.to_string(), body.clone());
    }
    if fv.contains(binder) && body.free_vars().contains(x) {
        let mut avoid = fv.clone();
        avoid.extend(body.free_vars());
        avoid.insert(x.to_string());
        let fresh = fresh_name(binder, &avoid);
        let renamed = subst(body, binder, &Expr::var(fresh.clone()), &BTreeSet::new());
        return (fresh, subst(&renamed, x, v, fv));
    }
    (binder.to_string(), subst(body, x, v, fv))
}

/// Alpha-equivalence.
pub fn expr_equal(e1: &Expr, e2: &Expr) -> bool {
    alpha(e1, e2, &mut Vec::new(), &mut Vec::new())
}

fn lookup_depth(env: &[String], x: &str) -> Option<usize> {
    env.iter().rposition(|b| b == x)
}

fn alpha(a: &Expr, b: &Expr, la: &mut Vec<String>, lb: &mut Vec<String>) -> bool {
    use ExprKind::*;
    fn under(
        xa: &str,
        ba: &Expr,
        xb: &str,
        bb: &Expr,
        la: &mut Vec<String>,
        lb: &mut Vec<String>,
    ) -> bool {
        la.push(xa.to_string());
        lb.push(xb.to_string());
        let ok = alpha(ba, bb, la, lb);
        la.pop();
        lb.pop();
        ok
    }
    match (&a.kind, &b.kind) {
        (Var(x), Var(y)) => match (lookup_depth(la, x), lookup_depth(lb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Unit, Unit) => true,
        (Located(p, x), Located(q, y)) => p == q && alpha(x, y, la, lb),
        (
            ModalLet {
                outer: o1,
                inner: i1,
                name: n1,
                bound: b1,
                body: d1,
            },
            ModalLet {
                outer: o2,
                inner: i2,
                name: n2,
                bound: b2,
                body: d2,
            },
        ) => o1 == o2 && i1 == i2 && alpha(b1, b2, la, lb) && under(n1, d1, n2, d2, la, lb),
        (
            Send {
                payload: p1,
                dest: d1,
            },
            Send {
                payload: p2,
                dest: d2,
            },
        ) => d1 == d2 && alpha(p1, p2, la, lb),
        (Up { path: p1, body: b1 }, Up { path: p2, body: b2 })
        | (Down { path: p1, body: b1 }, Down { path: p2, body: b2 }) => {
            p1 == p2 && alpha(b1, b2, la, lb)
        }
        (Lam(x, b1), Lam(y, b2)) => under(x, b1, y, b2, la, lb),
        (App(f1, a1), App(f2, a2)) | (Pair(f1, a1), Pair(f2, a2)) => {
            alpha(f1, f2, la, lb) && alpha(a1, a2, la, lb)
        }
        (Fst(x), Fst(y))
        | (Snd(x), Snd(y))
        | (Inl(x), Inl(y))
        | (Inr(x), Inr(y))
        | (Absurd(x), Absurd(y)) => alpha(x, y, la, lb),
        (
            Case {
                scrut: s1,
                left: l1,
                right: r1,
            },
            Case {
                scrut: s2,
                left: l2,
                right: r2,
            },
        ) => {
            alpha(s1, s2, la, lb)
                && under(&l1.0, &l1.1, &l2.0, &l2.1, la, lb)
                && under(&r1.0, &r1.1, &r2.0, &r2.1, la, lb)
        }
        (Annot(x, t1), Annot(y, t2)) => t1 == t2 && alpha(x, y, la, lb),
        _ => false,
    }
}

/// One entry of a lock context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entry {
    Binding {
        name: String,
        ty: TypeExpr,
        tag: GenAgent,
    },
    Lock(GenAgent),
}

/// Ordered bindings and locks. Values built through `push_*`/`with_*` are
/// always canonical: no empty locks and no two adjacent locks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingContext {
    entries: Vec<Entry>,
}

/// Why a variable is unavailable at the current viewpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LookupError {
    Unbound,
    /// The locks added since the binding do not spell its tag.
    LockMismatch {
        tag: GenAgent,
        locks: GenAgent,
    },
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Takes entries verbatim, without normalizing.
    pub fn from_entries(entries: Vec<Entry>) -> Self {
        TypingContext { entries }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn push_lock(&mut self, g: &GenAgent) {
        if g.is_root() {
            return;
        }
        if let Some(Entry::Lock(last)) = self.entries.last_mut() {
            *last = last.concat(g);
        } else {
            self.entries.push(Entry::Lock(g.clone()));
        }
    }

    pub fn push_binding(&mut self, name: impl Into<String>, ty: TypeExpr, tag: GenAgent) {
        self.entries.push(Entry::Binding {
            name: name.into(),
            ty,
            tag,
        });
    }

    pub fn with_lock(&self, g: &GenAgent) -> Self {
        let mut c = self.clone();
        c.push_lock(g);
        c
    }

    pub fn with_binding(&self, name: impl Into<String>, ty: TypeExpr, tag: GenAgent) -> Self {
        let mut c = self.clone();
        c.push_binding(name, ty, tag);
        c
    }

    pub fn locks(&self) -> GenAgent {
        locks_of_entries(&self.entries)
    }

    /// Resolves the rightmost binding of `name`. It is usable only when the
    /// locks after it concatenate to its tag.
    pub fn lookup(&self, name: &str) -> Result<&TypeExpr, LookupError> {
        let idx = self
            .entries
            .iter()
            .rposition(|e| matches!(e, Entry::Binding { name: n, .. } if n == name))
            .ok_or(LookupError::Unbound)?;
        let Entry::Binding { ty, tag, .. } = &self.entries[idx] else {
            unreachable!()
        };
        let locks = locks_of_entries(&self.entries[idx + 1..]);
        if &locks == tag {
            Ok(ty)
        } else {
            Err(LookupError::LockMismatch {
                tag: tag.clone(),
                locks,
            })
        }
    }

    /// Every variable usable at the current viewpoint with its type.
    pub fn usable_bindings(&self) -> Vec<(&str, &TypeExpr)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in self.entries.iter().rev() {
            if let Entry::Binding { name, .. } = e {
                if seen.insert(name.as_str()) {
                    if let Ok(ty) = self.lookup(name) {
                        out.push((name.as_str(), ty));
                    }
                }
            }
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        let no_empty = self
            .entries
            .iter()
            .all(|e| !matches!(e, Entry::Lock(g) if g.is_root()));
        let no_adjacent = self
            .entries
            .windows(2)
            .all(|w| !matches!(w, [Entry::Lock(_), Entry::Lock(_)]));
        no_empty && no_adjacent
    }
}

fn locks_of_entries(entries: &[Entry]) -> GenAgent {
    let mut segs = Vec::new();
    for e in entries {
        if let Entry::Lock(g) = e {
            segs.extend_from_slice(g.segments());
        }
    }
    GenAgent(segs)
}

/// Concatenation of all lock paths in order; bindings are skipped.
pub fn locks_of(ctx: &TypingContext) -> GenAgent {
    ctx.locks()
}

/// Drops empty locks and fuses adjacent locks.
pub fn normalize_context(ctx: &TypingContext) -> TypingContext {
    let mut out = TypingContext::new();
    for e in &ctx.entries {
        match e {
            Entry::Lock(g) => out.push_lock(g),
            b @ Entry::Binding { .. } => out.entries.push(b.clone()),
        }
    }
    out
}

/// Where the program's topology comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologyRef {
    Preset(String),
    File(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Option<Span>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub ty: TypeExpr,
    pub body: Expr,
    pub span: Option<Span>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub topology: Option<TopologyRef>,
    pub inputs: Vec<InputDecl>,
    pub defs: Vec<Def>,
    pub main_ty: TypeExpr,
    pub main: Expr,
}

impl Program {
    pub fn new(main_ty: TypeExpr, main: Expr) -> Self {
        Program {
            topology: None,
            inputs: Vec::new(),
            defs: Vec::new(),
            main_ty,
            main,
        }
    }

    /// Main with every definition bound by a degenerate `let [] []`.
    pub fn closed_main(&self) -> Expr {
        desugar_defs(
            self.defs.iter().map(|d| (d.name.as_str(), &d.body)),
            self.main.clone(),
        )
    }
}

pub(crate) fn desugar_defs<'a>(
    defs: impl DoubleEndedIterator<Item = (&'a str, &'a Expr)>,
    main: Expr,
) -> Expr {
    defs.rev().fold(main, |acc, (name, body)| {
        Expr::modal_let(GenAgent::root(), GenAgent::root(), name, body.clone(), acc)
    })
}

/// Alpha-equivalence lifted to whole programs.
pub fn program_equal(p: &Program, q: &Program) -> bool {
    p.topology == q.topology
        && p.main_ty == q.main_ty
        && p.inputs.len() == q.inputs.len()
        && p.inputs
            .iter()
            .zip(&q.inputs)
            .all(|(a, b)| a.name == b.name && a.ty == b.ty)
        && p.defs.len() == q.defs.len()
        && p.defs
            .iter()
            .zip(&q.defs)
            .all(|(a, b)| a.name == b.name && a.ty == b.ty && expr_equal(&a.body, &b.body))
        && expr_equal(&p.main, &q.main)
}
