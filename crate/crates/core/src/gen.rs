//! Seeded random generation of well-typed programs (and of arbitrary terms).
//!
//! Generation is type-directed: a goal type is picked first and a term is
//! grown to fit it, choosing among variables, introduction forms, redexes and
//! whatever communications the topology permits at the current viewpoint.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{
    Agent, Def, Expr, ExprKind, GenAgent, InputDecl, Program, TopologyRef, TypeExpr, TypingContext,
};
use crate::topology::{RelationKind, Topology};

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Upper bound on the depth of generated terms, annotations not counted.
    pub max_depth: usize,
    pub agents: Vec<Agent>,
    /// Chance that the main type is lambda-free.
    pub positive_main: f64,
    /// Chance of emitting a top-level definition.
    pub def_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 7,
            agents: ["A", "B", "C"].into_iter().map(Agent::new).collect(),
            positive_main: 0.85,
            def_rate: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Var,
    Intro,
    Let,
    LetVar,
    Beta,
    Proj,
    Case,
    Send,
    Up,
    Down,
    Absurd,
}

const WEIGHTS: &[(Choice, u32)] = &[
    (Choice::Var, 6),
    (Choice::Intro, 6),
    (Choice::Let, 2),
    (Choice::LetVar, 4),
    (Choice::Beta, 2),
    (Choice::Proj, 2),
    (Choice::Case, 2),
    (Choice::Send, 5),
    (Choice::Up, 3),
    (Choice::Down, 3),
    (Choice::Absurd, 1),
];

pub struct ProgramGen<'t> {
    topology: &'t Topology,
    rng: ChaCha8Rng,
    cfg: GenConfig,
    fresh: usize,
}

impl<'t> ProgramGen<'t> {
    pub fn new(topology: &'t Topology, seed: u64) -> Self {
        Self::with_config(topology, seed, GenConfig::default())
    }

    pub fn with_config(topology: &'t Topology, seed: u64, cfg: GenConfig) -> Self {
        ProgramGen {
            topology,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            fresh: 0,
        }
    }

    fn name(&mut self, stem: &str) -> String {
        self.fresh += 1;
        format!("{stem}{}", self.fresh)
    }

    fn agent(&mut self) -> Agent {
        self.cfg
            .agents
            .choose(&mut self.rng)
            .expect("agents")
            .clone()
    }

    fn path(&mut self, min: usize, max: usize) -> GenAgent {
        let n = self.rng.gen_range(min..=max);
        (0..n).map(|_| self.agent()).collect()
    }

    /// Every path of length `lo..=hi` over the agent alphabet.
    fn all_paths(&self, lo: usize, hi: usize) -> Vec<GenAgent> {
        let mut out = Vec::new();
        let mut layer = vec![GenAgent::root()];
        for len in 0..=hi {
            if len >= lo {
                out.extend(layer.iter().cloned());
            }
            layer = layer
                .iter()
                .flat_map(|g| self.cfg.agents.iter().map(move |a| g.child(a.clone())))
                .collect();
        }
        out
    }

    /// An inhabited type; `void` only appears beside an inhabited alternative
    /// or as a function domain.
    pub fn ty(&mut self, depth: usize) -> TypeExpr {
        if depth == 0 {
            return match self.rng.gen_range(0..4) {
                0 => TypeExpr::believes(self.agent(), TypeExpr::Unit),
                _ => TypeExpr::Unit,
            };
        }
        match self.rng.gen_range(0..10) {
            0 | 1 => TypeExpr::Unit,
            2 | 3 => TypeExpr::product(self.ty(depth - 1), self.ty(depth - 1)),
            4 | 5 => self.local_sum(depth),
            6 => {
                let dom = if self.rng.gen_bool(0.15) {
                    TypeExpr::Void
                } else {
                    self.ty(depth - 1)
                };
                TypeExpr::arrow(dom, self.ty(depth - 1))
            }
            _ => TypeExpr::believes(self.agent(), self.ty(depth - 1)),
        }
    }

    fn positive_ty(&mut self, depth: usize) -> TypeExpr {
        loop {
            let t = self.ty(depth);
            if t.is_positive() {
                return t;
            }
        }
    }

    fn local_ty(&mut self, depth: usize) -> TypeExpr {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return TypeExpr::Unit;
        }
        if self.rng.gen_bool(0.5) {
            TypeExpr::product(self.local_ty(depth - 1), self.local_ty(depth - 1))
        } else {
            self.local_sum(depth)
        }
    }

    fn local_sum(&mut self, depth: usize) -> TypeExpr {
        let l = self.local_ty(depth.saturating_sub(1));
        let r = if self.rng.gen_bool(0.1) {
            TypeExpr::Void
        } else {
            self.local_ty(depth.saturating_sub(1))
        };
        if self.rng.gen_bool(0.5) {
            TypeExpr::sum(l, r)
        } else {
            TypeExpr::sum(r, l)
        }
    }

    fn choices(&mut self) -> Vec<Choice> {
        let mut pool: Vec<(Choice, u32)> = WEIGHTS.to_vec();
        let mut out = Vec::new();
        while !pool.is_empty() {
            let total: u32 = pool.iter().map(|p| p.1).sum();
            let mut pick = self.rng.gen_range(0..total);
            let idx = pool
                .iter()
                .position(|&(_, w)| {
                    if pick < w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .expect("weighted pick");
            out.push(pool.remove(idx).0);
        }
        out
    }

    /// A term of type `ty` in `ctx`, or `None` if none was found within budget.
    pub fn term(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        if budget == 0 {
            return self.var(ctx, ty).or_else(|| self.intro(ctx, ty, 0));
        }
        for choice in self.choices() {
            let got = match choice {
                Choice::Var => self.var(ctx, ty),
                Choice::Intro => self.intro(ctx, ty, budget),
                Choice::Let => self.fresh_let(ctx, ty, budget),
                Choice::LetVar => self.let_var(ctx, ty, budget),
                Choice::Beta => self.beta(ctx, ty, budget),
                Choice::Proj => self.proj(ctx, ty, budget),
                Choice::Case => self.case(ctx, ty, budget),
                Choice::Send => self.send(ctx, ty, budget),
                Choice::Up => self.up(ctx, ty, budget),
                Choice::Down => self.down(ctx, ty, budget),
                Choice::Absurd => self.absurd(ctx, ty),
            };
            if got.is_some() {
                return got;
            }
        }
        None
    }

    fn var(&mut self, ctx: &TypingContext, ty: &TypeExpr) -> Option<Expr> {
        let names: Vec<String> = ctx
            .usable_bindings()
            .into_iter()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n.to_string())
            .collect();
        names.choose(&mut self.rng).map(Expr::var)
    }

    fn intro(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let b = budget.saturating_sub(1);
        match ty {
            TypeExpr::Unit => Some(Expr::unit()),
            TypeExpr::Void => None,
            TypeExpr::Product(l, r) => {
                Some(Expr::pair(self.term(ctx, l, b)?, self.term(ctx, r, b)?))
            }
            TypeExpr::Sum(l, r) => {
                let left = match (**l == TypeExpr::Void, **r == TypeExpr::Void) {
                    (true, _) => false,
                    (_, true) => true,
                    _ => self.rng.gen_bool(0.5),
                };
                Some(if left {
                    Expr::inl(self.term(ctx, l, b)?)
                } else {
                    Expr::inr(self.term(ctx, r, b)?)
                })
            }
            TypeExpr::Arrow(d, c) => {
                let x = self.name("x");
                let inner = ctx.with_binding(x.clone(), (**d).clone(), GenAgent::root());
                Some(Expr::lam(x, self.term(&inner, c, b)?))
            }
            TypeExpr::Believes(a, t) => {
                let inner = ctx.with_lock(&GenAgent::new(vec![a.clone()]));
                Some(Expr::located(a.clone(), self.term(&inner, t, b)?))
            }
        }
    }

    fn fresh_let(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let g1 = self.path(0, 1);
        let g2 = self.path(0, 2);
        let sigma = self.ty(1);
        let bound_ty = TypeExpr::stack(&g2, sigma.clone());
        let bound = self.term(&ctx.with_lock(&g1), &bound_ty, budget - 1)?;
        let x = self.name("y");
        let body_ctx = ctx.with_binding(x.clone(), sigma, g1.concat(&g2));
        let body = self.term(&body_ctx, ty, budget - 1)?;
        Some(Expr::modal_let(
            g1,
            g2,
            x,
            ensure_infer(bound, bound_ty),
            body,
        ))
    }

    fn let_var(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let stacked: Vec<(String, TypeExpr)> = ctx
            .usable_bindings()
            .into_iter()
            .filter(|(_, t)| matches!(t, TypeExpr::Believes(..)))
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        let (v, vty) = stacked.choose(&mut self.rng)?.clone();
        let full = vty.full_stack().0;
        let k = self.rng.gen_range(1..=full.len());
        let g2 = GenAgent::new(full.segments()[..k].to_vec());
        let sigma = vty.strip_stack(&g2).expect("prefix").clone();
        let x = self.name("y");
        let body_ctx = ctx.with_binding(x.clone(), sigma, g2.clone());
        let body = self.term(&body_ctx, ty, budget - 1)?;
        Some(Expr::modal_let(GenAgent::root(), g2, x, Expr::var(v), body))
    }

    fn beta(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let sigma = self.ty(1);
        let x = self.name("x");
        let inner = ctx.with_binding(x.clone(), sigma.clone(), GenAgent::root());
        let body = self.term(&inner, ty, budget - 1)?;
        let arg = self.term(ctx, &sigma, budget - 1)?;
        let f = Expr::annot(Expr::lam(x, body), TypeExpr::arrow(sigma, ty.clone()));
        Some(Expr::app(f, arg))
    }

    fn proj(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let sigma = self.ty(1);
        let here = self.term(ctx, ty, budget - 1)?;
        let other = self.term(ctx, &sigma, budget - 1)?;
        Some(if self.rng.gen_bool(0.5) {
            let pty = TypeExpr::product(ty.clone(), sigma);
            Expr::fst(ensure_infer(Expr::pair(here, other), pty))
        } else {
            let pty = TypeExpr::product(sigma, ty.clone());
            Expr::snd(ensure_infer(Expr::pair(other, here), pty))
        })
    }

    fn case(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let sum = self.local_sum(1);
        let TypeExpr::Sum(l, r) = &sum else {
            unreachable!()
        };
        let scrut = self.term(ctx, &sum, budget - 1)?;
        let (xl, xr) = (self.name("l"), self.name("r"));
        let lctx = ctx.with_binding(xl.clone(), (**l).clone(), GenAgent::root());
        let rctx = ctx.with_binding(xr.clone(), (**r).clone(), GenAgent::root());
        let el = self.term(&lctx, ty, budget - 1)?;
        let er = self.term(&rctx, ty, budget - 1)?;
        Some(Expr::case(ensure_infer(scrut, sum.clone()), xl, el, xr, er))
    }

    fn send(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let (stack, _) = ty.full_stack();
        if stack.is_empty() {
            return None;
        }
        let here = ctx.locks();
        let k = self.rng.gen_range(1..=stack.len());
        let g2 = GenAgent::new(stack.segments()[..k].to_vec());
        let rest = ty.strip_stack(&g2).expect("prefix").clone();
        let to = here.concat(&g2);
        let sources: Vec<GenAgent> = self
            .all_paths(k, k)
            .into_iter()
            .filter(|g1| {
                self.topology
                    .relation_holds(RelationKind::CanSend, &here.concat(g1), &to)
            })
            .collect();
        let g1 = sources.choose(&mut self.rng)?.clone();
        let pty = TypeExpr::stack(&g1, rest);
        let payload = self.term(ctx, &pty, budget - 1)?;
        Some(Expr::send(ensure_infer(payload, pty), g2))
    }

    fn up(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let (stack, _) = ty.full_stack();
        let here = ctx.locks();
        let options: Vec<usize> = (1..=stack.len())
            .filter(|&k| {
                let g = GenAgent::new(stack.segments()[..k].to_vec());
                self.topology
                    .relation_holds(RelationKind::CanUp, &here, &here.concat(&g))
            })
            .collect();
        let k = *options.choose(&mut self.rng)?;
        let g = GenAgent::new(stack.segments()[..k].to_vec());
        let rest = ty.strip_stack(&g).expect("prefix").clone();
        let body = self.term(ctx, &rest, budget - 1)?;
        Some(Expr::up(g, ensure_infer(body, rest)))
    }

    fn down(&mut self, ctx: &TypingContext, ty: &TypeExpr, budget: usize) -> Option<Expr> {
        let here = ctx.locks();
        let options: Vec<GenAgent> = self
            .all_paths(1, 2)
            .into_iter()
            .filter(|g| {
                self.topology
                    .relation_holds(RelationKind::CanDown, &here, &here.concat(g))
            })
            .collect();
        let g = options.choose(&mut self.rng)?.clone();
        let bty = TypeExpr::stack(&g, ty.clone());
        let body = self.term(ctx, &bty, budget - 1)?;
        Some(Expr::down(g, ensure_infer(body, bty)))
    }

    fn absurd(&mut self, ctx: &TypingContext, _ty: &TypeExpr) -> Option<Expr> {
        let v = self.var(ctx, &TypeExpr::Void)?;
        Some(Expr::absurd(v))
    }

    /// A closed well-typed program whose main has depth at most `max_depth`.
    pub fn program(&mut self, topology: Option<TopologyRef>) -> Program {
        self.program_with_inputs(topology, &[], None)
    }

    /// Like [`ProgramGen::program`], with declared inputs available to main
    /// and optionally a fixed main type.
    pub fn program_with_inputs(
        &mut self,
        topology: Option<TopologyRef>,
        inputs: &[(String, TypeExpr)],
        main_ty: Option<&TypeExpr>,
    ) -> Program {
        loop {
            self.fresh = 0;
            let mut ctx = TypingContext::new();
            for (n, t) in inputs {
                ctx.push_binding(n.clone(), t.clone(), GenAgent::root());
            }
            let mut defs = Vec::new();
            if self.rng.gen_bool(self.cfg.def_rate) {
                let ty = self.ty(2);
                let budget = self.rng.gen_range(1..=3);
                if let Some(body) = self.term(&ctx, &ty, budget) {
                    if depth(&body) <= self.cfg.max_depth {
                        let name = self.name("d");
                        ctx.push_binding(name.clone(), ty.clone(), GenAgent::root());
                        defs.push(Def {
                            name,
                            ty,
                            body,
                            span: None,
                        });
                    }
                }
            }
            let ty = match main_ty {
                Some(t) => t.clone(),
                None if self.rng.gen_bool(self.cfg.positive_main) => self.positive_ty(2),
                None => self.ty(2),
            };
            let budget = self
                .rng
                .gen_range(2..=self.cfg.max_depth.saturating_sub(2).max(2));
            let Some(main) = self.term(&ctx, &ty, budget) else {
                continue;
            };
            if depth(&main) > self.cfg.max_depth {
                continue;
            }
            return Program {
                topology: topology.clone(),
                inputs: inputs
                    .iter()
                    .map(|(n, t)| InputDecl {
                        name: n.clone(),
                        ty: t.clone(),
                        span: None,
                    })
                    .collect(),
                defs,
                main_ty: ty,
                main,
            };
        }
    }

    /// An arbitrary, usually ill-typed, expression over a small vocabulary.
    pub fn untyped_expr(&mut self, depth: usize) -> Expr {
        let vars = ["x", "y", "z"];
        if depth == 0 {
            return match self.rng.gen_range(0..2) {
                0 => Expr::unit(),
                _ => Expr::var(*vars.choose(&mut self.rng).expect("vars")),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..17) {
            0 => Expr::unit(),
            1 => Expr::var(*vars.choose(&mut self.rng).expect("vars")),
            2 => Expr::located(self.agent(), self.untyped_expr(d)),
            3 => {
                let (g1, g2) = (self.path(0, 1), self.path(0, 2));
                let x = *vars.choose(&mut self.rng).expect("vars");
                Expr::modal_let(g1, g2, x, self.untyped_expr(d), self.untyped_expr(d))
            }
            4 => Expr::send(self.untyped_expr(d), self.path(1, 2)),
            5 => Expr::up(self.path(1, 2), self.untyped_expr(d)),
            6 => Expr::down(self.path(1, 2), self.untyped_expr(d)),
            7 => Expr::lam(
                *vars.choose(&mut self.rng).expect("vars"),
                self.untyped_expr(d),
            ),
            8 => Expr::app(self.untyped_expr(d), self.untyped_expr(d)),
            9 => Expr::pair(self.untyped_expr(d), self.untyped_expr(d)),
            10 => Expr::fst(self.untyped_expr(d)),
            11 => Expr::snd(self.untyped_expr(d)),
            12 => Expr::inl(self.untyped_expr(d)),
            13 => Expr::inr(self.untyped_expr(d)),
            14 => Expr::case(
                self.untyped_expr(d),
                "x",
                self.untyped_expr(d),
                "y",
                self.untyped_expr(d),
            ),
            15 => Expr::absurd(self.untyped_expr(d)),
            _ => {
                let t = self.ty(2);
                Expr::annot(self.untyped_expr(d), t)
            }
        }
    }
}

/// Wraps `e` in an annotation unless the checker can already infer its type.
pub fn ensure_infer(e: Expr, ty: TypeExpr) -> Expr {
    if infers(&e) {
        e
    } else {
        Expr::annot(e, ty)
    }
}

fn infers(e: &Expr) -> bool {
    use ExprKind::*;
    match &e.kind {
        Var(_) | Unit | Annot(..) | Send { .. } | Down { .. } | App(..) | Fst(_) | Snd(_) => true,
        Located(_, b) | Up { body: b, .. } | ModalLet { body: b, .. } => infers(b),
        Pair(a, b) => infers(a) && infers(b),
        Case { left, right, .. } => infers(&left.1) || infers(&right.1),
        Lam(..) | Inl(_) | Inr(_) | Absurd(_) => false,
    }
}

/// Nesting depth, not counting annotation nodes.
pub fn depth(e: &Expr) -> usize {
    let below = e.children().into_iter().map(depth).max().unwrap_or(0);
    match e.kind {
        ExprKind::Annot(..) => below,
        _ => below + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::load_preset;
    use crate::typecheck::check_program;

    #[test]
    fn generated_programs_typecheck() {
        for preset in ["choreo", "doxastic", "siblings"] {
            let t = load_preset(preset).unwrap();
            let mut g = ProgramGen::new(&t, 11);
            for _ in 0..200 {
                let p = g.program(Some(TopologyRef::Preset(preset.into())));
                assert!(depth(&p.main) <= 7);
                if let Err(errs) = check_program(&p, &t) {
                    panic!("{preset}: {}\n{}", errs[0], p);
                }
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let t = load_preset("choreo").unwrap();
        let a = ProgramGen::new(&t, 5).program(None);
        let b = ProgramGen::new(&t, 5).program(None);
        assert_eq!(a, b);
    }

    #[test]
    fn inputs_are_in_scope() {
        let t = load_preset("doxastic").unwrap();
        let ity = TypeExpr::believes("B", TypeExpr::sum(TypeExpr::Unit, TypeExpr::Unit));
        let mut g = ProgramGen::new(&t, 2);
        let mut used = 0;
        for _ in 0..100 {
            let p = g.program_with_inputs(None, &[("b".into(), ity.clone())], None);
            check_program(&p, &t).unwrap();
            used += p.main.free_vars().contains("b") as usize;
        }
        assert!(used > 10, "input used in only {used} programs");
    }
}
