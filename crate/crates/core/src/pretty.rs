//! Surface-syntax printing. Output always reparses to an alpha-equivalent term.

use std::fmt::{self, Write};

use crate::syntax::{Expr, ExprKind, GenAgent, Program, TopologyRef, TypeExpr};

const TY_ARROW: u8 = 0;
const TY_SUM: u8 = 1;
const TY_PROD: u8 = 2;
const TY_ATOM: u8 = 3;

fn write_type(out: &mut String, ty: &TypeExpr, level: u8) {
    let paren = |out: &mut String, needed: bool, f: &dyn Fn(&mut String)| {
        if needed {
            out.push('(');
            f(out);
            out.push(')');
        } else {
            f(out);
        }
    };
    match ty {
        TypeExpr::Unit => out.push_str("unit"),
        TypeExpr::Void => out.push_str("void"),
        TypeExpr::Believes(..) => {
            let (path, inner) = ty.full_stack();
            let _ = write!(out, "{path} ");
            write_type(out, inner, TY_ATOM);
        }
        TypeExpr::Arrow(d, c) => paren(out, level > TY_ARROW, &|out| {
            write_type(out, d, TY_SUM);
            out.push_str(" -> ");
            write_type(out, c, TY_ARROW);
        }),
        TypeExpr::Sum(l, r) => paren(out, level > TY_SUM, &|out| {
            write_type(out, l, TY_SUM);
            out.push_str(" + ");
            write_type(out, r, TY_PROD);
        }),
        TypeExpr::Product(l, r) => paren(out, level > TY_PROD, &|out| {
            write_type(out, l, TY_PROD);
            out.push_str(" * ");
            write_type(out, r, TY_ATOM);
        }),
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_type(&mut s, self, TY_ARROW);
        f.write_str(&s)
    }
}

// expression precedence levels
const EX_TOP: u8 = 0;
const EX_APP: u8 = 1;
const EX_UNARY: u8 = 2;
const EX_ATOM: u8 = 3;

fn expr_level(e: &Expr) -> u8 {
    use ExprKind::*;
    match &e.kind {
        Lam(..) | ModalLet { .. } | Case { .. } => EX_TOP,
        App(..) => EX_APP,
        Located(..)
        | Send { .. }
        | Up { .. }
        | Down { .. }
        | Fst(_)
        | Snd(_)
        | Inl(_)
        | Inr(_)
        | Absurd(_) => EX_UNARY,
        Var(_) | Unit | Pair(..) | Annot(..) => EX_ATOM,
    }
}

fn write_expr(out: &mut String, e: &Expr, level: u8) {
    use ExprKind::*;
    if expr_level(e) < level {
        out.push('(');
        write_expr(out, e, EX_TOP);
        out.push(')');
        return;
    }
    match &e.kind {
        Var(x) => out.push_str(x),
        Unit => out.push_str("()"),
        Pair(a, b) => {
            out.push('(');
            write_expr(out, a, EX_TOP);
            out.push_str(", ");
            write_expr(out, b, EX_TOP);
            out.push(')');
        }
        Annot(a, t) => {
            out.push('(');
            write_expr(out, a, EX_TOP);
            let _ = write!(out, " : {t})");
        }
        Located(a, body) => {
            let _ = write!(out, "{a}.");
            write_expr(out, body, EX_ATOM);
        }
        Send { payload, dest } => {
            out.push_str("send ");
            write_expr(out, payload, EX_UNARY);
            let _ = write!(out, " to {dest}");
        }
        Up { path, body } => {
            let _ = write!(out, "up {path} ");
            write_expr(out, body, EX_UNARY);
        }
        Down { path, body } => {
            let _ = write!(out, "down {path} ");
            write_expr(out, body, EX_UNARY);
        }
        Fst(a) | Snd(a) | Inl(a) | Inr(a) | Absurd(a) => {
            out.push_str(match &e.kind {
                Fst(_) => "fst ",
                Snd(_) => "snd ",
                Inl(_) => "inl ",
                Inr(_) => "inr ",
                _ => "absurd ",
            });
            write_expr(out, a, EX_UNARY);
        }
        App(f, a) => {
            write_expr(out, f, EX_APP);
            out.push(' ');
            write_expr(out, a, EX_ATOM);
        }
        Lam(x, body) => {
            let _ = write!(out, "fun {x} -> ");
            write_expr(out, body, EX_TOP);
        }
        ModalLet {
            outer,
            inner,
            name,
            bound,
            body,
        } => {
            let _ = write!(out, "let {outer} {inner} {name} = ");
            write_expr(out, bound, EX_TOP);
            out.push_str(" in ");
            write_expr(out, body, EX_TOP);
        }
        Case { scrut, left, right } => {
            out.push_str("case ");
            write_expr(out, scrut, EX_APP);
            let _ = write!(out, " of inl {} -> ", left.0);
            // a trailing open construct in the left branch would swallow `|`
            write_expr(out, &left.1, EX_APP);
            let _ = write!(out, " | inr {} -> ", right.0);
            write_expr(out, &right.1, EX_TOP);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, EX_TOP);
        f.write_str(&s)
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Renders a program in the `.corps` file syntax.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    match &p.topology {
        Some(TopologyRef::Preset(name)) if is_plain_ident(name) => {
            let _ = writeln!(out, "topology {name};");
        }
        Some(TopologyRef::Preset(name)) | Some(TopologyRef::File(name)) => {
            let _ = writeln!(out, "topology {};", quote(name));
        }
        None => {}
    }
    for input in &p.inputs {
        let _ = writeln!(out, "input {} : {};", input.name, input.ty);
    }
    for def in &p.defs {
        let _ = writeln!(out, "def {} : {} = {};", def.name, def.ty, def.body);
    }
    let _ = writeln!(out, "main : {} = {};", p.main_ty, p.main);
    out
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// `[A.B]` style rendering of an address; same as `Display`.
pub fn show_path(g: &GenAgent) -> String {
    g.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_believes_use_stack_sugar() {
        let t = TypeExpr::believes("A", TypeExpr::believes("B", TypeExpr::Unit));
        assert_eq!(t.to_string(), "[A.B] unit");
    }

    #[test]
    fn type_precedence() {
        let t = TypeExpr::arrow(
            TypeExpr::Unit,
            TypeExpr::believes("A", TypeExpr::product(TypeExpr::Unit, TypeExpr::Unit)),
        );
        assert_eq!(t.to_string(), "unit -> [A] (unit * unit)");
        let t = TypeExpr::arrow(
            TypeExpr::arrow(TypeExpr::Unit, TypeExpr::Unit),
            TypeExpr::sum(
                TypeExpr::Unit,
                TypeExpr::product(TypeExpr::Unit, TypeExpr::Void),
            ),
        );
        assert_eq!(t.to_string(), "(unit -> unit) -> unit + unit * void");
    }

    #[test]
    fn self_application() {
        let e = Expr::lam("x", Expr::app(Expr::var("x"), Expr::var("x")));
        assert_eq!(e.to_string(), "fun x -> x x");
    }

    #[test]
    fn located_and_comms() {
        let e = Expr::send(Expr::located("A", Expr::unit()), GenAgent::of(&["B"]));
        assert_eq!(e.to_string(), "send A.() to [B]");
        let e = Expr::located("A", Expr::up(GenAgent::of(&["A"]), Expr::unit()));
        assert_eq!(e.to_string(), "A.(up [A] ())");
    }
}
