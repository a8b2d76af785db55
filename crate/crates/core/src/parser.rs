//! Lexer and recursive-descent parser for `.corps` programs.

use std::fmt;

use thiserror::Error;

use crate::syntax::{
    Agent, Def, Expr, ExprKind, GenAgent, InputDecl, Program, Span, TopologyRef, TypeExpr,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    fn new(span: Span, message: impl Into<String>, expected: Vec<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Agent(String),
    Ident(String),
    Str(String),
    Kw(Kw),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Comma,
    Colon,
    Semi,
    Eq,
    Arrow,
    Bar,
    Plus,
    Star,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kw {
    Topology,
    Input,
    Def,
    Main,
    Let,
    In,
    Send,
    To,
    Up,
    Down,
    Fun,
    Fst,
    Snd,
    Inl,
    Inr,
    Case,
    Of,
    Absurd,
    Unit,
    Void,
    True,
    False,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("topology", Kw::Topology),
    ("input", Kw::Input),
    ("def", Kw::Def),
    ("main", Kw::Main),
    ("let", Kw::Let),
    ("in", Kw::In),
    ("send", Kw::Send),
    ("to", Kw::To),
    ("up", Kw::Up),
    ("down", Kw::Down),
    ("fun", Kw::Fun),
    ("fst", Kw::Fst),
    ("snd", Kw::Snd),
    ("inl", Kw::Inl),
    ("inr", Kw::Inr),
    ("case", Kw::Case),
    ("of", Kw::Of),
    ("absurd", Kw::Absurd),
    ("unit", Kw::Unit),
    ("void", Kw::Void),
    ("true", Kw::True),
    ("false", Kw::False),
];

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Agent(s) => write!(f, "agent `{s}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Kw(k) => {
                let name = KEYWORDS.iter().find(|(_, kw)| kw == k).map(|(n, _)| *n);
                write!(f, "`{}`", name.unwrap_or("?"))
            }
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let single = match c {
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'.' => Some(Tok::Dot),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b';' => Some(Tok::Semi),
            b'=' => Some(Tok::Eq),
            b'|' => Some(Tok::Bar),
            b'+' => Some(Tok::Plus),
            b'*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, Span::new(start, start + 1)));
            i += 1;
            continue;
        }
        if c == b'-' {
            if bytes.get(i + 1) == Some(&b'>') {
                toks.push((Tok::Arrow, Span::new(start, start + 2)));
                i += 2;
                continue;
            }
            return Err(ParseError::new(
                Span::new(start, start + 1),
                "unexpected `-`",
                vec!["`->`".into()],
            ));
        }
        if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                match bytes.get(i) {
                    None => {
                        return Err(ParseError::new(
                            Span::new(start, src.len()),
                            "unterminated string literal",
                            vec!["`\"`".into()],
                        ))
                    }
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') if i + 1 < bytes.len() => {
                        let ch = src[i + 1..].chars().next().expect("in bounds");
                        s.push(ch);
                        i += 1 + ch.len_utf8();
                    }
                    Some(_) => {
                        let ch = src[i..].chars().next().expect("in bounds");
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            toks.push((Tok::Str(s), Span::new(start, i)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
            {
                i += 1;
            }
            let word = &src[start..i];
            let tok = if let Some((_, kw)) = KEYWORDS.iter().find(|(n, _)| *n == word) {
                Tok::Kw(*kw)
            } else if c.is_ascii_uppercase() {
                Tok::Agent(word.to_string())
            } else {
                Tok::Ident(word.to_string())
            };
            toks.push((tok, Span::new(start, i)));
            continue;
        }
        let ch = src[i..].chars().next().expect("in bounds");
        return Err(ParseError::new(
            Span::new(start, start + ch.len_utf8()),
            format!("unexpected character `{ch}`"),
            vec![],
        ));
    }
    toks.push((Tok::Eof, Span::new(src.len(), src.len())));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].1.end
        }
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().to_string();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        ParseError::new(
            self.span(),
            format!("expected {}, found {found}", expected.join(" or ")),
            expected,
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> PResult<Span> {
        self.expect(Tok::Kw(kw))
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut topology = None;
        if *self.peek() == Tok::Kw(Kw::Topology) {
            self.bump();
            topology = Some(match self.peek().clone() {
                Tok::Ident(s) | Tok::Agent(s) => {
                    self.bump();
                    TopologyRef::Preset(s)
                }
                Tok::Str(s) => {
                    self.bump();
                    TopologyRef::File(s)
                }
                _ => return Err(self.error(&["preset name", "string"])),
            });
            self.expect(Tok::Semi)?;
        }
        let mut inputs = Vec::new();
        while *self.peek() == Tok::Kw(Kw::Input) {
            let start = self.bump().1.start;
            let (name, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            let end = self.expect(Tok::Semi)?.end;
            inputs.push(InputDecl {
                name,
                ty,
                span: Some(Span::new(start, end)),
            });
        }
        let mut defs = Vec::new();
        while *self.peek() == Tok::Kw(Kw::Def) {
            let start = self.bump().1.start;
            let (name, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::Eq)?;
            let body = self.expr()?;
            let end = self.expect(Tok::Semi)?.end;
            defs.push(Def {
                name,
                ty,
                body,
                span: Some(Span::new(start, end)),
            });
        }
        if *self.peek() != Tok::Kw(Kw::Main) {
            let mut expected = vec!["`def`", "`main`"];
            if defs.is_empty() {
                expected.insert(0, "`input`");
            }
            return Err(self.error(&expected));
        }
        self.bump();
        self.expect(Tok::Colon)?;
        let main_ty = self.ty()?;
        self.expect(Tok::Eq)?;
        let main = self.expr()?;
        self.expect(Tok::Semi)?;
        self.expect_eof()?;
        Ok(Program {
            topology,
            inputs,
            defs,
            main_ty,
            main,
        })
    }

    fn path(&mut self) -> PResult<GenAgent> {
        self.expect(Tok::LBracket)?;
        let mut segs = Vec::new();
        if *self.peek() == Tok::RBracket {
            self.bump();
            return Ok(GenAgent::new(segs));
        }
        loop {
            match self.peek().clone() {
                Tok::Agent(a) => {
                    self.bump();
                    segs.push(Agent::new(a));
                }
                _ => return Err(self.error(&["agent name"])),
            }
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                }
                Tok::RBracket => {
                    self.bump();
                    return Ok(GenAgent::new(segs));
                }
                _ => return Err(self.error(&["`.`", "`]`"])),
            }
        }
    }

    fn ty(&mut self) -> PResult<TypeExpr> {
        let lhs = self.ty_sum()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.ty()?;
            return Ok(TypeExpr::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self) -> PResult<TypeExpr> {
        let mut acc = self.ty_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let r = self.ty_prod()?;
            acc = TypeExpr::sum(acc, r);
        }
        Ok(acc)
    }

    fn ty_prod(&mut self) -> PResult<TypeExpr> {
        let mut acc = self.ty_modal()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let r = self.ty_modal()?;
            acc = TypeExpr::product(acc, r);
        }
        Ok(acc)
    }

    fn ty_modal(&mut self) -> PResult<TypeExpr> {
        match self.peek() {
            Tok::LBracket => {
                let path = self.path()?;
                let body = self.ty_modal()?;
                Ok(TypeExpr::stack(&path, body))
            }
            Tok::Kw(Kw::Unit) => {
                self.bump();
                Ok(TypeExpr::Unit)
            }
            Tok::Kw(Kw::Void) => {
                self.bump();
                Ok(TypeExpr::Void)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.error(&["type"])),
        }
    }

    fn finish(&self, start: usize, kind: ExprKind) -> Expr {
        Expr::new(kind, Some(Span::new(start, self.prev_end().max(start))))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        match self.peek() {
            Tok::Kw(Kw::Fun) => {
                self.bump();
                let (x, _) = self.ident()?;
                self.expect(Tok::Arrow)?;
                let body = self.expr()?;
                Ok(self.finish(start, ExprKind::Lam(x, Box::new(body))))
            }
            Tok::Kw(Kw::Let) => {
                self.bump();
                let outer = self.path()?;
                let inner = self.path()?;
                let (name, _) = self.ident()?;
                self.expect(Tok::Eq)?;
                let bound = self.expr()?;
                self.expect_kw(Kw::In)?;
                let body = self.expr()?;
                Ok(self.finish(
                    start,
                    ExprKind::ModalLet {
                        outer,
                        inner,
                        name,
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                ))
            }
            Tok::Kw(Kw::Case) => {
                self.bump();
                let scrut = self.expr()?;
                self.expect_kw(Kw::Of)?;
                self.expect_kw(Kw::Inl)?;
                let (xl, _) = self.ident()?;
                self.expect(Tok::Arrow)?;
                let el = self.expr()?;
                self.expect(Tok::Bar)?;
                self.expect_kw(Kw::Inr)?;
                let (xr, _) = self.ident()?;
                self.expect(Tok::Arrow)?;
                let er = self.expr()?;
                Ok(self.finish(
                    start,
                    ExprKind::Case {
                        scrut: Box::new(scrut),
                        left: (xl, Box::new(el)),
                        right: (xr, Box::new(er)),
                    },
                ))
            }
            _ => self.app(),
        }
    }

    fn starts_unary(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Agent(_)
                | Tok::Ident(_)
                | Tok::LParen
                | Tok::Kw(
                    Kw::Send
                        | Kw::Up
                        | Kw::Down
                        | Kw::Inl
                        | Kw::Inr
                        | Kw::Fst
                        | Kw::Snd
                        | Kw::Absurd
                )
        )
    }

    fn app(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        if !self.starts_unary() {
            return Err(self.error(&["expression"]));
        }
        let mut acc = self.unary()?;
        while self.starts_unary() {
            let arg = self.unary()?;
            acc = self.finish(start, ExprKind::App(Box::new(acc), Box::new(arg)));
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let boxed = |e: Expr| Box::new(e);
        match self.peek().clone() {
            Tok::Agent(a) => {
                self.bump();
                self.expect(Tok::Dot)?;
                let body = self.unary()?;
                Ok(self.finish(start, ExprKind::Located(Agent::new(a), boxed(body))))
            }
            Tok::Kw(Kw::Send) => {
                self.bump();
                let payload = self.unary()?;
                self.expect_kw(Kw::To)?;
                let dest = self.path()?;
                Ok(self.finish(
                    start,
                    ExprKind::Send {
                        payload: boxed(payload),
                        dest,
                    },
                ))
            }
            Tok::Kw(kw @ (Kw::Up | Kw::Down)) => {
                self.bump();
                let path = self.path()?;
                let body = boxed(self.unary()?);
                let kind = if kw == Kw::Up {
                    ExprKind::Up { path, body }
                } else {
                    ExprKind::Down { path, body }
                };
                Ok(self.finish(start, kind))
            }
            Tok::Kw(kw @ (Kw::Inl | Kw::Inr | Kw::Fst | Kw::Snd | Kw::Absurd)) => {
                self.bump();
                let e = boxed(self.unary()?);
                let kind = match kw {
                    Kw::Inl => ExprKind::Inl(e),
                    Kw::Inr => ExprKind::Inr(e),
                    Kw::Fst => ExprKind::Fst(e),
                    Kw::Snd => ExprKind::Snd(e),
                    _ => ExprKind::Absurd(e),
                };
                Ok(self.finish(start, kind))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(self.finish(start, ExprKind::Var(x)))
            }
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(self.finish(start, ExprKind::Unit));
                }
                let inner = self.expr()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    Tok::Comma => {
                        self.bump();
                        let rhs = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(self.finish(start, ExprKind::Pair(Box::new(inner), Box::new(rhs))))
                    }
                    Tok::Colon => {
                        self.bump();
                        let ty = self.ty()?;
                        self.expect(Tok::RParen)?;
                        Ok(self.finish(start, ExprKind::Annot(Box::new(inner), ty)))
                    }
                    _ => Err(self.error(&["`)`", "`,`", "`:`"])),
                }
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text)?.program()
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_path(text: &str) -> Result<GenAgent, ParseError> {
    let mut p = Parser::new(text)?;
    let g = p.path()?;
    p.expect_eof()?;
    Ok(g)
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, col)
}
