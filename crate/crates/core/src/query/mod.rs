//! The navigation expression language shared by the console, view
//! predicates, templates and rule scripts.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr     := coalesce ('?' expr ':' expr)?
//! coalesce := or ('??' or)*
//! or       := and ('||' and)*
//! and      := eq ('&&' eq)*
//! eq       := rel (('==' | '!=' | '===' | '!==') rel)*
//! rel      := add (('<' | '<=' | '>' | '>=') add)*
//! add      := mul (('+' | '-') mul)*
//! mul      := unary (('*' | '/' | '%') unary)*
//! unary    := ('!' | '-') unary | postfix
//! postfix  := primary ('.' name | '.$' name | '[' expr ']' | '(' args ')')*
//! primary  := literal | ident | lambda | '(' expr ')' | '[' args ']' | template
//! lambda   := ident '=>' expr | '(' idents ')' '=>' expr
//! ```
//!
//! Constraints may also be written as `context <Class> inv: <body>`, where
//! the body accepts `self`, `=`, `<>`, `and`, `or` and `not`.

mod ast;
mod eval;
mod lexer;
mod parser;
pub mod rewrite;
pub mod script;
mod value;

use std::fmt;

use crate::error::Result;
use crate::id::ElementId;
use crate::meta::Element;
use crate::store::Store;

pub use ast::{BinOp, Expr, ExprKind, Literal, TemplatePart, UnOp};
pub use eval::EvalContext;
pub use lexer::is_identifier;
pub use parser::Parser;
pub use script::Script;
pub use value::{Closure, Value};

pub(crate) use value::fmt_real;

/// Source position of a token or node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

/// Syntax or evaluation error, printed as `line:col message path`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub path: String,
}

impl QueryError {
    pub fn new(span: Span, message: impl Into<String>, path: impl Into<String>) -> Self {
        QueryError {
            line: span.line.max(1),
            col: span.col.max(1),
            message: message.into(),
            path: path.into(),
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = path.into();
        self
    }
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} {}", self.line, self.col, self.message)?;
        if !self.path.is_empty() {
            write!(f, " {}", self.path)?;
        }
        Ok(())
    }
}

impl std::error::Error for QueryError {}

fn end_span(src: &str) -> Span {
    let line = src.matches('\n').count() as u32 + 1;
    let col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
    Span {
        start: src.len(),
        end: src.len(),
        line,
        col,
    }
}

fn parse_tokens(src: &str, toks: &[lexer::Token], constraint: bool) -> Result<Expr, QueryError> {
    let mut p = Parser::new(toks, end_span(src), constraint);
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.error(format!("unexpected {}", p.describe())));
    }
    Ok(e)
}

/// Parses a core-language expression.
pub fn parse(src: &str) -> Result<Expr, QueryError> {
    let toks = lexer::tokenize(src)?;
    parse_tokens(src, &toks, false)
}

/// Which elements a predicate's `context` clause admits.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextGuard {
    /// No `context` clause.
    Any,
    /// `context DObject`: every object.
    AnyObject,
    /// `context DModel`, `DClass`, ...: elements of that construct kind.
    Kind(String),
    /// `context Entity`: objects whose class is `Entity` or a subclass.
    Class(String),
}

/// A parsed selection predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub guard: ContextGuard,
    pub body: Expr,
}

const KINDS: &[&str] = &["DModel", "DPackage", "DClass", "DEnum", "DAttribute", "DReference", "DValue"];

impl Predicate {
    pub fn parse(src: &str) -> Result<Predicate, QueryError> {
        let toks = lexer::tokenize(src)?;
        let is_word = |i: usize, w: &str| matches!(toks.get(i).map(|t| &t.tok), Some(lexer::Tok::Ident(x)) if x == w);
        if !is_word(0, "context") {
            return Ok(Predicate {
                guard: ContextGuard::Any,
                body: parse_tokens(src, &toks, false)?,
            });
        }
        let mut p = Parser::new(&toks, end_span(src), true);
        p.advance();
        let class = p.expect_ident()?;
        if !p.is_word("inv") {
            return Err(p.error(format!("expected `inv`, found {}", p.describe())));
        }
        p.advance();
        if !p.is_punct(":") {
            p.expect_ident()?;
        }
        p.expect(":")?;
        let rest = &toks[p.position()..];
        let body = parse_tokens(src, rest, true)?;
        let guard = match class.as_str() {
            "DObject" => ContextGuard::AnyObject,
            k if KINDS.contains(&k) => ContextGuard::Kind(k.to_string()),
            c => ContextGuard::Class(c.to_string()),
        };
        Ok(Predicate { guard, body })
    }

    /// Whether the context clause admits `element`.
    pub fn admits(&self, store: &Store, element: ElementId) -> bool {
        let t = store.elements();
        let Some(e) = t.get(element) else { return false };
        match &self.guard {
            ContextGuard::Any => true,
            ContextGuard::AnyObject => matches!(e, Element::Object(_)),
            ContextGuard::Kind(k) => e.kind_name() == k,
            ContextGuard::Class(name) => match e {
                Element::Object(o) => t
                    .superclasses(o.instance_of)
                    .map(|sups| {
                        std::iter::once(o.instance_of)
                            .chain(sups)
                            .any(|c| t.class(c).is_ok_and(|c| &c.name == name))
                    })
                    .unwrap_or(false),
                _ => false,
            },
        }
    }

    /// Evaluates against `ctx`, whose `data` is the subject. Elements outside
    /// the context clause yield `false`.
    pub fn holds(&self, ctx: &EvalContext<'_>) -> Result<bool, QueryError> {
        if let Value::Element(id) = ctx.data {
            if !self.admits(ctx.store, id) {
                return Ok(false);
            }
        } else if self.guard != ContextGuard::Any {
            return Ok(false);
        }
        match ctx.eval(&self.body)? {
            Value::Bool(b) => Ok(b),
            other => Err(QueryError::new(
                self.body.span,
                format!("predicate produced a {}, expected boolean", other.type_name()),
                "",
            )),
        }
    }
}

/// Parses and evaluates `src` as a predicate.
pub fn evaluate_predicate(src: &str, ctx: &EvalContext<'_>) -> Result<bool, QueryError> {
    Predicate::parse(src)?.holds(ctx)
}

/// Evaluates `query` once per object of `model` with `data` bound to it.
/// Boolean results select objects; other non-null results are collected.
pub fn execute_query(store: &Store, query: &str, model: ElementId) -> Result<Vec<Value>> {
    let expr = parse(query)?;
    store.elements().model(model)?;
    let mut out = Vec::new();
    for id in store.elements().model_objects(model) {
        let ctx = EvalContext::for_element(store, id);
        let v = ctx.eval(&expr).map_err(|e| {
            let path = if e.path.is_empty() {
                id.to_string()
            } else {
                format!("{} on {id}", e.path)
            };
            e.with_path(path)
        })?;
        match v {
            Value::Bool(true) => out.push(Value::Element(id)),
            Value::Bool(false) | Value::Null => {}
            other => out.push(other),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(src: &str) {
        let e = parse(src).unwrap();
        let printed = e.to_string();
        let again = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(e, again, "{src} -> {printed}");
    }

    #[test]
    fn coalesce_is_left_nested() {
        let e = parse("a ?? b ?? c").unwrap();
        let ExprKind::Binary { op: BinOp::Coalesce, lhs, .. } = &e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinOp::Coalesce, .. }));
    }

    #[test]
    fn coalesce_binds_looser_than_or() {
        let e = parse("a || b ?? c").unwrap();
        assert!(matches!(e.kind, ExprKind::Binary { op: BinOp::Coalesce, .. }));
    }

    #[test]
    fn arithmetic_is_left_associative() {
        assert_eq!(parse("1 - 2 - 3").unwrap().to_string(), "((1 - 2) - 3)");
        assert_eq!(parse("1 + 2 * 3").unwrap().to_string(), "(1 + (2 * 3))");
    }

    #[test]
    fn printer_roundtrips() {
        for src in [
            "data.$ownedAttributes.values.map(attr => attr.name)",
            "`${node.x} * ${node.y} = ${node.x * node.y}`",
            "node.state.level ?? 3",
            "a ? b : c ? d : e",
            "(a, b) => a + b",
            "xs[0].y(1, 'q\\'s')",
            "!(-x) && [1, 2.5, null]",
            "() => 1",
            "`a\\`b\\${c}`",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse("").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = parse("a +\n  * b").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert_eq!(e.to_string(), "2:3 unexpected `*`");
        assert!(parse("data.").is_err());
        assert!(parse("(a").is_err());
        assert!(parse("a b").is_err());
    }

    #[test]
    fn constraint_header_is_recognised() {
        let p = Predicate::parse("context DObject inv: self.instanceof.name = 'Entity'").unwrap();
        assert_eq!(p.guard, ContextGuard::AnyObject);
        assert_eq!(p.body, parse("data.instanceof.name == 'Entity'").unwrap());
        let p = Predicate::parse("context Entity inv named: not (self.x <> 1 and true or false)").unwrap();
        assert_eq!(p.guard, ContextGuard::Class("Entity".into()));
        assert_eq!(p.body, parse("!(data.x != 1 && true || false)").unwrap());
        assert!(Predicate::parse("context Entity self").is_err());
    }
}
