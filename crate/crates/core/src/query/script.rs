//! Statement scripts used as rule actions and validation checks.
//!
//! ```text
//! script := stmt*
//! stmt   := 'let' ident '=' expr ';'?
//!         | 'if' '(' expr ')' block ('else' (block | stmt))?
//!         | target '=' expr ';'?
//! block  := '{' stmt* '}'
//! target := ident                        -- a local
//!         | <expr>.$feature.value        -- single-valued feature
//!         | <expr>.$feature.values       -- whole feature list
//!         | <expr>.x | .y | .width | .height   (on a node)
//!         | <expr>.state.<key>           -- node state entry
//! ```

use super::ast::{Expr, ExprKind};
use super::lexer::tokenize;
use super::parser::Parser;
use super::{end_span, QueryError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutField {
    X,
    Y,
    Width,
    Height,
}

impl LayoutField {
    pub fn name(self) -> &'static str {
        match self {
            LayoutField::X => "x",
            LayoutField::Y => "y",
            LayoutField::Width => "width",
            LayoutField::Height => "height",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Local(String),
    Feature { object: Expr, feature: String, many: bool },
    Layout { node: Expr, field: LayoutField },
    State { node: Expr, key: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Let { name: String, value: Expr },
    Assign { target: Target, value: Expr },
    If { cond: Expr, then: Vec<Stmt>, other: Vec<Stmt> },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Script {
    pub stmts: Vec<Stmt>,
}

impl Script {
    /// Parses a script. An empty source is the empty script.
    pub fn parse(src: &str) -> Result<Script, QueryError> {
        let toks = tokenize(src)?;
        let mut p = Parser::new(&toks, end_span(src), false);
        let mut stmts = Vec::new();
        while !p.at_end() {
            stmts.push(stmt(&mut p)?);
        }
        Ok(Script { stmts })
    }

    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty()
    }

    /// True when no statement writes outside its own locals.
    pub fn is_read_only(&self) -> bool {
        fn pure(s: &Stmt) -> bool {
            match s {
                Stmt::Let { .. } => true,
                Stmt::Assign { target, .. } => matches!(target, Target::Local(_)),
                Stmt::If { then, other, .. } => then.iter().chain(other).all(pure),
            }
        }
        self.stmts.iter().all(pure)
    }
}

fn block(p: &mut Parser<'_>) -> Result<Vec<Stmt>, QueryError> {
    if !p.eat("{") {
        return Ok(vec![stmt(p)?]);
    }
    let mut out = Vec::new();
    while !p.eat("}") {
        if p.at_end() {
            return Err(p.error("expected `}`"));
        }
        out.push(stmt(p)?);
    }
    Ok(out)
}

fn stmt(p: &mut Parser<'_>) -> Result<Stmt, QueryError> {
    let s = if p.is_word("let") {
        p.advance();
        let name = p.expect_ident()?;
        p.expect("=")?;
        let value = p.expr()?;
        Stmt::Let { name, value }
    } else if p.is_word("if") {
        p.advance();
        p.expect("(")?;
        let cond = p.expr()?;
        p.expect(")")?;
        let then = block(p)?;
        let other = if p.is_word("else") {
            p.advance();
            block(p)?
        } else {
            Vec::new()
        };
        return Ok(Stmt::If { cond, then, other });
    } else {
        let lhs = p.expr()?;
        if !p.eat("=") {
            return Err(p.error(format!("expected `=` after `{}`, found {}", lhs.path(), p.describe())));
        }
        let target = target(lhs)?;
        let value = p.expr()?;
        Stmt::Assign { target, value }
    };
    p.eat(";");
    Ok(s)
}

fn target(lhs: Expr) -> Result<Target, QueryError> {
    let not_assignable = |e: &Expr| QueryError::new(e.span, "expression is not assignable", e.path());
    match lhs.kind {
        ExprKind::Ident(ref name) if !matches!(name.as_str(), "data" | "node" | "view") => {
            Ok(Target::Local(name.clone()))
        }
        ExprKind::Member {
            ref obj,
            ref name,
            dollar: false,
        } => {
            if let ExprKind::Member {
                obj: inner,
                name: feature,
                dollar: true,
            } = &obj.kind
            {
                if name == "value" || name == "values" {
                    return Ok(Target::Feature {
                        object: (**inner).clone(),
                        feature: feature.clone(),
                        many: name == "values",
                    });
                }
            }
            if let ExprKind::Member {
                obj: inner,
                name: state,
                dollar: false,
            } = &obj.kind
            {
                if state == "state" {
                    return Ok(Target::State {
                        node: (**inner).clone(),
                        key: name.clone(),
                    });
                }
            }
            let field = match name.as_str() {
                "x" => LayoutField::X,
                "y" => LayoutField::Y,
                "width" => LayoutField::Width,
                "height" => LayoutField::Height,
                _ => return Err(not_assignable(&lhs)),
            };
            Ok(Target::Layout {
                node: (**obj).clone(),
                field,
            })
        }
        _ => Err(not_assignable(&lhs)),
    }
}
