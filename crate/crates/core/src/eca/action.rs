use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::meta::Scalar;
use crate::query::script::{LayoutField, Stmt, Target};
use crate::query::{EvalContext, Expr, QueryError, Script, Value};
use crate::store::{FeatureEdit, StateValue, Tx};

/// One store write planned by a script.
#[derive(Clone, Debug, PartialEq)]
pub enum Write {
    Feature {
        object: ElementId,
        feature: String,
        values: Vec<Scalar>,
    },
    Layout {
        node: ElementId,
        field: LayoutField,
        value: f64,
    },
    State {
        node: ElementId,
        key: String,
        value: Option<StateValue>,
    },
}

/// Runs `script` against the snapshot behind `ctx`. Right-hand sides all
/// read that snapshot; the writes are returned for the caller to commit,
/// together with the final locals.
pub fn run_script(script: &Script, ctx: &EvalContext<'_>) -> Result<(Vec<Write>, BTreeMap<String, Value>), QueryError> {
    let mut ctx = ctx.clone();
    let mut out = Vec::new();
    exec(&script.stmts, &mut ctx, &mut out)?;
    Ok((out, ctx.locals))
}

fn exec(stmts: &[Stmt], ctx: &mut EvalContext<'_>, out: &mut Vec<Write>) -> Result<(), QueryError> {
    for s in stmts {
        match s {
            Stmt::Let { name, value } => {
                let v = ctx.eval(value)?;
                ctx.locals.insert(name.clone(), v);
            }
            Stmt::If { cond, then, other } => {
                if ctx.eval(cond)?.truthy() {
                    exec(then, ctx, out)?;
                } else {
                    exec(other, ctx, out)?;
                }
            }
            Stmt::Assign { target, value } => {
                let v = ctx.eval(value)?;
                match target {
                    Target::Local(name) => {
                        ctx.locals.insert(name.clone(), v);
                    }
                    Target::Feature { object, feature, many } => {
                        let object = element_of(ctx, object)?;
                        let values = match (&v, many) {
                            (Value::Null, _) => Vec::new(),
                            (Value::List(items), true) => items
                                .iter()
                                .map(|i| scalar(i, value))
                                .collect::<Result<_, _>>()?,
                            (other, _) => vec![scalar(other, value)?],
                        };
                        out.push(Write::Feature {
                            object,
                            feature: feature.clone(),
                            values,
                        });
                    }
                    Target::Layout { node, field } => {
                        let node = element_of(ctx, node)?;
                        let value = v
                            .as_f64()
                            .ok_or_else(|| fail(value, format!("`{}` needs a number, got a {}", field.name(), v.type_name())))?;
                        out.push(Write::Layout {
                            node,
                            field: *field,
                            value,
                        });
                    }
                    Target::State { node, key } => {
                        let node = element_of(ctx, node)?;
                        let value = v.to_state().map_err(|m| fail(s_expr(s), m))?;
                        out.push(Write::State {
                            node,
                            key: key.clone(),
                            value,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn s_expr(s: &Stmt) -> &Expr {
    match s {
        Stmt::Let { value, .. } | Stmt::Assign { value, .. } => value,
        Stmt::If { cond, .. } => cond,
    }
}

fn fail(at: &Expr, message: impl Into<String>) -> QueryError {
    QueryError::new(at.span, message, at.path())
}

fn element_of(ctx: &EvalContext<'_>, e: &Expr) -> Result<ElementId, QueryError> {
    match ctx.eval(e)? {
        Value::Element(id) | Value::Node(id) => Ok(id),
        other => Err(fail(e, format!("cannot assign through a {}", other.type_name()))),
    }
}

fn scalar(v: &Value, at: &Expr) -> Result<Scalar, QueryError> {
    v.to_scalar()
        .ok_or_else(|| fail(at, format!("a {} cannot be stored in a feature", v.type_name())))
}

/// Commits planned writes through the transaction API.
pub(crate) fn apply(tx: &mut Tx<'_>, writes: &[Write]) -> Result<()> {
    for w in writes {
        match w {
            Write::Feature { object, feature, values } => {
                tx.mutate_feature(*object, feature, FeatureEdit::Set(values.clone()))?;
            }
            Write::Layout { node, field, value } => {
                let mut l = tx.store().node(*node)?.layout();
                match field {
                    LayoutField::X => l.x = *value,
                    LayoutField::Y => l.y = *value,
                    LayoutField::Width => l.width = *value,
                    LayoutField::Height => l.height = *value,
                }
                tx.set_layout(*node, l)?;
            }
            Write::State { node, key, value } => {
                if key == crate::validation::MARKER_KEY {
                    return Err(Error::Invalid(format!("`{key}` is reserved for validation")));
                }
                tx.set_state(*node, key, value.clone())?;
            }
        }
    }
    Ok(())
}
