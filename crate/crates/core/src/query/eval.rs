use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Error;
use crate::id::ElementId;
use crate::meta::{AttrType, Element};
use crate::store::Store;

use super::ast::{BinOp, Expr, ExprKind, Literal, TemplatePart, UnOp};
use super::value::{Closure, Value};
use super::QueryError;

/// Bindings for one evaluation: the three submodel handles plus locals.
#[derive(Clone)]
pub struct EvalContext<'s> {
    pub store: &'s Store,
    pub data: Value,
    pub node: Value,
    pub view: Value,
    pub locals: BTreeMap<String, Value>,
}

type Res = Result<Value, QueryError>;

fn fail(e: &Expr, message: impl Into<String>) -> QueryError {
    QueryError::new(e.span, message, e.path())
}

impl<'s> EvalContext<'s> {
    pub fn new(store: &'s Store) -> Self {
        EvalContext {
            store,
            data: Value::Null,
            node: Value::Null,
            view: Value::Null,
            locals: BTreeMap::new(),
        }
    }

    /// Context with `data` bound to `id` and `node` to its layout record.
    pub fn for_element(store: &'s Store, id: ElementId) -> Self {
        let mut ctx = EvalContext::new(store);
        ctx.data = Value::Element(id);
        if store.has_node(id) {
            ctx.node = Value::Node(id);
        }
        ctx
    }

    pub fn with_local(mut self, name: &str, value: Value) -> Self {
        self.locals.insert(name.to_string(), value);
        self
    }

    pub fn eval(&self, e: &Expr) -> Res {
        self.eval_in(e, &self.locals)
    }

    fn eval_in(&self, e: &Expr, locals: &BTreeMap<String, Value>) -> Res {
        match &e.kind {
            ExprKind::Lit(l) => Ok(match l {
                Literal::Int(i) => Value::Int(*i),
                Literal::Real(r) => Value::Real(*r),
                Literal::Str(s) => Value::Str(s.clone()),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Null => Value::Null,
            }),
            ExprKind::Ident(name) => {
                if let Some(v) = locals.get(name) {
                    return Ok(v.clone());
                }
                match name.as_str() {
                    "data" => Ok(self.data.clone()),
                    "node" => Ok(self.node.clone()),
                    "view" => Ok(self.view.clone()),
                    _ => Err(fail(e, format!("unknown identifier `{name}`"))),
                }
            }
            ExprKind::Member { obj, name, dollar } => {
                if !dollar && is_math(obj, locals) {
                    return match name.as_str() {
                        "PI" => Ok(Value::Real(std::f64::consts::PI)),
                        _ => Err(fail(e, format!("unknown constant `Math.{name}`"))),
                    };
                }
                let target = self.eval_in(obj, locals)?;
                self.member(&target, name, *dollar, e)
            }
            ExprKind::Index { obj, index } => {
                let target = self.eval_in(obj, locals)?;
                let index = self.eval_in(index, locals)?;
                index_value(&target, &index, e)
            }
            ExprKind::Call { callee, args } => {
                let argv = args
                    .iter()
                    .map(|a| self.eval_in(a, locals))
                    .collect::<Result<Vec<_>, _>>()?;
                match &callee.kind {
                    ExprKind::Member { obj, name, dollar: false } if is_math(obj, locals) => math(name, &argv, e),
                    ExprKind::Member { obj, name, dollar: false } => {
                        let target = self.eval_in(obj, locals)?;
                        self.method(&target, name, &argv, e)
                    }
                    _ => {
                        let f = self.eval_in(callee, locals)?;
                        self.apply(&f, &argv, e)
                    }
                }
            }
            ExprKind::Lambda { params, body } => Ok(Value::Lambda(Arc::new(Closure {
                params: params.clone(),
                body: (**body).clone(),
                captured: locals.clone(),
            }))),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval_in(lhs, locals)?;
                match op {
                    BinOp::And => {
                        if l.truthy() {
                            self.eval_in(rhs, locals)
                        } else {
                            Ok(l)
                        }
                    }
                    BinOp::Or => {
                        if l.truthy() {
                            Ok(l)
                        } else {
                            self.eval_in(rhs, locals)
                        }
                    }
                    BinOp::Coalesce => {
                        if l.is_null() {
                            self.eval_in(rhs, locals)
                        } else {
                            Ok(l)
                        }
                    }
                    _ => {
                        let r = self.eval_in(rhs, locals)?;
                        binary(*op, &l, &r, e)
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval_in(operand, locals)?;
                match op {
                    UnOp::Not => Ok(Value::Bool(!v.truthy())),
                    UnOp::Neg => match v {
                        Value::Int(i) => i
                            .checked_neg()
                            .map(Value::Int)
                            .ok_or_else(|| fail(e, "integer overflow")),
                        Value::Real(r) => Ok(Value::Real(-r)),
                        other => Err(fail(e, format!("cannot negate a {}", other.type_name()))),
                    },
                }
            }
            ExprKind::Cond { cond, then, other } => {
                if self.eval_in(cond, locals)?.truthy() {
                    self.eval_in(then, locals)
                } else {
                    self.eval_in(other, locals)
                }
            }
            ExprKind::Template(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        TemplatePart::Text(t) => out.push_str(t),
                        TemplatePart::Splice(x) => out.push_str(&self.eval_in(x, locals)?.to_text()),
                    }
                }
                Ok(Value::Str(out))
            }
            ExprKind::List(items) => Ok(Value::List(
                items
                    .iter()
                    .map(|i| self.eval_in(i, locals))
                    .collect::<Result<_, _>>()?,
            )),
        }
    }

    fn apply(&self, f: &Value, args: &[Value], at: &Expr) -> Res {
        let Value::Lambda(c) = f else {
            return Err(fail(at, format!("a {} is not callable", f.type_name())));
        };
        let mut scope = c.captured.clone();
        for (i, p) in c.params.iter().enumerate() {
            scope.insert(p.clone(), args.get(i).cloned().unwrap_or(Value::Null));
        }
        self.eval_in(&c.body, &scope)
    }

    fn lambda_arg<'v>(&self, args: &'v [Value], at: &Expr, method: &str) -> Result<&'v Value, QueryError> {
        match args.first() {
            Some(f @ Value::Lambda(_)) => Ok(f),
            _ => Err(fail(at, format!("`{method}` expects a function argument"))),
        }
    }

    fn method(&self, target: &Value, name: &str, args: &[Value], at: &Expr) -> Res {
        match (target, name) {
            (Value::Null, _) => Err(fail(at, format!("cannot call `{name}` on null"))),
            (Value::List(items), "map") => {
                let f = self.lambda_arg(args, at, name)?;
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    out.push(self.apply(f, &[item.clone(), Value::Int(i as i64)], at)?);
                }
                Ok(Value::List(out))
            }
            (Value::List(items), "filter") => {
                let f = self.lambda_arg(args, at, name)?;
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    if self.apply(f, &[item.clone(), Value::Int(i as i64)], at)?.truthy() {
                        out.push(item.clone());
                    }
                }
                Ok(Value::List(out))
            }
            (Value::List(items), "some" | "every" | "find") => {
                let f = self.lambda_arg(args, at, name)?;
                for item in items {
                    let hit = self.apply(f, std::slice::from_ref(item), at)?.truthy();
                    match (name, hit) {
                        ("some", true) => return Ok(Value::Bool(true)),
                        ("every", false) => return Ok(Value::Bool(false)),
                        ("find", true) => return Ok(item.clone()),
                        _ => {}
                    }
                }
                Ok(match name {
                    "some" => Value::Bool(false),
                    "every" => Value::Bool(true),
                    _ => Value::Null,
                })
            }
            (Value::List(items), "size") => Ok(Value::Int(items.len() as i64)),
            (Value::List(items), "includes") => Ok(Value::Bool(args.first().is_some_and(|a| items.contains(a)))),
            (Value::List(items), "indexOf") => Ok(Value::Int(
                args.first()
                    .and_then(|a| items.iter().position(|x| x == a))
                    .map_or(-1, |i| i as i64),
            )),
            (Value::List(items), "join") => {
                let sep = match args.first() {
                    Some(Value::Str(s)) => s.as_str(),
                    _ => ",",
                };
                Ok(Value::Str(items.iter().map(Value::to_text).collect::<Vec<_>>().join(sep)))
            }
            (Value::List(items), "concat") => {
                let mut out = items.clone();
                for a in args {
                    match a {
                        Value::List(more) => out.extend(more.iter().cloned()),
                        other => out.push(other.clone()),
                    }
                }
                Ok(Value::List(out))
            }
            (Value::List(items), "sum") => {
                let mut acc = Value::Int(0);
                for item in items {
                    acc = binary(BinOp::Add, &acc, item, at)?;
                }
                Ok(acc)
            }
            (Value::Str(s), "size") => Ok(Value::Int(s.chars().count() as i64)),
            (Value::Str(s), "toUpperCase") => Ok(Value::Str(s.to_uppercase())),
            (Value::Str(s), "toLowerCase") => Ok(Value::Str(s.to_lowercase())),
            (Value::Str(s), "trim") => Ok(Value::Str(s.trim().to_string())),
            (Value::Str(s), "includes" | "startsWith" | "endsWith") => {
                let Some(Value::Str(needle)) = args.first() else {
                    return Err(fail(at, format!("`{name}` expects a string")));
                };
                Ok(Value::Bool(match name {
                    "includes" => s.contains(needle.as_str()),
                    "startsWith" => s.starts_with(needle.as_str()),
                    _ => s.ends_with(needle.as_str()),
                }))
            }
            (Value::Int(_) | Value::Real(_), "toFixed") => {
                let digits = match args.first() {
                    Some(Value::Int(d)) if (0..=20).contains(d) => *d as usize,
                    None => 0,
                    _ => return Err(fail(at, "`toFixed` expects 0..20 digits")),
                };
                Ok(Value::Str(format!("{:.*}", digits, target.as_f64().unwrap_or_default())))
            }
            (Value::Element(id), "has") => {
                let Some(Value::Str(feature)) = args.first() else {
                    return Err(fail(at, "`has` expects a feature name"));
                };
                let t = self.store.elements();
                let class = match t.resolve(*id).map_err(|err| fail(at, err.to_string()))? {
                    Element::Object(o) => o.instance_of,
                    Element::Class(c) => c.id,
                    _ => return Ok(Value::Bool(false)),
                };
                Ok(Value::Bool(
                    t.feature_by_name(class, feature)
                        .map_err(|err| fail(at, err.to_string()))?
                        .is_some(),
                ))
            }
            _ => {
                let member = self.member(target, name, false, at)?;
                self.apply(&member, args, at)
            }
        }
    }

    fn member(&self, target: &Value, name: &str, dollar: bool, at: &Expr) -> Res {
        let t = self.store.elements();
        let kernel = |err: Error| fail(at, err.to_string());
        let shown = if dollar { format!("${name}") } else { name.to_string() };
        match target {
            Value::Null => Err(fail(at, format!("cannot read `{shown}` of null"))),
            Value::Element(id) if dollar => {
                let child = t.named_child(*id, name).map_err(|err| match err {
                    Error::NoSuchChild { .. } => fail(at, format!("no child named `${name}`")),
                    other => kernel(other),
                })?;
                Ok(Value::Element(child))
            }
            Value::Element(id) => {
                let id = *id;
                let element = t.resolve(id).map_err(kernel)?;
                let ids = |v: &[ElementId]| Value::List(v.iter().copied().map(Value::Element).collect());
                let node = || {
                    if self.store.has_node(id) {
                        Value::Node(id)
                    } else {
                        Value::Null
                    }
                };
                let common = match name {
                    "id" => Some(Value::Str(id.to_string())),
                    "kind" => Some(Value::Str(element.kind_name().to_string())),
                    "node" => Some(node()),
                    _ => None,
                };
                if let Some(v) = common {
                    return Ok(v);
                }
                let found = match element {
                    Element::Object(o) => match name {
                        "name" => Some(t.object_name(id).map(Value::Str).unwrap_or(Value::Null)),
                        "instanceof" | "instanceOf" => Some(Value::Element(o.instance_of)),
                        "className" => Some(Value::Str(t.class_name_of(id).map_err(kernel)?.to_string())),
                        "parent" | "container" => Some(o.container.map_or(Value::Null, |c| Value::Element(c.object))),
                        "model" => Some(Value::Element(o.model)),
                        "features" => Some(Value::List(
                            o.features.values().copied().map(Value::Element).collect(),
                        )),
                        _ => match t.feature_by_name(o.instance_of, name).map_err(kernel)? {
                            Some(f) => {
                                let upper = f.bounds().1;
                                let values = t
                                    .feature_value(id, f.id())
                                    .map_err(kernel)?
                                    .map(|v| v.values.iter().map(Value::from_scalar).collect::<Vec<_>>())
                                    .unwrap_or_default();
                                Some(if upper == Some(1) {
                                    values.into_iter().next().unwrap_or(Value::Null)
                                } else {
                                    Value::List(values)
                                })
                            }
                            None => None,
                        },
                    },
                    Element::Value(v) => match name {
                        "value" => Some(v.values.first().map_or(Value::Null, Value::from_scalar)),
                        "values" => Some(Value::List(v.values.iter().map(Value::from_scalar).collect())),
                        "feature" => Some(Value::Element(v.feature)),
                        "owner" => Some(Value::Element(v.owner)),
                        "name" => Some(Value::Str(t.feature(v.feature).map_err(kernel)?.name().to_string())),
                        "length" | "size" => Some(Value::Int(v.values.len() as i64)),
                        _ => None,
                    },
                    Element::Class(c) => match name {
                        "name" => Some(Value::Str(c.name.clone())),
                        "attributes" => Some(ids(&t.class_features(id).map_err(kernel)?.0)),
                        "references" => Some(ids(&t.class_features(id).map_err(kernel)?.1)),
                        "features" => {
                            let (a, r) = t.class_features(id).map_err(kernel)?;
                            Some(ids(&[a, r].concat()))
                        }
                        "ownAttributes" => Some(ids(&c.attributes)),
                        "ownReferences" => Some(ids(&c.references)),
                        "extends" => Some(ids(&c.extends)),
                        "extendedBy" => Some(ids(&t.direct_subclasses(id))),
                        "superclasses" => Some(ids(&t.superclasses(id).map_err(kernel)?)),
                        "instances" | "allInstances" => {
                            let mm = t.owning_model(id).map_err(kernel)?;
                            let mut all = Vec::new();
                            for m in t.models().filter(|m| m.conforms_to == Some(mm)) {
                                all.extend(t.class_all_instances(id, m.id).map_err(kernel)?);
                            }
                            Some(ids(&all))
                        }
                        "isAbstract" => Some(Value::Bool(c.flags.is_abstract)),
                        "isInterface" => Some(Value::Bool(c.flags.is_interface)),
                        "isFinal" => Some(Value::Bool(c.flags.is_final)),
                        "isSingleton" => Some(Value::Bool(c.flags.is_singleton)),
                        "isRootable" => Some(Value::Bool(c.flags.is_rootable)),
                        "isPrimitive" => Some(Value::Bool(c.flags.is_primitive)),
                        "operations" => Some(Value::List(
                            c.operations.iter().map(|o| Value::Str(o.name.clone())).collect(),
                        )),
                        "package" => Some(Value::Element(c.package)),
                        _ => None,
                    },
                    Element::Model(m) => match name {
                        "name" => Some(Value::Str(m.name.clone())),
                        "isMetamodel" => Some(Value::Bool(m.is_metamodel)),
                        "packages" => Some(ids(&m.packages)),
                        "roots" | "rootObjects" => Some(ids(&m.root_objects)),
                        "objects" | "allInstances" => Some(ids(&t.model_objects(id))),
                        "classes" => {
                            let cs = t.classifiers(id).map_err(kernel)?;
                            let classes: Vec<ElementId> =
                                cs.into_iter().filter(|c| t.class(*c).is_ok()).collect();
                            Some(ids(&classes))
                        }
                        "metamodel" | "conformsTo" => Some(m.conforms_to.map_or(Value::Null, Value::Element)),
                        _ => None,
                    },
                    Element::Package(p) => match name {
                        "name" => Some(Value::Str(p.name.clone())),
                        "classifiers" => Some(ids(&p.classifiers)),
                        "model" => Some(Value::Element(p.model)),
                        _ => None,
                    },
                    Element::Enum(en) => match name {
                        "name" => Some(Value::Str(en.name.clone())),
                        "literals" => Some(Value::List(en.literals.iter().cloned().map(Value::Str).collect())),
                        _ => None,
                    },
                    Element::Attribute(a) => match name {
                        "name" => Some(Value::Str(a.name.clone())),
                        "type" => Some(Value::Str(match a.ty {
                            AttrType::Primitive(p) => p.name().to_string(),
                            AttrType::Enum(e) => t.enumeration(e).map_err(kernel)?.name.clone(),
                        })),
                        "lowerBound" => Some(Value::Int(a.lower_bound as i64)),
                        "upperBound" => Some(Value::Int(a.upper_bound.map_or(-1, |u| u as i64))),
                        "defaultValue" => Some(a.default_value.as_ref().map_or(Value::Null, Value::from_scalar)),
                        "owner" => Some(Value::Element(a.owner)),
                        "isContainment" => Some(Value::Bool(false)),
                        _ => None,
                    },
                    Element::Reference(r) => match name {
                        "name" => Some(Value::Str(r.name.clone())),
                        "target" | "type" => Some(Value::Element(r.target)),
                        "lowerBound" => Some(Value::Int(r.lower_bound as i64)),
                        "upperBound" => Some(Value::Int(r.upper_bound.map_or(-1, |u| u as i64))),
                        "owner" => Some(Value::Element(r.owner)),
                        "isContainment" | "containment" => Some(Value::Bool(r.is_containment)),
                        _ => None,
                    },
                };
                found.ok_or_else(|| fail(at, format!("{} has no member `{name}`", element.kind_name())))
            }
            Value::Node(id) => {
                let n = self.store.node(*id).map_err(kernel)?;
                match name {
                    "x" => Ok(Value::Real(n.x)),
                    "y" => Ok(Value::Real(n.y)),
                    "width" => Ok(Value::Real(n.width)),
                    "height" => Ok(Value::Real(n.height)),
                    "state" => Ok(Value::Record(
                        n.state.iter().map(|(k, v)| (k.clone(), Value::from_state(v))).collect(),
                    )),
                    "element" | "data" => Ok(Value::Element(*id)),
                    _ => Err(fail(at, format!("node has no member `{shown}`"))),
                }
            }
            Value::View(v) => match name {
                "name" | "id" => Ok(Value::Str(v.name.clone())),
                "oclCondition" | "applyTo" => Ok(Value::Str(v.apply_to.clone())),
                _ => Err(fail(at, format!("view has no member `{shown}`"))),
            },
            Value::Record(m) if !dollar => Ok(m.get(name).cloned().unwrap_or(Value::Null)),
            Value::List(items) if name == "length" => Ok(Value::Int(items.len() as i64)),
            Value::Str(s) if name == "length" => Ok(Value::Int(s.chars().count() as i64)),
            other => Err(fail(at, format!("a {} has no member `{shown}`", other.type_name()))),
        }
    }
}

fn is_math(obj: &Expr, locals: &BTreeMap<String, Value>) -> bool {
    matches!(&obj.kind, ExprKind::Ident(n) if n == "Math" && !locals.contains_key("Math"))
}

fn integral(r: f64) -> Value {
    if r.is_finite() && r.abs() < 9.0e15 {
        Value::Int(r as i64)
    } else {
        Value::Real(r)
    }
}

fn math(name: &str, args: &[Value], at: &Expr) -> Res {
    let nums: Vec<f64> = args
        .iter()
        .map(|a| a.as_f64().ok_or_else(|| fail(at, format!("`Math.{name}` expects numbers"))))
        .collect::<Result<_, _>>()?;
    let one = || {
        nums.first()
            .copied()
            .ok_or_else(|| fail(at, format!("`Math.{name}` expects an argument")))
    };
    match name {
        // Halves round towards positive infinity.
        "round" => Ok(integral((one()? + 0.5).floor())),
        "floor" => Ok(integral(one()?.floor())),
        "ceil" => Ok(integral(one()?.ceil())),
        "abs" => Ok(match args.first() {
            Some(Value::Int(i)) => Value::Int(i.wrapping_abs()),
            _ => Value::Real(one()?.abs()),
        }),
        "sqrt" => Ok(Value::Real(one()?.sqrt())),
        "min" | "max" => {
            let mut best: Option<&Value> = None;
            for (a, n) in args.iter().zip(&nums) {
                let better = match best.and_then(Value::as_f64) {
                    None => true,
                    Some(b) => (name == "min" && *n < b) || (name == "max" && *n > b),
                };
                if better {
                    best = Some(a);
                }
            }
            best.cloned().ok_or_else(|| fail(at, format!("`Math.{name}` expects an argument")))
        }
        _ => Err(fail(at, format!("unknown function `Math.{name}`"))),
    }
}

fn index_value(target: &Value, index: &Value, at: &Expr) -> Res {
    match (target, index) {
        (Value::Null, _) => Err(fail(at, "cannot index null")),
        (Value::List(items), Value::Int(i)) => Ok(usize::try_from(*i)
            .ok()
            .and_then(|i| items.get(i))
            .cloned()
            .unwrap_or(Value::Null)),
        (Value::Str(s), Value::Int(i)) => Ok(usize::try_from(*i)
            .ok()
            .and_then(|i| s.chars().nth(i))
            .map_or(Value::Null, |c| Value::Str(c.to_string()))),
        (Value::Record(m), Value::Str(k)) => Ok(m.get(k).cloned().unwrap_or(Value::Null)),
        (t, i) => Err(fail(at, format!("cannot index a {} with a {}", t.type_name(), i.type_name()))),
    }
}

pub(crate) fn binary(op: BinOp, l: &Value, r: &Value, at: &Expr) -> Res {
    use Value::{Int, Real, Str};
    let overflow = || fail(at, "integer overflow");
    match op {
        BinOp::Eq => return Ok(Value::Bool(l == r)),
        BinOp::Ne => return Ok(Value::Bool(l != r)),
        BinOp::Add => match (l, r) {
            (Str(a), b) => return Ok(Str(format!("{a}{b}"))),
            (a, Str(b)) => return Ok(Str(format!("{a}{b}"))),
            _ => {}
        },
        _ => {}
    }
    if let (Str(a), Str(b)) = (l, r) {
        let ord = a.cmp(b);
        return match op {
            BinOp::Lt => Ok(Value::Bool(ord.is_lt())),
            BinOp::Le => Ok(Value::Bool(ord.is_le())),
            BinOp::Gt => Ok(Value::Bool(ord.is_gt())),
            BinOp::Ge => Ok(Value::Bool(ord.is_ge())),
            _ => Err(fail(at, format!("operator `{}` is not defined on strings", op.symbol()))),
        };
    }
    let (Some(a), Some(b)) = (l.as_f64(), r.as_f64()) else {
        return Err(fail(
            at,
            format!(
                "operator `{}` is not defined on {} and {}",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ),
        ));
    };
    let ints = match (l, r) {
        (Int(x), Int(y)) => Some((*x, *y)),
        _ => None,
    };
    Ok(match op {
        BinOp::Add => match ints {
            Some((x, y)) => Int(x.checked_add(y).ok_or_else(overflow)?),
            None => Real(a + b),
        },
        BinOp::Sub => match ints {
            Some((x, y)) => Int(x.checked_sub(y).ok_or_else(overflow)?),
            None => Real(a - b),
        },
        BinOp::Mul => match ints {
            Some((x, y)) => Int(x.checked_mul(y).ok_or_else(overflow)?),
            None => Real(a * b),
        },
        BinOp::Div => {
            if b == 0.0 {
                return Err(fail(at, "division by zero"));
            }
            Real(a / b)
        }
        BinOp::Rem => {
            if b == 0.0 {
                return Err(fail(at, "division by zero"));
            }
            match ints {
                Some((x, y)) => Int(x.checked_rem(y).ok_or_else(overflow)?),
                None => Real(a % b),
            }
        }
        BinOp::Lt => Value::Bool(a < b),
        BinOp::Le => Value::Bool(a <= b),
        BinOp::Gt => Value::Bool(a > b),
        BinOp::Ge => Value::Bool(a >= b),
        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or | BinOp::Coalesce => unreachable!(),
    })
}
