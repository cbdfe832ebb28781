use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::id::ElementId;
use crate::meta::Scalar;
use crate::store::StateValue;
use crate::viewpoint::View;

use super::ast::Expr;

/// A lambda together with the locals visible where it was created.
#[derive(Debug)]
pub struct Closure {
    pub params: Vec<String>,
    pub body: Expr,
    pub captured: BTreeMap<String, Value>,
}

/// Runtime value of the expression language.
#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    /// Handle on a stored element (the `data` submodel).
    Element(ElementId),
    /// Handle on the layout record of an element (the `node` submodel).
    Node(ElementId),
    /// A view definition (the `view` submodel).
    View(Arc<View>),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
    Lambda(Arc<Closure>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Null, Null) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Int(a), Real(b)) | (Real(b), Int(a)) => (*a as f64) == *b,
            (Real(a), Real(b)) => a == b,
            (Str(a), Str(b)) => a == b,
            (Element(a), Element(b)) => a == b,
            (Node(a), Node(b)) => a == b,
            (View(a), View(b)) => a.name == b.name && a == b,
            (List(a), List(b)) => a == b,
            (Record(a), Record(b)) => a == b,
            (Lambda(a), Lambda(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Value {
    pub fn truthy(&self) -> bool {
        match self {
            Value::Null => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Real(r) => *r != 0.0 && !r.is_nan(),
            Value::Str(s) => !s.is_empty(),
            _ => true,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Str(_) => "string",
            Value::Element(_) => "element",
            Value::Node(_) => "node",
            Value::View(_) => "view",
            Value::List(_) => "list",
            Value::Record(_) => "record",
            Value::Lambda(_) => "function",
        }
    }

    pub fn from_scalar(s: &Scalar) -> Value {
        match s {
            Scalar::Int(i) => Value::Int(*i),
            Scalar::Real(r) => Value::Real(*r),
            Scalar::Str(s) | Scalar::Literal(s) => Value::Str(s.clone()),
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Ref(id) => Value::Element(*id),
        }
    }

    /// Converts to a stored scalar; element handles become references.
    pub fn to_scalar(&self) -> Option<Scalar> {
        Some(match self {
            Value::Int(i) => Scalar::Int(*i),
            Value::Real(r) => Scalar::Real(*r),
            Value::Str(s) => Scalar::Str(s.clone()),
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Element(id) => Scalar::Ref(*id),
            _ => return None,
        })
    }

    pub fn from_state(s: &StateValue) -> Value {
        match s {
            StateValue::Bool(b) => Value::Bool(*b),
            StateValue::Int(i) => Value::Int(*i),
            StateValue::Real(r) => Value::Real(*r),
            StateValue::Text(t) => Value::Str(t.clone()),
            StateValue::List(items) => Value::List(items.iter().map(Value::from_state).collect()),
            StateValue::Record(m) => Value::Record(m.iter().map(|(k, v)| (k.clone(), Value::from_state(v))).collect()),
        }
    }

    /// Converts to a node-state value; `None` means "clear the key".
    pub fn to_state(&self) -> Result<Option<StateValue>, String> {
        Ok(Some(match self {
            Value::Null => return Ok(None),
            Value::Bool(b) => StateValue::Bool(*b),
            Value::Int(i) => StateValue::Int(*i),
            Value::Real(r) => StateValue::Real(*r),
            Value::Str(s) => StateValue::Text(s.clone()),
            Value::Element(id) => StateValue::Text(id.to_string()),
            Value::List(items) => StateValue::List(
                items
                    .iter()
                    .map(|v| v.to_state().map(|s| s.unwrap_or(StateValue::Text(String::new()))))
                    .collect::<Result<_, _>>()?,
            ),
            Value::Record(m) => {
                let mut out = BTreeMap::new();
                for (k, v) in m {
                    if let Some(s) = v.to_state()? {
                        out.insert(k.clone(), s);
                    }
                }
                StateValue::Record(out)
            }
            other => return Err(format!("a {} cannot be stored in node state", other.type_name())),
        }))
    }

    /// Text used when splicing into templates and rendered text runs.
    /// `null` and `false` splice as nothing so that `${flag && 'x'}` works.
    pub fn to_text(&self) -> String {
        match self {
            Value::Null | Value::Bool(false) => String::new(),
            Value::Str(s) => s.clone(),
            Value::List(items) => items.iter().map(Value::to_text).collect::<Vec<_>>().join(","),
            other => other.to_string(),
        }
    }
}

pub(crate) fn fmt_real(r: f64) -> String {
    if r.fract() == 0.0 && r.is_finite() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn fmt_nested(v: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Value::Str(s) => write!(f, "'{}'", s.replace('\'', "\\'")),
        other => write!(f, "{other}"),
    }
}

/// Console notation: strings print raw at top level and quoted inside
/// collections, lists print as `[ a, b ]`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&fmt_real(*r)),
            Value::Str(s) => f.write_str(s),
            Value::Element(id) => write!(f, "<{id}>"),
            Value::Node(id) => write!(f, "<node {id}>"),
            Value::View(v) => write!(f, "<view {}>", v.name),
            Value::List(items) if items.is_empty() => f.write_str("[]"),
            Value::List(items) => {
                f.write_str("[ ")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    fmt_nested(item, f)?;
                }
                f.write_str(" ]")
            }
            Value::Record(m) if m.is_empty() => f.write_str("{}"),
            Value::Record(m) => {
                f.write_str("{ ")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: ")?;
                    fmt_nested(v, f)?;
                }
                f.write_str(" }")
            }
            Value::Lambda(c) => write!(f, "<function ({})>", c.params.join(", ")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn console_list_notation() {
        let v = Value::List(vec![Value::Str("id".into()), Value::Str("surname".into())]);
        assert_eq!(v.to_string(), "[ 'id', 'surname' ]");
        assert_eq!(Value::List(vec![]).to_string(), "[]");
    }

    #[test]
    fn integral_reals_print_without_fraction() {
        assert_eq!(Value::Real(684.0).to_string(), "684");
        assert_eq!(Value::Real(-684.0).to_string(), "-684");
        assert_eq!(Value::Real(2.5).to_string(), "2.5");
    }

    #[test]
    fn splice_text_drops_false_and_null() {
        assert_eq!(Value::Bool(false).to_text(), "");
        assert_eq!(Value::Null.to_text(), "");
        assert_eq!(Value::Str("grid".into()).to_text(), "grid");
    }

    #[test]
    fn numeric_equality_crosses_int_and_real() {
        assert_eq!(Value::Int(3), Value::Real(3.0));
        assert_ne!(Value::Int(3), Value::Str("3".into()));
    }
}
