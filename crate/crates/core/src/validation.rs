//! Structural conformance checks plus user validation rules. Findings are
//! stored as marker records in the node state of the offending element.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eca::run_script;
use crate::error::{Error, Result};
use crate::id::{ElementId, TxId};
use crate::meta::{AttrType, Element, Feature};
use crate::query::{Predicate, Script, Value};
use crate::store::{Origin, StateValue, Store};
use crate::viewpoint::{element_context, viewpoints_for};

/// Reserved node-state key holding an element's markers.
pub const MARKER_KEY: &str = "validation.errors";

/// Local a check script assigns its finding to.
pub const ERR_LOCAL: &str = "err";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    #[default]
    Error,
    Warning,
}

impl Severity {
    pub fn name(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

/// A user check. `check` runs with `err` bound to null and reports a
/// violation by assigning a message to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationRule {
    pub id: String,
    pub applies_to: String,
    pub check: String,
    #[serde(default)]
    pub severity: Severity,
}

impl ValidationRule {
    pub fn new(id: &str, applies_to: &str, check: &str) -> Self {
        ValidationRule {
            id: id.to_string(),
            applies_to: applies_to.to_string(),
            check: check.to_string(),
            severity: Severity::Error,
        }
    }

    pub fn check(&self) -> Result<()> {
        let wrap = |what: &str, e: crate::query::QueryError| Error::Invalid(format!("validation rule `{}` {what}: {e}", self.id));
        if self.id.trim().is_empty() {
            return Err(Error::InvalidName(self.id.clone()));
        }
        Predicate::parse(&self.applies_to).map_err(|e| wrap("appliesTo", e))?;
        let script = Script::parse(&self.check).map_err(|e| wrap("check", e))?;
        if !script.is_read_only() {
            return Err(Error::Invalid(format!(
                "validation rule `{}` may only assign locals",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Marker {
    pub element: ElementId,
    pub severity: Severity,
    pub message: String,
    pub rule: String,
}

impl Marker {
    fn to_state(&self) -> StateValue {
        StateValue::Record(BTreeMap::from([
            ("severity".to_string(), StateValue::Text(self.severity.name().into())),
            ("message".to_string(), StateValue::Text(self.message.clone())),
            ("rule".to_string(), StateValue::Text(self.rule.clone())),
        ]))
    }

    fn from_state(element: ElementId, s: &StateValue) -> Option<Marker> {
        let StateValue::Record(r) = s else { return None };
        let text = |k: &str| match r.get(k) {
            Some(StateValue::Text(t)) => Some(t.clone()),
            _ => None,
        };
        Some(Marker {
            element,
            severity: if text("severity")? == "warning" { Severity::Warning } else { Severity::Error },
            message: text("message")?,
            rule: text("rule")?,
        })
    }
}

/// Markers currently stored on `element`.
pub fn stored_markers(store: &Store, element: ElementId) -> Vec<Marker> {
    match store.node(element).ok().and_then(|n| n.state.get(MARKER_KEY)) {
        Some(StateValue::List(items)) => items.iter().filter_map(|s| Marker::from_state(element, s)).collect(),
        _ => Vec::new(),
    }
}

fn structural(store: &Store, object: ElementId, out: &mut Vec<Marker>) -> Result<()> {
    let t = store.elements();
    let o = t.object(object)?;
    let class = t.class(o.instance_of)?;
    let mut mark = |rule: &str, message: String| {
        out.push(Marker {
            element: object,
            severity: Severity::Error,
            message,
            rule: rule.to_string(),
        })
    };
    if !class.is_instantiable() {
        mark("abstract", format!("`{}` is abstract and cannot have instances", class.name));
    }
    let (attrs, refs) = t.class_features(o.instance_of)?;
    for f in attrs.into_iter().chain(refs) {
        let feature = t.feature(f)?;
        let values = t.feature_value(object, f)?.map(|v| v.values.as_slice()).unwrap_or_default();
        let (lower, upper) = feature.bounds();
        let n = values.len();
        if n < lower as usize || upper.is_some_and(|u| n > u as usize) {
            let hi = upper.map_or("*".to_string(), |u| u.to_string());
            mark(
                "multiplicity",
                format!("`{}` holds {n} values, expected {lower}..{hi}", feature.name()),
            );
        }
        for s in values {
            if let Err(e) = crate::store::typing::check_scalar(t, feature, s.clone()) {
                let rule = match feature {
                    Feature::Reference(_) => "reference-type",
                    Feature::Attribute(a) if matches!(a.ty, AttrType::Enum(_)) => "enum-literal",
                    Feature::Attribute(_) => "type",
                };
                mark(rule, format!("`{}`: {e}", feature.name()));
            }
        }
    }
    Ok(())
}

fn user_rules(store: &Store, model: ElementId, subjects: &[ElementId], out: &mut Vec<Marker>) {
    for vp in viewpoints_for(store, model) {
        for rule in &vp.validation_rules {
            let warn = |element: ElementId, message: String| Marker {
                element,
                severity: Severity::Warning,
                message,
                rule: rule.id.clone(),
            };
            let (pred, script) = match (Predicate::parse(&rule.applies_to), Script::parse(&rule.check)) {
                (Ok(p), Ok(s)) => (p, s),
                (Err(e), _) | (_, Err(e)) => {
                    out.push(warn(model, e.to_string()));
                    continue;
                }
            };
            for &id in subjects {
                if !pred.admits(store, id) {
                    continue;
                }
                let ctx = match element_context(store, id, vp) {
                    Ok(c) => c.with_local(ERR_LOCAL, Value::Null),
                    Err(e) => {
                        out.push(warn(id, e.to_string()));
                        continue;
                    }
                };
                match pred.holds(&ctx) {
                    Ok(true) => {}
                    Ok(false) => continue,
                    Err(e) => {
                        out.push(warn(id, format!("appliesTo: {e}")));
                        continue;
                    }
                }
                match run_script(&script, &ctx) {
                    Ok((_, locals)) => {
                        let err = locals.get(ERR_LOCAL).cloned().unwrap_or(Value::Null);
                        let message = err.to_text();
                        if !message.is_empty() {
                            out.push(Marker {
                                element: id,
                                severity: rule.severity,
                                message,
                                rule: rule.id.clone(),
                            });
                        }
                    }
                    Err(e) => out.push(warn(id, e.to_string())),
                }
            }
        }
    }
}

/// Computes the markers of every element of `model` without writing them.
pub fn check_model(store: &Store, model: ElementId) -> Result<Vec<Marker>> {
    let t = store.elements();
    t.model(model)?;
    let mut subjects = vec![model];
    subjects.extend(t.model_objects(model));
    let mut out = Vec::new();
    for &id in &subjects[1..] {
        structural(store, id, &mut out)?;
    }
    user_rules(store, model, &subjects, &mut out);
    out.retain(|m| store.has_node(m.element));
    Ok(out)
}

/// Validates `model` and stores the markers in node state. The write is one
/// validation transaction, skipped when nothing changed.
pub fn validate_model(store: &mut Store, author: &str, model: ElementId) -> Result<(Vec<Marker>, Option<TxId>)> {
    let markers = check_model(store, model)?;
    let mut by_element: BTreeMap<ElementId, Vec<StateValue>> = BTreeMap::new();
    for m in &markers {
        by_element.entry(m.element).or_default().push(m.to_state());
    }
    let t = store.elements();
    let mut elements = vec![model];
    elements.extend(t.model_objects(model));
    let commit = store.transact(author, Origin::Validation, |tx| {
        for id in elements {
            if !tx.store().has_node(id) {
                continue;
            }
            let value = by_element.remove(&id).map(StateValue::List);
            tx.set_state(id, MARKER_KEY, value)?;
        }
        Ok(())
    })?;
    Ok((markers, commit.tx))
}

/// Whether validation for `model` is currently clean of errors.
pub fn has_errors(markers: &[Marker]) -> bool {
    markers.iter().any(|m| m.severity == Severity::Error)
}

/// Convenience for callers that only hold an element.
pub fn markers_of(store: &Store, element: ElementId) -> Result<Vec<Marker>> {
    if !matches!(store.elements().resolve(element)?, Element::Object(_) | Element::Model(_)) {
        return Ok(Vec::new());
    }
    Ok(stored_markers(store, element))
}
