//! Event-condition-action rules: triggers, rule records stored in
//! viewpoints, breadth-first cascade dispatch and gesture simulation.

mod action;
mod dispatch;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::query::{Predicate, Script};
use crate::store::{Layout, Origin, Store};

pub use action::{run_script, Write};
pub use dispatch::{
    data_events, dispatch, simulate_drag, simulate_resize, DispatchOptions, DispatchReport, GestureReport,
    RuleFailure, TraceLine, DEFAULT_DEPTH_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Trigger {
    OnDataUpdate,
    OnDragStart,
    WhileDragging,
    OnDragEnd,
    OnResizeStart,
    WhileResizing,
    OnResizeEnd,
}

impl Trigger {
    pub const ALL: [Trigger; 7] = [
        Trigger::OnDataUpdate,
        Trigger::OnDragStart,
        Trigger::WhileDragging,
        Trigger::OnDragEnd,
        Trigger::OnResizeStart,
        Trigger::WhileResizing,
        Trigger::OnResizeEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Trigger::OnDataUpdate => "onDataUpdate",
            Trigger::OnDragStart => "onDragStart",
            Trigger::WhileDragging => "whileDragging",
            Trigger::OnDragEnd => "onDragEnd",
            Trigger::OnResizeStart => "onResizeStart",
            Trigger::WhileResizing => "whileResizing",
            Trigger::OnResizeEnd => "onResizeEnd",
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Trigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trigger::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown trigger `{s}`")))
    }
}

/// A rule stored in a viewpoint. With `owning_view` set (or when a view
/// lists it under `events`) it only fires for elements that view selects;
/// otherwise it fires for every element of models the viewpoint covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rule {
    pub id: String,
    pub trigger: Trigger,
    /// Predicate source; empty means always.
    #[serde(default)]
    pub condition: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owning_view: Option<String>,
}

impl Rule {
    pub fn new(id: &str, trigger: Trigger, condition: &str, action: &str) -> Self {
        Rule {
            id: id.to_string(),
            trigger,
            condition: condition.to_string(),
            action: action.to_string(),
            owning_view: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        let wrap = |what: &str, e: crate::query::QueryError| Error::Invalid(format!("rule `{}` {what}: {e}", self.id));
        if self.id.trim().is_empty() {
            return Err(Error::InvalidName(self.id.clone()));
        }
        if !self.condition.trim().is_empty() {
            Predicate::parse(&self.condition).map_err(|e| wrap("condition", e))?;
        }
        Script::parse(&self.action).map_err(|e| wrap("action", e))?;
        Ok(())
    }
}

/// An occurrence of a trigger on one element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventRecord {
    pub trigger: Trigger,
    pub subject: ElementId,
    /// Proposed geometry for drag and resize triggers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Layout>,
    pub depth: u32,
}

impl EventRecord {
    pub fn new(trigger: Trigger, subject: ElementId) -> Self {
        EventRecord {
            trigger,
            subject,
            payload: None,
            depth: 0,
        }
    }
}

/// Adds `rule` to the viewpoint `viewpoint`, replacing a rule with the same
/// id. Returns the rule id.
pub fn register_rule(store: &mut Store, author: &str, viewpoint: ElementId, rule: Rule) -> Result<String> {
    rule.check()?;
    let mut vp = store.viewpoint(viewpoint)?.clone();
    if let Some(v) = &rule.owning_view {
        if vp.view(v).is_none() {
            return Err(Error::Invalid(format!("rule `{}` names unknown view `{v}`", rule.id)));
        }
    }
    let id = rule.id.clone();
    match vp.rules.iter_mut().find(|r| r.id == rule.id) {
        Some(slot) => *slot = rule,
        None => vp.rules.push(rule),
    }
    vp.check()?;
    store.transact(author, Origin::User, |tx| tx.put_viewpoint(viewpoint, Some(vp)))?;
    Ok(id)
}

/// Snaps the subject's node to the nearest multiple of `pitch` (ties
/// upward) whenever data changes and the `grid` parameter is on.
pub fn snap_rule(pitch: u32) -> Rule {
    Rule::new(
        "snapToGrid",
        Trigger::OnDataUpdate,
        "grid",
        &format!("node.x = Math.round(node.x / {pitch}) * {pitch}; node.y = Math.round(node.y / {pitch}) * {pitch}"),
    )
}

const ARITHMETIC: [(&str, &str); 4] = [("Add", "+"), ("Mult", "*"), ("Sub", "-"), ("Div", "/")];

/// The four arithmetic rules of the expression language. Add and Mult
/// combine both operands; Sub and Div take the operand drawn further left
/// as the first one, falling back to feature order on a tie.
pub fn expression_rules() -> Vec<Rule> {
    ARITHMETIC
        .iter()
        .map(|(class, op)| {
            let condition = format!("context {class} inv: self.$left.value <> null and self.$right.value <> null");
            let action = if matches!(*class, "Add" | "Mult") {
                format!("data.$val.value = data.$left.value.$val.value {op} data.$right.value.$val.value")
            } else {
                format!(
                    "let l = data.$left.value\n\
                     let r = data.$right.value\n\
                     data.$val.value = l.node.x <= r.node.x ? l.$val.value {op} r.$val.value : r.$val.value {op} l.$val.value"
                )
            };
            Rule::new(&class.to_lowercase(), Trigger::OnDataUpdate, &condition, &action)
        })
        .collect()
}

/// Registers the arithmetic rules in the viewpoint covering `model`, after
/// checking that the model's metamodel has the expected shape.
pub fn builtin_expression_semantics(store: &mut Store, author: &str, model: ElementId) -> Result<Vec<String>> {
    let t = store.elements();
    let mm = t
        .model(model)?
        .conforms_to
        .ok_or_else(|| Error::Invalid("expression semantics need an instance model".into()))?;
    let mismatch = |what: String| Error::Invalid(format!("not an expression model: {what}"));
    for name in ["Number", "Add", "Sub", "Mult", "Div"] {
        let class = t
            .class_by_name(mm, name)?
            .ok_or_else(|| mismatch(format!("missing class `{name}`")))?;
        let needed: &[&str] = if name == "Number" { &["val"] } else { &["val", "left", "right"] };
        for f in needed {
            if t.feature_by_name(class.id, f)?.is_none() {
                return Err(mismatch(format!("`{name}` lacks `{f}`")));
            }
        }
    }
    let vp = crate::viewpoint::viewpoints_for(store, model)
        .first()
        .map(|vp| vp.id)
        .ok_or_else(|| Error::Invalid("no viewpoint covers the model".into()))?;
    let mut ids = Vec::new();
    for rule in expression_rules() {
        ids.push(register_rule(store, author, vp, rule)?);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_names_round_trip() {
        for t in Trigger::ALL {
            assert_eq!(t.name().parse::<Trigger>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("onClick".parse::<Trigger>().is_err());
    }

    #[test]
    fn builtin_rules_parse() {
        for r in expression_rules() {
            r.check().unwrap();
        }
        snap_rule(15).check().unwrap();
        assert!(Rule::new("bad", Trigger::OnDataUpdate, "a +", "").check().is_err());
        assert!(Rule::new("bad", Trigger::OnDataUpdate, "", "data.name = 1").check().is_err());
    }
}
