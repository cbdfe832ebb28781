//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls the expression evaluator, the rule engine or the
//! validation checker; values are recomputed from raw store contents.
#![allow(dead_code)]

pub mod sim;

use std::collections::BTreeSet;

use modelbench::meta::{Element, Scalar};
use modelbench::validation::{stored_markers, Severity};
use modelbench::viewpoint::{RenderKind, RenderNode, RenderTree};
use modelbench::store::{FeatureEdit, Layout, StateValue, Store, Tx};
use modelbench::{ElementId, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

pub const PITCH: f64 = 15.0;

/// Raw value list of `feature` on `object`, empty when unset.
pub fn raw(store: &Store, object: ElementId, feature: &str) -> Vec<Scalar> {
    let t = store.elements();
    let class = t.object(object).unwrap().instance_of;
    let Some(f) = t.feature_by_name(class, feature).unwrap() else { return Vec::new() };
    t.feature_value(object, f.id())
        .unwrap()
        .map(|v| v.values.clone())
        .unwrap_or_default()
}

pub fn real(store: &Store, object: ElementId, feature: &str) -> f64 {
    match raw(store, object, feature).as_slice() {
        [Scalar::Real(r)] => *r,
        [Scalar::Int(i)] => *i as f64,
        other => panic!("{object}.{feature} is {other:?}"),
    }
}

pub fn reference(store: &Store, object: ElementId, feature: &str) -> Option<ElementId> {
    match raw(store, object, feature).as_slice() {
        [Scalar::Ref(r)] => Some(*r),
        [] => None,
        other => panic!("{object}.{feature} is {other:?}"),
    }
}

pub fn class_of(store: &Store, object: ElementId) -> String {
    store.elements().class_name_of(object).unwrap().to_string()
}

pub fn object_named(store: &Store, name: &str) -> ElementId {
    let t = store.elements();
    let hits: Vec<ElementId> = t
        .iter()
        .filter(|e| matches!(e, Element::Object(_)))
        .map(Element::id)
        .filter(|id| t.object_name(*id).as_deref() == Some(name))
        .collect();
    assert_eq!(hits.len(), 1, "objects named {name}: {hits:?}");
    hits[0]
}

/// Arithmetic value of an expression tree. The operand drawn further left
/// comes first, so subtraction and division depend on the layout.
pub fn expr_value(store: &Store, e: ElementId) -> f64 {
    let class = class_of(store, e);
    if class == "Number" {
        return real(store, e, "val");
    }
    let a = reference(store, e, "left").expect("left operand");
    let b = reference(store, e, "right").expect("right operand");
    let xa = store.node(a).unwrap().layout().x;
    let xb = store.node(b).unwrap().layout().x;
    let (l, r) = if xa <= xb { (a, b) } else { (b, a) };
    let (l, r) = (expr_value(store, l), expr_value(store, r));
    match class.as_str() {
        "Add" => l + r,
        "Sub" => l - r,
        "Mult" => l * r,
        "Div" => l / r,
        other => panic!("unexpected class {other}"),
    }
}

/// Operations that (transitively) use `e` as an operand, nearest first.
pub fn dependents(store: &Store, e: ElementId) -> Vec<ElementId> {
    let t = store.elements();
    let mut out = Vec::new();
    let mut frontier = vec![e];
    while let Some(cur) = frontier.pop() {
        for o in t.iter().filter(|x| matches!(x, Element::Object(_))).map(Element::id) {
            let class = class_of(store, o);
            if class == "Number" || out.contains(&o) {
                continue;
            }
            if reference(store, o, "left") == Some(cur) || reference(store, o, "right") == Some(cur) {
                out.push(o);
                frontier.push(o);
            }
        }
    }
    out
}

/// Every DValue in the store that holds data for `feature`.
pub fn values_of_feature(store: &Store, feature: ElementId) -> BTreeSet<ElementId> {
    store
        .elements()
        .iter()
        .filter_map(|e| match e {
            Element::Value(v) if v.feature == feature => Some(v.id),
            _ => None,
        })
        .collect()
}

/// Nearest multiple of the grid pitch; exact halves go up.
pub fn snap(v: f64) -> f64 {
    (v / PITCH + 0.5).floor() * PITCH
}

/// Detail sections the zoom guards admit at `level`.
pub fn zoom_sections(level: i64) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    if level == 0 {
        s.insert("overview".to_string());
    }
    if level == 1 {
        s.insert("mid-detail".to_string());
    }
    if level >= 2 {
        s.insert("full-detail".to_string());
    }
    s
}

const SECTIONS: [&str; 3] = ["overview", "mid-detail", "full-detail"];

fn sections_under(node: &RenderNode, out: &mut BTreeSet<String>) {
    if node.kind == RenderKind::Box {
        for c in &node.classes {
            if SECTIONS.contains(&c.as_str()) {
                out.insert(c.clone());
            }
        }
    }
    for c in &node.children {
        sections_under(c, out);
    }
}

/// Sections rendered under each listed vertex.
pub fn rendered_sections(tree: &RenderTree, numbers: &[ElementId]) -> Vec<BTreeSet<String>> {
    numbers
        .iter()
        .map(|n| {
            let vertex = tree
                .iter()
                .find(|v| v.kind == RenderKind::Vertex && v.source == Some(*n))
                .expect("number rendered");
            let mut s = BTreeSet::new();
            sections_under(vertex, &mut s);
            s
        })
        .collect()
}

/// Entities whose owned attributes include no `isPK = true`, read from raw
/// values.
pub fn entities_without_pk(store: &Store, model: ElementId) -> BTreeSet<ElementId> {
    store
        .elements()
        .model_objects(model)
        .into_iter()
        .filter(|o| class_of(store, *o) == "Entity")
        .filter(|e| {
            !raw(store, *e, "ownedAttributes").iter().any(|a| match a {
                Scalar::Ref(a) => raw(store, *a, "isPK") == vec![Scalar::Bool(true)],
                _ => false,
            })
        })
        .collect()
}

/// Entities carrying a primary-key error marker, and the error count per
/// entity.
pub fn flagged(store: &Store, model: ElementId) -> (BTreeSet<ElementId>, Vec<usize>) {
    let mut set = BTreeSet::new();
    let mut counts = Vec::new();
    for o in store.elements().model_objects(model) {
        let errors = stored_markers(store, o)
            .into_iter()
            .filter(|m| m.severity == Severity::Error && m.rule == "primaryKey")
            .count();
        if errors > 0 {
            set.insert(o);
            counts.push(errors);
        }
    }
    (set, counts)
}

/// A random primitive edit on an expression model.
#[derive(Clone, Debug)]
pub enum Edit {
    SetVal(ElementId, f64),
    Rename(ElementId, String),
    Move(ElementId, f64, f64),
    State(ElementId, i64),
    AddNumber(ElementId, String, i64),
    Delete(ElementId),
    ClearOperand(ElementId, &'static str),
}

impl Edit {
    pub fn apply(&self, tx: &mut Tx<'_>) -> Result<()> {
        match self {
            Edit::SetVal(o, v) => tx.mutate_feature(*o, "val", FeatureEdit::Set(vec![Scalar::Real(*v)])),
            Edit::Rename(o, n) => tx.mutate_feature(*o, "name", FeatureEdit::Set(vec![Scalar::Str(n.clone())])),
            Edit::Move(o, x, y) => {
                let l = tx.store().node(*o)?.layout();
                tx.set_layout(*o, Layout::new(*x, *y, l.width, l.height))
            }
            Edit::State(o, v) => tx.set_state(*o, "mark", Some(StateValue::Int(*v))),
            Edit::AddNumber(model, name, v) => tx.add_object(*model, "Number", &json!({ "name": name, "val": v })).map(|_| ()),
            Edit::Delete(o) => tx.delete_element(*o),
            Edit::ClearOperand(o, side) => tx.mutate_feature(*o, side, FeatureEdit::Set(Vec::new())),
        }
    }
}

/// Picks an edit against the current objects of `model`.
pub fn random_edit(rng: &mut impl Rng, store: &Store, model: ElementId) -> Edit {
    let objects = store.elements().model_objects(model);
    let numbers: Vec<ElementId> = objects.iter().copied().filter(|o| class_of(store, *o) == "Number").collect();
    let ops: Vec<ElementId> = objects.iter().copied().filter(|o| class_of(store, *o) != "Number").collect();
    let pick = |rng: &mut dyn rand::RngCore, v: &[ElementId]| v.choose(rng).copied();
    match rng.gen_range(0..100) {
        0..=34 => match pick(rng, &numbers) {
            Some(n) => Edit::SetVal(n, rng.gen_range(-500..500) as f64),
            None => Edit::AddNumber(model, format!("n{}", rng.gen_range(0..1000)), 1),
        },
        35..=49 => match pick(rng, &objects) {
            Some(o) => Edit::Move(o, rng.gen_range(0.0..900.0), rng.gen_range(0.0..600.0)),
            None => Edit::AddNumber(model, "n".into(), 0),
        },
        50..=59 => match pick(rng, &objects) {
            Some(o) => Edit::Rename(o, format!("x{}", rng.gen_range(0..10_000))),
            None => Edit::AddNumber(model, "n".into(), 0),
        },
        60..=69 => match pick(rng, &objects) {
            Some(o) => Edit::State(o, rng.gen_range(0..10)),
            None => Edit::AddNumber(model, "n".into(), 0),
        },
        70..=84 => Edit::AddNumber(model, format!("n{}", rng.gen_range(0..1000)), rng.gen_range(-50..50)),
        85..=92 => match pick(rng, &ops) {
            Some(o) => Edit::ClearOperand(o, if rng.gen_bool(0.5) { "left" } else { "right" }),
            None => Edit::AddNumber(model, "n".into(), 0),
        },
        _ => match pick(rng, &numbers) {
            Some(n) => Edit::Delete(n),
            None => Edit::AddNumber(model, "n".into(), 0),
        },
    }
}
