mod common;

use common::values_of_feature;
use modelbench::fixtures;
use modelbench::meta::{AttrType, Element, PrimitiveKind, Scalar};
use modelbench::store::{MetaEdit, NewAttribute, Store};
use modelbench::{ElementId, Workbench};

fn feature(store: &Store, class: ElementId, name: &str) -> ElementId {
    store.elements().feature_by_name(class, name).unwrap().unwrap().id()
}

/// Instances of `class` (or a subclass) across all models, by sweep.
fn instances(store: &Store, class: ElementId) -> usize {
    let t = store.elements();
    t.iter()
        .filter(|e| matches!(e, Element::Object(o) if t.is_subclass_of(o.instance_of, class).unwrap()))
        .count()
}

#[test]
fn removing_an_attribute_deletes_all_its_values() {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    let is_pk = feature(wb.store(), f.attribute, "isPK");
    let before = values_of_feature(wb.store(), is_pk);
    assert_eq!(before.len(), instances(wb.store(), f.attribute));
    assert_eq!(before.len(), 6);
    let snapshot = wb.store().clone();

    wb.co_evolve(MetaEdit::RemoveFeature { feature: is_pk }).unwrap();
    let t = wb.store().elements();
    assert!(!t.contains(is_pk));
    assert!(before.iter().all(|v| !t.contains(*v)));
    assert!(values_of_feature(wb.store(), is_pk).is_empty());
    for o in t.model_objects(f.model) {
        assert!(!t.object(o).unwrap().features.contains_key(&is_pk));
    }

    wb.undo().unwrap();
    assert_eq!(values_of_feature(wb.store(), is_pk), before);
    assert!(wb.store().same_state(&snapshot));
}

#[test]
fn undo_restores_values_with_identical_ids_and_contents() {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    let name = feature(wb.store(), f.attribute, "type");
    let before: Vec<Element> = values_of_feature(wb.store(), name)
        .into_iter()
        .map(|v| wb.store().elements().get(v).unwrap().clone())
        .collect();
    wb.co_evolve(MetaEdit::RemoveFeature { feature: name }).unwrap();
    wb.undo().unwrap();
    let after: Vec<Element> = values_of_feature(wb.store(), name)
        .into_iter()
        .map(|v| wb.store().elements().get(v).unwrap().clone())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn adding_an_attribute_reaches_every_instance() {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    let spec = NewAttribute {
        default: Some(Scalar::Int(0)),
        ..NewAttribute::single("width", AttrType::Primitive(PrimitiveKind::Integer))
    };
    wb.co_evolve(MetaEdit::AddAttribute { class: f.attribute, spec }).unwrap();
    let width = feature(wb.store(), f.attribute, "width");
    for a in &f.attributes {
        assert_eq!(common::raw(wb.store(), *a, "width"), vec![Scalar::Int(0)]);
    }
    // The editor picks the new feature up through the reflective accessors.
    let vp = wb.store().viewpoint(f.viewpoint).unwrap().clone();
    let ctx = modelbench::viewpoint::element_context(wb.store(), f.attributes[0], &vp).unwrap();
    let v = ctx.eval(&modelbench::query::parse("data.$width.value + 1").unwrap()).unwrap();
    assert_eq!(v.to_string(), "1");
    assert_eq!(values_of_feature(wb.store(), width).len(), 6);
}

#[test]
fn renaming_a_feature_keeps_values() {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    let ty = feature(wb.store(), f.attribute, "type");
    let before = values_of_feature(wb.store(), ty);
    wb.co_evolve(MetaEdit::RenameFeature {
        feature: ty,
        name: "dataType".into(),
    })
    .unwrap();
    assert_eq!(values_of_feature(wb.store(), ty), before);
    assert_eq!(
        common::raw(wb.store(), f.attributes[0], "dataType"),
        vec![Scalar::Literal("Integer".into())]
    );
}
