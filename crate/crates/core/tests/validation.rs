mod common;

use std::collections::BTreeSet;

use common::{entities_without_pk, flagged, raw};
use modelbench::fixtures::{self, ErdFixture};
use modelbench::meta::{AttrType, PrimitiveKind, Scalar};
use modelbench::store::{FeatureEdit, MetaEdit, NewAttribute};
use modelbench::validation::stored_markers;
use modelbench::{ElementId, Workbench};
use serde_json::json;

fn assert_consistent(wb: &Workbench, f: &ErdFixture) -> BTreeSet<ElementId> {
    let expected = entities_without_pk(wb.store(), f.model);
    let (got, counts) = flagged(wb.store(), f.model);
    assert_eq!(got, expected);
    assert!(counts.iter().all(|c| *c == 1), "{counts:?}");
    got
}

fn with_book() -> (Workbench, ErdFixture, ElementId, ElementId) {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    assert!(assert_consistent(&wb, &f).is_empty());
    let book = wb
        .edit(|tx| {
            tx.add_object(
                f.model,
                "Entity",
                &json!({"name": "Book", "ownedAttributes": [{"name": "title", "type": "String", "isPK": false}]}),
            )
        })
        .unwrap()
        .value;
    let title = match raw(wb.store(), book, "ownedAttributes").as_slice() {
        [Scalar::Ref(a)] => *a,
        other => panic!("{other:?}"),
    };
    (wb, f, book, title)
}

#[test]
fn entity_without_primary_key_gets_one_error() {
    let (wb, f, book, _) = with_book();
    assert_eq!(assert_consistent(&wb, &f), BTreeSet::from([book]));
    let m = stored_markers(wb.store(), book);
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].message, "Entity Book has no primary key");
}

#[test]
fn setting_is_pk_clears_the_marker() {
    let (mut wb, f, book, title) = with_book();
    wb.set_feature(title, "isPK", FeatureEdit::Set(vec![Scalar::Bool(true)])).unwrap();
    assert!(assert_consistent(&wb, &f).is_empty());
    assert!(stored_markers(wb.store(), book).is_empty());
}

#[test]
fn removing_the_last_pk_flags_the_entity() {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).unwrap();
    let pk = f.attributes[0];
    assert_eq!(raw(wb.store(), pk, "isPK"), vec![Scalar::Bool(true)]);
    wb.set_feature(pk, "isPK", FeatureEdit::Set(vec![Scalar::Bool(false)])).unwrap();
    assert_eq!(assert_consistent(&wb, &f), BTreeSet::from([f.user]));
    wb.undo().unwrap();
    assert!(assert_consistent(&wb, &f).is_empty());
}

#[test]
fn co_evolution_toggles_markers() {
    let (mut wb, f, book, title) = with_book();
    let is_pk = wb
        .store()
        .elements()
        .feature_by_name(f.attribute, "isPK")
        .unwrap()
        .unwrap()
        .id();

    // Without the feature no entity can have a primary key.
    wb.co_evolve(MetaEdit::RemoveFeature { feature: is_pk }).unwrap();
    assert_eq!(assert_consistent(&wb, &f), BTreeSet::from([f.user, f.role, book]));

    wb.undo().unwrap();
    assert_eq!(assert_consistent(&wb, &f), BTreeSet::from([book]));

    wb.redo().unwrap();
    assert_eq!(assert_consistent(&wb, &f).len(), 3);

    // Re-adding it defaults every attribute to false.
    let spec = NewAttribute {
        default: Some(Scalar::Bool(false)),
        ..NewAttribute::single("isPK", AttrType::Primitive(PrimitiveKind::Boolean))
    };
    wb.co_evolve(MetaEdit::AddAttribute { class: f.attribute, spec }).unwrap();
    assert_eq!(assert_consistent(&wb, &f).len(), 3);
    wb.set_feature(title, "isPK", FeatureEdit::Set(vec![Scalar::Bool(true)])).unwrap();
    assert_eq!(assert_consistent(&wb, &f), BTreeSet::from([f.user, f.role]));
}

#[test]
fn markers_render_as_badges() {
    let (wb, f, book, _) = with_book();
    let tree = wb.render(f.model, None).unwrap();
    let markers: Vec<_> = tree
        .iter()
        .filter(|n| n.kind == modelbench::viewpoint::RenderKind::Marker)
        .collect();
    assert_eq!(markers.len(), 1);
    assert_eq!(markers[0].source, Some(book));
    let svg = modelbench::viewpoint::render_to_svg(&tree);
    assert!(svg.contains("Entity Book has no primary key"));
}
