mod common;

use common::{rendered_sections, zoom_sections};
use modelbench::fixtures::{self, ExprLayout};
use modelbench::query::Value;
use modelbench::viewpoint::RenderKind;
use modelbench::{ElementId, Workbench};

fn setup() -> (Workbench, fixtures::ExprFixture, Vec<ElementId>) {
    let mut wb = Workbench::default();
    let f = fixtures::expression(&mut wb, ExprLayout::Standard).unwrap();
    let numbers: Vec<ElementId> = f.e.iter().copied().filter(|e| common::class_of(wb.store(), *e) == "Number").collect();
    assert_eq!(numbers.len(), 4);
    (wb, f, numbers)
}

#[test]
fn each_level_renders_the_guarded_sections() {
    let (mut wb, f, numbers) = setup();
    for level in 0..=3 {
        wb.set_control_parameter(f.model, "level", Value::Int(level)).unwrap();
        let tree = wb.render(f.model, None).unwrap();
        for got in rendered_sections(&tree, &numbers) {
            assert_eq!(got, zoom_sections(level), "level {level}");
        }
    }
}

#[test]
fn unset_level_defaults_to_three() {
    let (wb, f, numbers) = setup();
    assert!(!wb.store().node(f.model).unwrap().state.contains_key("level"));
    let tree = wb.render(f.model, None).unwrap();
    for got in rendered_sections(&tree, &numbers) {
        assert_eq!(got, zoom_sections(3));
    }
    let slider = tree.iter().find(|n| n.kind == RenderKind::Slider).expect("zoom slider");
    match &slider.affordance {
        Some(modelbench::viewpoint::Affordance::Slider { min, max, value, .. }) => assert_eq!((*min, *max, *value), (0, 3, 3)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_range_levels_are_refused() {
    let (mut wb, f, _) = setup();
    for bad in [Value::Int(-1), Value::Int(4), Value::Real(1.5), Value::Bool(true)] {
        assert!(wb.set_control_parameter(f.model, "level", bad.clone()).is_err(), "{bad}");
    }
}
