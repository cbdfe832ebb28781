//! Bundled example projects: an entity-relationship language and a small
//! arithmetic expression language, each with a graphical viewpoint.

use serde_json::json;

use crate::eca::snap_rule;
use crate::error::Result;
use crate::id::ElementId;
use crate::meta::{AttrType, ClassFlags, PrimitiveKind, Scalar};
use crate::store::{Layout, NewAttribute, NewReference, Tx};
use crate::validation::ValidationRule;
use crate::viewpoint::{ChildLayout, StyleValue, TemplateNode, View, Viewpoint};
use crate::workbench::Workbench;

/// Grid pitch used by both fixtures.
pub const GRID: u32 = 15;

/// Predicate selecting entities, as typed into the console.
pub const ENTITY_PREDICATE: &str = "context DObject inv: self.instanceof.name = 'Entity'";

/// Check used by the primary-key rule.
pub const PK_CHECK: &str = "if (!data.$ownedAttributes.values.some(a => a.has('isPK') && a.$isPK.value)) {\n  err = `Entity ${data.name} has no primary key`\n}";

#[derive(Clone, Debug)]
pub struct ErdFixture {
    pub metamodel: ElementId,
    pub model: ElementId,
    pub viewpoint: ElementId,
    pub entity: ElementId,
    pub attribute: ElementId,
    pub relation: ElementId,
    pub user: ElementId,
    pub role: ElementId,
    pub has: ElementId,
    /// The six attribute objects, User's first.
    pub attributes: Vec<ElementId>,
}

fn class(tx: &mut Tx<'_>, mm: ElementId, name: &str, superclass: Option<ElementId>, is_abstract: bool) -> Result<ElementId> {
    let c = tx.add_class(mm, name)?;
    if is_abstract {
        tx.set_class_flags(
            c,
            ClassFlags {
                is_abstract: true,
                ..ClassFlags::default()
            },
        )?;
    }
    if let Some(s) = superclass {
        tx.add_superclass(c, s)?;
    }
    Ok(c)
}

fn reference(name: &str, target: ElementId, lower: u32, upper: Option<u32>, containment: bool) -> NewReference {
    NewReference {
        name: name.to_string(),
        target,
        lower,
        upper,
        containment,
    }
}

fn string_attr(name: &str) -> NewAttribute {
    NewAttribute::single(name, AttrType::Primitive(PrimitiveKind::String))
}

fn model_view(metamodel: &str, controls: Vec<TemplateNode>) -> View {
    View::new(
        "Model",
        &format!("context DModel inv: self.metamodel.name = '{metamodel}'"),
        TemplateNode::ViewRoot {
            class: Some("`model ${grid && 'grid'}`".into()),
            children: controls,
        },
    )
    .with_param("grid", "node.state.grid ?? false")
    .with_layout(ChildLayout::GraphVertices)
}

fn grid_control() -> TemplateNode {
    TemplateNode::Control {
        title: "Workbench".into(),
        payoff: Some("Controls".into()),
        children: vec![TemplateNode::Toggle {
            name: "grid".into(),
            title: "Grid".into(),
        }],
    }
}

fn input(field: &str) -> TemplateNode {
    TemplateNode::Input {
        data: "data".into(),
        field: field.into(),
        autosize: true,
        hidden: false,
    }
}

/// The ERD viewpoint: entity boxes with attribute rows, diamond relations
/// with two edges, a grid toggle, grid snapping and the primary-key check.
pub fn erd_viewpoint() -> Viewpoint {
    let mut vp = Viewpoint::new(ElementId::from_raw(0), "ERD");
    vp.views.push(model_view("ERD", vec![grid_control()]));
    vp.views.push(View::new(
        "Entity",
        ENTITY_PREDICATE,
        TemplateNode::ViewRoot {
            class: Some("'entity'".into()),
            children: vec![input("name")],
        },
    ));
    vp.views.push(View::new(
        "Attribute",
        "context DObject inv: self.instanceof.name = 'Attribute'",
        TemplateNode::ViewRoot {
            class: Some("data.$isPK.value ? 'attribute pk' : 'attribute'".into()),
            children: vec![
                input("name"),
                TemplateNode::Selector {
                    data: "data".into(),
                    field: "type".into(),
                },
                TemplateNode::If {
                    guard: "data.$isPK.value".into(),
                    children: vec![TemplateNode::Text { text: "PK".into() }],
                },
            ],
        },
    ));
    vp.views.push(
        View::new(
            "Relation",
            "context DObject inv: self.instanceof.name = 'Relation'",
            TemplateNode::ViewRoot {
                class: Some("'relation'".into()),
                children: vec![
                    input("name"),
                    TemplateNode::Edge {
                        view: "relation".into(),
                        start: "node".into(),
                        end: "data.$left.value.node".into(),
                    },
                    TemplateNode::Edge {
                        view: "relation".into(),
                        start: "node".into(),
                        end: "data.$right.value.node".into(),
                    },
                ],
            },
        )
        .with_style("shape", StyleValue::Path("diamond".into())),
    );
    vp.rules.push(snap_rule(GRID));
    vp.validation_rules.push(ValidationRule::new("primaryKey", ENTITY_PREDICATE, PK_CHECK));
    vp
}

/// Loads the ERD metamodel, the User/Role model and its viewpoint.
pub fn erd(wb: &mut Workbench) -> Result<ErdFixture> {
    let mut f = wb
        .edit(|tx| {
            let mm = tx.add_metamodel("ERD")?;
            let data_type = tx.add_enum(mm, "DataType", &["Integer", "String", "Boolean", "Date"])?;
            let cardinality = tx.add_enum(mm, "Cardinality", &["OneToOne", "OneToMany", "ManyToMany"])?;
            let named = class(tx, mm, "NamedElement", None, true)?;
            tx.add_attribute(named, string_attr("name"))?;
            let entity = class(tx, mm, "Entity", Some(named), false)?;
            let attribute = class(tx, mm, "Attribute", Some(named), false)?;
            let relation = class(tx, mm, "Relation", Some(named), false)?;
            tx.add_reference(entity, reference("ownedAttributes", attribute, 0, None, true))?;
            tx.add_attribute(attribute, NewAttribute::single("type", AttrType::Enum(data_type)))?;
            tx.add_attribute(
                attribute,
                NewAttribute {
                    default: Some(Scalar::Bool(false)),
                    ..NewAttribute::single("isPK", AttrType::Primitive(PrimitiveKind::Boolean))
                },
            )?;
            tx.add_reference(relation, reference("left", entity, 1, Some(1), false))?;
            tx.add_reference(relation, reference("right", entity, 1, Some(1), false))?;
            tx.add_attribute(relation, NewAttribute::single("cardinality", AttrType::Enum(cardinality)))?;

            let model = tx.add_model("Library", mm)?;
            let attr = |name: &str, ty: &str, pk: bool| json!({"name": name, "type": ty, "isPK": pk});
            let user = tx.add_object(
                model,
                "Entity",
                &json!({"name": "User", "ownedAttributes": [
                    attr("id", "Integer", true),
                    attr("surname", "String", false),
                    attr("firstname", "String", false),
                ]}),
            )?;
            let role = tx.add_object(
                model,
                "Entity",
                &json!({"name": "Role", "ownedAttributes": [
                    attr("id", "Integer", true),
                    attr("name", "String", false),
                    attr("description", "String", false),
                ]}),
            )?;
            let has = tx.add_object(
                model,
                "Relation",
                &json!({"name": "has", "left": "User", "right": "Role", "cardinality": "OneToMany"}),
            )?;
            tx.set_layout(user, Layout::new(495.0, 120.0, 150.0, 100.0))?;
            tx.set_layout(role, Layout::new(855.0, 120.0, 150.0, 100.0))?;
            tx.set_layout(has, Layout::new(705.0, 135.0, 90.0, 60.0))?;
            let mut attributes = tx.elements().contained_objects(user)?;
            attributes.extend(tx.elements().contained_objects(role)?);
            Ok(ErdFixture {
                metamodel: mm,
                model,
                viewpoint: ElementId::from_raw(0),
                entity,
                attribute,
                relation,
                user,
                role,
                has,
                attributes,
            })
        })?
        .value;
    f.viewpoint = wb.add_viewpoint(erd_viewpoint())?;
    Ok(f)
}

/// Horizontal arrangement of the expression tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprLayout {
    /// The 1000 operand sits left of the sum: `1000 - ((212 + 2) + 102)`.
    Standard,
    /// The 1000 operand sits right of the sum: `((212 + 2) + 102) - 1000`.
    Mirrored,
}

#[derive(Clone, Debug)]
pub struct ExprFixture {
    pub metamodel: ElementId,
    pub model: ElementId,
    pub viewpoint: ElementId,
    /// Objects by label: `e0` = 212, `e1` = e0 + e2, `e2` = 2,
    /// `e3` = e1 + e5, `e4` = e6 - e3 (positionally), `e5` = 102, `e6` = 1000.
    pub e: [ElementId; 7],
}

impl ExprFixture {
    pub fn root(&self) -> ElementId {
        self.e[4]
    }
}

fn zoom_sections(overview: &str, mid: &str, full: Vec<TemplateNode>) -> Vec<TemplateNode> {
    let section = |guard: &str, class: &str, children: Vec<TemplateNode>| TemplateNode::If {
        guard: guard.into(),
        children: vec![TemplateNode::Box {
            class: class.into(),
            children,
        }],
    };
    vec![
        section("level === 0", "overview", vec![TemplateNode::Expr { expr: overview.into() }]),
        section("level === 1", "mid-detail", vec![TemplateNode::Expr { expr: mid.into() }]),
        section("level >= 2", "full-detail", full),
    ]
}

/// Guard-predicted section classes for zoom level `level`.
pub fn zoom_sections_at(level: i64) -> &'static [&'static str] {
    match level {
        0 => &["overview"],
        1 => &["mid-detail"],
        _ => &["full-detail"],
    }
}

/// The expression viewpoint: number and operation views sliced into zoom
/// sections, grid and zoom controls on the model view, and grid snapping.
pub fn expression_viewpoint() -> Viewpoint {
    let mut vp = Viewpoint::new(ElementId::from_raw(0), "ExpressionSyntax");
    let zoom = TemplateNode::Control {
        title: "Workbench".into(),
        payoff: Some("Zoom Controls".into()),
        children: vec![TemplateNode::Slider {
            name: "level".into(),
            title: "Zoom level".into(),
            min: 0,
            max: 3,
        }],
    };
    vp.views.push(model_view("Expressions", vec![grid_control(), zoom]).with_param("level", "node.state.level ?? 3"));
    vp.views.push(View::new(
        "Number",
        "context Number inv: true",
        TemplateNode::ViewRoot {
            class: Some("'number'".into()),
            children: zoom_sections(
                "data.$val.value",
                "`${data.name} = ${data.$val.value}`",
                vec![TemplateNode::Expr { expr: "data.name".into() }, input("val")],
            ),
        },
    ));
    let mut op_children = zoom_sections(
        "data.$val.value",
        "`${data.name}: ${data.$val.value}`",
        vec![TemplateNode::Expr {
            expr: "`${data.name} (${data.className}) = ${data.$val.value}`".into(),
        }],
    );
    for side in ["left", "right"] {
        op_children.push(TemplateNode::If {
            guard: format!("data.${side}.value != null"),
            children: vec![TemplateNode::Edge {
                view: "operand".into(),
                start: "node".into(),
                end: format!("data.${side}.value.node"),
            }],
        });
    }
    vp.views.push(View::new(
        "Operation",
        "context BinExpression inv: true",
        TemplateNode::ViewRoot {
            class: Some("`operation ${data.className.toLowerCase()}`".into()),
            children: op_children,
        },
    ));
    vp.rules.push(snap_rule(GRID));
    vp
}

/// Loads the expression metamodel, the labelled tree under `layout`, its
/// viewpoint and the arithmetic rules, then evaluates every operation.
pub fn expression(wb: &mut Workbench, layout: ExprLayout) -> Result<ExprFixture> {
    let (mm, model, e) = wb
        .edit(|tx| {
            let mm = tx.add_metamodel("Expressions")?;
            let expr = class(tx, mm, "Expression", None, true)?;
            tx.add_attribute(expr, string_attr("name"))?;
            tx.add_attribute(expr, NewAttribute::single("val", AttrType::Primitive(PrimitiveKind::Real)))?;
            class(tx, mm, "Number", Some(expr), false)?;
            let bin = class(tx, mm, "BinExpression", Some(expr), true)?;
            tx.add_reference(bin, reference("left", expr, 0, Some(1), false))?;
            tx.add_reference(bin, reference("right", expr, 0, Some(1), false))?;
            for op in ["Add", "Sub", "Mult", "Div"] {
                class(tx, mm, op, Some(bin), false)?;
            }

            let model = tx.add_model("Eq1", mm)?;
            let number = |tx: &mut Tx<'_>, name: &str, v: f64| tx.add_object(model, "Number", &json!({"name": name, "val": v}));
            let op = |tx: &mut Tx<'_>, class: &str, name: &str, l: &str, r: &str| {
                tx.add_object(model, class, &json!({"name": name, "left": l, "right": r}))
            };
            // Creation order puts operands before the operations using them.
            let e0 = number(tx, "e0", 212.0)?;
            let e2 = number(tx, "e2", 2.0)?;
            let e1 = op(tx, "Add", "e1", "e0", "e2")?;
            let e5 = number(tx, "e5", 102.0)?;
            let e3 = op(tx, "Add", "e3", "e1", "e5")?;
            let e6 = number(tx, "e6", 1000.0)?;
            let e4 = op(tx, "Sub", "e4", "e6", "e3")?;
            let thousand_x = match layout {
                ExprLayout::Standard => 100.0,
                ExprLayout::Mirrored => 700.0,
            };
            let at = |x: f64, y: f64| Layout::new(x, y, 120.0, 60.0);
            tx.set_layout(e4, at(400.0, 30.0))?;
            tx.set_layout(e6, at(thousand_x, 150.0))?;
            tx.set_layout(e3, at(300.0, 150.0))?;
            tx.set_layout(e1, at(200.0, 270.0))?;
            tx.set_layout(e5, at(450.0, 270.0))?;
            tx.set_layout(e0, at(100.0, 390.0))?;
            tx.set_layout(e2, at(300.0, 390.0))?;
            Ok((mm, model, [e0, e1, e2, e3, e4, e5, e6]))
        })?
        .value;
    let viewpoint = wb.add_viewpoint(expression_viewpoint())?;
    wb.builtin_expression_semantics(model)?;
    Ok(ExprFixture {
        metamodel: mm,
        model,
        viewpoint,
        e,
    })
}
