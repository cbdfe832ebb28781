use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::id::ElementId;
use crate::meta::{AttrType, Element, Feature, PrimitiveKind};
use crate::query::{parse, EvalContext, Expr, QueryError, Value};
use crate::store::{Layout, Store, StateValue};
use crate::validation::MARKER_KEY;

use super::{model_params, resolve_view, ChildLayout, StyleValue, TemplateNode, View, Viewpoint};

/// Vertical offset of the first list row below its parent's top edge.
pub const ROW_OFFSET: f64 = 28.0;
pub const ROW_HEIGHT: f64 = 20.0;
/// Width hint per character for autosized inputs.
pub const CHAR_WIDTH: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum RenderKind {
    Canvas,
    Vertex,
    Row,
    Box,
    Text,
    Input,
    Selector,
    Toggle,
    Slider,
    Control,
    Edge,
    ErrorBadge,
    Marker,
}

/// What a render node lets the user do, and which store path it edits.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Affordance {
    Input {
        object: ElementId,
        feature: String,
        value: String,
    },
    Selector {
        object: ElementId,
        feature: String,
        value: String,
        options: Vec<String>,
    },
    Toggle {
        scope: ElementId,
        name: String,
        value: bool,
    },
    Slider {
        scope: ElementId,
        name: String,
        min: i64,
        max: i64,
        value: i64,
    },
    /// Moving or resizing writes the element's layout.
    Draggable { element: ElementId },
    Edge {
        start: ElementId,
        end: ElementId,
        from: (f64, f64),
        to: (f64, f64),
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderNode {
    /// Position in the tree, e.g. `0.2.1`.
    pub key: String,
    pub kind: RenderKind,
    pub source: Option<ElementId>,
    pub view: Option<String>,
    pub classes: Vec<String>,
    pub text: Option<String>,
    pub geometry: Option<Layout>,
    pub style: BTreeMap<String, StyleValue>,
    pub affordance: Option<Affordance>,
    pub children: Vec<RenderNode>,
}

impl RenderNode {
    fn new(kind: RenderKind) -> Self {
        RenderNode {
            key: String::new(),
            kind,
            source: None,
            view: None,
            classes: Vec::new(),
            text: None,
            geometry: None,
            style: BTreeMap::new(),
            affordance: None,
            children: Vec::new(),
        }
    }

    fn text(kind: RenderKind, text: String) -> Self {
        let mut n = RenderNode::new(kind);
        n.text = Some(text);
        n
    }

    fn badge(source: Option<ElementId>, message: String) -> Self {
        let mut n = RenderNode::text(RenderKind::ErrorBadge, message);
        n.source = source;
        n.classes.push("error-badge".into());
        n
    }

    fn assign_keys(&mut self, key: String) {
        for (i, c) in self.children.iter_mut().enumerate() {
            c.assign_keys(format!("{key}.{i}"));
        }
        self.key = key;
    }

    /// Depth-first iteration over this node and its descendants.
    pub fn iter(&self) -> impl Iterator<Item = &RenderNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            stack.extend(n.children.iter().rev());
            Some(n)
        })
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderTree {
    pub model: ElementId,
    pub viewpoint: Option<String>,
    pub root: RenderNode,
}

impl RenderTree {
    pub fn iter(&self) -> impl Iterator<Item = &RenderNode> {
        self.root.iter()
    }

    pub fn find(&self, key: &str) -> Option<&RenderNode> {
        self.iter().find(|n| n.key == key)
    }

    pub fn count(&self, kind: RenderKind) -> usize {
        self.iter().filter(|n| n.kind == kind).count()
    }

    /// Element shown by each vertex or row, in tree order.
    pub fn shown_elements(&self) -> Vec<ElementId> {
        self.iter()
            .filter(|n| matches!(n.kind, RenderKind::Vertex | RenderKind::Row))
            .filter_map(|n| n.source)
            .collect()
    }

    /// First Input or Selector editing `feature` of `object`.
    pub fn editor_for(&self, object: ElementId, feature: &str) -> Option<&RenderNode> {
        self.iter().find(|n| match &n.affordance {
            Some(Affordance::Input { object: o, feature: f, .. } | Affordance::Selector { object: o, feature: f, .. }) => {
                *o == object && f == feature
            }
            _ => false,
        })
    }
}

struct Renderer<'s> {
    store: &'s Store,
    viewpoint: Option<&'s Viewpoint>,
    params: BTreeMap<String, Value>,
    rendered: BTreeSet<ElementId>,
    pending: VecDeque<ElementId>,
    rows: Vec<(Layout, usize)>,
    cache: HashMap<String, std::result::Result<Arc<Expr>, QueryError>>,
}

/// Renders `model` under `viewpoint` (or the built-in minimal rendering).
/// Expression failures become error badges instead of aborting.
pub fn render(store: &Store, model: ElementId, viewpoint: Option<&Viewpoint>) -> Result<RenderTree> {
    store.elements().model(model)?;
    let mut r = Renderer {
        store,
        viewpoint,
        params: BTreeMap::new(),
        rendered: BTreeSet::new(),
        pending: VecDeque::new(),
        rows: Vec::new(),
        cache: HashMap::new(),
    };
    let mut canvas = RenderNode::new(RenderKind::Canvas);
    canvas.source = Some(model);
    canvas.classes.push("canvas".into());
    r.rendered.insert(model);
    if let Some(vp) = viewpoint {
        match model_params(store, model, vp) {
            Ok(p) => r.params = p,
            Err(e) => canvas.children.push(RenderNode::badge(Some(model), e.to_string())),
        }
        match resolve_view(store, model, vp) {
            Ok(Some(view)) => {
                canvas.view = Some(view.name.clone());
                canvas.style = view.style.clone();
                let ctx = r.context(model, Some(view));
                if let TemplateNode::ViewRoot { class: Some(c), .. } = &view.template {
                    match r.eval(c, &ctx) {
                        Ok(v) => canvas.classes.extend(v.to_text().split_whitespace().map(str::to_string)),
                        Err(e) => canvas.children.push(RenderNode::badge(Some(model), e.to_string())),
                    }
                }
                let mut out = Vec::new();
                r.children(view.template.children(), &ctx, model, &mut out);
                canvas.children.extend(out);
            }
            Ok(None) => {}
            Err(e) => canvas.children.push(RenderNode::badge(Some(model), e.to_string())),
        }
    }
    let roots = store.elements().model(model)?.root_objects.clone();
    for root in roots {
        r.pending.push_back(root);
        while let Some(next) = r.pending.pop_front() {
            if let Some(n) = r.element(next, false) {
                canvas.children.push(n);
            }
        }
    }
    canvas.assign_keys("0".into());
    Ok(RenderTree {
        model,
        viewpoint: viewpoint.map(|v| v.name.clone()),
        root: canvas,
    })
}

fn border_point(rect: &Layout, toward: (f64, f64)) -> (f64, f64) {
    let (cx, cy) = rect.center();
    let (dx, dy) = (toward.0 - cx, toward.1 - cy);
    if dx == 0.0 && dy == 0.0 {
        return (cx, cy);
    }
    let hw = rect.width / 2.0;
    let hh = rect.height / 2.0;
    let tx = if dx != 0.0 { hw / dx.abs() } else { f64::INFINITY };
    let ty = if dy != 0.0 { hh / dy.abs() } else { f64::INFINITY };
    let t = tx.min(ty);
    (cx + dx * t, cy + dy * t)
}

impl<'s> Renderer<'s> {
    fn parsed(&mut self, src: &str) -> std::result::Result<Arc<Expr>, QueryError> {
        self.cache
            .entry(src.to_string())
            .or_insert_with(|| parse(src).map(Arc::new))
            .clone()
    }

    fn eval(&mut self, src: &str, ctx: &EvalContext<'s>) -> std::result::Result<Value, QueryError> {
        let e = self.parsed(src)?;
        ctx.eval(&e)
    }

    fn context(&mut self, element: ElementId, view: Option<&View>) -> EvalContext<'s> {
        let mut ctx = EvalContext::for_element(self.store, element);
        ctx.locals = self.params.clone();
        if let Some(v) = view {
            if !matches!(self.store.elements().get(element), Some(Element::Model(_))) {
                for (name, src) in &v.params {
                    if let Ok(value) = self.eval(src, &ctx) {
                        ctx.locals.insert(name.clone(), value);
                    }
                }
            }
            ctx.view = Value::View(Arc::new(v.clone()));
        }
        ctx
    }

    /// Renders one element as a vertex, or as a list row of the innermost
    /// vertex being rendered when `as_row` is set.
    fn element(&mut self, id: ElementId, as_row: bool) -> Option<RenderNode> {
        if !self.rendered.insert(id) {
            return None;
        }
        let store = self.store;
        let view = match self.viewpoint.map(|vp| resolve_view(store, id, vp)) {
            Some(Ok(v)) => v,
            Some(Err(e)) => return Some(RenderNode::badge(Some(id), e.to_string())),
            None => None,
        };
        if view.is_some_and(|v| v.options.exclude) {
            return None;
        }
        let row_slot = if as_row { self.rows.last_mut() } else { None };
        let geometry = match row_slot {
            Some((parent, row)) => {
                let g = Layout::new(
                    parent.x,
                    parent.y + ROW_OFFSET + *row as f64 * ROW_HEIGHT,
                    parent.width,
                    ROW_HEIGHT,
                );
                *row += 1;
                Some(g)
            }
            None => store.node(id).ok().map(|n| n.layout()),
        };
        let is_row = as_row && !self.rows.is_empty();
        let mut node = RenderNode::new(if is_row { RenderKind::Row } else { RenderKind::Vertex });
        node.source = Some(id);
        node.geometry = geometry;
        if !is_row {
            node.affordance = Some(Affordance::Draggable { element: id });
        }
        let ctx = self.context(id, view);
        match view {
            Some(v) => {
                node.view = Some(v.name.clone());
                node.style = v.style.clone();
                node.classes.push(v.name.to_lowercase());
                if let TemplateNode::ViewRoot { class: Some(c), .. } = &v.template {
                    match self.eval(c, &ctx) {
                        Ok(val) => {
                            node.classes = val.to_text().split_whitespace().map(str::to_string).collect();
                        }
                        Err(e) => node.children.push(RenderNode::badge(Some(id), e.to_string())),
                    }
                }
            }
            None => {
                node.classes.push("default".into());
                let t = store.elements();
                let class = match t.resolve(id) {
                    Ok(Element::Object(_)) => t.class_name_of(id).unwrap_or("?").to_string(),
                    Ok(e) => e.kind_name().to_string(),
                    Err(_) => "?".into(),
                };
                let name = t.display_name(id).unwrap_or_default();
                node.children.push(RenderNode::text(RenderKind::Text, format!("{name}: {class}")));
            }
        }
        if let Some(g) = geometry {
            self.rows.push((g, 0));
        }
        if let Some(v) = view {
            let mut out = Vec::new();
            self.children(v.template.children(), &ctx, id, &mut out);
            node.children.extend(out);
        }
        let layout = view.map_or(ChildLayout::List, |v| v.options.child_layout);
        if let Ok(children) = store.elements().contained_objects(id) {
            for child in children {
                if self.rendered.contains(&child) {
                    continue;
                }
                match layout {
                    ChildLayout::List => {
                        if let Some(n) = self.element(child, geometry.is_some()) {
                            node.children.push(n);
                        }
                    }
                    ChildLayout::GraphVertices => self.pending.push_back(child),
                }
            }
        }
        if geometry.is_some() {
            self.rows.pop();
        }
        if let Some(marker) = self.marker(id) {
            node.children.push(marker);
        }
        Some(node)
    }

    fn marker(&self, id: ElementId) -> Option<RenderNode> {
        let node = self.store.node(id).ok()?;
        let StateValue::List(items) = node.state.get(MARKER_KEY)? else { return None };
        if items.is_empty() {
            return None;
        }
        let mut severity = "warning";
        let mut messages = Vec::new();
        for item in items {
            if let StateValue::Record(r) = item {
                if matches!(r.get("severity"), Some(StateValue::Text(s)) if s == "error") {
                    severity = "error";
                }
                if let Some(StateValue::Text(m)) = r.get("message") {
                    messages.push(m.clone());
                }
            }
        }
        let mut m = RenderNode::text(RenderKind::Marker, messages.join("; "));
        m.source = Some(id);
        m.classes = vec!["marker".into(), severity.into()];
        Some(m)
    }

    fn children(&mut self, templates: &[TemplateNode], ctx: &EvalContext<'s>, scope: ElementId, out: &mut Vec<RenderNode>) {
        for t in templates {
            self.template(t, ctx, scope, out);
        }
    }

    fn template(&mut self, t: &TemplateNode, ctx: &EvalContext<'s>, scope: ElementId, out: &mut Vec<RenderNode>) {
        let badge = |e: &dyn std::fmt::Display| RenderNode::badge(Some(scope), e.to_string());
        match t {
            TemplateNode::ViewRoot { children, .. } => self.children(children, ctx, scope, out),
            TemplateNode::Box { class, children } => {
                let mut n = RenderNode::new(RenderKind::Box);
                n.classes = class.split_whitespace().map(str::to_string).collect();
                let mut inner = Vec::new();
                self.children(children, ctx, scope, &mut inner);
                n.children = inner;
                out.push(n);
            }
            TemplateNode::Text { text } => out.push(RenderNode::text(RenderKind::Text, text.clone())),
            TemplateNode::Expr { expr } => match self.eval(expr, ctx) {
                Ok(v) => {
                    let text = v.to_text();
                    if !text.is_empty() {
                        out.push(RenderNode::text(RenderKind::Text, text));
                    }
                }
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::If { guard, children } => match self.eval(guard, ctx) {
                Ok(v) if v.truthy() => self.children(children, ctx, scope, out),
                Ok(_) => {}
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::Repeat { over, var, children } => match self.eval(over, ctx) {
                Ok(Value::List(items)) => {
                    for item in items {
                        let inner = ctx.clone().with_local(var, item);
                        self.children(children, &inner, scope, out);
                    }
                }
                Ok(Value::Null) => {}
                Ok(other) => out.push(badge(&format!("cannot repeat over a {}", other.type_name()))),
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::DefaultNode { data } => match self.eval(data, ctx) {
                Ok(Value::Element(id)) => {
                    if let Some(n) = self.element(id, true) {
                        out.push(n);
                    }
                }
                Ok(Value::Null) => {}
                Ok(other) => out.push(badge(&format!("cannot render a {}", other.type_name()))),
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::Edge { view, start, end } => match self.edge(view, start, end, ctx) {
                Ok(n) => out.push(n),
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::Input {
                data,
                field,
                autosize,
                hidden,
            } => match self.edit_target(data, field, ctx) {
                Ok((object, feature, value)) => {
                    let mut n = RenderNode::text(RenderKind::Input, value.clone());
                    n.source = Some(object);
                    n.classes.push("input".into());
                    if *hidden {
                        n.classes.push("borderless".into());
                    }
                    if *autosize {
                        let chars = value.chars().count().max(1) as f64;
                        n.style.insert("width".into(), StyleValue::Length(chars * CHAR_WIDTH));
                    }
                    n.affordance = Some(Affordance::Input { object, feature, value });
                    out.push(n);
                }
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::Selector { data, field } => match self.edit_target(data, field, ctx) {
                Ok((object, feature, value)) => {
                    let options = self.options(object, &feature);
                    let mut n = RenderNode::text(RenderKind::Selector, value.clone());
                    n.source = Some(object);
                    n.classes.push("selector".into());
                    n.affordance = Some(Affordance::Selector {
                        object,
                        feature,
                        value,
                        options,
                    });
                    out.push(n);
                }
                Err(e) => out.push(badge(&e)),
            },
            TemplateNode::Toggle { name, title } => {
                let value = self.control_value(scope, name, ctx).truthy();
                let mut n = RenderNode::text(RenderKind::Toggle, title.clone());
                n.source = Some(scope);
                n.classes.push("toggle".into());
                n.affordance = Some(Affordance::Toggle {
                    scope,
                    name: name.clone(),
                    value,
                });
                out.push(n);
            }
            TemplateNode::Slider { name, title, min, max } => {
                let value = match self.control_value(scope, name, ctx) {
                    Value::Int(i) => i,
                    Value::Real(r) => r.round() as i64,
                    _ => *min,
                };
                let mut n = RenderNode::text(RenderKind::Slider, title.clone());
                n.source = Some(scope);
                n.classes.push("slider".into());
                n.affordance = Some(Affordance::Slider {
                    scope,
                    name: name.clone(),
                    min: *min,
                    max: *max,
                    value,
                });
                out.push(n);
            }
            TemplateNode::Control { title, payoff, children } => {
                let mut n = RenderNode::text(RenderKind::Control, title.clone());
                n.classes.push("control".into());
                if let Some(p) = payoff {
                    n.children.push(RenderNode::text(RenderKind::Text, p.clone()));
                }
                let mut inner = Vec::new();
                self.children(children, ctx, scope, &mut inner);
                n.children.extend(inner);
                out.push(n);
            }
            TemplateNode::Decorators => {}
        }
    }

    fn control_value(&self, scope: ElementId, name: &str, ctx: &EvalContext<'s>) -> Value {
        if let Some(v) = ctx.locals.get(name) {
            return v.clone();
        }
        self.store
            .node(scope)
            .ok()
            .and_then(|n| n.state.get(name))
            .map_or(Value::Null, Value::from_state)
    }

    fn edge(&mut self, view: &str, start: &str, end: &str, ctx: &EvalContext<'s>) -> std::result::Result<RenderNode, String> {
        let endpoint = |v: Value| match v {
            Value::Node(id) | Value::Element(id) => Ok(id),
            other => Err(format!("edge endpoint is a {}, expected a node", other.type_name())),
        };
        let a = endpoint(self.eval(start, ctx).map_err(|e| e.to_string())?)?;
        let b = endpoint(self.eval(end, ctx).map_err(|e| e.to_string())?)?;
        let la = self.store.node(a).map_err(|e| e.to_string())?.layout();
        let lb = self.store.node(b).map_err(|e| e.to_string())?.layout();
        let from = border_point(&la, lb.center());
        let to = border_point(&lb, la.center());
        let mut n = RenderNode::new(RenderKind::Edge);
        n.classes = vec!["edge".into(), view.to_string()];
        n.affordance = Some(Affordance::Edge { start: a, end: b, from, to });
        Ok(n)
    }

    /// Resolves an Input/Selector binding to (object, feature, current text).
    fn edit_target(&mut self, data: &str, field: &str, ctx: &EvalContext<'s>) -> std::result::Result<(ElementId, String, String), String> {
        let t = self.store.elements();
        let target = self.eval(data, ctx).map_err(|e| e.to_string())?;
        let Value::Element(id) = target else {
            return Err(format!("editor bound to a {}, expected an element", target.type_name()));
        };
        let (object, feature) = match t.resolve(id).map_err(|e| e.to_string())? {
            Element::Value(v) => (v.owner, t.feature(v.feature).map_err(|e| e.to_string())?.name().to_string()),
            Element::Object(o) => (o.id, field.to_string()),
            other => return Err(format!("cannot edit a {}", other.kind_name())),
        };
        let o = t.object(object).map_err(|e| e.to_string())?;
        let f = t
            .feature_by_name(o.instance_of, &feature)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("no feature `{feature}`"))?;
        let text = t
            .feature_value(object, f.id())
            .map_err(|e| e.to_string())?
            .and_then(|v| v.values.first())
            .map(|s| match Value::from_scalar(s) {
                Value::Element(e) => t.display_name(e).unwrap_or_else(|| e.to_string()),
                v => v.to_string(),
            })
            .unwrap_or_default();
        Ok((object, feature, text))
    }

    fn options(&self, object: ElementId, feature: &str) -> Vec<String> {
        let t = self.store.elements();
        let Ok(o) = t.object(object) else { return Vec::new() };
        match t.feature_by_name(o.instance_of, feature) {
            Ok(Some(Feature::Attribute(a))) => match a.ty {
                AttrType::Enum(e) => t.enumeration(e).map(|e| e.literals.clone()).unwrap_or_default(),
                AttrType::Primitive(PrimitiveKind::Boolean) => vec!["true".into(), "false".into()],
                AttrType::Primitive(_) => Vec::new(),
            },
            Ok(Some(Feature::Reference(r))) => t
                .class_all_instances(r.target, o.model)
                .unwrap_or_default()
                .into_iter()
                .map(|id| t.display_name(id).unwrap_or_else(|| id.to_string()))
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn border_points_lie_on_the_rectangle() {
        let r = Layout::new(0.0, 0.0, 100.0, 50.0);
        assert_eq!(border_point(&r, (200.0, 25.0)), (100.0, 25.0));
        assert_eq!(border_point(&r, (50.0, -100.0)), (50.0, 0.0));
        assert_eq!(border_point(&r, (50.0, 25.0)), (50.0, 25.0));
    }
}
