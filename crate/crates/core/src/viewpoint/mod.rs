//! Concrete syntax: viewpoints made of views, view resolution, rendering to
//! a render tree and SVG, and the projectional write-back path.

mod render;
mod svg;
mod template;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eca::{Rule, Trigger};
use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::query::{EvalContext, Predicate, QueryError};
use crate::store::Store;
use crate::validation::ValidationRule;

pub use render::{render, Affordance, RenderKind, RenderNode, RenderTree, ROW_HEIGHT, ROW_OFFSET};
pub use svg::render_to_svg;
pub use template::{ControlSpec, TemplateNode};

/// Closed set of style parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "camelCase")]
pub enum StyleValue {
    Color(String),
    Length(f64),
    Dash(Vec<f64>),
    Path(String),
}

impl StyleValue {
    pub fn svg_text(&self) -> String {
        match self {
            StyleValue::Color(c) | StyleValue::Path(c) => c.clone(),
            StyleValue::Length(l) => crate::query::fmt_real(*l),
            StyleValue::Dash(d) => d.iter().map(|x| crate::query::fmt_real(*x)).collect::<Vec<_>>().join(" "),
        }
    }
}

/// How objects contained by an element are laid out when the template does
/// not place them itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChildLayout {
    /// Rows stacked inside the parent box.
    #[default]
    List,
    /// Free vertices on the canvas, positioned by their own layout.
    GraphVertices,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewOptions {
    #[serde(default)]
    pub child_layout: ChildLayout,
    /// Elements selected by this view are left out of the render tree.
    #[serde(default)]
    pub exclude: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct View {
    pub name: String,
    /// Selection predicate; may use the `context <Class> inv:` dialect.
    pub apply_to: String,
    pub template: TemplateNode,
    #[serde(default)]
    pub style: BTreeMap<String, StyleValue>,
    /// Rules bound to this view, by trigger.
    #[serde(default)]
    pub events: BTreeMap<Trigger, Vec<String>>,
    #[serde(default)]
    pub options: ViewOptions,
    /// Named parameters (`grid = node.state.grid ?? false`). Parameters of
    /// the view selected for a model are visible in every view and rule
    /// evaluated inside that model.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl View {
    pub fn new(name: &str, apply_to: &str, template: TemplateNode) -> Self {
        View {
            name: name.to_string(),
            apply_to: apply_to.to_string(),
            template,
            style: BTreeMap::new(),
            events: BTreeMap::new(),
            options: ViewOptions::default(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, expr: &str) -> Self {
        self.params.insert(name.to_string(), expr.to_string());
        self
    }

    pub fn with_style(mut self, key: &str, value: StyleValue) -> Self {
        self.style.insert(key.to_string(), value);
        self
    }

    pub fn with_layout(mut self, layout: ChildLayout) -> Self {
        self.options.child_layout = layout;
        self
    }

    /// Checks that every embedded source parses.
    pub fn check(&self) -> Result<()> {
        let wrap = |e: QueryError| Error::View {
            view: self.name.clone(),
            message: e.to_string(),
        };
        Predicate::parse(&self.apply_to).map_err(wrap)?;
        for src in self.params.values() {
            crate::query::parse(src).map_err(wrap)?;
        }
        self.template.check().map_err(|message| Error::View {
            view: self.name.clone(),
            message,
        })
    }

    /// Applies `f` to every expression source held by the view.
    pub fn map_sources(&mut self, f: &mut dyn FnMut(&str) -> String) {
        self.apply_to = f(&self.apply_to);
        for v in self.params.values_mut() {
            *v = f(v);
        }
        self.template.map_sources(f);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Viewpoint {
    pub id: ElementId,
    pub name: String,
    #[serde(default)]
    pub is_default: bool,
    #[serde(default)]
    pub views: Vec<View>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub validation_rules: Vec<ValidationRule>,
}

impl Viewpoint {
    pub fn new(id: ElementId, name: &str) -> Self {
        Viewpoint {
            id,
            name: name.to_string(),
            is_default: false,
            views: Vec::new(),
            rules: Vec::new(),
            validation_rules: Vec::new(),
        }
    }

    pub fn view(&self, name: &str) -> Option<&View> {
        self.views.iter().find(|v| v.name == name)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Validates names and sources of all views and rules.
    pub fn check(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for v in &self.views {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::NameClash(v.name.clone()));
            }
            v.check()?;
            for ids in v.events.values() {
                for id in ids {
                    if self.rule(id).is_none() {
                        return Err(Error::View {
                            view: v.name.clone(),
                            message: format!("unknown rule `{id}`"),
                        });
                    }
                }
            }
        }
        let mut rules = std::collections::BTreeSet::new();
        for r in &self.rules {
            if !rules.insert(r.id.as_str()) {
                return Err(Error::NameClash(r.id.clone()));
            }
            r.check()?;
        }
        let mut checks = std::collections::BTreeSet::new();
        for r in &self.validation_rules {
            if !checks.insert(r.id.as_str()) {
                return Err(Error::NameClash(r.id.clone()));
            }
            r.check()?;
        }
        Ok(())
    }

    /// Applies `f` to every expression source in views and rules.
    pub fn map_sources(&mut self, f: &mut dyn FnMut(&str) -> String) {
        for v in &mut self.views {
            v.map_sources(f);
        }
        for r in &mut self.rules {
            r.condition = f(&r.condition);
            r.action = f(&r.action);
        }
        for r in &mut self.validation_rules {
            r.applies_to = f(&r.applies_to);
            r.check = f(&r.check);
        }
    }
}

/// First view, in declaration order, whose predicate holds for `element`;
/// `None` selects the built-in minimal rendering.
pub fn resolve_view<'v>(store: &Store, element: ElementId, viewpoint: &'v Viewpoint) -> Result<Option<&'v View>> {
    store.elements().resolve(element)?;
    let ctx = EvalContext::for_element(store, element);
    for v in &viewpoint.views {
        let p = Predicate::parse(&v.apply_to).map_err(|e| Error::View {
            view: v.name.clone(),
            message: e.to_string(),
        })?;
        let holds = p.holds(&ctx).map_err(|e| Error::View {
            view: v.name.clone(),
            message: e.to_string(),
        })?;
        if holds {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// The viewpoint used when none is named: the one flagged default, else the
/// first declared.
pub fn default_viewpoint(store: &Store) -> Option<&Viewpoint> {
    store
        .viewpoints()
        .find(|vp| vp.is_default)
        .or_else(|| store.viewpoints().next())
}

/// Viewpoints whose views select the model element of `model`. Their rules
/// and validation checks are the ones in force for the model's elements.
pub fn viewpoints_for(store: &Store, model: ElementId) -> Vec<&Viewpoint> {
    store
        .viewpoints()
        .filter(|vp| matches!(resolve_view(store, model, vp), Ok(Some(_))))
        .collect()
}

/// Parameters in scope for elements of `model` under `viewpoint`: those of
/// the view selected for the model element, evaluated on the model's node.
pub fn model_params(store: &Store, model: ElementId, viewpoint: &Viewpoint) -> Result<BTreeMap<String, crate::query::Value>> {
    let mut out = BTreeMap::new();
    if let Some(view) = resolve_view(store, model, viewpoint)? {
        let ctx = EvalContext::for_element(store, model);
        for (name, src) in &view.params {
            let expr = crate::query::parse(src).map_err(|e| Error::Parameter {
                name: name.clone(),
                message: e.to_string(),
            })?;
            let v = ctx.eval(&expr).map_err(|e| Error::Parameter {
                name: name.clone(),
                message: e.to_string(),
            })?;
            out.insert(name.clone(), v);
        }
    }
    Ok(out)
}

/// Evaluation context for `element` with the model parameters and the
/// element's own view parameters bound as locals, and `view` bound.
pub fn element_context<'s>(store: &'s Store, element: ElementId, viewpoint: &Viewpoint) -> Result<EvalContext<'s>> {
    let mut ctx = EvalContext::for_element(store, element);
    let model = store.elements().owning_model(element)?;
    ctx.locals = model_params(store, model, viewpoint)?;
    if let Some(view) = resolve_view(store, element, viewpoint)? {
        if element != model {
            for (name, src) in &view.params {
                let expr = crate::query::parse(src)?;
                let v = ctx.eval(&expr)?;
                ctx.locals.insert(name.clone(), v);
            }
        }
        ctx.view = crate::query::Value::View(std::sync::Arc::new(view.clone()));
    }
    Ok(ctx)
}
