//! The kernel facade: user gestures go into the store as transactions, the
//! rules they trigger run to quiescence, then every instance model is
//! revalidated.

use std::collections::BTreeSet;

use crate::eca::{self, DispatchOptions, DispatchReport, EventRecord, GestureReport, Rule, TraceLine};
use crate::error::{Error, Result};
use crate::id::{ElementId, TxId};
use crate::meta::{AttrType, Element, Feature, PrimitiveKind, Scalar};
use crate::query::Value;
use crate::store::{FeatureEdit, MetaEdit, Origin, Store, Transaction, Tx};
use crate::validation::{self, Marker};
use crate::viewpoint::{self, Affordance, ControlSpec, RenderTree, Viewpoint};

/// Result of one gesture after its cascade and revalidation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome<T> {
    pub value: T,
    /// The gesture's own transaction; `None` when it changed nothing.
    pub tx: Option<TxId>,
    pub cascade: DispatchReport,
    pub validation: Vec<TxId>,
}

impl<T> Outcome<T> {
    /// Every transaction committed for the gesture, in order.
    pub fn all_txs(&self) -> Vec<TxId> {
        self.tx
            .iter()
            .chain(&self.cascade.txs)
            .chain(&self.validation)
            .copied()
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Workbench {
    store: Store,
    pub options: DispatchOptions,
    pub author: String,
    /// Whether gestures rerun validation.
    pub auto_validate: bool,
    trace: Vec<TraceLine>,
}

impl Default for Workbench {
    fn default() -> Self {
        Workbench::new(Store::new())
    }
}

impl Workbench {
    pub fn new(store: Store) -> Self {
        Workbench {
            store,
            options: DispatchOptions::default(),
            author: "local".into(),
            auto_validate: true,
            trace: Vec::new(),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn into_store(self) -> Store {
        self.store
    }

    /// Every rule firing since creation, in order.
    pub fn trace(&self) -> &[TraceLine] {
        &self.trace
    }

    fn settle(&mut self, events: Vec<EventRecord>) -> Result<(DispatchReport, Vec<TxId>)> {
        let cascade = if events.is_empty() {
            DispatchReport::default()
        } else {
            eca::dispatch(&mut self.store, events, &self.options)?
        };
        self.trace.extend(cascade.trace.iter().cloned());
        let validation = self.revalidate()?;
        Ok((cascade, validation))
    }

    fn revalidate(&mut self) -> Result<Vec<TxId>> {
        if !self.auto_validate {
            return Ok(Vec::new());
        }
        let models: Vec<ElementId> = self
            .store
            .elements()
            .models()
            .filter(|m| !m.is_metamodel)
            .map(|m| m.id)
            .collect();
        let mut out = Vec::new();
        for m in models {
            let (_, tx) = validation::validate_model(&mut self.store, &self.author, m)?;
            out.extend(tx);
        }
        Ok(out)
    }

    fn after_tx<T>(&mut self, value: T, tx: Option<TxId>) -> Result<Outcome<T>> {
        let events = match tx {
            Some(id) => {
                let t = self.store.transaction(id)?.clone();
                eca::data_events(&self.store, &t, 0)
            }
            None => Vec::new(),
        };
        let (cascade, validation) = self.settle(events)?;
        Ok(Outcome {
            value,
            tx,
            cascade,
            validation,
        })
    }

    /// Runs `f` as one user transaction, then the rules it triggers.
    pub fn edit<T>(&mut self, f: impl FnOnce(&mut Tx<'_>) -> Result<T>) -> Result<Outcome<T>> {
        let author = self.author.clone();
        let c = self.store.transact(&author, Origin::User, f)?;
        self.after_tx(c.value, c.tx)
    }

    pub fn set_feature(&mut self, object: ElementId, feature: &str, edit: FeatureEdit) -> Result<Outcome<()>> {
        self.edit(|tx| tx.mutate_feature(object, feature, edit))
    }

    pub fn delete_element(&mut self, id: ElementId) -> Result<Outcome<()>> {
        self.edit(|tx| tx.delete_element(id))
    }

    pub fn co_evolve(&mut self, edit: MetaEdit) -> Result<Outcome<()>> {
        self.edit(|tx| tx.co_evolve(edit))
    }

    pub fn undo(&mut self) -> Result<Outcome<()>> {
        let id = self.store.undo(&self.author)?;
        self.after_tx((), Some(id))
    }

    pub fn redo(&mut self) -> Result<Outcome<()>> {
        let id = self.store.redo(&self.author)?;
        self.after_tx((), Some(id))
    }

    /// Applies a transaction produced by another replica, then runs the
    /// rules it triggers here.
    pub fn apply_remote(&mut self, tx: &Transaction) -> Result<Outcome<()>> {
        let id = self.store.apply_foreign(tx, false)?;
        self.after_tx((), Some(id))
    }

    /// Applies a transaction already settled elsewhere, keeping its id and
    /// running no rules.
    pub fn replicate(&mut self, tx: &Transaction) -> Result<TxId> {
        self.store.apply_foreign(tx, true)
    }

    fn gesture(&mut self, report: GestureReport) -> Result<Outcome<GestureReport>> {
        self.trace.extend(report.cascade.trace.iter().cloned());
        let validation = self.revalidate()?;
        Ok(Outcome {
            tx: report.moves.last().copied(),
            cascade: report.cascade.clone(),
            value: report,
            validation,
        })
    }

    pub fn simulate_drag(&mut self, element: ElementId, path: &[(f64, f64)]) -> Result<Outcome<GestureReport>> {
        let author = self.author.clone();
        let r = eca::simulate_drag(&mut self.store, &author, element, path, &self.options)?;
        self.gesture(r)
    }

    pub fn simulate_resize(&mut self, element: ElementId, sizes: &[(f64, f64)]) -> Result<Outcome<GestureReport>> {
        let author = self.author.clone();
        let r = eca::simulate_resize(&mut self.store, &author, element, sizes, &self.options)?;
        self.gesture(r)
    }

    /// Raises `onDataUpdate` for the given objects and runs the cascade.
    pub fn touch(&mut self, objects: &[ElementId]) -> Result<Outcome<()>> {
        let events = objects
            .iter()
            .map(|id| EventRecord::new(eca::Trigger::OnDataUpdate, *id))
            .collect();
        let (cascade, validation) = self.settle(events)?;
        Ok(Outcome {
            value: (),
            tx: None,
            cascade,
            validation,
        })
    }

    /// Stores `viewpoint` under a fresh id, which is returned.
    pub fn add_viewpoint(&mut self, mut viewpoint: Viewpoint) -> Result<ElementId> {
        viewpoint.check()?;
        let o = self.edit(|tx| {
            let id = tx.alloc_id();
            viewpoint.id = id;
            tx.put_viewpoint(id, Some(viewpoint))?;
            Ok(id)
        })?;
        Ok(o.value)
    }

    pub fn register_rule(&mut self, viewpoint: ElementId, rule: Rule) -> Result<String> {
        let author = self.author.clone();
        eca::register_rule(&mut self.store, &author, viewpoint, rule)
    }

    pub fn register_validation_rule(&mut self, viewpoint: ElementId, rule: validation::ValidationRule) -> Result<Outcome<String>> {
        rule.check()?;
        let mut vp = self.store.viewpoint(viewpoint)?.clone();
        let id = rule.id.clone();
        match vp.validation_rules.iter_mut().find(|r| r.id == rule.id) {
            Some(slot) => *slot = rule,
            None => vp.validation_rules.push(rule),
        }
        vp.check()?;
        let author = self.author.clone();
        let c = self.store.transact(&author, Origin::User, |tx| tx.put_viewpoint(viewpoint, Some(vp)))?;
        let validation = self.revalidate()?;
        Ok(Outcome {
            value: id,
            tx: c.tx,
            cascade: DispatchReport::default(),
            validation,
        })
    }

    /// Installs the arithmetic rules for `model` and evaluates every object
    /// once.
    pub fn builtin_expression_semantics(&mut self, model: ElementId) -> Result<Outcome<Vec<String>>> {
        let author = self.author.clone();
        let ids = eca::builtin_expression_semantics(&mut self.store, &author, model)?;
        let objects = self.store.elements().model_objects(model);
        let o = self.touch(&objects)?;
        Ok(Outcome {
            value: ids,
            tx: None,
            cascade: o.cascade,
            validation: o.validation,
        })
    }

    pub fn validate(&mut self, model: ElementId) -> Result<(Vec<Marker>, Option<TxId>)> {
        let author = self.author.clone();
        validation::validate_model(&mut self.store, &author, model)
    }

    /// The viewpoint named `name`, or the first one covering `model`, or the
    /// default one.
    pub fn viewpoint_for(&self, model: ElementId, name: Option<&str>) -> Result<Option<&Viewpoint>> {
        match name {
            Some(n) => self
                .store
                .viewpoint_by_name(n)
                .map(Some)
                .ok_or_else(|| Error::Invalid(format!("no viewpoint named `{n}`"))),
            None => Ok(viewpoint::viewpoints_for(&self.store, model)
                .first()
                .copied()
                .or_else(|| viewpoint::default_viewpoint(&self.store))),
        }
    }

    pub fn render(&self, model: ElementId, viewpoint: Option<&str>) -> Result<RenderTree> {
        let vp = self.viewpoint_for(model, viewpoint)?;
        viewpoint::render(&self.store, model, vp)
    }

    /// Sets the Toggle or Slider parameter `name` declared by the view of
    /// `scope`.
    pub fn set_control_parameter(&mut self, scope: ElementId, name: &str, value: Value) -> Result<Outcome<()>> {
        let model = self.store.elements().owning_model(scope)?;
        let mut control = None;
        for vp in viewpoint::viewpoints_for(&self.store, model) {
            if let Some(view) = viewpoint::resolve_view(&self.store, scope, vp)? {
                control = view.template.find_control(name);
                if control.is_some() {
                    break;
                }
            }
        }
        let bad = |message: String| Error::Parameter {
            name: name.to_string(),
            message,
        };
        let state = match (control, &value) {
            (None, _) => return Err(bad(format!("no control declared for {scope}"))),
            (Some(ControlSpec::Toggle { .. }), Value::Bool(b)) => crate::store::StateValue::Bool(*b),
            (Some(ControlSpec::Toggle { .. }), v) => return Err(bad(format!("toggle needs a boolean, got {v}"))),
            (Some(ControlSpec::Slider { min, max, .. }), v) => match v {
                Value::Int(i) if (min..=max).contains(i) => crate::store::StateValue::Int(*i),
                Value::Real(r) if r.fract() == 0.0 && (min as f64..=max as f64).contains(r) => {
                    crate::store::StateValue::Int(*r as i64)
                }
                other => return Err(bad(format!("{other} is outside {min}..{max}"))),
            },
        };
        self.edit(|tx| tx.set_state(scope, name, Some(state)))
    }

    /// Writes `text` through the Input or Selector at `key` in `tree`.
    pub fn apply_projectional_edit(&mut self, tree: &RenderTree, key: &str, text: &str) -> Result<Outcome<()>> {
        let node = tree
            .find(key)
            .ok_or_else(|| Error::Invalid(format!("no render node `{key}`")))?;
        let (object, feature) = match &node.affordance {
            Some(Affordance::Input { object, feature, .. }) => (*object, feature.clone()),
            Some(Affordance::Selector {
                object, feature, options, ..
            }) => {
                if !options.iter().any(|o| o == text) {
                    return Err(Error::Type(format!("`{text}` is not one of {}", options.join(", "))));
                }
                (*object, feature.clone())
            }
            _ => return Err(Error::Invalid(format!("render node `{key}` is not editable"))),
        };
        let scalar = parse_literal(&self.store, object, &feature, text)?;
        self.set_feature(object, &feature, FeatureEdit::Set(vec![scalar]))
    }
}

/// Parses user text into a scalar for `feature` of `object`.
pub fn parse_literal(store: &Store, object: ElementId, feature: &str, text: &str) -> Result<Scalar> {
    let t = store.elements();
    let o = t.object(object)?;
    let f = t.feature_by_name(o.instance_of, feature)?.ok_or_else(|| Error::NoSuchChild {
        parent: object,
        name: feature.to_string(),
    })?;
    let bad = |what: &str| Error::Type(format!("`{text}` is not a valid {what} for `{feature}`"));
    Ok(match f {
        Feature::Attribute(a) => match a.ty {
            AttrType::Primitive(PrimitiveKind::Integer) => Scalar::Int(text.trim().parse().map_err(|_| bad("integer"))?),
            AttrType::Primitive(PrimitiveKind::Real) => {
                let r: f64 = text.trim().parse().map_err(|_| bad("real"))?;
                if !r.is_finite() {
                    return Err(bad("real"));
                }
                Scalar::Real(r)
            }
            AttrType::Primitive(PrimitiveKind::Boolean) => match text.trim() {
                "true" => Scalar::Bool(true),
                "false" => Scalar::Bool(false),
                _ => return Err(bad("boolean")),
            },
            AttrType::Primitive(PrimitiveKind::String) => Scalar::Str(text.to_string()),
            AttrType::Enum(e) => {
                let en = t.enumeration(e)?;
                if !en.literals.iter().any(|l| l == text) {
                    return Err(bad(&format!("literal of `{}`", en.name)));
                }
                Scalar::Literal(text.to_string())
            }
        },
        Feature::Reference(r) => {
            if let Ok(id) = text.parse::<ElementId>() {
                Scalar::Ref(id)
            } else {
                let hits: Vec<ElementId> = t
                    .class_all_instances(r.target, o.model)?
                    .into_iter()
                    .filter(|c| t.object_name(*c).as_deref() == Some(text))
                    .collect();
                match hits.as_slice() {
                    [one] => Scalar::Ref(*one),
                    [] => return Err(bad("reference target")),
                    _ => {
                        return Err(Error::Ambiguous {
                            parent: o.model,
                            name: text.to_string(),
                            candidates: hits,
                        })
                    }
                }
            }
        }
    })
}

/// Address of an element: `/model` for models, `/model/Class:name` for
/// named objects, `#id` otherwise.
pub fn element_path(store: &Store, id: ElementId) -> String {
    let t = store.elements();
    match t.get(id) {
        Some(Element::Model(m)) => format!("/{}", m.name),
        Some(Element::Object(o)) => match (t.object_name(id), t.model(o.model), t.class_name_of(id)) {
            (Some(name), Ok(m), Ok(class)) if resolve_path(store, &format!("/{}/{class}:{name}", m.name)) == Ok(id) => {
                format!("/{}/{class}:{name}", m.name)
            }
            _ => id.to_string(),
        },
        Some(Element::Class(c)) => match t.owning_model(id).and_then(|m| t.model(m)) {
            Ok(m) => format!("/{}/{}", m.name, c.name),
            Err(_) => id.to_string(),
        },
        _ => id.to_string(),
    }
}

/// Resolves `#id`, `/model`, `/model/Class:name` or `/metamodel/Class`.
pub fn resolve_path(store: &Store, path: &str) -> Result<ElementId> {
    let t = store.elements();
    let path = path.trim();
    if path.starts_with('#') {
        let id: ElementId = path.parse().map_err(Error::Invalid)?;
        t.resolve(id)?;
        return Ok(id);
    }
    let bad = || Error::Invalid(format!("malformed path `{path}`"));
    let rest = path.strip_prefix('/').ok_or_else(bad)?;
    let mut parts = rest.splitn(2, '/');
    let model_name = parts.next().filter(|s| !s.is_empty()).ok_or_else(bad)?;
    let model = t
        .model_by_name(model_name)
        .ok_or_else(|| Error::Invalid(format!("no model named `{model_name}`")))?;
    let Some(step) = parts.next() else { return Ok(model.id) };
    match step.split_once(':') {
        Some((class, name)) => {
            let hits: Vec<ElementId> = t
                .model_objects(model.id)
                .into_iter()
                .filter(|o| t.class_name_of(*o) == Ok(class) && t.object_name(*o).as_deref() == Some(name))
                .collect();
            match hits.as_slice() {
                [one] => Ok(*one),
                [] => Err(Error::NoSuchChild {
                    parent: model.id,
                    name: step.to_string(),
                }),
                _ => Err(Error::Ambiguous {
                    parent: model.id,
                    name: step.to_string(),
                    candidates: hits,
                }),
            }
        }
        None => t.named_child(model.id, step),
    }
}

/// Models touched by `ids`, for callers that revalidate selectively.
pub fn models_of(store: &Store, ids: &[ElementId]) -> BTreeSet<ElementId> {
    ids.iter().filter_map(|id| store.elements().owning_model(*id).ok()).collect()
}
