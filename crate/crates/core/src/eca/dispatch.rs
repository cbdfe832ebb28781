use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::id::{ElementId, TxId};
use crate::meta::Element;
use crate::query::{Predicate, Script, Value};
use crate::store::{Layout, Op, Origin, Store, Transaction};
use crate::viewpoint::{element_context, viewpoints_for};

use super::action::{apply, run_script, Write};
use super::{EventRecord, Rule, Trigger};

pub const DEFAULT_DEPTH_CAP: u32 = 100;

#[derive(Clone, Debug)]
pub struct DispatchOptions {
    pub depth_cap: u32,
    /// Author recorded on rule transactions.
    pub author: String,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        DispatchOptions {
            depth_cap: DEFAULT_DEPTH_CAP,
            author: "rules".into(),
        }
    }
}

/// One fired rule: `depth trigger subject rule feature:old→new[,…]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceLine {
    pub depth: u32,
    pub trigger: Trigger,
    pub subject: String,
    pub rule: String,
    pub changes: Vec<String>,
    pub tx: TxId,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.depth,
            self.trigger,
            self.subject,
            self.rule,
            self.changes.join(",")
        )
    }
}

/// A rule whose condition or action failed; the cascade went on without it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleFailure {
    pub rule: String,
    pub subject: ElementId,
    pub depth: u32,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DispatchReport {
    /// Rule transactions in commit order.
    pub txs: Vec<TxId>,
    pub trace: Vec<TraceLine>,
    pub failures: Vec<RuleFailure>,
    /// Every event processed, in processing order.
    pub events: Vec<EventRecord>,
}

impl DispatchReport {
    pub fn merge(&mut self, other: DispatchReport) {
        self.txs.extend(other.txs);
        self.trace.extend(other.trace);
        self.failures.extend(other.failures);
        self.events.extend(other.events);
    }
}

/// Objects whose data a transaction changed, followed by the objects that
/// refer to them. Layout changes count; node state changes do not.
pub fn data_events(store: &Store, tx: &Transaction, depth: u32) -> Vec<EventRecord> {
    let t = store.elements();
    let mut changed = Vec::new();
    let mut push = |id: ElementId| {
        if !changed.contains(&id) {
            changed.push(id);
        }
    };
    for op in &tx.ops {
        match op {
            Op::Create { element } | Op::Delete { element } | Op::Update { after: element, .. } => match element {
                Element::Value(v) => push(v.owner),
                Element::Object(o) => push(o.id),
                _ => {}
            },
            Op::SetLayout { id, .. } => push(*id),
            Op::CreateNode { .. } | Op::DeleteNode { .. } | Op::SetState { .. } | Op::PutViewpoint { .. } => {}
        }
    }
    changed.retain(|id| matches!(t.get(*id), Some(Element::Object(_))));
    let mut subjects = changed.clone();
    for id in &changed {
        for r in t.referrers(*id) {
            if !subjects.contains(&r) {
                subjects.push(r);
            }
        }
    }
    subjects
        .into_iter()
        .map(|subject| EventRecord {
            trigger: Trigger::OnDataUpdate,
            subject,
            payload: None,
            depth,
        })
        .collect()
}

fn show_values(values: &[crate::meta::Scalar]) -> String {
    match values {
        [] => "null".into(),
        [one] => Value::from_scalar(one).to_string(),
        many => Value::List(many.iter().map(Value::from_scalar).collect()).to_string(),
    }
}

fn changes(store: &Store, tx: &Transaction) -> Vec<String> {
    let t = store.elements();
    let mut out = Vec::new();
    for op in &tx.ops {
        match op {
            Op::Update {
                before: Element::Value(b),
                after: Element::Value(a),
            } => {
                let name = t.feature(a.feature).map(|f| f.name().to_string()).unwrap_or_else(|_| a.feature.to_string());
                out.push(format!("{name}:{}→{}", show_values(&b.values), show_values(&a.values)));
            }
            Op::SetLayout { before, after, .. } => {
                let fields = [
                    ("x", before.x, after.x),
                    ("y", before.y, after.y),
                    ("width", before.width, after.width),
                    ("height", before.height, after.height),
                ];
                for (name, b, a) in fields {
                    if b != a {
                        out.push(format!("{name}:{}→{}", Value::Real(b), Value::Real(a)));
                    }
                }
            }
            Op::SetState { key, before, after, .. } => {
                let show = |v: &Option<crate::store::StateValue>| v.as_ref().map_or("null".into(), |v| v.to_string());
                out.push(format!("state.{key}:{}→{}", show(before), show(after)));
            }
            _ => {}
        }
    }
    out
}

fn subject_label(store: &Store, id: ElementId) -> String {
    match store.elements().class_name_of(id) {
        Ok(class) => format!("{class}{id}"),
        Err(_) => id.to_string(),
    }
}

struct Planned {
    rule: Rule,
    writes: Vec<Write>,
}

/// Rules of every viewpoint covering the subject's model that match the
/// event, with their writes planned against the current snapshot.
fn plan(store: &Store, ev: &EventRecord, fired: &mut BTreeSet<(ElementId, String, ElementId, u32)>, report: &mut DispatchReport) -> Vec<Planned> {
    let mut out = Vec::new();
    let Ok(model) = store.elements().owning_model(ev.subject) else { return out };
    for vp in viewpoints_for(store, model) {
        let candidates: Vec<&Rule> = vp.rules.iter().filter(|r| r.trigger == ev.trigger).collect();
        if candidates.is_empty() {
            continue;
        }
        let fail = |report: &mut DispatchReport, rule: &str, message: String| {
            report.failures.push(RuleFailure {
                rule: rule.to_string(),
                subject: ev.subject,
                depth: ev.depth,
                message,
            })
        };
        let mut ctx = match element_context(store, ev.subject, vp) {
            Ok(ctx) => ctx,
            Err(e) => {
                for r in candidates {
                    fail(report, &r.id, e.to_string());
                }
                continue;
            }
        };
        if let Some(p) = ev.payload {
            let record = [
                ("x", p.x),
                ("y", p.y),
                ("width", p.width),
                ("height", p.height),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::Real(v)))
            .collect::<BTreeMap<_, _>>();
            ctx.locals.insert("event".into(), Value::Record(record));
        }
        let view = match &ctx.view {
            Value::View(v) => Some(v.clone()),
            _ => None,
        };
        for rule in candidates {
            let bound_anywhere =
                rule.owning_view.is_some() || vp.views.iter().any(|v| v.events.values().flatten().any(|id| *id == rule.id));
            if bound_anywhere {
                let bound_here = view.as_ref().is_some_and(|v| {
                    rule.owning_view.as_deref() == Some(v.name.as_str())
                        || v.events.get(&rule.trigger).is_some_and(|ids| ids.contains(&rule.id))
                });
                if !bound_here {
                    continue;
                }
            }
            if !fired.insert((vp.id, rule.id.clone(), ev.subject, ev.depth)) {
                continue;
            }
            if !rule.condition.trim().is_empty() {
                let holds = Predicate::parse(&rule.condition).and_then(|p| p.holds(&ctx));
                match holds {
                    Ok(true) => {}
                    Ok(false) => continue,
                    Err(e) => {
                        fail(report, &rule.id, format!("condition: {e}"));
                        continue;
                    }
                }
            }
            match Script::parse(&rule.action).and_then(|s| run_script(&s, &ctx)) {
                Ok((writes, _)) if writes.is_empty() => {}
                Ok((writes, _)) => out.push(Planned {
                    rule: rule.clone(),
                    writes,
                }),
                Err(e) => fail(report, &rule.id, format!("action: {e}")),
            }
        }
    }
    out
}

/// Processes `initial` and every event it causes, breadth first. Each rule
/// whose action changes something commits one transaction; the objects it
/// changed raise `onDataUpdate` one level deeper. Stops with a divergence
/// error when events remain at the depth cap.
pub fn dispatch(store: &mut Store, initial: Vec<EventRecord>, opts: &DispatchOptions) -> Result<DispatchReport> {
    let mut report = DispatchReport::default();
    let mut queue: VecDeque<EventRecord> = VecDeque::new();
    let mut queued = BTreeSet::new();
    for ev in initial {
        store.elements().resolve(ev.subject)?;
        if queued.insert((ev.trigger, ev.subject, ev.depth)) {
            queue.push_back(ev);
        }
    }
    let mut fired = BTreeSet::new();
    while let Some(ev) = queue.pop_front() {
        if ev.depth >= opts.depth_cap {
            let mut elements: Vec<ElementId> = std::iter::once(ev.subject).chain(queue.iter().map(|e| e.subject)).collect();
            elements.sort();
            elements.dedup();
            return Err(Error::CascadeDivergence {
                depth: ev.depth,
                elements,
            });
        }
        report.events.push(ev.clone());
        if !store.elements().contains(ev.subject) {
            continue;
        }
        let planned = plan(store, &ev, &mut fired, &mut report);
        for p in planned {
            let committed = store.transact(&opts.author, Origin::Rule, |tx| apply(tx, &p.writes));
            match committed {
                Ok(c) => {
                    let Some(id) = c.tx else { continue };
                    let tx = store.transaction(id)?.clone();
                    report.trace.push(TraceLine {
                        depth: ev.depth,
                        trigger: ev.trigger,
                        subject: subject_label(store, ev.subject),
                        rule: p.rule.id.clone(),
                        changes: changes(store, &tx),
                        tx: id,
                    });
                    report.txs.push(id);
                    for next in data_events(store, &tx, ev.depth + 1) {
                        if queued.insert((next.trigger, next.subject, next.depth)) {
                            queue.push_back(next);
                        }
                    }
                }
                Err(e) => report.failures.push(RuleFailure {
                    rule: p.rule.id.clone(),
                    subject: ev.subject,
                    depth: ev.depth,
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(report)
}

/// Outcome of a simulated gesture.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GestureReport {
    /// User transactions moving or resizing the node, one per path point.
    pub moves: Vec<TxId>,
    /// Gesture triggers emitted, in order.
    pub protocol: Vec<Trigger>,
    pub cascade: DispatchReport,
}

fn gesture(
    store: &mut Store,
    element: ElementId,
    points: &[(f64, f64)],
    opts: &DispatchOptions,
    author: &str,
    triggers: [Trigger; 3],
    place: fn(Layout, (f64, f64)) -> Layout,
) -> Result<GestureReport> {
    let mut out = GestureReport::default();
    let emit = |store: &mut Store, out: &mut GestureReport, trigger: Trigger| -> Result<()> {
        let payload = store.node(element)?.layout();
        out.protocol.push(trigger);
        let ev = EventRecord {
            trigger,
            subject: element,
            payload: Some(payload),
            depth: 0,
        };
        out.cascade.merge(dispatch(store, vec![ev], opts)?);
        Ok(())
    };
    store.node(element)?;
    emit(store, &mut out, triggers[0])?;
    for p in points {
        let layout = place(store.node(element)?.layout(), *p);
        let c = store.transact(author, Origin::User, |tx| tx.set_layout(element, layout))?;
        out.moves.extend(c.tx);
        emit(store, &mut out, triggers[1])?;
    }
    emit(store, &mut out, triggers[2])?;
    if !points.is_empty() {
        let mut events = vec![EventRecord::new(Trigger::OnDataUpdate, element)];
        for r in store.elements().referrers(element) {
            events.push(EventRecord::new(Trigger::OnDataUpdate, r));
        }
        out.cascade.merge(dispatch(store, events, opts)?);
    }
    Ok(out)
}

/// Drags `element` through `path`: one start, one `whileDragging` per
/// point, one end, then a single data update once the node has settled.
pub fn simulate_drag(store: &mut Store, author: &str, element: ElementId, path: &[(f64, f64)], opts: &DispatchOptions) -> Result<GestureReport> {
    gesture(
        store,
        element,
        path,
        opts,
        author,
        [Trigger::OnDragStart, Trigger::WhileDragging, Trigger::OnDragEnd],
        |l, (x, y)| Layout { x, y, ..l },
    )
}

/// Resizes `element` through a list of (width, height) steps.
pub fn simulate_resize(store: &mut Store, author: &str, element: ElementId, sizes: &[(f64, f64)], opts: &DispatchOptions) -> Result<GestureReport> {
    gesture(
        store,
        element,
        sizes,
        opts,
        author,
        [Trigger::OnResizeStart, Trigger::WhileResizing, Trigger::OnResizeEnd],
        |l, (width, height)| Layout { width, height, ..l },
    )
}
