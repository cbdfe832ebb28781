//! Transactional project store holding the `data`, `node` and `view`
//! submodels.
//!
//! All mutation goes through [`Store::transact`]: the closure receives a
//! [`Tx`] that applies primitive [`Op`]s immediately (so later reads see
//! earlier writes) and records them. A failing closure rolls every applied
//! op back. Committed transactions are appended to the change log, which
//! replays to the identical canonical serialization.

mod coevolve;
mod edit;
pub mod node;
pub mod ops;
pub(crate) mod typing;

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::{ElementId, TxId};
use crate::meta::{Element, ElementTable};
use crate::viewpoint::Viewpoint;

pub use coevolve::MetaEdit;
pub use edit::{FeatureEdit, NewAttribute, NewReference};
pub use node::{Layout, NodeInfo, StateValue};
pub use ops::{Op, Origin, Transaction};
pub use typing::scalar_from_json;

pub const FORMAT_VERSION: u32 = 1;

/// Outcome of [`Store::transact`].
#[derive(Debug, Clone, PartialEq)]
pub struct Commit<T> {
    pub value: T,
    /// `None` when a rule or validation pass changed nothing.
    pub tx: Option<TxId>,
}

#[derive(Clone, Debug)]
pub struct Store {
    next_id: u64,
    next_tx: u64,
    elements: ElementTable,
    nodes: BTreeMap<ElementId, NodeInfo>,
    viewpoints: BTreeMap<ElementId, Viewpoint>,
    log: Vec<Transaction>,
    undo_stack: Vec<TxId>,
    redo_stack: Vec<TxId>,
}

impl Default for Store {
    fn default() -> Self {
        Store {
            next_id: 1,
            next_tx: 1,
            elements: ElementTable::new(),
            nodes: BTreeMap::new(),
            viewpoints: BTreeMap::new(),
            log: Vec::new(),
            undo_stack: Vec::new(),
            redo_stack: Vec::new(),
        }
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn elements(&self) -> &ElementTable {
        &self.elements
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeInfo> {
        self.nodes.values()
    }

    pub fn node(&self, id: ElementId) -> Result<&NodeInfo> {
        self.nodes.get(&id).ok_or(Error::NotFound(id))
    }

    pub fn has_node(&self, id: ElementId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn viewpoints(&self) -> impl Iterator<Item = &Viewpoint> {
        self.viewpoints.values()
    }

    pub fn viewpoint(&self, id: ElementId) -> Result<&Viewpoint> {
        self.viewpoints.get(&id).ok_or(Error::NotFound(id))
    }

    pub fn viewpoint_by_name(&self, name: &str) -> Option<&Viewpoint> {
        self.viewpoints.values().find(|vp| vp.name == name)
    }

    pub fn log(&self) -> &[Transaction] {
        &self.log
    }

    pub fn transaction(&self, id: TxId) -> Result<&Transaction> {
        self.log
            .binary_search_by_key(&id, |t| t.id)
            .map(|i| &self.log[i])
            .map_err(|_| Error::Invalid(format!("unknown transaction {id}")))
    }

    pub fn undo_depth(&self) -> usize {
        self.undo_stack.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo_stack.len()
    }

    /// Id of the next committed transaction.
    pub fn next_tx(&self) -> TxId {
        TxId(self.next_tx)
    }

    /// Deep equality of the three submodels, ignoring history.
    pub fn same_state(&self, other: &Store) -> bool {
        self.elements == other.elements && self.nodes == other.nodes && self.viewpoints == other.viewpoints
    }

    /// Runs `f` as one transaction.
    pub fn transact<T>(
        &mut self,
        author: &str,
        origin: Origin,
        f: impl FnOnce(&mut Tx<'_>) -> Result<T>,
    ) -> Result<Commit<T>> {
        let saved_next_id = self.next_id;
        let mut tx = Tx {
            store: self,
            ops: Vec::new(),
        };
        match f(&mut tx) {
            Ok(value) => {
                let ops = std::mem::take(&mut tx.ops);
                let tx = self.commit(author, origin, ops);
                Ok(Commit { value, tx })
            }
            Err(e) => {
                let ops = std::mem::take(&mut tx.ops);
                for op in ops.iter().rev() {
                    self.apply_checked(&op.inverse())
                        .expect("inverse of a just-applied op always applies");
                }
                self.next_id = saved_next_id;
                Err(e)
            }
        }
    }

    fn commit(&mut self, author: &str, origin: Origin, ops: Vec<Op>) -> Option<TxId> {
        if ops.is_empty() && matches!(origin, Origin::Rule | Origin::Validation) {
            return None;
        }
        let id = TxId(self.next_tx);
        self.next_tx += 1;
        self.log.push(Transaction {
            id,
            author: author.to_string(),
            origin,
            ops,
            next_id: self.next_id,
        });
        if origin == Origin::User {
            self.undo_stack.push(id);
            self.redo_stack.clear();
        }
        Some(id)
    }

    /// Reverts the most recent undoable transaction as a new transaction.
    pub fn undo(&mut self, author: &str) -> Result<TxId> {
        let target = *self.undo_stack.last().ok_or(Error::EmptyStack("undo"))?;
        let ops = self.transaction(target)?.inverse_ops();
        let commit = self.transact(author, Origin::Undo, |tx| {
            for op in &ops {
                tx.force(op)?;
            }
            Ok(())
        })?;
        self.undo_stack.pop();
        self.redo_stack.push(target);
        Ok(commit.tx.expect("undo always commits"))
    }

    /// Re-applies the most recently undone transaction.
    pub fn redo(&mut self, author: &str) -> Result<TxId> {
        let target = *self.redo_stack.last().ok_or(Error::EmptyStack("redo"))?;
        let ops = self.transaction(target)?.ops.clone();
        let commit = self.transact(author, Origin::Redo, |tx| {
            for op in &ops {
                tx.force(op)?;
            }
            Ok(())
        })?;
        let id = commit.tx.expect("redo always commits");
        self.redo_stack.pop();
        self.undo_stack.push(id);
        Ok(id)
    }

    /// Applies a transaction recorded elsewhere, checking that every op still
    /// applies. With `keep_id` the transaction keeps its id (log replay);
    /// otherwise it is renumbered as the next local transaction.
    pub fn apply_foreign(&mut self, tx: &Transaction, keep_id: bool) -> Result<TxId> {
        let saved_next_id = self.next_id;
        for (i, op) in tx.ops.iter().enumerate() {
            if let Err(e) = self.apply_checked(op) {
                for done in tx.ops[..i].iter().rev() {
                    self.apply_checked(&done.inverse())
                        .expect("inverse of a just-applied op always applies");
                }
                self.next_id = saved_next_id;
                return Err(e);
            }
        }
        let id = if keep_id {
            if tx.id.0 < self.next_tx {
                return Err(Error::Conflict(format!("{} is older than the log head", tx.id)));
            }
            tx.id
        } else {
            TxId(self.next_tx)
        };
        self.next_tx = id.0 + 1;
        self.next_id = self.next_id.max(tx.next_id);
        let mut logged = tx.clone();
        logged.id = id;
        self.log.push(logged);
        Ok(id)
    }

    /// Rebuilds a store by applying `log` to an empty store.
    pub fn replay(log: &[Transaction]) -> Result<Store> {
        let mut store = Store::new();
        for tx in log {
            store.apply_foreign(tx, true)?;
        }
        Ok(store)
    }

    fn apply_checked(&mut self, op: &Op) -> Result<()> {
        let mismatch = |what: &str, id: ElementId| Err(Error::Conflict(format!("{what} {id} has changed")));
        match op {
            Op::Create { element } => {
                let id = element.id();
                if self.elements.contains(id) {
                    return Err(Error::Conflict(format!("element {id} already exists")));
                }
                self.next_id = self.next_id.max(id.raw() + 1);
                self.elements.insert(element.clone());
            }
            Op::Delete { element } => {
                let id = element.id();
                match self.elements.get(id) {
                    Some(cur) if cur == element => {
                        self.elements.remove(id);
                    }
                    Some(_) => return mismatch("element", id),
                    None => return Err(Error::Conflict(format!("element {id} no longer exists"))),
                }
            }
            Op::Update { before, after } => {
                let id = before.id();
                match self.elements.get(id) {
                    Some(cur) if cur == before => {
                        self.elements.insert(after.clone());
                    }
                    Some(_) => return mismatch("element", id),
                    None => return Err(Error::Conflict(format!("element {id} no longer exists"))),
                }
            }
            Op::CreateNode { node } => {
                if self.nodes.contains_key(&node.element) {
                    return Err(Error::Conflict(format!("node {} already exists", node.element)));
                }
                self.nodes.insert(node.element, node.clone());
            }
            Op::DeleteNode { node } => match self.nodes.get(&node.element) {
                Some(cur) if cur == node => {
                    self.nodes.remove(&node.element);
                }
                Some(_) => return mismatch("node", node.element),
                None => return Err(Error::Conflict(format!("node {} no longer exists", node.element))),
            },
            Op::SetLayout { id, before, after } => match self.nodes.get_mut(id) {
                Some(n) if n.layout() == *before => n.set_layout(*after),
                Some(_) => return mismatch("layout of", *id),
                None => return Err(Error::Conflict(format!("node {id} no longer exists"))),
            },
            Op::SetState { id, key, before, after } => match self.nodes.get_mut(id) {
                Some(n) if n.state.get(key) == before.as_ref() => match after {
                    Some(v) => {
                        n.state.insert(key.clone(), v.clone());
                    }
                    None => {
                        n.state.remove(key);
                    }
                },
                Some(_) => return mismatch("state of", *id),
                None => return Err(Error::Conflict(format!("node {id} no longer exists"))),
            },
            Op::PutViewpoint { id, before, after } => {
                if self.viewpoints.get(id) != before.as_deref() {
                    return mismatch("viewpoint", *id);
                }
                match after {
                    Some(vp) => {
                        self.next_id = self.next_id.max(id.raw() + 1);
                        self.viewpoints.insert(*id, (**vp).clone());
                    }
                    None => {
                        self.viewpoints.remove(id);
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical text serialization: UTF-8 JSON with stable key order.
    pub fn to_canonical_string(&self) -> String {
        let mut metamodels = Vec::new();
        let mut models = Vec::new();
        for e in self.elements.iter() {
            let in_metamodel = self
                .elements
                .owning_model(e.id())
                .and_then(|m| self.elements.model(m).map(|m| m.is_metamodel))
                .unwrap_or(false);
            if in_metamodel {
                metamodels.push(e.clone());
            } else {
                models.push(e.clone());
            }
        }
        let doc = ProjectDocument {
            format: FORMAT_VERSION,
            next_id: self.next_id,
            next_tx: self.next_tx,
            metamodels,
            models,
            nodes: self.nodes.values().cloned().collect(),
            viewpoints: self.viewpoints.values().cloned().collect(),
            log: self.log.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("project documents always serialize")
    }

    pub fn from_canonical_str(text: &str) -> Result<Store> {
        let doc: ProjectDocument = serde_json::from_str(text)?;
        if doc.format != FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported format version {}", doc.format)));
        }
        let mut store = Store {
            next_id: doc.next_id,
            next_tx: doc.next_tx,
            ..Store::default()
        };
        for e in doc.metamodels.into_iter().chain(doc.models) {
            if store.elements.insert(e).is_some() {
                return Err(Error::Serialization("duplicate element id".into()));
            }
        }
        for n in doc.nodes {
            store.nodes.insert(n.element, n);
        }
        for vp in doc.viewpoints {
            store.viewpoints.insert(vp.id, vp);
        }
        store.log = doc.log;
        Ok(store)
    }

    /// Digest of the canonical serialization; stable for a given build.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.to_canonical_string().hash(&mut h);
        h.finish()
    }
}

#[derive(Serialize, Deserialize)]
struct ProjectDocument {
    format: u32,
    next_id: u64,
    next_tx: u64,
    metamodels: Vec<Element>,
    models: Vec<Element>,
    nodes: Vec<NodeInfo>,
    viewpoints: Vec<Viewpoint>,
    log: Vec<Transaction>,
}

/// Open transaction handed to [`Store::transact`] closures.
pub struct Tx<'s> {
    store: &'s mut Store,
    ops: Vec<Op>,
}

impl Tx<'_> {
    pub fn store(&self) -> &Store {
        self.store
    }

    pub fn elements(&self) -> &ElementTable {
        &self.store.elements
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// Reserves a fresh element id, e.g. for a viewpoint.
    pub fn alloc_id(&mut self) -> ElementId {
        let id = ElementId::from_raw(self.store.next_id);
        self.store.next_id += 1;
        id
    }

    fn push(&mut self, op: Op) -> Result<()> {
        self.store.apply_checked(&op)?;
        self.ops.push(op);
        Ok(())
    }

    pub(crate) fn create(&mut self, element: Element) -> Result<()> {
        self.push(Op::Create { element })
    }

    pub(crate) fn delete(&mut self, id: ElementId) -> Result<Element> {
        let element = self.store.elements.resolve(id)?.clone();
        self.push(Op::Delete {
            element: element.clone(),
        })?;
        Ok(element)
    }

    /// Replaces an element by its updated version; no-op when unchanged.
    pub(crate) fn replace(&mut self, after: Element) -> Result<()> {
        let before = self.store.elements.resolve(after.id())?.clone();
        if before == after {
            return Ok(());
        }
        self.push(Op::Update { before, after })
    }

    pub(crate) fn modify(&mut self, id: ElementId, f: impl FnOnce(&mut Element) -> Result<()>) -> Result<()> {
        let mut e = self.store.elements.resolve(id)?.clone();
        f(&mut e)?;
        self.replace(e)
    }

    pub(crate) fn create_node(&mut self, element: ElementId, layout: Layout) -> Result<()> {
        self.push(Op::CreateNode {
            node: NodeInfo::new(element, layout),
        })
    }

    pub(crate) fn delete_node(&mut self, element: ElementId) -> Result<()> {
        if let Some(node) = self.store.nodes.get(&element).cloned() {
            self.push(Op::DeleteNode { node })?;
        }
        Ok(())
    }

    /// Moves or resizes a node.
    pub fn set_layout(&mut self, id: ElementId, layout: Layout) -> Result<()> {
        if layout.width < 0.0 || layout.height < 0.0 {
            return Err(Error::Layout(format!(
                "negative extent {}x{} for {id}",
                layout.width, layout.height
            )));
        }
        if !(layout.x.is_finite() && layout.y.is_finite() && layout.width.is_finite() && layout.height.is_finite()) {
            return Err(Error::Layout(format!("non-finite layout for {id}")));
        }
        let before = self.store.node(id)?.layout();
        if before == layout {
            return Ok(());
        }
        self.push(Op::SetLayout {
            id,
            before,
            after: layout,
        })
    }

    /// Sets (or with `None`, clears) one entry of a node's state map.
    pub fn set_state(&mut self, id: ElementId, key: &str, value: Option<StateValue>) -> Result<()> {
        if key.trim().is_empty() {
            return Err(Error::EmptyStateKey);
        }
        let before = self.store.node(id)?.state.get(key).cloned();
        if before == value {
            return Ok(());
        }
        self.push(Op::SetState {
            id,
            key: key.to_string(),
            before,
            after: value,
        })
    }

    /// Creates, replaces or (with `None`) removes a viewpoint.
    pub fn put_viewpoint(&mut self, id: ElementId, viewpoint: Option<Viewpoint>) -> Result<()> {
        let before = self.store.viewpoints.get(&id).cloned();
        if before == viewpoint {
            return Ok(());
        }
        self.push(Op::PutViewpoint {
            id,
            before: before.map(Box::new),
            after: viewpoint.map(Box::new),
        })
    }

    fn set_element(&mut self, id: ElementId, target: Option<&Element>) -> Result<()> {
        match (self.store.elements.get(id).is_some(), target) {
            (false, None) => Ok(()),
            (false, Some(e)) => self.create(e.clone()),
            (true, None) => self.delete(id).map(|_| ()),
            (true, Some(e)) => self.replace(e.clone()),
        }
    }

    fn set_node(&mut self, id: ElementId, target: Option<&NodeInfo>) -> Result<()> {
        let current = self.store.nodes.get(&id).cloned();
        if current.as_ref() == target {
            return Ok(());
        }
        if let Some(node) = current {
            self.push(Op::DeleteNode { node })?;
        }
        if let Some(node) = target {
            self.push(Op::CreateNode { node: node.clone() })?;
        }
        Ok(())
    }

    /// Drives the store to the post-state of `op` regardless of the current
    /// state, recording whatever ops that takes. Used by undo and redo.
    pub(crate) fn force(&mut self, op: &Op) -> Result<()> {
        match op {
            Op::Create { element } => self.set_element(element.id(), Some(element)),
            Op::Delete { element } => self.set_element(element.id(), None),
            Op::Update { after, .. } => self.set_element(after.id(), Some(after)),
            Op::CreateNode { node } => self.set_node(node.element, Some(node)),
            Op::DeleteNode { node } => self.set_node(node.element, None),
            Op::SetLayout { id, after, .. } => {
                if self.store.has_node(*id) {
                    self.set_layout(*id, *after)?;
                }
                Ok(())
            }
            Op::SetState { id, key, after, .. } => {
                if self.store.has_node(*id) {
                    self.set_state(*id, key, after.clone())?;
                }
                Ok(())
            }
            Op::PutViewpoint { id, after, .. } => self.put_viewpoint(*id, after.as_deref().cloned()),
        }
    }
}
