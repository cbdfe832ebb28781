use serde::{Deserialize, Serialize};

use crate::id::{ElementId, TxId};
use crate::meta::Element;
use crate::store::node::{Layout, NodeInfo, StateValue};
use crate::viewpoint::Viewpoint;

/// Primitive state transition. Every variant carries enough of the prior
/// state to be inverted and to detect that it no longer applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Op {
    Create {
        element: Element,
    },
    Delete {
        element: Element,
    },
    /// Covers value edits on `DValue`s and feature edits on metamodel
    /// constructs alike.
    Update {
        before: Element,
        after: Element,
    },
    CreateNode {
        node: NodeInfo,
    },
    DeleteNode {
        node: NodeInfo,
    },
    SetLayout {
        id: ElementId,
        before: Layout,
        after: Layout,
    },
    SetState {
        id: ElementId,
        key: String,
        before: Option<StateValue>,
        after: Option<StateValue>,
    },
    PutViewpoint {
        id: ElementId,
        before: Option<Box<Viewpoint>>,
        after: Option<Box<Viewpoint>>,
    },
}

impl Op {
    pub fn inverse(&self) -> Op {
        match self.clone() {
            Op::Create { element } => Op::Delete { element },
            Op::Delete { element } => Op::Create { element },
            Op::Update { before, after } => Op::Update {
                before: after,
                after: before,
            },
            Op::CreateNode { node } => Op::DeleteNode { node },
            Op::DeleteNode { node } => Op::CreateNode { node },
            Op::SetLayout { id, before, after } => Op::SetLayout {
                id,
                before: after,
                after: before,
            },
            Op::SetState { id, key, before, after } => Op::SetState {
                id,
                key,
                before: after,
                after: before,
            },
            Op::PutViewpoint { id, before, after } => Op::PutViewpoint {
                id,
                before: after,
                after: before,
            },
        }
    }

    /// Element (or node owner) this op touches.
    pub fn subject(&self) -> ElementId {
        match self {
            Op::Create { element } | Op::Delete { element } => element.id(),
            Op::Update { after, .. } => after.id(),
            Op::CreateNode { node } | Op::DeleteNode { node } => node.element,
            Op::SetLayout { id, .. } | Op::SetState { id, .. } | Op::PutViewpoint { id, .. } => *id,
        }
    }
}

/// Who caused a transaction. Only user gestures are undoable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Origin {
    User,
    Rule,
    Validation,
    Undo,
    Redo,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub author: String,
    pub origin: Origin,
    pub ops: Vec<Op>,
    /// Id counter after the transaction; replicas adopt it so ids allocated
    /// and discarded inside the transaction are never reissued.
    pub next_id: u64,
}

impl Transaction {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Ops that undo this transaction, in application order.
    pub fn inverse_ops(&self) -> Vec<Op> {
        self.ops.iter().rev().map(Op::inverse).collect()
    }
}
