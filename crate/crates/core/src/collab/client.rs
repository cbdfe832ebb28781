use std::collections::BTreeMap;

use serde_json::json;

use super::{AckPayload, JoinPayload, JoinedPayload, LogEntry, MessageKind, OpId, ResyncPayload, Submission, WireMessage};
use crate::error::{Error, Result};
use crate::store::{Origin, Store, Tx};

/// A replica that applies only server-ordered log batches. Edits are built
/// against a scratch copy and submitted; they show up locally once the room
/// broadcasts them.
#[derive(Clone, Debug)]
pub struct Client {
    pub session: String,
    pub room: String,
    store: Store,
    revision: u64,
    counter: u64,
    /// Submitted and not yet acknowledged, by counter.
    pending: BTreeMap<u64, Submission>,
}

impl Client {
    pub fn new(session: &str) -> Self {
        Client {
            session: session.to_string(),
            room: String::new(),
            store: Store::new(),
            revision: 0,
            counter: 0,
            pending: BTreeMap::new(),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn pending(&self) -> impl Iterator<Item = &Submission> {
        self.pending.values()
    }

    pub fn join_message(&self, project: &str) -> WireMessage {
        WireMessage::new(
            MessageKind::Join,
            "",
            None,
            serde_json::to_value(JoinPayload {
                project_id: project.to_string(),
                session: self.session.clone(),
            })
            .expect("join serializes"),
        )
    }

    pub fn leave_message(&self) -> WireMessage {
        WireMessage::new(MessageKind::Leave, &self.room, None, json!({ "session": self.session }))
    }

    /// Replaces local state with a snapshot.
    pub fn reset(&mut self, room: &str, snapshot: &str, revision: u64) -> Result<()> {
        self.store = Store::from_canonical_str(snapshot)?;
        self.room = room.to_string();
        self.revision = revision;
        Ok(())
    }

    /// Builds a user transaction against the current replica without
    /// applying it. `None` when `f` changes nothing.
    pub fn propose<T>(&mut self, f: impl FnOnce(&mut Tx<'_>) -> Result<T>) -> Result<Option<Submission>> {
        let mut scratch = self.store.clone();
        let commit = scratch.transact(&self.session, Origin::User, f)?;
        let Some(id) = commit.tx else { return Ok(None) };
        let tx = scratch.transaction(id)?.clone();
        if tx.is_empty() {
            return Ok(None);
        }
        self.counter += 1;
        let sub = Submission {
            op_id: OpId {
                session: self.session.clone(),
                counter: self.counter,
            },
            base_revision: self.revision,
            tx,
        };
        self.pending.insert(self.counter, sub.clone());
        Ok(Some(sub))
    }

    pub fn op_message(&self, sub: &Submission) -> WireMessage {
        WireMessage::new(
            MessageKind::Op,
            &self.room,
            None,
            serde_json::to_value(sub).expect("submission serializes"),
        )
    }

    /// Applies one log batch. Batches must arrive in sequence order; ones
    /// already applied are ignored.
    pub fn apply_entry(&mut self, entry: &LogEntry) -> Result<()> {
        if entry.sequence <= self.revision {
            return Ok(());
        }
        if entry.sequence != self.revision + 1 {
            return Err(Error::Conflict(format!(
                "expected batch {}, got {}",
                self.revision + 1,
                entry.sequence
            )));
        }
        for tx in &entry.txs {
            self.store.apply_foreign(tx, true)?;
        }
        self.revision = entry.sequence;
        if entry.op_id.session == self.session {
            self.pending.remove(&entry.op_id.counter);
        }
        Ok(())
    }

    /// Handles a server frame; returns whether local state changed.
    pub fn handle(&mut self, msg: &WireMessage) -> Result<bool> {
        match msg.kind {
            MessageKind::Joined => {
                let p: JoinedPayload = msg.payload_as()?;
                self.reset(&msg.room, &p.snapshot, p.revision)?;
                Ok(true)
            }
            MessageKind::Op => {
                let entry: LogEntry = msg.payload_as()?;
                let before = self.revision;
                self.apply_entry(&entry)?;
                Ok(self.revision != before)
            }
            MessageKind::Ack => {
                let p: AckPayload = msg.payload_as()?;
                if p.op_id.session == self.session {
                    self.pending.remove(&p.op_id.counter);
                }
                Ok(false)
            }
            MessageKind::Resync => {
                let p: ResyncPayload = msg.payload_as()?;
                if let Some(op) = &p.op_id {
                    if op.session == self.session {
                        self.pending.remove(&op.counter);
                    }
                }
                if p.revision >= self.revision {
                    self.reset(&msg.room, &p.snapshot, p.revision)?;
                }
                Ok(true)
            }
            MessageKind::Presence | MessageKind::Join | MessageKind::Leave => Ok(false),
        }
    }
}
