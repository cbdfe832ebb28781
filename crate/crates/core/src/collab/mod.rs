//! Project repository and collaborative rooms.
//!
//! A room owns the authoritative copy of one project. Clients submit
//! transactions built against their replica; the room applies them in arrival
//! order, runs the resulting rule cascade and validation, and appends the
//! whole batch to its op log under the next sequence number. Replicas only
//! ever apply log batches, in order, so they converge on the room's state.

mod client;
mod server;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use tokio::sync::broadcast;

use crate::error::{Error, Result};
use crate::store::{Store, Transaction};
use crate::workbench::Workbench;

pub use client::Client;
pub use server::{router, serve, ServerConfig, AUTH_HEADER, BASE_REVISION_HEADER};

/// Client-chosen idempotency key of a submission.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpId {
    pub session: String,
    pub counter: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectRecord {
    pub project_id: String,
    pub name: String,
    pub owner: String,
    /// Canonical project document.
    pub document: String,
    pub revision: u64,
    /// Free-form user settings, stored as given.
    #[serde(default)]
    pub settings: BTreeMap<String, Json>,
}

/// Project records, optionally mirrored to one JSON file per project.
#[derive(Debug, Default)]
pub struct Repository {
    records: BTreeMap<String, ProjectRecord>,
    next: u64,
    dir: Option<PathBuf>,
}

impl Repository {
    pub fn in_memory() -> Self {
        Repository::default()
    }

    /// Opens `dir`, loading every stored record.
    pub fn open(dir: PathBuf) -> Result<Self> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut repo = Repository {
            dir: Some(dir.clone()),
            ..Repository::default()
        };
        let mut entries: Vec<_> = std::fs::read_dir(&dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let text = std::fs::read_to_string(&path).map_err(io)?;
            let rec: ProjectRecord = serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))?;
            if let Some(n) = rec.project_id.strip_prefix('p').and_then(|n| n.parse::<u64>().ok()) {
                repo.next = repo.next.max(n);
            }
            repo.records.insert(rec.project_id.clone(), rec);
        }
        Ok(repo)
    }

    fn persist(&self, rec: &ProjectRecord) -> Result<()> {
        if let Some(dir) = &self.dir {
            let text = serde_json::to_string_pretty(rec).map_err(|e| Error::Serialization(e.to_string()))?;
            std::fs::write(dir.join(format!("{}.json", rec.project_id)), text).map_err(|e| Error::Io(e.to_string()))?;
        }
        Ok(())
    }

    /// Creates a project; an absent document means an empty store.
    pub fn create(&mut self, name: &str, owner: &str, document: Option<String>) -> Result<ProjectRecord> {
        let document = match document {
            Some(d) => Store::from_canonical_str(&d)?.to_canonical_string(),
            None => Store::new().to_canonical_string(),
        };
        self.next += 1;
        let rec = ProjectRecord {
            project_id: format!("p{}", self.next),
            name: name.to_string(),
            owner: owner.to_string(),
            document,
            revision: 0,
            settings: BTreeMap::new(),
        };
        self.persist(&rec)?;
        self.records.insert(rec.project_id.clone(), rec.clone());
        Ok(rec)
    }

    pub fn get(&self, id: &str) -> Result<&ProjectRecord> {
        self.records
            .get(id)
            .ok_or_else(|| Error::UnknownProject(id.to_string()))
    }

    pub fn list(&self) -> Vec<&ProjectRecord> {
        self.records.values().collect()
    }

    /// Replaces the document when `base_revision` is current.
    pub fn save(&mut self, id: &str, base_revision: u64, document: &str) -> Result<ProjectRecord> {
        let canonical = Store::from_canonical_str(document)?.to_canonical_string();
        let rec = self
            .records
            .get_mut(id)
            .ok_or_else(|| Error::UnknownProject(id.to_string()))?;
        if rec.revision != base_revision {
            return Err(Error::Conflict(format!(
                "project `{id}` is at revision {}, not {base_revision}",
                rec.revision
            )));
        }
        rec.document = canonical;
        rec.revision += 1;
        let rec = rec.clone();
        self.persist(&rec)?;
        Ok(rec)
    }

    pub fn set_settings(&mut self, id: &str, settings: BTreeMap<String, Json>) -> Result<()> {
        let rec = self
            .records
            .get_mut(id)
            .ok_or_else(|| Error::UnknownProject(id.to_string()))?;
        rec.settings = settings;
        let rec = rec.clone();
        self.persist(&rec)
    }

    fn advance(&mut self, id: &str, document: String) -> Result<()> {
        let rec = self
            .records
            .get_mut(id)
            .ok_or_else(|| Error::UnknownProject(id.to_string()))?;
        rec.document = document;
        rec.revision += 1;
        let rec = rec.clone();
        self.persist(&rec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MessageKind {
    Join,
    Joined,
    Op,
    Ack,
    Resync,
    Presence,
    Leave,
}

/// One socket frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub kind: MessageKind,
    #[serde(default)]
    pub room: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<u64>,
    #[serde(default)]
    pub payload: Json,
}

impl WireMessage {
    pub fn new(kind: MessageKind, room: &str, sequence: Option<u64>, payload: Json) -> Self {
        WireMessage {
            kind,
            room: room.to_string(),
            sequence,
            payload,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(format!("bad frame: {e}")))
    }

    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_value(self.payload.clone()).map_err(|e| Error::Serialization(format!("bad {:?} payload: {e}", self.kind)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JoinPayload {
    pub project_id: String,
    pub session: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JoinedPayload {
    pub snapshot: String,
    pub revision: u64,
    pub members: Vec<String>,
}

/// Client to server: a transaction built on revision `base_revision`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Submission {
    pub op_id: OpId,
    pub base_revision: u64,
    pub tx: Transaction,
}

/// One committed log batch: the submitted transaction followed by the rule
/// and validation transactions it caused on the server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub sequence: u64,
    pub op_id: OpId,
    pub txs: Vec<Transaction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AckPayload {
    pub op_id: OpId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResyncPayload {
    pub snapshot: String,
    pub revision: u64,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_id: Option<OpId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresencePayload {
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joined {
    pub room: String,
    pub snapshot: String,
    pub revision: u64,
    pub members: Vec<String>,
}

impl Joined {
    pub fn to_message(&self) -> WireMessage {
        WireMessage::new(
            MessageKind::Joined,
            &self.room,
            Some(self.revision),
            serde_json::to_value(JoinedPayload {
                snapshot: self.snapshot.clone(),
                revision: self.revision,
                members: self.members.clone(),
            })
            .expect("joined serializes"),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubmitOutcome {
    Accepted(LogEntry),
    /// A retransmission; the original sequence is returned unchanged.
    Duplicate { sequence: u64 },
    Rejected(ResyncPayload),
}

struct Room {
    id: String,
    project: String,
    wb: Workbench,
    members: BTreeSet<String>,
    log: Vec<LogEntry>,
    seen: HashMap<OpId, u64>,
    /// Ops turned away; retransmissions get another resync, never a retry.
    rejected: BTreeSet<OpId>,
    tx: broadcast::Sender<WireMessage>,
}

impl Room {
    fn revision(&self) -> u64 {
        self.log.len() as u64
    }

    fn presence(&self) -> WireMessage {
        WireMessage::new(
            MessageKind::Presence,
            &self.id,
            Some(self.revision()),
            serde_json::to_value(PresencePayload {
                members: self.members.iter().cloned().collect(),
            })
            .expect("presence serializes"),
        )
    }
}

/// The collaboration service state: repository plus open rooms.
pub struct Hub {
    repo: Mutex<Repository>,
    rooms: Mutex<HashMap<String, Arc<Mutex<Room>>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

pub fn room_id(project: &str) -> String {
    format!("room-{project}")
}

impl Hub {
    pub fn new(repo: Repository) -> Self {
        Hub {
            repo: Mutex::new(repo),
            rooms: Mutex::new(HashMap::new()),
        }
    }

    pub fn repository(&self) -> MutexGuard<'_, Repository> {
        lock(&self.repo)
    }

    fn room(&self, id: &str) -> Result<Arc<Mutex<Room>>> {
        lock(&self.rooms)
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("unknown room `{id}`")))
    }

    fn open_room(&self, project: &str) -> Result<Arc<Mutex<Room>>> {
        let id = room_id(project);
        let mut rooms = lock(&self.rooms);
        if let Some(r) = rooms.get(&id) {
            return Ok(r.clone());
        }
        let doc = self.repository().get(project)?.document.clone();
        let mut wb = Workbench::new(Store::from_canonical_str(&doc)?);
        wb.author = "server".into();
        let (tx, _) = broadcast::channel(1024);
        let room = Arc::new(Mutex::new(Room {
            id: id.clone(),
            project: project.to_string(),
            wb,
            members: BTreeSet::new(),
            log: Vec::new(),
            seen: HashMap::new(),
            rejected: BTreeSet::new(),
            tx,
        }));
        rooms.insert(id, room.clone());
        Ok(room)
    }

    /// Adds `session` to the room of `project` and returns its snapshot.
    pub fn join(&self, session: &str, project: &str) -> Result<Joined> {
        self.connect(session, project).map(|(j, _)| j)
    }

    /// Like [`Hub::join`], also subscribing to the room's broadcasts. The
    /// receiver sees every batch after the snapshot and nothing before it.
    pub fn connect(&self, session: &str, project: &str) -> Result<(Joined, broadcast::Receiver<WireMessage>)> {
        let room = self.open_room(project)?;
        let mut r = lock(&room);
        let rx = r.tx.subscribe();
        r.members.insert(session.to_string());
        let _ = r.tx.send(r.presence());
        let joined = Joined {
            room: r.id.clone(),
            snapshot: r.wb.store().to_canonical_string(),
            revision: r.revision(),
            members: r.members.iter().cloned().collect(),
        };
        Ok((joined, rx))
    }

    pub fn leave(&self, session: &str, room: &str) -> Result<()> {
        let room = self.room(room)?;
        let mut r = lock(&room);
        r.members.remove(session);
        let _ = r.tx.send(r.presence());
        Ok(())
    }

    pub fn members(&self, room: &str) -> Result<Vec<String>> {
        Ok(lock(&*self.room(room)?).members.iter().cloned().collect())
    }

    pub fn subscribe(&self, room: &str) -> Result<broadcast::Receiver<WireMessage>> {
        Ok(lock(&*self.room(room)?).tx.subscribe())
    }

    /// The room's authoritative document and revision.
    pub fn snapshot(&self, room: &str) -> Result<(String, u64)> {
        let room = self.room(room)?;
        let r = lock(&room);
        Ok((r.wb.store().to_canonical_string(), r.revision()))
    }

    pub fn log(&self, room: &str) -> Result<Vec<LogEntry>> {
        Ok(lock(&*self.room(room)?).log.clone())
    }

    /// Log batches after `revision`.
    pub fn entries_since(&self, room: &str, revision: u64) -> Result<Vec<LogEntry>> {
        let room = self.room(room)?;
        let r = lock(&room);
        Ok(r.log.iter().skip(revision as usize).cloned().collect())
    }

    /// Applies a submission in arrival order. Ops that no longer apply are
    /// rejected with a resync directive; retransmissions are acknowledged
    /// with their original sequence and not applied again.
    pub fn submit(&self, session: &str, room: &str, sub: Submission) -> Result<SubmitOutcome> {
        let room = self.room(room)?;
        let mut r = lock(&room);
        if !r.members.contains(session) {
            return Err(Error::Invalid(format!("`{session}` has not joined `{}`", r.id)));
        }
        if sub.op_id.session != session {
            return Err(Error::Invalid(format!("op id belongs to `{}`", sub.op_id.session)));
        }
        if let Some(&sequence) = r.seen.get(&sub.op_id) {
            let _ = r.tx.send(ack(&r.id, sequence, &sub.op_id));
            return Ok(SubmitOutcome::Duplicate { sequence });
        }
        if r.rejected.contains(&sub.op_id) {
            return Ok(SubmitOutcome::Rejected(ResyncPayload {
                snapshot: r.wb.store().to_canonical_string(),
                revision: r.revision(),
                reason: "operation was already rejected".into(),
                op_id: Some(sub.op_id),
            }));
        }
        if sub.base_revision > r.revision() {
            return Err(Error::Invalid(format!(
                "base revision {} is ahead of the room ({})",
                sub.base_revision,
                r.revision()
            )));
        }
        let first = r.wb.store().next_tx();
        let mut tx = sub.tx.clone();
        tx.origin = crate::store::Origin::Remote;
        if let Err(e) = r.wb.apply_remote(&tx) {
            // A failing cascade leaves its committed prefix in the store, so
            // that prefix is still logged before the resync.
            if r.wb.store().next_tx() != first {
                self.commit(&mut r, sub.op_id.clone(), first)?;
            } else {
                r.rejected.insert(sub.op_id.clone());
            }
            return Ok(SubmitOutcome::Rejected(ResyncPayload {
                snapshot: r.wb.store().to_canonical_string(),
                revision: r.revision(),
                reason: e.to_string(),
                op_id: Some(sub.op_id),
            }));
        }
        let entry = self.commit(&mut r, sub.op_id, first)?;
        Ok(SubmitOutcome::Accepted(entry))
    }

    fn commit(&self, r: &mut Room, op_id: OpId, first: crate::id::TxId) -> Result<LogEntry> {
        let txs: Vec<Transaction> = r
            .wb
            .store()
            .log()
            .iter()
            .filter(|t| t.id >= first)
            .cloned()
            .collect();
        let entry = LogEntry {
            sequence: r.revision() + 1,
            op_id: op_id.clone(),
            txs,
        };
        r.log.push(entry.clone());
        r.seen.insert(op_id.clone(), entry.sequence);
        let doc = r.wb.store().to_canonical_string();
        self.repository().advance(&r.project, doc)?;
        let _ = r.tx.send(WireMessage::new(
            MessageKind::Op,
            &r.id,
            Some(entry.sequence),
            serde_json::to_value(&entry).map_err(|e| Error::Serialization(e.to_string()))?,
        ));
        let _ = r.tx.send(ack(&r.id, entry.sequence, &op_id));
        Ok(entry)
    }

    /// Whether a live room holds members for `project`.
    pub fn is_live(&self, project: &str) -> bool {
        lock(&self.rooms)
            .get(&room_id(project))
            .is_some_and(|r| !lock(r).members.is_empty())
    }
}

fn ack(room: &str, sequence: u64, op_id: &OpId) -> WireMessage {
    WireMessage::new(
        MessageKind::Ack,
        room,
        Some(sequence),
        serde_json::to_value(AckPayload { op_id: op_id.clone() }).expect("ack serializes"),
    )
}
