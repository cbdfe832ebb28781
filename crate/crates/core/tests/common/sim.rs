//! A two-client collaboration simulation against an in-process hub.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use modelbench::collab::{Client, Hub, LogEntry, MessageKind, OpId, Repository, Submission, SubmitOutcome, WireMessage};
use modelbench::fixtures::{self, ExprLayout};
use modelbench::store::Store;
use modelbench::{ElementId, Workbench};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio::sync::broadcast::{self, error::TryRecvError};

use super::{random_edit, Edit};

pub fn expression_doc() -> (String, ElementId) {
    let mut wb = Workbench::default();
    let f = fixtures::expression(&mut wb, ExprLayout::Standard).unwrap();
    (wb.store().to_canonical_string(), f.model)
}

pub struct Peer {
    pub client: Client,
    pub rx: broadcast::Receiver<WireMessage>,
}

impl Peer {
    pub fn join(hub: &Hub, session: &str, project: &str) -> Peer {
        let (joined, rx) = hub.connect(session, project).unwrap();
        let mut client = Client::new(session);
        client.handle(&joined.to_message()).unwrap();
        Peer { client, rx }
    }

    /// Delivers up to `max` queued broadcasts.
    pub fn pump(&mut self, hub: &Hub, max: usize) {
        for _ in 0..max {
            match self.rx.try_recv() {
                Ok(m) => {
                    self.client.handle(&m).unwrap();
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Lagged(_)) => {
                    let (snap, rev) = hub.snapshot(&self.client.room).unwrap();
                    let room = self.client.room.clone();
                    self.client.reset(&room, &snap, rev).unwrap();
                }
                Err(TryRecvError::Closed) => panic!("room closed"),
            }
        }
    }

    pub fn drain(&mut self, hub: &Hub) {
        self.pump(hub, usize::MAX);
    }
}

#[derive(Debug, Default)]
pub struct SimReport {
    pub submitted: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub retransmitted: usize,
    pub log_len: usize,
    pub elapsed: Duration,
}

/// Two clients each submit `per_client` random edits against replicas that
/// lag the room by a random number of broadcasts. A tenth of the steps also
/// retransmit an earlier submission.
pub fn simulate(seed: u64, per_client: usize) -> SimReport {
    let start = Instant::now();
    let (doc, model) = expression_doc();
    let hub = Hub::new(Repository::in_memory());
    let pid = hub.repository().create("sim", "tester", Some(doc)).unwrap().project_id;
    let mut peers = [Peer::join(&hub, "a", &pid), Peer::join(&hub, "b", &pid)];
    let room = peers[0].client.room.clone();
    assert_eq!(peers[0].client.revision(), peers[1].client.revision());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SimReport::default();
    let mut counts = [0usize; 2];
    let mut sent: Vec<Submission> = Vec::new();
    let mut outcome_of: HashMap<OpId, Option<u64>> = HashMap::new();

    while counts.iter().any(|c| *c < per_client) {
        let i = if counts[0] >= per_client {
            1
        } else if counts[1] >= per_client {
            0
        } else {
            rng.gen_range(0..2)
        };
        let lag = rng.gen_range(0..6);
        peers[i].pump(&hub, lag);
        let peer = &mut peers[i];
        let edit: Edit = random_edit(&mut rng, peer.client.store(), model);
        let Ok(Some(sub)) = peer.client.propose(|tx| edit.apply(tx)) else { continue };
        counts[i] += 1;
        report.submitted += 1;
        let session = peer.client.session.clone();
        match hub.submit(&session, &room, sub.clone()).unwrap() {
            SubmitOutcome::Accepted(e) => {
                report.accepted += 1;
                outcome_of.insert(sub.op_id.clone(), Some(e.sequence));
            }
            SubmitOutcome::Rejected(p) => {
                report.rejected += 1;
                outcome_of.insert(sub.op_id.clone(), None);
                let msg = WireMessage::new(MessageKind::Resync, &room, Some(p.revision), serde_json::to_value(p).unwrap());
                peer.client.handle(&msg).unwrap();
            }
            SubmitOutcome::Duplicate { .. } => panic!("fresh op treated as duplicate"),
        }
        sent.push(sub);

        if rng.gen_bool(0.10) {
            let old = sent[rng.gen_range(0..sent.len())].clone();
            let owner = if old.op_id.session == "a" { 0 } else { 1 };
            report.retransmitted += 1;
            let before = hub.log(&room).unwrap().len();
            match (hub.submit(&old.op_id.session, &room, old.clone()).unwrap(), outcome_of[&old.op_id]) {
                (SubmitOutcome::Duplicate { sequence }, Some(original)) => assert_eq!(sequence, original),
                (SubmitOutcome::Rejected(p), None) => {
                    let msg = WireMessage::new(MessageKind::Resync, &room, Some(p.revision), serde_json::to_value(p).unwrap());
                    peers[owner].client.handle(&msg).unwrap();
                }
                (got, want) => panic!("retransmission of {:?}: {got:?}, first outcome {want:?}", old.op_id),
            }
            assert_eq!(hub.log(&room).unwrap().len(), before, "retransmission changed the log");
        }
    }
    for p in &mut peers {
        p.drain(&hub);
    }

    let (server_doc, server_rev) = hub.snapshot(&room).unwrap();
    for p in &peers {
        assert_eq!(p.client.revision(), server_rev);
        assert_eq!(p.client.store().to_canonical_string(), server_doc, "{} diverged", p.client.session);
        assert_eq!(p.client.pending().count(), 0);
    }

    let log: Vec<LogEntry> = hub.log(&room).unwrap();
    report.log_len = log.len();
    // Dense sequence numbers, each op at most once.
    let mut ops = BTreeMap::new();
    for (n, e) in log.iter().enumerate() {
        assert_eq!(e.sequence, n as u64 + 1);
        assert!(ops.insert(e.op_id.clone(), e.sequence).is_none(), "{:?} logged twice", e.op_id);
    }
    assert_eq!(log.len(), report.accepted);
    assert_eq!(server_rev, log.len() as u64);

    // The server history replays from scratch, and the log batches replay
    // onto the starting document.
    let server = Store::from_canonical_str(&server_doc).unwrap();
    assert_eq!(Store::replay(server.log()).unwrap().to_canonical_string(), server_doc);
    let (start_doc, _) = expression_doc();
    let mut replica = Store::from_canonical_str(&start_doc).unwrap();
    for e in &log {
        for tx in &e.txs {
            replica.apply_foreign(tx, true).unwrap();
        }
    }
    assert_eq!(replica.to_canonical_string(), server_doc);

    // The stored project advanced once per batch.
    let rec = hub.repository().get(&pid).unwrap().clone();
    assert_eq!(rec.revision, log.len() as u64);
    assert_eq!(rec.document, server_doc);

    report.elapsed = start.elapsed();
    report
}

