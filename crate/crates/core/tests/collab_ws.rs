//! The HTTP API and room socket over real connections.

mod common;

use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use modelbench::collab::{router, Client, Hub, MessageKind, ProjectRecord, Repository, WireMessage, BASE_REVISION_HEADER};
use modelbench::fixtures;
use modelbench::meta::Scalar;
use modelbench::store::FeatureEdit;
use modelbench::Workbench;
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

const TOKEN: &str = "s3cret";

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start() -> (String, Arc<Hub>) {
    let hub = Arc::new(Hub::new(Repository::in_memory()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(hub.clone(), TOKEN);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("127.0.0.1:{}", addr.port()), hub)
}

fn http() -> reqwest::Client {
    reqwest::Client::new()
}

fn erd_doc() -> String {
    let mut wb = Workbench::default();
    fixtures::erd(&mut wb).unwrap();
    wb.store().to_canonical_string()
}

async fn create(addr: &str, doc: &str) -> ProjectRecord {
    let res = http()
        .post(format!("http://{addr}/projects"))
        .bearer_auth(TOKEN)
        .header("content-type", "application/json")
        .body(json!({"name": "erd", "owner": "ann", "document": doc}).to_string())
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 201);
    serde_json::from_str(&res.text().await.unwrap()).unwrap()
}

async fn connect(addr: &str) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws?token={TOKEN}")).await.unwrap();
    ws
}

async fn send(ws: &mut Socket, msg: &WireMessage) {
    ws.send(Message::Text(msg.to_text().into())).await.unwrap();
}

async fn next(ws: &mut Socket) -> WireMessage {
    loop {
        let frame = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("frame within 10 s")
            .expect("socket open")
            .unwrap();
        if let Message::Text(t) = frame {
            return WireMessage::from_text(&t).unwrap();
        }
    }
}

/// Reads frames into `client` until one of `kind` arrives.
async fn until(ws: &mut Socket, client: &mut Client, kind: MessageKind) -> WireMessage {
    loop {
        let m = next(ws).await;
        client.handle(&m).unwrap();
        if m.kind == kind {
            return m;
        }
    }
}

async fn join(addr: &str, project: &str, session: &str) -> (Socket, Client) {
    let mut ws = connect(addr).await;
    let mut client = Client::new(session);
    send(&mut ws, &client.join_message(project)).await;
    let joined = next(&mut ws).await;
    assert_eq!(joined.kind, MessageKind::Joined);
    client.handle(&joined).unwrap();
    (ws, client)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn project_api_round_trip() {
    let (addr, _) = start().await;
    let doc = erd_doc();
    let rec = create(&addr, &doc).await;
    assert_eq!(rec.document, doc);
    assert_eq!(rec.revision, 0);
    create(&addr, &doc).await;

    let c = http();
    let get = c
        .get(format!("http://{addr}/projects/{}", rec.project_id))
        .bearer_auth(TOKEN)
        .send()
        .await
        .unwrap();
    assert_eq!(get.status(), 200);
    let got: ProjectRecord = serde_json::from_str(&get.text().await.unwrap()).unwrap();
    assert_eq!(got, rec);

    let list: Vec<Value> = serde_json::from_str(
        &c.get(format!("http://{addr}/projects"))
            .bearer_auth(TOKEN)
            .send()
            .await
            .unwrap()
            .text()
            .await
            .unwrap(),
    )
    .unwrap();
    assert_eq!(list.len(), 2);

    let put = |base: &str| {
        c.put(format!("http://{addr}/projects/{}", rec.project_id))
            .bearer_auth(TOKEN)
            .header(BASE_REVISION_HEADER, base)
            .body(doc.clone())
            .send()
    };
    assert_eq!(put("0").await.unwrap().status(), 200);
    assert_eq!(put("0").await.unwrap().status(), 409);
    assert_eq!(put("1").await.unwrap().status(), 200);

    let missing = c.get(format!("http://{addr}/projects/p999")).bearer_auth(TOKEN).send().await.unwrap();
    assert_eq!(missing.status(), 404);
    let anon = c.get(format!("http://{addr}/projects")).send().await.unwrap();
    assert_eq!(anon.status(), 401);
    let wrong = c.get(format!("http://{addr}/projects")).bearer_auth("guess").send().await.unwrap();
    assert_eq!(wrong.status(), 401);

    let settings = c
        .put(format!("http://{addr}/projects/{}/settings", rec.project_id))
        .bearer_auth(TOKEN)
        .header("content-type", "application/json")
        .body(r#"{"grid": true}"#)
        .send()
        .await
        .unwrap();
    assert_eq!(settings.status(), 204);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn two_sockets_share_edits() {
    let (addr, hub) = start().await;
    let rec = create(&addr, &erd_doc()).await;
    let (mut wa, mut a) = join(&addr, &rec.project_id, "alice").await;
    let (mut wb, mut b) = join(&addr, &rec.project_id, "bob").await;
    assert_eq!(a.revision(), b.revision());
    assert_eq!(a.store().to_canonical_string(), b.store().to_canonical_string());

    // Alice clears the only primary key of User; the server's validation
    // marker arrives with the same batch.
    let user = modelbench::workbench::resolve_path(a.store(), "/Library/Entity:User").unwrap();
    let pk = match common::raw(a.store(), user, "ownedAttributes")[0] {
        Scalar::Ref(first) => first,
        ref other => panic!("{other:?}"),
    };
    assert_eq!(common::raw(a.store(), pk, "isPK"), vec![Scalar::Bool(true)]);
    let sub = a
        .propose(|tx| tx.mutate_feature(pk, "isPK", FeatureEdit::Set(vec![Scalar::Bool(false)])))
        .unwrap()
        .unwrap();
    send(&mut wa, &a.op_message(&sub)).await;
    until(&mut wa, &mut a, MessageKind::Ack).await;
    let op = until(&mut wb, &mut b, MessageKind::Op).await;
    assert_eq!(op.sequence, Some(1));
    assert_eq!(a.revision(), 1);
    assert_eq!(b.revision(), 1);
    assert_eq!(a.store().to_canonical_string(), b.store().to_canonical_string());
    let markers = modelbench::validation::stored_markers(b.store(), user);
    assert_eq!(markers.len(), 1, "{markers:?}");

    // Retransmission is acknowledged without a second batch.
    send(&mut wa, &a.op_message(&sub)).await;
    let ack = until(&mut wa, &mut a, MessageKind::Ack).await;
    assert_eq!(ack.sequence, Some(1));
    assert_eq!(hub.log("room-p1").unwrap().len(), 1);

    // While the room is live, whole-document saves are refused.
    let put = http()
        .put(format!("http://{addr}/projects/{}", rec.project_id))
        .bearer_auth(TOKEN)
        .header(BASE_REVISION_HEADER, "1")
        .body(a.store().to_canonical_string())
        .send()
        .await
        .unwrap();
    assert_eq!(put.status(), 409);

    // A stale edit of a deleted object gets a resync.
    let del = b.propose(|tx| tx.delete_element(pk)).unwrap().unwrap();
    let stale = a
        .propose(|tx| tx.mutate_feature(pk, "name", FeatureEdit::Set(vec![Scalar::Str("key".into())])))
        .unwrap()
        .unwrap();
    send(&mut wb, &b.op_message(&del)).await;
    until(&mut wb, &mut b, MessageKind::Ack).await;
    // Wait until the deletion is logged before sending the loser.
    until(&mut wa, &mut a, MessageKind::Op).await;
    send(&mut wa, &a.op_message(&stale)).await;
    let resync = until(&mut wa, &mut a, MessageKind::Resync).await;
    assert_eq!(resync.sequence, Some(2));
    assert_eq!(a.store().to_canonical_string(), b.store().to_canonical_string());

    send(&mut wa, &a.leave_message()).await;
    let presence = until(&mut wb, &mut b, MessageKind::Presence).await;
    assert_eq!(presence.payload["members"], json!(["bob"]));
    let stored = hub.repository().get(&rec.project_id).unwrap().clone();
    assert_eq!(stored.revision, 2);
    assert_eq!(stored.document, b.store().to_canonical_string());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn socket_rejects_bad_joins() {
    let (addr, _) = start().await;
    let mut ws = connect(&addr).await;
    let client = Client::new("x");
    send(&mut ws, &client.join_message("p404")).await;
    match tokio::time::timeout(Duration::from_secs(10), ws.next()).await.unwrap() {
        Some(Ok(Message::Close(Some(frame)))) => assert_eq!(u16::from(frame.code), 4404),
        other => panic!("{other:?}"),
    }

    let unauth = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await;
    assert!(unauth.is_err());
}
