//! HTTP project API and the room socket.
//!
//! Routes:
//! - `POST /projects` with `{"name", "owner", "document"?, "settings"?}`
//! - `GET /projects`, `GET /projects/{id}`
//! - `PUT /projects/{id}` with the canonical document as body and the base
//!   revision in [`BASE_REVISION_HEADER`]
//! - `PUT /projects/{id}/settings` with a JSON object
//! - `GET /ws` upgrades to the room socket; the first frame must be `join`.
//!
//! Every route requires `Authorization: Bearer <token>`. Sockets may pass
//! `?token=` instead since browsers cannot set headers on them.

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, Request, State};
use axum::http::{HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;

use super::{AckPayload, Hub, JoinPayload, MessageKind, ResyncPayload, Submission, SubmitOutcome, WireMessage};
use crate::error::{Error, Result};

pub const AUTH_HEADER: &str = "authorization";
pub const BASE_REVISION_HEADER: &str = "x-base-revision";

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// Shared secret expected as the bearer token.
    pub token: String,
    /// Where project records are kept; `None` keeps them in memory.
    pub data_dir: Option<PathBuf>,
    pub host: IpAddr,
    pub port: u16,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            token: "modelbench".into(),
            data_dir: None,
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 7878,
        }
    }
}

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    token: Arc<str>,
}

struct ApiError(Error);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownProject(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

/// Builds the service router over `hub`.
pub fn router(hub: Arc<Hub>, token: &str) -> Router {
    let state = AppState {
        hub,
        token: Arc::from(token),
    };
    Router::new()
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{id}", get(get_project).put(save_project))
        .route("/projects/{id}/settings", put(save_settings))
        .route("/ws", get(socket))
        .route_layer(middleware::from_fn_with_state(state.clone(), authenticate))
        .with_state(state)
}

/// Binds and serves until the process ends.
pub async fn serve(config: ServerConfig, hub: Arc<Hub>) -> Result<()> {
    let addr = SocketAddr::new(config.host, config.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Io(format!("{addr}: {e}")))?;
    tracing::info!("listening on {}", listener.local_addr().map_err(|e| Error::Io(e.to_string()))?);
    axum::serve(listener, router(hub, &config.token))
        .await
        .map_err(|e| Error::Io(e.to_string()))
}

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

async fn authenticate(State(state): State<AppState>, Query(q): Query<TokenQuery>, req: Request, next: Next) -> Response {
    let header = req
        .headers()
        .get(AUTH_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    let ok = header.or(q.token.as_deref()) == Some(&*state.token);
    if !ok {
        return (StatusCode::UNAUTHORIZED, Json(json!({ "error": "missing or bad token" }))).into_response();
    }
    next.run(req).await
}

#[derive(Deserialize)]
struct CreateBody {
    name: String,
    owner: String,
    document: Option<String>,
    #[serde(default)]
    settings: BTreeMap<String, Value>,
}

async fn create_project(State(state): State<AppState>, Json(body): Json<CreateBody>) -> ApiResult<Response> {
    let mut repo = state.hub.repository();
    let mut rec = repo.create(&body.name, &body.owner, body.document)?;
    if !body.settings.is_empty() {
        repo.set_settings(&rec.project_id, body.settings.clone())?;
        rec.settings = body.settings;
    }
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

async fn list_projects(State(state): State<AppState>) -> Json<Value> {
    let repo = state.hub.repository();
    Json(serde_json::to_value(repo.list()).expect("records serialize"))
}

async fn get_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let repo = state.hub.repository();
    Ok(Json(serde_json::to_value(repo.get(&id)?).expect("records serialize")))
}

async fn save_project(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: String) -> ApiResult<Json<Value>> {
    let base = headers
        .get(BASE_REVISION_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .ok_or_else(|| Error::Invalid(format!("missing or malformed `{BASE_REVISION_HEADER}` header")))?;
    // Checked before taking the repository lock; rooms lock it while committing.
    if state.hub.is_live(&id) {
        return Err(Error::Conflict(format!("project `{id}` is open in a live room")).into());
    }
    let rec = state.hub.repository().save(&id, base, &body)?;
    Ok(Json(serde_json::to_value(rec).expect("records serialize")))
}

async fn save_settings(State(state): State<AppState>, Path(id): Path<String>, Json(settings): Json<BTreeMap<String, Value>>) -> ApiResult<StatusCode> {
    state.hub.repository().set_settings(&id, settings)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn socket(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| run_socket(state.hub, socket))
}

async fn send(socket: &mut WebSocket, msg: &WireMessage) -> bool {
    socket.send(Message::Text(msg.to_text().into())).await.is_ok()
}

async fn close(mut socket: WebSocket, code: u16, reason: String) {
    let _ = socket
        .send(Message::Close(Some(CloseFrame {
            code,
            reason: reason.into(),
        })))
        .await;
}

fn resync(hub: &Hub, room: &str, reason: String, op: Option<super::OpId>) -> Option<WireMessage> {
    let (snapshot, revision) = hub.snapshot(room).ok()?;
    let payload = ResyncPayload {
        snapshot,
        revision,
        reason,
        op_id: op,
    };
    Some(WireMessage::new(
        MessageKind::Resync,
        room,
        Some(revision),
        serde_json::to_value(payload).expect("resync serializes"),
    ))
}

async fn run_socket(hub: Arc<Hub>, mut socket: WebSocket) {
    let join = loop {
        match socket.recv().await {
            Some(Ok(Message::Text(t))) => break WireMessage::from_text(&t).and_then(|m| match m.kind {
                MessageKind::Join => m.payload_as::<JoinPayload>(),
                k => Err(Error::Invalid(format!("expected join, got {k:?}"))),
            }),
            Some(Ok(Message::Ping(_) | Message::Pong(_))) => continue,
            _ => return,
        }
    };
    let join = match join {
        Ok(j) => j,
        Err(e) => return close(socket, 4400, e.to_string()).await,
    };
    let session = join.session;
    let (joined, mut rx) = match hub.connect(&session, &join.project_id) {
        Ok(x) => x,
        Err(e @ Error::UnknownProject(_)) => return close(socket, 4404, e.to_string()).await,
        Err(e) => return close(socket, 4400, e.to_string()).await,
    };
    let room = joined.room.clone();
    tracing::debug!(%session, %room, "joined");
    if send(&mut socket, &joined.to_message()).await {
        loop {
            tokio::select! {
                frame = socket.recv() => {
                    let text = match frame {
                        Some(Ok(Message::Text(t))) => t,
                        Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                        Some(Ok(_)) => continue,
                    };
                    let msg = match WireMessage::from_text(&text) {
                        Ok(m) => m,
                        Err(e) => {
                            tracing::warn!(%session, "{e}");
                            continue;
                        }
                    };
                    match msg.kind {
                        MessageKind::Leave => break,
                        MessageKind::Op => {
                            let reply = match msg.payload_as::<Submission>() {
                                Ok(sub) => {
                                    let op = sub.op_id.clone();
                                    match hub.submit(&session, &room, sub) {
                                        Ok(SubmitOutcome::Accepted(_) | SubmitOutcome::Duplicate { .. }) => None,
                                        Ok(SubmitOutcome::Rejected(p)) => Some(WireMessage::new(
                                            MessageKind::Resync,
                                            &room,
                                            Some(p.revision),
                                            serde_json::to_value(p).expect("resync serializes"),
                                        )),
                                        Err(e) => resync(&hub, &room, e.to_string(), Some(op)),
                                    }
                                }
                                Err(e) => resync(&hub, &room, e.to_string(), None),
                            };
                            if let Some(reply) = reply {
                                if !send(&mut socket, &reply).await {
                                    break;
                                }
                            }
                        }
                        k => tracing::warn!(%session, "ignoring {k:?} frame"),
                    }
                }
                msg = rx.recv() => {
                    let msg = match msg {
                        Ok(m) => m,
                        Err(RecvError::Lagged(n)) => {
                            match resync(&hub, &room, format!("fell {n} messages behind"), None) {
                                Some(m) => m,
                                None => break,
                            }
                        }
                        Err(RecvError::Closed) => break,
                    };
                    if msg.kind == MessageKind::Ack {
                        // Acks go only to the submitting session.
                        match msg.payload_as::<AckPayload>() {
                            Ok(a) if a.op_id.session == session => {}
                            _ => continue,
                        }
                    }
                    if !send(&mut socket, &msg).await {
                        break;
                    }
                }
            }
        }
    }
    let _ = hub.leave(&session, &room);
    tracing::debug!(%session, %room, "left");
}
