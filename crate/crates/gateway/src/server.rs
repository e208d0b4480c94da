//! WebSocket endpoint for grid clients at `/ws`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tactile_core::wire::{decode_client_message, encode_error, ClientMessage};
use tokio::net::TcpListener;
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};

use crate::hub::Command;

#[derive(Clone)]
struct Shared {
    commands: UnboundedSender<Command>,
    next_id: Arc<AtomicU64>,
}

pub fn router(commands: UnboundedSender<Command>) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(Shared {
        commands,
        next_id: Arc::new(AtomicU64::new(1)),
    })
}

pub async fn serve(
    listener: TcpListener,
    commands: UnboundedSender<Command>,
) -> std::io::Result<()> {
    axum::serve(listener, router(commands)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> Response {
    let client = shared.next_id.fetch_add(1, Ordering::Relaxed);
    ws.on_upgrade(move |socket| session(socket, client, shared.commands))
}

async fn session(socket: WebSocket, client: u64, commands: UnboundedSender<Command>) {
    let (outbox, mut inbox) = unbounded_channel::<String>();
    if commands
        .send(Command::Register {
            client,
            outbox: outbox.clone(),
        })
        .is_err()
    {
        return;
    }
    log::debug!("client {client} connected");
    let (mut sink, mut stream) = socket.split();
    loop {
        tokio::select! {
            out = inbox.recv() => match out {
                Some(text) => {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                None => break,
            },
            msg = stream.next() => match msg {
                Some(Ok(Message::Text(text))) => {
                    let cmd = match decode_client_message(text.as_str()) {
                        Ok(ClientMessage::Touch(cell)) => Command::Touch { client, cell },
                        Ok(ClientMessage::LocationChanged) => Command::LocationChanged,
                        Err(e) => {
                            let _ = outbox.send(encode_error(&e.to_string()));
                            continue;
                        }
                    };
                    if commands.send(cmd).is_err() {
                        break;
                    }
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
        }
    }
    let _ = commands.send(Command::Unregister(client));
    log::debug!("client {client} disconnected");
}
