//! The engine event loop.
//!
//! Frames and client commands reach the loop through queues and are applied
//! one at a time, so every snapshot and feedback message is consistent with
//! a single order of events.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Result;
use tactile_core::engine::ClientId;
use tactile_core::environment::Action;
use tactile_core::wire::{encode_error, encode_feedback, encode_snapshot};
use tactile_core::{Cell, Engine};
use tokio::sync::mpsc::{UnboundedReceiver, UnboundedSender};

use crate::queue::FrameQueue;

#[derive(Debug)]
pub enum Command {
    /// A client connected; `outbox` receives every message addressed to it.
    Register {
        client: ClientId,
        outbox: UnboundedSender<String>,
    },
    Unregister(ClientId),
    Touch {
        client: ClientId,
        cell: Cell,
    },
    LocationChanged,
    Shutdown,
}

pub struct HubOptions {
    /// Stop once the frame source is exhausted instead of serving on.
    pub exit_when_drained: bool,
    /// Receives every broadcast snapshot, one per line.
    pub log: Option<Box<dyn Write + Send>>,
    /// Stale-frame count maintained by a live source.
    pub stale_frames: Option<Arc<AtomicU64>>,
}

struct Hub {
    engine: Engine,
    clients: BTreeMap<ClientId, UnboundedSender<String>>,
    log: Option<Box<dyn Write + Send>>,
    last_snapshot: String,
    started: Instant,
}

impl Hub {
    fn broadcast(&mut self, text: String) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            log.write_all(text.as_bytes())?;
            log.write_all(b"\n")?;
        }
        self.clients.retain(|_, tx| tx.send(text.clone()).is_ok());
        self.last_snapshot = text;
        Ok(())
    }

    fn report(actions: &[Action]) {
        for a in actions {
            match a {
                Action::SwitchModel(env) => log::info!("environment recognized: {env}"),
                Action::RecognitionRestarted => log::info!("recognition restarted"),
            }
        }
    }

    fn command(&mut self, cmd: Command) -> Result<bool> {
        match cmd {
            Command::Register { client, outbox } => {
                let _ = outbox.send(self.last_snapshot.clone());
                self.clients.insert(client, outbox);
            }
            Command::Unregister(client) => {
                self.clients.remove(&client);
                self.engine.forget_client(client);
            }
            Command::Touch { client, cell } => {
                let ts = self.started.elapsed().as_millis() as u64;
                let reply = match self.engine.touch(client, cell, ts) {
                    Ok(cue) => encode_feedback(&cue),
                    Err(e) => encode_error(&e.to_string()),
                };
                if let Some(tx) = self.clients.get(&client) {
                    let _ = tx.send(reply);
                }
            }
            Command::LocationChanged => {
                let actions = self.engine.location_changed();
                Self::report(&actions);
                let text = encode_snapshot(&self.engine.snapshot());
                self.broadcast(text)?;
            }
            Command::Shutdown => return Ok(false),
        }
        Ok(true)
    }
}

/// Drives `engine` until shutdown (or until the frames run out, when
/// `exit_when_drained`) and hands it back.
pub async fn run_hub(
    engine: Engine,
    frames: Arc<FrameQueue>,
    mut commands: UnboundedReceiver<Command>,
    options: HubOptions,
) -> Result<Engine> {
    let last_snapshot = encode_snapshot(&engine.snapshot());
    let mut hub = Hub {
        engine,
        clients: BTreeMap::new(),
        log: options.log,
        last_snapshot,
        started: Instant::now(),
    };
    let (mut frames_open, mut commands_open) = (true, true);
    while frames_open || commands_open {
        tokio::select! {
            biased;
            cmd = commands.recv(), if commands_open => match cmd {
                Some(cmd) => {
                    if !hub.command(cmd)? {
                        break;
                    }
                }
                None => commands_open = false,
            },
            item = frames.pop(), if frames_open => match item {
                Some(item) => {
                    let counters = hub.engine.counters_mut();
                    counters.unknown_classes += item.unknown_dropped;
                    counters.queue_dropped = frames.dropped();
                    if let Some(stale) = &options.stale_frames {
                        counters.stale_frames = stale.load(Ordering::Relaxed);
                    }
                    let (snapshot, actions) = hub.engine.process_frame(item.frame);
                    Hub::report(&actions);
                    hub.broadcast(encode_snapshot(&snapshot))?;
                }
                None => {
                    frames_open = false;
                    if options.exit_when_drained {
                        break;
                    }
                }
            },
        }
    }
    if let Some(log) = hub.log.as_mut() {
        log.flush()?;
    }
    Ok(hub.engine)
}
