//! Frame sources: a paced replay of a JSONL file and an HTTP polling client.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use tactile_core::ingestion::{parse_frame_record, replay_offsets, RecordParser};
use tactile_core::ClassVocabulary;
use tokio::time::{sleep_until, Instant};

use crate::queue::{FrameQueue, Ingested};

/// Parses a whole replay file up front so malformed input fails at startup.
pub fn load_replay(path: &Path, vocab: &ClassVocabulary) -> Result<Vec<Ingested>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut parser = RecordParser::new();
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let before = parser.unknown_dropped();
        if let Some(frame) = parser
            .parse_line(&line, vocab)
            .with_context(|| format!("reading {}", path.display()))?
        {
            out.push(Ingested {
                frame,
                unknown_dropped: parser.unknown_dropped() - before,
            });
        }
    }
    Ok(out)
}

/// Pushes `frames` at their recorded pace divided by `speed`, then closes
/// the queue.
pub async fn replay(frames: Vec<Ingested>, speed: f64, queue: Arc<FrameQueue>) {
    let stamps: Vec<u64> = frames.iter().map(|i| i.frame.ts_ms).collect();
    let start = Instant::now();
    for (item, offset) in frames.into_iter().zip(replay_offsets(&stamps, speed)) {
        sleep_until(start + offset).await;
        queue.push_wait(item).await;
    }
    queue.close();
}

/// Polls `GET <base>/frame` forever. A 204 means nothing new; frames whose
/// id does not exceed the last accepted one are counted in `stale` and
/// discarded.
pub async fn poll_live(
    base: String,
    vocab: Arc<ClassVocabulary>,
    interval: Duration,
    queue: Arc<FrameQueue>,
    stale: Arc<AtomicU64>,
) {
    let client = reqwest::Client::new();
    let url = format!("{}/frame", base.trim_end_matches('/'));
    let mut last_id: Option<u64> = None;
    let mut requests = 0usize;
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    loop {
        ticker.tick().await;
        requests += 1;
        let resp = match client.get(&url).send().await {
            Ok(r) => r,
            Err(e) => {
                log::warn!("polling {url}: {e}");
                continue;
            }
        };
        if resp.status() == reqwest::StatusCode::NO_CONTENT {
            continue;
        }
        if !resp.status().is_success() {
            log::warn!("polling {url}: HTTP {}", resp.status());
            continue;
        }
        let body = match resp.text().await {
            Ok(b) => b,
            Err(e) => {
                log::warn!("polling {url}: {e}");
                continue;
            }
        };
        match parse_frame_record(body.trim(), requests, &vocab) {
            Ok(parsed) => {
                if last_id.is_some_and(|last| parsed.frame.frame_id <= last) {
                    stale.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
                last_id = Some(parsed.frame.frame_id);
                queue.push_latest(Ingested {
                    frame: parsed.frame,
                    unknown_dropped: parsed.unknown_dropped as u64,
                });
            }
            Err(e) => log::warn!("bad frame from {url}: {e}"),
        }
    }
}
