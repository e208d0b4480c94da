//! Canonical JSON wire messages exchanged with grid clients.
//!
//! Server to client:
//!
//! ```text
//! {"type":"snapshot","frame":12,"mode":"detecting","env":"office","coverage":0.571429,
//!  "rows":4,"cols":4,"cells":[[{"class":"laptop","conf":0.870000,"overlap":1.000000}],[],...],
//!  "counters":{...}}
//! {"type":"feedback","cue":{"id":"laptop","text":"laptop","pos":1,"total":2,"cell":[0,0]}}
//! {"type":"error","message":"..."}
//! ```
//!
//! Client to server: `{"type":"touch","cell":[r,c]}` and
//! `{"type":"location_changed"}`.
//!
//! Encoding is canonical: fixed key order and every float printed with six
//! decimals, so equal snapshots encode to identical bytes.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::feedback::FeedbackCue;
use crate::scene::Cell;

/// Rounds to the six decimals used on the wire.
pub fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SnapshotItem {
    pub class: String,
    pub conf: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
pub struct Counters {
    /// Frames processed by the engine.
    pub frames: u64,
    /// Detections below the confidence gate.
    pub gated_out: u64,
    /// Detections dropped for classes outside the vocabulary.
    pub unknown_classes: u64,
    /// Detections hidden because they belong to another environment.
    pub off_environment: u64,
    /// Live frames discarded as older than the last one seen.
    pub stale_frames: u64,
    /// Frames evicted from the ingestion queue.
    pub queue_dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Snapshot {
    pub frame: u64,
    pub mode: String,
    pub env: Option<String>,
    pub coverage: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols` cells, each ordered as on the device.
    pub cells: Vec<Vec<SnapshotItem>>,
    pub counters: Counters,
}

pub const MODE_RECOGNIZING: &str = "recognizing";
pub const MODE_DETECTING: &str = "detecting";

fn push_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

fn push_f64(out: &mut String, v: f64) {
    let v = quantize(v);
    // avoid "-0.000000"
    let v = if v == 0.0 { 0.0 } else { v };
    write!(out, "{v:.6}").unwrap();
}

pub fn encode_snapshot(s: &Snapshot) -> String {
    let mut out = String::with_capacity(256 + 64 * s.cells.len());
    write!(
        out,
        "{{\"type\":\"snapshot\",\"frame\":{},\"mode\":",
        s.frame
    )
    .unwrap();
    push_str(&mut out, &s.mode);
    out.push_str(",\"env\":");
    match &s.env {
        Some(env) => push_str(&mut out, env),
        None => out.push_str("null"),
    }
    out.push_str(",\"coverage\":");
    push_f64(&mut out, s.coverage);
    write!(out, ",\"rows\":{},\"cols\":{},\"cells\":[", s.rows, s.cols).unwrap();
    for (i, cell) in s.cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, item) in cell.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str("{\"class\":");
            push_str(&mut out, &item.class);
            out.push_str(",\"conf\":");
            push_f64(&mut out, item.conf);
            out.push_str(",\"overlap\":");
            push_f64(&mut out, item.overlap);
            out.push('}');
        }
        out.push(']');
    }
    let c = &s.counters;
    write!(
        out,
        "],\"counters\":{{\"frames\":{},\"gated_out\":{},\"unknown_classes\":{},\"off_environment\":{},\"stale_frames\":{},\"queue_dropped\":{}}}}}",
        c.frames, c.gated_out, c.unknown_classes, c.off_environment, c.stale_frames, c.queue_dropped
    )
    .unwrap();
    out
}

pub fn decode_snapshot(text: &str) -> Result<Snapshot> {
    #[derive(Deserialize)]
    struct Tagged {
        #[serde(rename = "type")]
        kind: String,
        #[serde(flatten)]
        snapshot: Snapshot,
    }
    let tagged: Tagged =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("snapshot: {e}")))?;
    if tagged.kind != "snapshot" {
        return Err(Error::Config(format!(
            "expected a snapshot message, got {:?}",
            tagged.kind
        )));
    }
    Ok(tagged.snapshot)
}

pub fn encode_feedback(cue: &FeedbackCue) -> String {
    let mut out = String::from("{\"type\":\"feedback\",\"cue\":{\"id\":");
    push_str(&mut out, &cue.cue_id);
    out.push_str(",\"text\":");
    push_str(&mut out, &cue.text);
    write!(
        out,
        ",\"pos\":{},\"total\":{},\"cell\":[{},{}]",
        cue.position_in_cell, cue.total_in_cell, cue.cell.row, cue.cell.col
    )
    .unwrap();
    if let Some(audio) = &cue.audio {
        out.push_str(",\"audio\":");
        push_str(&mut out, audio);
    }
    out.push_str("}}");
    out
}

pub fn encode_error(message: &str) -> String {
    let mut out = String::from("{\"type\":\"error\",\"message\":");
    push_str(&mut out, message);
    out.push('}');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientMessage {
    Touch(Cell),
    LocationChanged,
}

pub fn decode_client_message(text: &str) -> Result<ClientMessage> {
    #[derive(Deserialize)]
    #[serde(tag = "type", rename_all = "snake_case")]
    enum Raw {
        Touch { cell: [usize; 2] },
        LocationChanged,
    }
    let raw: Raw =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("client message: {e}")))?;
    Ok(match raw {
        Raw::Touch { cell: [row, col] } => ClientMessage::Touch(Cell::new(row, col)),
        Raw::LocationChanged => ClientMessage::LocationChanged,
    })
}
