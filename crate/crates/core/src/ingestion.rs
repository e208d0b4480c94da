//! Detection record parsing, the confidence gate and replay pacing.
//!
//! Records are JSON lines of the form
//!
//! ```text
//! {"frame":1,"ts_ms":0,"img_w":640,"img_h":426,
//!  "detections":[{"class":"laptop","conf":0.87,"bbox":[160,106.5,320,213]}]}
//! ```
//!
//! with `bbox` in pixels `[left, top, width, height]`. Ground-truth files use
//! the same schema and may omit `conf` (read as 1.0). Prediction files may
//! carry a `latency_ms` field that is passed through untouched.

use std::collections::VecDeque;
use std::io::BufRead;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scene::{lit, normalize_bbox, ClassVocabulary, Detection, Frame, Scalar};

/// Default confidence gate: a detection is kept only if its score is
/// strictly greater than this.
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.5;

#[derive(Debug, Deserialize)]
struct FrameRecord {
    frame: u64,
    ts_ms: u64,
    img_w: u32,
    img_h: u32,
    detections: Vec<DetectionRecord>,
    #[serde(default)]
    latency_ms: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DetectionRecord {
    class: String,
    #[serde(default)]
    conf: Option<f64>,
    bbox: [f64; 4],
}

/// Result of decoding one record: the frame and how many detections were
/// dropped because their class is not in the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedFrame<T> {
    pub frame: Frame<T>,
    pub unknown_dropped: usize,
}

/// Decodes a single JSONL record. `line_no` is 1-based and only used for
/// error messages. Frame ordering is not checked here; see [`RecordParser`].
pub fn parse_frame_record<T: Scalar>(
    line: &str,
    line_no: usize,
    vocab: &ClassVocabulary,
) -> Result<ParsedFrame<T>> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let record: FrameRecord = serde_json::from_value(value).map_err(|e| Error::Schema {
        line: line_no,
        message: e.to_string(),
    })?;
    let schema = |message: String| Error::Schema {
        line: line_no,
        message,
    };

    if record.img_w == 0 || record.img_h == 0 {
        return Err(schema(format!(
            "image dimensions must be positive, got {}x{}",
            record.img_w, record.img_h
        )));
    }
    let (img_w, img_h) = (lit::<T>(record.img_w as f64), lit::<T>(record.img_h as f64));

    let mut detections = Vec::with_capacity(record.detections.len());
    let mut unknown_dropped = 0;
    for (i, det) in record.detections.into_iter().enumerate() {
        let confidence = det.conf.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&confidence) {
            return Err(schema(format!(
                "detection {i}: confidence {confidence} outside [0, 1]"
            )));
        }
        let Some(class_id) = vocab.id_of(&det.class) else {
            unknown_dropped += 1;
            continue;
        };
        let bbox = normalize_bbox(det.bbox.map(lit::<T>), img_w, img_h)
            .map_err(|e| schema(format!("detection {i}: {e}")))?;
        detections.push(Detection {
            class_id,
            confidence: lit(confidence),
            bbox,
        });
    }

    Ok(ParsedFrame {
        frame: Frame {
            frame_id: record.frame,
            ts_ms: record.ts_ms,
            img_w: record.img_w,
            img_h: record.img_h,
            detections,
            latency_ms: record.latency_ms,
        },
        unknown_dropped,
    })
}

/// Stateful line-by-line decoder for a replay stream. Enforces strictly
/// increasing frame ids and counts dropped unknown-class detections.
#[derive(Debug, Default, Clone)]
pub struct RecordParser {
    line_no: usize,
    last_frame_id: Option<u64>,
    unknown_dropped: u64,
}

impl RecordParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the next line. Blank lines yield `Ok(None)`.
    pub fn parse_line<T: Scalar>(
        &mut self,
        line: &str,
        vocab: &ClassVocabulary,
    ) -> Result<Option<Frame<T>>> {
        self.line_no += 1;
        if line.trim().is_empty() {
            return Ok(None);
        }
        let parsed = parse_frame_record::<T>(line, self.line_no, vocab)?;
        let id = parsed.frame.frame_id;
        if let Some(previous) = self.last_frame_id {
            if id <= previous {
                return Err(Error::Ordering {
                    line: self.line_no,
                    previous,
                    got: id,
                });
            }
        }
        self.last_frame_id = Some(id);
        self.unknown_dropped += parsed.unknown_dropped as u64;
        Ok(Some(parsed.frame))
    }

    pub fn unknown_dropped(&self) -> u64 {
        self.unknown_dropped
    }

    pub fn lines_read(&self) -> usize {
        self.line_no
    }
}

/// Reads a whole JSONL stream. Returns the frames and the number of
/// detections dropped for unknown classes.
pub fn read_frames<T: Scalar, R: BufRead>(
    reader: R,
    vocab: &ClassVocabulary,
) -> Result<(Vec<Frame<T>>, u64)> {
    let mut parser = RecordParser::new();
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(frame) = parser.parse_line(&line, vocab)? {
            frames.push(frame);
        }
    }
    Ok((frames, parser.unknown_dropped()))
}

/// Keeps the detections whose confidence strictly exceeds `conf_threshold`,
/// in their original order.
pub fn filter_valid<T: Scalar>(mut frame: Frame<T>, conf_threshold: T) -> Frame<T> {
    frame.detections.retain(|d| d.confidence > conf_threshold);
    frame
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    ReplayFile,
    LiveEndpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSource {
    pub kind: SourceKind,
    pub locator: String,
    pub speed: f64,
}

impl StreamSource {
    pub fn replay(path: impl Into<String>, speed: f64) -> Result<Self> {
        Self {
            kind: SourceKind::ReplayFile,
            locator: path.into(),
            speed,
        }
        .validated()
    }

    pub fn live(url: impl Into<String>) -> Result<Self> {
        Self {
            kind: SourceKind::LiveEndpoint,
            locator: url.into(),
            speed: 1.0,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.locator.is_empty() {
            return Err(Error::Config("stream locator is empty".into()));
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(Error::Config(format!(
                "playback speed must be positive, got {}",
                self.speed
            )));
        }
        Ok(self)
    }
}

/// Offsets from the start of playback at which each frame is due, given the
/// recorded timestamps and a speed multiplier. Offsets never go backwards.
pub fn replay_offsets(timestamps_ms: &[u64], speed: f64) -> Vec<Duration> {
    let Some(&first) = timestamps_ms.first() else {
        return Vec::new();
    };
    let mut last = Duration::ZERO;
    timestamps_ms
        .iter()
        .map(|&ts| {
            let elapsed = ts.saturating_sub(first) as f64 / speed;
            last = last.max(Duration::from_secs_f64(elapsed / 1000.0));
            last
        })
        .collect()
}

/// Bounded FIFO that discards the oldest entry on overflow, so a slow
/// consumer always sees the most recent frames.
#[derive(Debug, Clone)]
pub struct DropOldestQueue<T> {
    items: VecDeque<T>,
    capacity: usize,
    dropped: u64,
}

impl<T> DropOldestQueue<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
            dropped: 0,
        }
    }

    /// Appends `item`; returns the evicted entry if the queue was full.
    pub fn push(&mut self, item: T) -> Option<T> {
        let evicted = if self.items.len() == self.capacity {
            self.dropped += 1;
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(item);
        evicted
    }

    pub fn pop(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}
