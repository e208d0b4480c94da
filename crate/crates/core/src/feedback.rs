//! Touch handling: a pin touch produces the cue of an object mapped to that
//! cell. Repeated touches on the same cell within the cycle window step
//! through the cell's objects in grid order.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::GridState;
use crate::scene::{Cell, ClassVocabulary, Scalar};

pub const DEFAULT_CYCLE_WINDOW_MS: u64 = 2000;
/// Manifest key of the cue played for a cell with no objects.
pub const EMPTY_CELL_KEY: &str = "empty-cell";
const EMPTY_CELL_TEXT: &str = "empty";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CueEntry {
    pub text: String,
    #[serde(default)]
    pub audio: Option<String>,
}

/// Class name to cue text / audio asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueManifest {
    entries: BTreeMap<String, CueEntry>,
}

impl CueManifest {
    /// Every class speaks its own name; the empty cell says "empty".
    pub fn default_for(vocab: &ClassVocabulary) -> Self {
        let mut entries: BTreeMap<String, CueEntry> = vocab
            .names()
            .iter()
            .map(|name| {
                (
                    name.clone(),
                    CueEntry {
                        text: name.clone(),
                        audio: None,
                    },
                )
            })
            .collect();
        entries.insert(EMPTY_CELL_KEY.into(), empty_entry());
        Self { entries }
    }

    /// Parses a JSON manifest `{"laptop": {"text": "laptop", "audio": "..."}}`
    /// and checks it covers every vocabulary class. The empty-cell entry is
    /// optional and defaults to "empty".
    pub fn from_json(text: &str, vocab: &ClassVocabulary) -> Result<Self> {
        let mut entries: BTreeMap<String, CueEntry> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("cue manifest: {e}")))?;
        let missing: Vec<String> = vocab
            .names()
            .iter()
            .filter(|name| !entries.contains_key(*name))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::ManifestMissing(missing));
        }
        entries
            .entry(EMPTY_CELL_KEY.into())
            .or_insert_with(empty_entry);
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&CueEntry> {
        self.entries.get(key)
    }
}

fn empty_entry() -> CueEntry {
    CueEntry {
        text: EMPTY_CELL_TEXT.into(),
        audio: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackCue {
    /// Manifest key the cue was resolved from; stable for a given manifest.
    pub cue_id: String,
    pub text: String,
    pub audio: Option<String>,
    pub cell: Cell,
    /// 1-based; 0 for an empty cell.
    pub position_in_cell: usize,
    pub total_in_cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TouchEvent {
    pub cell: Cell,
    pub ts_ms: u64,
}

/// Per-user cycling cursor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TouchSession {
    pub last_cell: Option<Cell>,
    pub last_ts_ms: u64,
    pub cycle_index: usize,
    /// Class ids of the last touched cell, in order, when it was touched.
    contents: Vec<usize>,
}

impl TouchSession {
    pub fn new() -> Self {
        Self::default()
    }

    /// Called when a new grid is published. The cursor survives only if the
    /// last touched cell still lists the same objects in the same order.
    pub fn on_grid_update<T: Scalar>(&mut self, grid: &GridState<T>) {
        let Some(cell) = self.last_cell else { return };
        if cell_signature(grid, cell) != self.contents {
            *self = Self::default();
        }
    }
}

fn cell_signature<T: Scalar>(grid: &GridState<T>, cell: Cell) -> Vec<usize> {
    grid.cell(cell)
        .map(|c| c.items.iter().map(|i| i.class_id).collect())
        .unwrap_or_default()
}

/// Resolves touches against a grid using a validated manifest.
#[derive(Debug, Clone)]
pub struct FeedbackEngine {
    /// Cue entry per class id.
    cues: Vec<(String, CueEntry)>,
    empty: CueEntry,
    cycle_window_ms: u64,
}

impl FeedbackEngine {
    pub fn new(
        vocab: &ClassVocabulary,
        manifest: &CueManifest,
        cycle_window_ms: u64,
    ) -> Result<Self> {
        let mut missing = Vec::new();
        let mut cues = Vec::with_capacity(vocab.len());
        for name in vocab.names() {
            match manifest.get(name) {
                Some(entry) => cues.push((name.clone(), entry.clone())),
                None => missing.push(name.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::ManifestMissing(missing));
        }
        let empty = manifest
            .get(EMPTY_CELL_KEY)
            .cloned()
            .unwrap_or_else(empty_entry);
        Ok(Self {
            cues,
            empty,
            cycle_window_ms,
        })
    }

    pub fn cycle_window_ms(&self) -> u64 {
        self.cycle_window_ms
    }

    /// Cue id and entry for a class name.
    pub fn cue_for(&self, class: &str) -> Option<(&str, &CueEntry)> {
        if class == EMPTY_CELL_KEY {
            return Some((EMPTY_CELL_KEY, &self.empty));
        }
        self.cues
            .iter()
            .find(|(name, _)| name == class)
            .map(|(name, entry)| (name.as_str(), entry))
    }

    pub fn on_touch<T: Scalar>(
        &self,
        ev: TouchEvent,
        grid: &GridState<T>,
        session: &TouchSession,
    ) -> Result<(FeedbackCue, TouchSession)> {
        let contents = grid.cell(ev.cell).ok_or(Error::InvalidTouch {
            row: ev.cell.row,
            col: ev.cell.col,
            rows: grid.spec.rows,
            cols: grid.spec.cols,
        })?;
        let total = contents.items.len();
        let signature: Vec<usize> = contents.items.iter().map(|i| i.class_id).collect();

        let continuing = total > 0
            && session.last_cell == Some(ev.cell)
            && session.contents == signature
            && ev.ts_ms.saturating_sub(session.last_ts_ms) <= self.cycle_window_ms;
        let index = if continuing {
            (session.cycle_index + 1) % total
        } else {
            0
        };

        let next = TouchSession {
            last_cell: Some(ev.cell),
            last_ts_ms: ev.ts_ms,
            cycle_index: index,
            contents: signature,
        };

        let cue = match contents.items.get(index) {
            None => FeedbackCue {
                cue_id: EMPTY_CELL_KEY.into(),
                text: self.empty.text.clone(),
                audio: self.empty.audio.clone(),
                cell: ev.cell,
                position_in_cell: 0,
                total_in_cell: 0,
            },
            Some(item) => {
                let (id, entry) = &self.cues[item.class_id];
                FeedbackCue {
                    cue_id: id.clone(),
                    text: entry.text.clone(),
                    audio: entry.audio.clone(),
                    cell: ev.cell,
                    position_in_cell: index + 1,
                    total_in_cell: total,
                }
            }
        };
        Ok((cue, next))
    }
}
