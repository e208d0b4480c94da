//! Single-threaded pipeline: frame -> confidence gate -> recognizer step ->
//! environment filter -> grid -> snapshot, plus touch handling against the
//! current grid.
//!
//! The engine owns all mutable state; callers serialize events into it.

use std::collections::HashMap;

use crate::environment::EnvironmentProfile;
use crate::environment::{Action, EngineState, Event, Mode, Recognizer, RecognizerConfig};
use crate::error::Result;
use crate::feedback::DEFAULT_CYCLE_WINDOW_MS;
use crate::feedback::{CueManifest, FeedbackCue, FeedbackEngine, TouchEvent, TouchSession};
use crate::grid::{map_frame, GridSpec, GridState};
use crate::ingestion::{filter_valid, DEFAULT_CONF_THRESHOLD};
use crate::scene::{lit, Cell, ClassVocabulary, Frame, Scalar};
use crate::wire::{quantize, Counters, Snapshot, SnapshotItem, MODE_DETECTING, MODE_RECOGNIZING};

/// Identifies the source of a touch; each source cycles independently.
pub type ClientId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig<T> {
    pub conf_threshold: T,
    pub grid: GridSpec<T>,
    pub recognizer: RecognizerConfig<T>,
    pub cycle_window_ms: u64,
}

impl<T: Scalar> Default for EngineConfig<T> {
    fn default() -> Self {
        Self {
            conf_threshold: lit(DEFAULT_CONF_THRESHOLD),
            grid: GridSpec::default(),
            recognizer: RecognizerConfig::default(),
            cycle_window_ms: DEFAULT_CYCLE_WINDOW_MS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Engine<T> {
    vocab: ClassVocabulary,
    recognizer: Recognizer<T>,
    feedback: FeedbackEngine,
    conf_threshold: T,
    state: EngineState<T>,
    grid: GridState<T>,
    counters: Counters,
    sessions: HashMap<ClientId, TouchSession>,
}

impl<T: Scalar> Engine<T> {
    pub fn new(
        vocab: ClassVocabulary,
        profiles: Vec<EnvironmentProfile<T>>,
        manifest: &CueManifest,
        config: EngineConfig<T>,
    ) -> Result<Self> {
        let grid_spec = GridSpec::new(config.grid.rows, config.grid.cols, config.grid.tau)?;
        let c = config.conf_threshold;
        if !(c >= T::zero() && c <= T::one()) {
            return Err(crate::Error::Config(format!(
                "confidence threshold {c} outside [0, 1]"
            )));
        }
        let recognizer = Recognizer::new(profiles, config.recognizer)?;
        let feedback = FeedbackEngine::new(&vocab, manifest, config.cycle_window_ms)?;
        Ok(Self {
            vocab,
            recognizer,
            feedback,
            conf_threshold: config.conf_threshold,
            state: EngineState::default(),
            grid: GridState::empty(grid_spec, 0),
            counters: Counters::default(),
            sessions: HashMap::new(),
        })
    }

    pub fn vocabulary(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn mode(&self) -> &Mode {
        &self.state.mode
    }

    pub fn state(&self) -> &EngineState<T> {
        &self.state
    }

    pub fn grid(&self) -> &GridState<T> {
        &self.grid
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut Counters {
        &mut self.counters
    }

    /// Runs one frame through the pipeline and returns the resulting
    /// snapshot along with any recognizer actions.
    pub fn process_frame(&mut self, frame: Frame<T>) -> (Snapshot, Vec<Action>) {
        self.counters.frames += 1;
        let before = frame.detections.len();
        let mut gated = filter_valid(frame, self.conf_threshold);
        self.counters.gated_out += (before - gated.detections.len()) as u64;

        let state = std::mem::take(&mut self.state);
        let (state, actions) = self.recognizer.step(state, Event::NewFrame(gated.clone()));
        self.state = state;

        // while detecting, only the committed environment's classes are shown
        if let Mode::Detecting(env) = &self.state.mode {
            let before = gated.detections.len();
            gated
                .detections
                .retain(|d| self.vocab.environment_of(d.class_id) == Some(env.as_str()));
            self.counters.off_environment += (before - gated.detections.len()) as u64;
        }

        self.grid = map_frame(&gated, &self.grid.spec);
        for session in self.sessions.values_mut() {
            session.on_grid_update(&self.grid);
        }
        (self.snapshot(), actions)
    }

    pub fn location_changed(&mut self) -> Vec<Action> {
        let state = std::mem::take(&mut self.state);
        let (state, actions) = self.recognizer.step(state, Event::LocationChanged);
        self.state = state;
        actions
    }

    /// Resolves a touch from `client` against the current grid.
    pub fn touch(&mut self, client: ClientId, cell: Cell, ts_ms: u64) -> Result<FeedbackCue> {
        let session = self.sessions.entry(client).or_default();
        let (cue, next) =
            self.feedback
                .on_touch(TouchEvent { cell, ts_ms }, &self.grid, session)?;
        *session = next;
        Ok(cue)
    }

    pub fn forget_client(&mut self, client: ClientId) {
        self.sessions.remove(&client);
    }

    pub fn snapshot(&self) -> Snapshot {
        let to_f64 = |v: T| quantize(v.to_f64().unwrap_or(f64::NAN));
        let (mode, env) = match &self.state.mode {
            Mode::Recognizing => (MODE_RECOGNIZING, None),
            Mode::Detecting(env) => (MODE_DETECTING, Some(env.clone())),
        };
        let coverage = match mode {
            MODE_DETECTING => to_f64(self.state.coverage),
            _ => 0.0,
        };
        let cells = self
            .grid
            .cells
            .iter()
            .map(|c| {
                c.items
                    .iter()
                    .map(|item| SnapshotItem {
                        class: self.vocab.name(item.class_id).unwrap_or("?").to_owned(),
                        conf: to_f64(item.confidence),
                        overlap: to_f64(item.overlap),
                    })
                    .collect()
            })
            .collect();
        Snapshot {
            frame: self.grid.frame_id,
            mode: mode.to_owned(),
            env,
            coverage,
            rows: self.grid.spec.rows,
            cols: self.grid.spec.cols,
            cells,
            counters: self.counters,
        }
    }
}
