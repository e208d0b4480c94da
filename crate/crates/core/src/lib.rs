//! Turns object-detection streams into the state of a tactile pin grid.
//!
//! The pipeline mirrors the three cooperating stages of the device:
//!
//! 1. [`environment`] recognizes which environment (office, kitchen, ...) the
//!    camera is looking at, using kNN over per-class detection counts, and
//!    decides when recognition must be restarted.
//! 2. [`ingestion`] parses detection records and applies the confidence gate.
//! 3. [`grid`] quantizes the surviving boxes onto the pin grid and
//!    [`feedback`] answers touches on individual pins.
//!
//! [`evaluator`] implements the mAP@0.5 metric used to compare detectors, and
//! [`engine`] / [`wire`] tie the stages together into a single-threaded
//! state machine with a canonical wire encoding.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root pick `f64`, with `*32` variants for single precision.

pub mod engine;
pub mod environment;
pub mod error;
pub mod evaluator;
pub mod feedback;
pub mod grid;
pub mod ingestion;
pub mod scene;
pub mod wire;

pub use error::{Error, Result};
pub use scene::{Cell, ClassVocabulary, Scalar};

pub type BoundingBox = scene::BoundingBox<f64>;
pub type BoundingBox32 = scene::BoundingBox<f32>;
pub type Detection = scene::Detection<f64>;
pub type Detection32 = scene::Detection<f32>;
pub type Frame = scene::Frame<f64>;
pub type Frame32 = scene::Frame<f32>;

pub type FeatureHistogram = environment::FeatureHistogram<f64>;
pub type EnvironmentProfile = environment::EnvironmentProfile<f64>;
pub type Recognizer = environment::Recognizer<f64>;
pub type EngineState = environment::EngineState<f64>;

pub type GridSpec = grid::GridSpec<f64>;
pub type GridSpec32 = grid::GridSpec<f32>;
pub type GridState = grid::GridState<f64>;
pub type GridState32 = grid::GridState<f32>;

pub type Engine = engine::Engine<f64>;
pub type Engine32 = engine::Engine<f32>;
