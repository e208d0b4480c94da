//! Runtime around the tactile engine: frame sources, the single event loop
//! that owns the [`tactile_core::Engine`], the WebSocket endpoint for grid
//! clients, and the `eval` report.

pub mod assets;
pub mod hub;
pub mod queue;
pub mod report;
pub mod server;
pub mod source;
