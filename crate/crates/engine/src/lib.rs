//! Project store, command workflow and read-only HTTP API for the
//! precedent-citation engine.

pub mod api;
pub mod commands;
mod error;
pub mod server;
pub mod store;

pub use error::{EngineError, Result};
