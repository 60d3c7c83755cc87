//! HTTP/JSON service over the maplot engine.
//!
//! Every response body is JSON except the CSV, SVG and bundle exports.
//! Errors share one shape: `{"code": ..., "message": ..., "detail": ...}`.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;
pub mod wire;

pub use config::Config;
pub use error::{ApiError, ERROR_CODES};
pub use routes::router;
pub use state::AppState;
