//! Session-oriented HTTP service and command line for speechedit.

pub mod cli;
pub mod http;
pub mod session;

pub use session::{ApiError, SessionStore, Upload};
