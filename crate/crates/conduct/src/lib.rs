//! Live conduct of a weighted-entropy trial over HTTP.
//!
//! Investigators create a session from a [`wedesign::TrialConfig`], request
//! assignments one patient at a time, record outcomes, preview hypothetical
//! outcomes and finally ask for the recommendation. Sessions are
//! event-sourced: the append-only log is the record of the trial and
//! replaying it reproduces the session exactly.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

pub use api::{router, serve, AppState};
pub use error::{ErrorBody, ServiceError, ServiceResult};
pub use session::{Event, EventKind, Session, SessionView, Status};
pub use store::Store;
