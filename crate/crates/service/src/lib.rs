//! Crowd-in-the-loop session service: microtask distribution, quorum-driven
//! optimization, goodness-field estimation and designer guidance over HTTP,
//! with every session persisted as a replayable event log.

pub mod api;
pub mod error;
pub mod events;
pub mod render;
pub mod session;
pub mod simulate;
pub mod store;

pub use api::{router, serve, AppState, CreateRequest};
pub use error::{Result, ServiceError};
pub use events::{read_events, write_event, Answer, Event, LogError, ModeConfig, SessionSpec};
pub use session::{Domain, EstimateConfig, MicroTask, Mode, Session, Status, Summary};
pub use store::Store;
