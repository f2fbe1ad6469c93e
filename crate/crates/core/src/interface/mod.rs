//! Terminal, snapshot files and the local service.

pub mod console;
pub mod server;
pub mod snapshot;

pub use console::{repl, Console, Response};
pub use server::{router, serve, AppState};
pub use snapshot::{load_snapshot, save_snapshot};
