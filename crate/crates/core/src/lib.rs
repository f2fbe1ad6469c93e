//! A sparse-signal working-memory agent.
//!
//! The agent reads words, keeps phrases in a short-term buffer structure,
//! memorizes them in a long-term store and learns, from rewarded exploration,
//! which mental action to take in each internal state.

pub mod config;
pub mod corpus;
pub mod error;
pub mod executive;
pub mod interface;
pub mod knn_oracle;
pub mod lexicon;
pub mod ltm;
pub mod rewarder;
pub mod session;
pub mod ssm;
pub mod state;
pub mod stm;

pub use config::Config;
pub use error::{Error, Result};
pub use session::{Reply, Session};
