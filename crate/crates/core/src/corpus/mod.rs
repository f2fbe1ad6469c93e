//! Datasets, scripts, the virtual house and the evaluation harnesses.

pub mod data;
pub mod harness;
pub mod house;
pub mod script;

pub use data::{bundled_suite, Dataset};
pub use harness::{ablation, crossvalidate, k_sweep, w_max_sweep};
pub use script::{load_script, run_script, AnswerKey, EvalReport, Script};
