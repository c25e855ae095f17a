//! Monte-Carlo benchmarking harness for the TedHR control stack: seeded
//! closed-loop runs, per-tick metrics, aggregation and file outputs.

pub mod config;
pub mod export;
pub mod metrics;
pub mod runner;

#[derive(thiserror::Error, Debug)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] tedhr_core::Error),
}
