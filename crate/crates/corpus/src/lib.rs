//! Energy-market contracts written in mlc, plus the tooling that runs them:
//! compiled forms, a storage view, the native order-book step and a scenario
//! harness that executes the market compiled, natively, or both in lockstep.

pub mod book;
pub mod contracts;
pub mod differential;
pub mod harness;
pub mod measure;
pub mod scenario;
pub mod view;

use std::sync::OnceLock;

use thiserror::Error;

pub use contracts::{Compiled, Contract};
pub use harness::{execute, Engine, Execution, StepOutcome};
pub use scenario::{run_scenario, RunMode, RunOptions, Scenario, ScenarioReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Compile(String, String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("malformed scenario: {0}")]
    Scenario(String),
    #[error("step {0}: trading failed: {1}")]
    Trading(usize, String),
    #[error("step {step} ({op}): expected {expected}, got {got}")]
    StepMismatch { step: usize, op: String, expected: String, got: String },
}

/// The market contract as deployed by scenarios, compiled once.
pub fn market() -> Result<&'static Compiled, CorpusError> {
    static MARKET: OnceLock<Result<Compiled, CorpusError>> = OnceLock::new();
    MARKET.get_or_init(|| Compiled::new(Contract::Market, mlc::backend::CodegenOptions::default())).as_ref().map_err(Clone::clone)
}
