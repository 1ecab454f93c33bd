//! Running transactions against a contract, either as compiled bytecode or
//! through the reference interpreter, with outcomes in one comparable form.

use std::collections::BTreeMap;
use std::fmt;

use bemp_evm::interp::Log;
use bemp_evm::{FaultKind, GasSchedule, Interpreter, Outcome, Tx, Word, World};
use mlc::refint::{RefInterp, RefMode, RefOutcome};
use serde::Serialize;

use crate::contracts::{hex_lower, Compiled};

/// How a transaction is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Bytecode on the interpreter.
    Compiled,
    /// Reference interpreter over the typed program.
    Reference(RefMode),
}

/// Transaction outcome with revert tags decoded to exception names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    /// Return data in hex (empty for unit).
    Ok(String),
    Revert(String),
    OutOfGas,
    Fault(String),
    /// The caller could not pay the call value.
    Rejected,
    /// A specification obligation failed (reference engine only).
    Violation(String),
}

impl StepOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, StepOutcome::Ok(_))
    }

    pub fn revert_tag(&self) -> Option<&str> {
        match self {
            StepOutcome::Revert(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for StepOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepOutcome::Ok(d) if d.is_empty() => f.write_str("ok"),
            StepOutcome::Ok(d) => write!(f, "ok 0x{d}"),
            StepOutcome::Revert(t) => write!(f, "revert {t}"),
            StepOutcome::OutOfGas => f.write_str("out of gas"),
            StepOutcome::Fault(m) => write!(f, "fault: {m}"),
            StepOutcome::Rejected => f.write_str("rejected"),
            StepOutcome::Violation(m) => write!(f, "violation: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub outcome: StepOutcome,
    pub storage_delta: BTreeMap<Word, (Word, Word)>,
    pub logs: Vec<Log>,
    /// Metered gas; only the compiled engine reports it.
    pub gas_used: Option<u64>,
    pub declared_gas: u64,
}

/// Runs `tx` against `world`, committing on success.
pub fn execute(compiled: &Compiled, code_override: Option<&[u8]>, engine: Engine, world: &mut World, tx: &Tx) -> Execution {
    match engine {
        Engine::Compiled => {
            if let Some(code) = code_override {
                world.deploy(tx.to, code.to_vec());
            }
            let schedule = GasSchedule::default();
            let mut it = Interpreter::new(&schedule).with_annotations(compiled.artifacts.sized.annotation_map());
            let r = it.exec_tx(world, tx);
            let outcome = match &r.outcome {
                Outcome::Return(d) => StepOutcome::Ok(hex_lower(d)),
                Outcome::Revert { tag: Some(t), .. } => StepOutcome::Revert(compiled.tag_name(*t)),
                Outcome::Revert { data, .. } => StepOutcome::Revert(format!("0x{}", hex_lower(data))),
                Outcome::OutOfGas => StepOutcome::OutOfGas,
                Outcome::Fault(FaultKind::InsufficientBalance) => StepOutcome::Rejected,
                Outcome::Fault(k) => StepOutcome::Fault(k.to_string()),
            };
            Execution {
                outcome,
                storage_delta: r.storage_delta,
                logs: r.logs,
                gas_used: Some(r.gas_used),
                declared_gas: r.declared_gas,
            }
        }
        Engine::Reference(mode) => {
            let r = RefInterp::new(&compiled.program).mode(mode).options(compiled.options).exec_tx(world, tx);
            let outcome = match &r.outcome {
                RefOutcome::Return(_) => match r.outcome.to_evm() {
                    Some(Outcome::Return(d)) => StepOutcome::Ok(hex_lower(&d)),
                    _ => StepOutcome::Ok(String::new()),
                },
                RefOutcome::Revert(name) => StepOutcome::Revert(name.clone()),
                RefOutcome::Violation(v) => StepOutcome::Violation(v.to_string()),
                RefOutcome::Rejected => StepOutcome::Rejected,
            };
            Execution { outcome, storage_delta: r.storage_delta, logs: r.logs, gas_used: None, declared_gas: r.declared_gas }
        }
    }
}

/// Replaces every occurrence of `from`'s revert word in `code` with `to`'s,
/// yielding a build that disagrees with its source on that exception.
pub fn retag(code: &[u8], from: &str, to: &str) -> Vec<u8> {
    let (a, b) = (mlc::backend::layout::exception_word(from), mlc::backend::layout::exception_word(to));
    let (a, b) = (a.to_be_bytes::<32>(), b.to_be_bytes::<32>());
    let mut out = code.to_vec();
    let mut i = 0;
    while i + 32 <= out.len() {
        if out[i..i + 32] == a {
            out[i..i + 32].copy_from_slice(&b);
            i += 32;
        } else {
            i += 1;
        }
    }
    out
}
