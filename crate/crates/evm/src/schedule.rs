//! Gas prices, loaded from a `<MNEMONIC> <cost>` text table.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::opcode;

/// The table shipped with the toolchain.
pub const DEFAULT_SCHEDULE: &str = include_str!("../gas_schedule.txt");

/// Price of one newly touched 32-byte memory word.
pub const MEMORY_WORD_GAS: u64 = 3;
/// Gas handed to the callee of a value-carrying CALL.
pub const CALL_STIPEND: u64 = 2300;
pub const G_VERYLOW: u64 = 3;
pub const G_CREATE: u64 = 32000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("schedule line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("schedule has no entry for {0}")]
    Missing(&'static str),
    #[error("schedule lists {0} twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasSchedule {
    costs: [u64; 256],
    by_name: BTreeMap<String, u64>,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule::parse(DEFAULT_SCHEDULE).expect("shipped schedule is valid")
    }
}

impl GasSchedule {
    /// Parses a schedule. Every supported opcode must be priced.
    pub fn parse(text: &str) -> Result<Self, ScheduleError> {
        let mut by_name = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ScheduleError::Syntax { line: i + 1, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            let (Some(name), Some(cost), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `<MNEMONIC> <cost>`"));
            };
            if opcode::by_name(name).is_none() {
                return Err(err(&format!("unknown mnemonic {name}")));
            }
            let cost: u64 = cost.parse().map_err(|_| err("cost must be a non-negative integer"))?;
            if by_name.insert(name.to_string(), cost).is_some() {
                return Err(ScheduleError::Duplicate(name.to_string()));
            }
        }
        let mut costs = [0u64; 256];
        for op in opcode::all() {
            costs[op.byte as usize] = *by_name.get(op.name).ok_or(ScheduleError::Missing(op.name))?;
        }
        Ok(GasSchedule { costs, by_name })
    }

    /// Static cost of an opcode byte. Unsupported bytes cost nothing.
    pub fn cost(&self, byte: u8) -> u64 {
        self.costs[byte as usize]
    }

    pub fn cost_by_name(&self, name: &str) -> Option<u64> {
        self.by_name.get(name).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
