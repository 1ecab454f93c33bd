//! The shipped contracts and their compiled forms.

use std::collections::BTreeMap;
use std::fmt;

use bemp_evm::{word, Word};
use mlc::backend::layout::{selector, BAD_ARGUMENT, UNKNOWN_SELECTOR};
use mlc::backend::{compile_program, codegen, Artifacts, CodegenOptions};
use mlc::ir::{FuncId, Program, Ty};

use crate::CorpusError;

pub const LISTS_SRC: &str = include_str!("../contracts/lists.mlc");
pub const TRADING_SRC: &str = include_str!("../contracts/trading.mlc");
pub const MARKET_SRC: &str = include_str!("../contracts/market.mlc");

/// Fixed-point multiplier the market applies to recorded energy amounts.
pub const FLOATING_POINT_CORRECTION: u64 = 0x1000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Contract {
    Lists,
    Trading,
    Market,
}

impl Contract {
    pub const ALL: [Contract; 3] = [Contract::Lists, Contract::Trading, Contract::Market];

    pub fn name(self) -> &'static str {
        match self {
            Contract::Lists => "lists",
            Contract::Trading => "trading",
            Contract::Market => "market",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Contract::Lists => LISTS_SRC,
            Contract::Trading => TRADING_SRC,
            Contract::Market => MARKET_SRC,
        }
    }

    pub fn from_name(name: &str) -> Option<Contract> {
        Contract::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A contract after the frontend and backend, with what a caller needs to
/// encode transactions and decode their outcomes.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub contract: Contract,
    pub program: Program,
    pub artifacts: Artifacts,
    pub options: CodegenOptions,
    tags: BTreeMap<[u8; 4], String>,
}

impl Compiled {
    pub fn new(contract: Contract, options: CodegenOptions) -> Result<Self, CorpusError> {
        Self::from_source(contract, contract.source(), options)
    }

    /// Compiles `src` under the identity of `contract`; used to build variants.
    pub fn from_source(contract: Contract, src: &str, options: CodegenOptions) -> Result<Self, CorpusError> {
        let program = mlc::compile_source(src).map_err(|e| CorpusError::Compile(contract.name().into(), e.to_string()))?;
        let artifacts =
            compile_program(&program, options).map_err(|e| CorpusError::Compile(contract.name().into(), e.to_string()))?;
        let mut tags = BTreeMap::new();
        for name in program.exceptions.iter().map(String::as_str).chain([BAD_ARGUMENT, UNKNOWN_SELECTOR]) {
            tags.insert(word::tag4(name), name.to_string());
        }
        Ok(Compiled { contract, program, artifacts, options, tags })
    }

    /// Functions reachable through the dispatcher.
    pub fn entry_points(&self) -> Vec<FuncId> {
        codegen::exposed(&self.program, self.options)
    }

    pub fn function(&self, name: &str) -> Option<FuncId> {
        self.program.functions.iter().position(|f| f.name == name)
    }

    pub fn param_types(&self, func: FuncId) -> Vec<Ty> {
        self.program.functions[func].param_types()
    }

    pub fn param_names(&self, func: FuncId) -> Vec<String> {
        let f = &self.program.functions[func];
        f.params.iter().map(|p| f.locals[*p].name.clone()).collect()
    }

    /// Exception name behind a revert tag, or the tag in hex.
    pub fn tag_name(&self, tag: [u8; 4]) -> String {
        self.tags.get(&tag).cloned().unwrap_or_else(|| format!("0x{}", hex_lower(&tag)))
    }
}

/// Selector followed by one big-endian word per argument.
pub fn calldata(function: &str, args: &[Word]) -> Vec<u8> {
    let mut out = selector(function).to_be_bytes().to_vec();
    for a in args {
        out.extend_from_slice(&a.to_be_bytes::<32>());
    }
    out
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_contract_compiles() {
        for c in Contract::ALL {
            let compiled = Compiled::new(c, CodegenOptions::default()).unwrap();
            assert!(!compiled.artifacts.code.is_empty(), "{c}");
            assert!(!compiled.entry_points().is_empty(), "{c}");
        }
    }

    #[test]
    fn tags_decode() {
        let m = Compiled::new(Contract::Market, CodegenOptions::default()).unwrap();
        assert_eq!(m.tag_name(word::tag4("ExistingSmartMeter")), "ExistingSmartMeter");
        assert_eq!(m.tag_name(word::tag4(BAD_ARGUMENT)), BAD_ARGUMENT);
        assert!(m.tag_name([0, 0, 0, 0]).starts_with("0x"));
    }

    #[test]
    fn names_round_trip() {
        for c in Contract::ALL {
            assert_eq!(Contract::from_name(c.name()), Some(c));
        }
    }
}
