//! Concrete instructions: encoding, decoding and listing.

use std::fmt;

use ruint::aliases::U256;
use thiserror::Error;

use crate::opcode::{self, Mnemonic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisasmError {
    #[error("PUSH at offset {offset} needs {needed} immediate bytes, only {available} remain")]
    TruncatedPush { offset: usize, needed: usize, available: usize },
}

/// One machine instruction with its immediate bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instr {
    pub op: u8,
    pub imm: Vec<u8>,
}

impl Instr {
    pub fn op(op: u8) -> Self {
        assert_eq!(opcode::immediate_len(op), 0, "{} takes an immediate", Mnemonic(op));
        Instr { op, imm: Vec::new() }
    }

    /// A PUSH of exactly `width` bytes. Panics if `value` does not fit.
    pub fn push_width(width: u8, value: U256) -> Self {
        let bytes = value.to_be_bytes::<32>();
        let cut = 32 - width as usize;
        assert!(bytes[..cut].iter().all(|b| *b == 0), "{value} does not fit in PUSH{width}");
        Instr { op: opcode::push_op(width), imm: bytes[cut..].to_vec() }
    }

    /// A PUSH of the smallest width holding `value` (at least one byte).
    pub fn push(value: U256) -> Self {
        Instr::push_width(min_push_width(value), value)
    }

    pub fn push_u64(value: u64) -> Self {
        Instr::push(U256::from(value))
    }

    pub fn size(&self) -> usize {
        1 + self.imm.len()
    }

    pub fn immediate_value(&self) -> Option<U256> {
        if self.imm.is_empty() {
            return None;
        }
        Some(U256::from_be_slice(&self.imm))
    }

    pub fn mnemonic(&self) -> Mnemonic {
        Mnemonic(self.op)
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mnemonic())?;
        if !self.imm.is_empty() {
            write!(f, " 0x{}", hex::encode(&self.imm))?;
        }
        Ok(())
    }
}

/// Bytes needed to push `value`, never less than one.
pub fn min_push_width(value: U256) -> u8 {
    value.byte_len().max(1) as u8
}

pub fn assemble(instrs: &[Instr]) -> Vec<u8> {
    let mut out = Vec::with_capacity(instrs.iter().map(Instr::size).sum());
    for i in instrs {
        out.push(i.op);
        out.extend_from_slice(&i.imm);
    }
    out
}

/// Decodes bytecode into `(offset, instruction)` pairs. Bytes outside the
/// supported subset decode as single-byte instructions shown as INVALID.
pub fn disassemble(code: &[u8]) -> Result<Vec<(usize, Instr)>, DisasmError> {
    let mut out = Vec::new();
    let mut pc = 0;
    while pc < code.len() {
        let op = code[pc];
        let n = opcode::immediate_len(op);
        let available = code.len() - pc - 1;
        if n > available {
            return Err(DisasmError::TruncatedPush { offset: pc, needed: n, available });
        }
        out.push((pc, Instr { op, imm: code[pc + 1..pc + 1 + n].to_vec() }));
        pc += 1 + n;
    }
    Ok(out)
}

/// One instruction per line, prefixed by its offset.
pub fn listing(code: &[u8]) -> Result<String, DisasmError> {
    let mut out = String::new();
    for (pc, i) in disassemble(code)? {
        out.push_str(&format!("{pc:04x}: {i}\n"));
    }
    Ok(out)
}

/// Offsets holding a JUMPDEST opcode (not PUSH data).
pub fn jumpdests(code: &[u8]) -> Vec<bool> {
    let mut valid = vec![false; code.len()];
    let mut pc = 0;
    while pc < code.len() {
        let op = code[pc];
        if op == opcode::JUMPDEST {
            valid[pc] = true;
        }
        pc += 1 + opcode::immediate_len(op);
    }
    valid
}
