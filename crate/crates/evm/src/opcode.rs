//! The opcode subset the toolchain emits and executes.

use std::fmt;

/// Static description of one opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpInfo {
    pub byte: u8,
    pub name: &'static str,
    /// Immediate bytes following the opcode (PUSHn only).
    pub immediate: u8,
    pub pops: u8,
    pub pushes: u8,
}

macro_rules! ops {
    ($( $konst:ident = $byte:literal, $name:literal, $pops:literal, $pushes:literal; )*) => {
        $( pub const $konst: u8 = $byte; )*
        const FIXED: &[OpInfo] = &[
            $( OpInfo { byte: $byte, name: $name, immediate: 0, pops: $pops, pushes: $pushes }, )*
        ];
    };
}

ops! {
    STOP = 0x00, "STOP", 0, 0;
    ADD = 0x01, "ADD", 2, 1;
    MUL = 0x02, "MUL", 2, 1;
    SUB = 0x03, "SUB", 2, 1;
    DIV = 0x04, "DIV", 2, 1;
    SDIV = 0x05, "SDIV", 2, 1;
    MOD = 0x06, "MOD", 2, 1;
    SMOD = 0x07, "SMOD", 2, 1;
    LT = 0x10, "LT", 2, 1;
    GT = 0x11, "GT", 2, 1;
    SLT = 0x12, "SLT", 2, 1;
    SGT = 0x13, "SGT", 2, 1;
    EQ = 0x14, "EQ", 2, 1;
    ISZERO = 0x15, "ISZERO", 1, 1;
    AND = 0x16, "AND", 2, 1;
    OR = 0x17, "OR", 2, 1;
    NOT = 0x19, "NOT", 1, 1;
    CALLER = 0x33, "CALLER", 0, 1;
    CALLVALUE = 0x34, "CALLVALUE", 0, 1;
    CALLDATALOAD = 0x35, "CALLDATALOAD", 1, 1;
    CALLDATASIZE = 0x36, "CALLDATASIZE", 0, 1;
    POP = 0x50, "POP", 1, 0;
    MLOAD = 0x51, "MLOAD", 1, 1;
    MSTORE = 0x52, "MSTORE", 2, 0;
    SLOAD = 0x54, "SLOAD", 1, 1;
    SSTORE = 0x55, "SSTORE", 2, 0;
    JUMP = 0x56, "JUMP", 1, 0;
    JUMPI = 0x57, "JUMPI", 2, 0;
    PC = 0x58, "PC", 0, 1;
    JUMPDEST = 0x5b, "JUMPDEST", 0, 0;
    LOG1 = 0xa1, "LOG1", 3, 0;
    CREATE = 0xf0, "CREATE", 3, 1;
    CALL = 0xf1, "CALL", 7, 1;
    RETURN = 0xf3, "RETURN", 2, 0;
    REVERT = 0xfd, "REVERT", 2, 0;
    INVALID = 0xfe, "INVALID", 0, 0;
}

pub const PUSH1: u8 = 0x60;
pub const PUSH32: u8 = 0x7f;
pub const DUP1: u8 = 0x80;
pub const DUP16: u8 = 0x8f;
pub const SWAP1: u8 = 0x90;
pub const SWAP16: u8 = 0x9f;

const PUSH_NAMES: [&str; 32] = [
    "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10", "PUSH11", "PUSH12",
    "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23",
    "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32",
];
const DUP_NAMES: [&str; 16] = [
    "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11", "DUP12", "DUP13",
    "DUP14", "DUP15", "DUP16",
];
const SWAP_NAMES: [&str; 16] = [
    "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10", "SWAP11", "SWAP12",
    "SWAP13", "SWAP14", "SWAP15", "SWAP16",
];

/// Looks up a byte. `None` for bytes outside the supported subset.
pub fn info(byte: u8) -> Option<OpInfo> {
    match byte {
        PUSH1..=PUSH32 => {
            let n = byte - PUSH1 + 1;
            Some(OpInfo { byte, name: PUSH_NAMES[n as usize - 1], immediate: n, pops: 0, pushes: 1 })
        }
        DUP1..=DUP16 => {
            let n = byte - DUP1 + 1;
            Some(OpInfo { byte, name: DUP_NAMES[n as usize - 1], immediate: 0, pops: n, pushes: n + 1 })
        }
        SWAP1..=SWAP16 => {
            let n = byte - SWAP1 + 1;
            Some(OpInfo { byte, name: SWAP_NAMES[n as usize - 1], immediate: 0, pops: n + 1, pushes: n + 1 })
        }
        _ => FIXED.iter().find(|i| i.byte == byte).copied(),
    }
}

pub fn by_name(name: &str) -> Option<OpInfo> {
    all().find(|i| i.name == name)
}

/// Every supported opcode in byte order.
pub fn all() -> impl Iterator<Item = OpInfo> {
    (0u8..=255).filter_map(info)
}

pub fn push_op(width: u8) -> u8 {
    assert!((1..=32).contains(&width), "PUSH width {width}");
    PUSH1 + width - 1
}

pub fn dup_op(n: u8) -> u8 {
    assert!((1..=16).contains(&n), "DUP{n}");
    DUP1 + n - 1
}

pub fn swap_op(n: u8) -> u8 {
    assert!((1..=16).contains(&n), "SWAP{n}");
    SWAP1 + n - 1
}

pub fn immediate_len(byte: u8) -> usize {
    match byte {
        PUSH1..=PUSH32 => (byte - PUSH1 + 1) as usize,
        _ => 0,
    }
}

/// True for instructions after which control never falls through.
pub fn is_terminator(byte: u8) -> bool {
    matches!(byte, STOP | JUMP | RETURN | REVERT | INVALID)
}

/// A mnemonic wrapper for display.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Mnemonic(pub u8);

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match info(self.0) {
            Some(i) => f.write_str(i.name),
            None => write!(f, "INVALID(0x{:02x})", self.0),
        }
    }
}

impl fmt::Debug for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_bytes() {
        assert_eq!(info(0x60).unwrap().name, "PUSH1");
        assert_eq!(info(0x7f).unwrap().immediate, 32);
        assert_eq!(info(0x01).unwrap().name, "ADD");
        assert_eq!(by_name("JUMPDEST").unwrap().byte, 0x5b);
        assert_eq!(info(0x9f).unwrap().name, "SWAP16");
        assert!(info(0x20).is_none());
    }

    #[test]
    fn names_are_unique() {
        let names: Vec<_> = all().map(|i| i.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names.len(), sorted.len());
    }
}
