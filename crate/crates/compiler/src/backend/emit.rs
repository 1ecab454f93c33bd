//! Final bytes and the human-readable artifacts.

use std::collections::BTreeMap;
use std::fmt::Write;

use bemp_evm::opcode::{JUMP, JUMPI};

use super::resolve::SizedProgram;

pub fn emit(sized: &SizedProgram) -> Vec<u8> {
    let mut out = Vec::with_capacity(sized.code_size());
    for (_, i) in &sized.instrs {
        out.push(i.op);
        out.extend_from_slice(&i.imm);
    }
    out
}

/// Lowercase hex without prefix, newline-terminated: the `.evm` format.
pub fn hex_artifact(code: &[u8]) -> String {
    format!("{}\n", hex::encode(code))
}

/// One instruction per line, label definitions as `Lname:`.
pub fn asm_listing(sized: &SizedProgram) -> String {
    let mut at: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (l, addr) in sized.labels.iter().enumerate() {
        at.entry(*addr).or_default().push(&sized.label_names[l]);
    }
    let mut by_addr: BTreeMap<usize, &str> = BTreeMap::new();
    for (l, addr) in sized.labels.iter().enumerate() {
        by_addr.entry(*addr).or_insert(&sized.label_names[l]);
    }
    let mut out = String::new();
    for (k, (off, i)) in sized.instrs.iter().enumerate() {
        if i.op == bemp_evm::opcode::JUMPDEST {
            for name in at.get(off).into_iter().flatten() {
                let _ = writeln!(out, "L{name}:");
            }
        }
        let _ = write!(out, "  {off:04x}  {i}");
        let next_jumps = sized.instrs.get(k + 1).is_some_and(|(_, n)| n.op == JUMP || n.op == JUMPI);
        if next_jumps {
            if let Some(target) = i.immediate_value().and_then(|v| by_addr.get(&v.to::<usize>())) {
                let _ = write!(out, "  ; L{target}");
            }
        }
        out.push('\n');
    }
    out
}

/// Annotation sites: `offset used alloc` per line, offsets in hex.
pub fn gasmap(sized: &SizedProgram) -> String {
    let mut out = String::from("# offset used alloc\n");
    for a in &sized.annotations {
        let _ = writeln!(out, "{:04x} {} {}", a.offset, a.used, a.alloc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::resolve::resolve_labels;
    use crate::backend::sym::{SymInstr, SymProgram};
    use bemp_evm::opcode::*;

    #[test]
    fn push_add_stop_bytes() {
        let mut p = SymProgram::default();
        p.instrs = vec![SymInstr::push_u64(1), SymInstr::push_u64(2), SymInstr::op(ADD), SymInstr::op(STOP)];
        let code = emit(&resolve_labels(&p).unwrap());
        assert_eq!(hex_artifact(&code), "600160020100\n");
    }

    #[test]
    fn empty_program_is_empty() {
        let code = emit(&resolve_labels(&SymProgram::default()).unwrap());
        assert!(code.is_empty());
        assert_eq!(hex_artifact(&code), "\n");
    }
}
