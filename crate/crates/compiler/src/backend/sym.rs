//! Symbolic assembly: concrete instructions mixed with labels, label pushes,
//! macros and metadata that occupies no bytes.

use std::fmt;

use bemp_evm::opcode::{self, Mnemonic};
use bemp_evm::{Instr, Word};
use serde::Serialize;

pub type Label = usize;

/// What a jump means to the gas analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JumpKind {
    /// Forward jump inside a function.
    Plain,
    /// Conditional jump; the other successor is the fallthrough.
    Branch,
    /// Jump back to a loop head.
    BackEdge,
    /// Call of `callee`; control comes back at the label `ret`.
    Call { callee: usize, ret: Label },
    /// Return to the address on the stack.
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Meta {
    FunctionStart(usize),
    FunctionEnd(usize),
    /// `add_gas used alloc` at this point.
    Annotation { used: u64, alloc: u64 },
    /// An allocation of this many bytes happens here.
    AllocSite(u64),
}

/// Multi-instruction sequences kept whole until label resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Macro {
    /// `[to, amount] -> []`: CALL with a zero gas argument, so the callee runs
    /// on the stipend alone. The success flag is dropped.
    Send,
    /// `[field_1 .. field_n] -> [ptr]`: bump allocation of `size` bytes. With a
    /// tag the fields start at word 1, otherwise at word 0.
    Alloc { size: u64, tag: Option<u64>, fields: usize },
    /// `[ret_label, args..] -> [result?]`: jump to `target`, resume at `ret`.
    Call { callee: usize, target: Label, ret: Label },
    /// `[ret_addr, args.., result?] -> jump`: drop the arguments, return.
    Return { args: usize, result: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymInstr {
    Op(Instr),
    PushLabel(Label),
    /// Emits a JUMPDEST.
    LabelDef(Label),
    /// JUMP or JUMPI (when `conditional`), tagged for the analyzer.
    Jump { conditional: bool, kind: JumpKind },
    Macro(Macro),
    Meta(Meta),
}

impl SymInstr {
    pub fn op(byte: u8) -> Self {
        SymInstr::Op(Instr::op(byte))
    }

    pub fn push(v: Word) -> Self {
        SymInstr::Op(Instr::push(v))
    }

    pub fn push_u64(v: u64) -> Self {
        SymInstr::Op(Instr::push_u64(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub entry: Label,
    pub gas_checking: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymProgram {
    pub instrs: Vec<SymInstr>,
    pub label_names: Vec<String>,
    pub functions: Vec<FunctionInfo>,
}

impl SymProgram {
    pub fn new_label(&mut self, name: impl Into<String>) -> Label {
        self.label_names.push(name.into());
        self.label_names.len() - 1
    }

    /// Replaces every macro by its expansion. Label numbering is unchanged.
    pub fn expand_macros(&self) -> SymProgram {
        let mut out = Vec::with_capacity(self.instrs.len());
        for i in &self.instrs {
            match i {
                SymInstr::Macro(m) => expand(m, &mut out),
                other => out.push(other.clone()),
            }
        }
        SymProgram { instrs: out, label_names: self.label_names.clone(), functions: self.functions.clone() }
    }
}

fn expand(m: &Macro, out: &mut Vec<SymInstr>) {
    use opcode::*;
    match m {
        Macro::Send => {
            for _ in 0..4 {
                out.push(SymInstr::push_u64(0));
            }
            out.push(SymInstr::op(dup_op(5)));
            out.push(SymInstr::op(dup_op(7)));
            out.push(SymInstr::push_u64(0));
            out.push(SymInstr::op(CALL));
            for _ in 0..3 {
                out.push(SymInstr::op(POP));
            }
        }
        Macro::Alloc { size, tag, fields } => {
            out.push(SymInstr::Meta(Meta::AllocSite(*size)));
            out.push(SymInstr::push_u64(crate::backend::layout::FREE_POINTER));
            out.push(SymInstr::op(MLOAD));
            if let Some(t) = tag {
                out.push(SymInstr::push_u64(*t));
                out.push(SymInstr::op(dup_op(2)));
                out.push(SymInstr::op(MSTORE));
            }
            let first = if tag.is_some() { 1 } else { 0 };
            for i in (0..*fields).rev() {
                let off = 32 * (first + i) as u64;
                out.push(SymInstr::op(swap_op(1)));
                out.push(SymInstr::op(dup_op(2)));
                if off != 0 {
                    out.push(SymInstr::push_u64(off));
                    out.push(SymInstr::op(ADD));
                }
                out.push(SymInstr::op(MSTORE));
            }
            out.push(SymInstr::op(dup_op(1)));
            out.push(SymInstr::push_u64(*size));
            out.push(SymInstr::op(ADD));
            out.push(SymInstr::push_u64(crate::backend::layout::FREE_POINTER));
            out.push(SymInstr::op(MSTORE));
        }
        Macro::Call { callee, target, ret } => {
            out.push(SymInstr::PushLabel(*target));
            out.push(SymInstr::Jump { conditional: false, kind: JumpKind::Call { callee: *callee, ret: *ret } });
            out.push(SymInstr::LabelDef(*ret));
        }
        Macro::Return { args, result } => {
            for _ in 0..*args {
                if *result {
                    out.push(SymInstr::op(swap_op(1)));
                }
                out.push(SymInstr::op(POP));
            }
            if *result {
                out.push(SymInstr::op(swap_op(1)));
            }
            out.push(SymInstr::Jump { conditional: false, kind: JumpKind::Return });
        }
    }
}

impl fmt::Display for SymProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instrs {
            match i {
                SymInstr::Op(x) => writeln!(f, "  {x}")?,
                SymInstr::PushLabel(l) => writeln!(f, "  PUSH L{}", self.label_names[*l])?,
                SymInstr::LabelDef(l) => writeln!(f, "L{}:", self.label_names[*l])?,
                SymInstr::Jump { conditional, kind } => {
                    let m = Mnemonic(if *conditional { opcode::JUMPI } else { opcode::JUMP });
                    writeln!(f, "  {m}  ; {kind:?}")?
                }
                SymInstr::Macro(m) => writeln!(f, "  .{m:?}")?,
                SymInstr::Meta(m) => writeln!(f, "  ; {m:?}")?,
            }
        }
        Ok(())
    }
}
