//! Label resolution: choose a width for every label push so that all
//! addresses fit, by widening until nothing changes.

use std::collections::BTreeMap;

use bemp_evm::asm::min_push_width;
use bemp_evm::opcode::{self, JUMPDEST};
use bemp_evm::{Annotations, Instr, Word};
use thiserror::Error;

use super::sym::{FunctionInfo, JumpKind, Label, Meta, SymInstr, SymProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("label L{0} is pushed but never defined")]
    UndefinedLabel(String),
    #[error("label L{0} is defined more than once")]
    DuplicateLabel(String),
    #[error("annotation at instruction {0} has no instruction to attach to")]
    Unanchored(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationSite {
    pub offset: usize,
    pub used: u64,
    pub alloc: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRange {
    pub name: String,
    pub gas_checking: bool,
    pub entry: usize,
    /// Byte range `[start, end)` of the function's code.
    pub start: usize,
    pub end: usize,
}

/// A program with every address fixed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SizedProgram {
    /// Instructions with their byte offsets.
    pub instrs: Vec<(usize, Instr)>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub annotations: Vec<AnnotationSite>,
    /// (offset, bytes) of each allocation.
    pub alloc_sites: Vec<(usize, u64)>,
    pub jump_kinds: BTreeMap<usize, JumpKind>,
    pub functions: Vec<FunctionRange>,
    /// Rounds the width fixpoint took.
    pub iterations: usize,
    /// Final push width of each label push, in program order.
    pub push_widths: Vec<u8>,
}

impl SizedProgram {
    pub fn code_size(&self) -> usize {
        self.instrs.last().map_or(0, |(o, i)| o + i.size())
    }

    /// Annotations summed per offset, the form the interpreter consumes.
    pub fn annotation_map(&self) -> Annotations {
        let mut m = Annotations::new();
        for a in &self.annotations {
            let e = m.entry(a.offset).or_insert((0, 0));
            e.0 += a.used;
            e.1 += a.alloc;
        }
        m
    }

    pub fn label_address(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|n| n == name).map(|l| self.labels[l])
    }

    pub fn function(&self, name: &str) -> Option<&FunctionRange> {
        self.functions.iter().find(|f| f.name == name)
    }
}

fn size_of(i: &SymInstr, width: u8) -> usize {
    match i {
        SymInstr::Op(x) => x.size(),
        SymInstr::PushLabel(_) => 1 + width as usize,
        SymInstr::LabelDef(_) | SymInstr::Jump { .. } => 1,
        SymInstr::Macro(_) | SymInstr::Meta(_) => 0,
    }
}

/// Offsets of every instruction and label under the given push widths.
fn layout(instrs: &[SymInstr], widths: &[u8], nlabels: usize) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = Vec::with_capacity(instrs.len());
    let mut labels = vec![0; nlabels];
    let mut pc = 0;
    let mut k = 0;
    for i in instrs {
        offsets.push(pc);
        let w = if matches!(i, SymInstr::PushLabel(_)) {
            k += 1;
            widths[k - 1]
        } else {
            0
        };
        if let SymInstr::LabelDef(l) = i {
            labels[*l] = pc;
        }
        pc += size_of(i, w);
    }
    (offsets, labels)
}

/// Runs the width fixpoint and fixes every address. Macros are expanded
/// first.
pub fn resolve_labels(sym: &SymProgram) -> Result<SizedProgram, ResolveError> {
    let prog = sym.expand_macros();
    let n = prog.label_names.len();
    let mut defined = vec![false; n];
    for i in &prog.instrs {
        if let SymInstr::LabelDef(l) = i {
            if std::mem::replace(&mut defined[*l], true) {
                return Err(ResolveError::DuplicateLabel(prog.label_names[*l].clone()));
            }
        }
    }
    let targets: Vec<Label> = prog
        .instrs
        .iter()
        .filter_map(|i| match i {
            SymInstr::PushLabel(l) => Some(*l),
            _ => None,
        })
        .collect();
    for l in &targets {
        if !defined[*l] {
            return Err(ResolveError::UndefinedLabel(prog.label_names[*l].clone()));
        }
    }

    let mut widths = vec![1u8; targets.len()];
    let mut iterations = 0;
    let (offsets, labels) = loop {
        iterations += 1;
        let (offsets, labels) = layout(&prog.instrs, &widths, n);
        let mut changed = false;
        for (w, l) in widths.iter_mut().zip(&targets) {
            let need = min_push_width(Word::from(labels[*l]));
            if need > *w {
                *w = need;
                changed = true;
            }
        }
        if !changed {
            break (offsets, labels);
        }
    };

    let mut out = SizedProgram {
        labels,
        label_names: prog.label_names.clone(),
        iterations,
        push_widths: widths.clone(),
        ..Default::default()
    };
    let mut k = 0;
    let mut open: Vec<(usize, &FunctionInfo)> = Vec::new();
    for (idx, i) in prog.instrs.iter().enumerate() {
        let pc = offsets[idx];
        match i {
            SymInstr::Op(x) => out.instrs.push((pc, x.clone())),
            SymInstr::PushLabel(l) => {
                out.instrs.push((pc, Instr::push_width(widths[k], Word::from(out.labels[*l]))));
                k += 1;
            }
            SymInstr::LabelDef(_) => out.instrs.push((pc, Instr::op(JUMPDEST))),
            SymInstr::Jump { conditional, kind } => {
                out.instrs.push((pc, Instr::op(if *conditional { opcode::JUMPI } else { opcode::JUMP })));
                out.jump_kinds.insert(pc, *kind);
            }
            SymInstr::Macro(_) => unreachable!("macros are expanded"),
            SymInstr::Meta(Meta::FunctionStart(f)) => open.push((pc, &prog.functions[*f])),
            SymInstr::Meta(Meta::FunctionEnd(_)) => {
                let (start, info) = open.pop().expect("balanced function markers");
                out.functions.push(FunctionRange {
                    name: info.name.clone(),
                    gas_checking: info.gas_checking,
                    entry: out.labels[info.entry],
                    start,
                    end: pc,
                });
            }
            SymInstr::Meta(Meta::Annotation { used, alloc }) => {
                let offset = anchor(&prog.instrs, &offsets, idx).ok_or(ResolveError::Unanchored(idx))?;
                out.annotations.push(AnnotationSite { offset, used: *used, alloc: *alloc });
            }
            SymInstr::Meta(Meta::AllocSite(bytes)) => {
                let offset = anchor(&prog.instrs, &offsets, idx).ok_or(ResolveError::Unanchored(idx))?;
                out.alloc_sites.push((offset, *bytes));
            }
        }
    }
    Ok(out)
}

fn emits(i: &SymInstr) -> bool {
    !matches!(i, SymInstr::Meta(_) | SymInstr::Macro(_))
}

fn ends_block(i: &SymInstr) -> bool {
    match i {
        SymInstr::Jump { .. } => true,
        SymInstr::Op(x) => opcode::is_terminator(x.op),
        _ => false,
    }
}

/// Offset a zero-width marker at `idx` is attributed to: the next
/// instruction, or the previous one when the next starts a new block (or
/// there is none). Either way the marker stays in the block it was emitted in.
fn anchor(instrs: &[SymInstr], offsets: &[usize], idx: usize) -> Option<usize> {
    let next = (idx + 1..instrs.len()).find(|&j| emits(&instrs[j]));
    if let Some(j) = next {
        if !matches!(instrs[j], SymInstr::LabelDef(_)) {
            return Some(offsets[j]);
        }
    }
    let prev = (0..idx).rev().find(|&j| emits(&instrs[j]))?;
    if ends_block(&instrs[prev]) {
        return None;
    }
    Some(offsets[prev])
}

#[cfg(test)]
mod tests {
    use super::*;
    use bemp_evm::opcode::*;

    fn op(b: u8) -> SymInstr {
        SymInstr::op(b)
    }

    #[test]
    fn no_labels_is_one_round() {
        let mut p = SymProgram::default();
        p.instrs = vec![SymInstr::push_u64(1), SymInstr::push_u64(2), op(ADD), op(STOP)];
        let s = resolve_labels(&p).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(s.code_size(), 6);
    }

    #[test]
    fn label_past_255_widens() {
        let mut p = SymProgram::default();
        let l = p.new_label("far");
        p.instrs.push(SymInstr::PushLabel(l));
        p.instrs.push(SymInstr::Jump { conditional: false, kind: JumpKind::Plain });
        for _ in 0..260 {
            p.instrs.push(op(JUMPDEST));
        }
        p.instrs.push(SymInstr::LabelDef(l));
        let s = resolve_labels(&p).unwrap();
        assert!(s.iterations >= 2);
        assert_eq!(s.push_widths, vec![2]);
        assert_eq!(s.instrs[0].1.op, PUSH1 + 1);
        assert_eq!(s.labels[l], 3 + 1 + 260);
    }

    #[test]
    fn annotation_before_label_attaches_backwards() {
        let mut p = SymProgram::default();
        let l = p.new_label("x");
        p.instrs = vec![
            op(CALLER),
            SymInstr::Meta(Meta::Annotation { used: 5, alloc: 0 }),
            SymInstr::LabelDef(l),
            op(POP),
            SymInstr::Meta(Meta::Annotation { used: 7, alloc: 1 }),
            op(STOP),
        ];
        let s = resolve_labels(&p).unwrap();
        assert_eq!(s.annotations[0].offset, 0);
        assert_eq!(s.annotations[1].offset, 3);
    }

    #[test]
    fn undefined_label_is_reported() {
        let mut p = SymProgram::default();
        let l = p.new_label("nowhere");
        p.instrs = vec![SymInstr::PushLabel(l)];
        assert_eq!(resolve_labels(&p), Err(ResolveError::UndefinedLabel("nowhere".into())));
    }
}
