//! Basic blocks and edges over a sized program.

use std::collections::BTreeSet;

use bemp_evm::opcode::{self, JUMP, JUMPDEST, JUMPI};
use bemp_evm::{GasSchedule, Instr};
use serde::Serialize;
use thiserror::Error;

use crate::backend::resolve::SizedProgram;
use crate::backend::sym::JumpKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("jump at offset {0} has no constant target")]
    DynamicJump(usize),
    #[error("jump at offset {offset} targets {target}, which is not a JUMPDEST")]
    BadTarget { offset: usize, target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    Fallthrough,
    Jump,
    Branch,
    /// From a call site to its return site; the callee is accounted for by
    /// its own annotations.
    CallReturn,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// Index of the first instruction in the sized program.
    pub first: usize,
    /// One past the last instruction.
    pub last: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub blocks: Vec<Block>,
    pub edges: Vec<Edge>,
    pub loop_heads: BTreeSet<usize>,
}

impl Cfg {
    pub fn block_at(&self, offset: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.start <= offset && offset < b.end)
    }

    pub fn successors(&self, b: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == b)
    }

    pub fn back_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Back)
    }

    /// Blocks whose first byte lies in `[start, end)`.
    pub fn blocks_in(&self, start: usize, end: usize) -> Vec<usize> {
        (0..self.blocks.len()).filter(|b| (start..end).contains(&self.blocks[*b].start)).collect()
    }

    pub fn block_cost(&self, prog: &SizedProgram, schedule: &GasSchedule, b: usize) -> u64 {
        let blk = &self.blocks[b];
        prog.instrs[blk.first..blk.last].iter().map(|(_, i)| schedule.cost(i.op)).sum()
    }
}

fn ends_block(i: &Instr) -> bool {
    i.op == JUMP || i.op == JUMPI || opcode::is_terminator(i.op)
}

pub fn build_cfg(prog: &SizedProgram) -> Result<Cfg, CfgError> {
    let n = prog.instrs.len();
    let mut leaders = BTreeSet::new();
    if n > 0 {
        leaders.insert(0);
    }
    for (k, (_, i)) in prog.instrs.iter().enumerate() {
        if i.op == JUMPDEST {
            leaders.insert(k);
        }
        if ends_block(i) && k + 1 < n {
            leaders.insert(k + 1);
        }
    }
    let leaders: Vec<usize> = leaders.into_iter().collect();
    let mut blocks = Vec::with_capacity(leaders.len());
    for (j, &first) in leaders.iter().enumerate() {
        let last = leaders.get(j + 1).copied().unwrap_or(n);
        let start = prog.instrs[first].0;
        let (lo, li) = &prog.instrs[last - 1];
        blocks.push(Block { first, last, start, end: lo + li.size() });
    }
    let block_of = |offset: usize| blocks.iter().position(|b: &Block| b.start == offset);

    let mut edges = Vec::new();
    for (b, blk) in blocks.iter().enumerate() {
        let (off, last) = &prog.instrs[blk.last - 1];
        let fallthrough = (b + 1 < blocks.len()).then_some(b + 1);
        if last.op == JUMP || last.op == JUMPI {
            let kind = prog.jump_kinds.get(off).copied().unwrap_or(if last.op == JUMPI {
                JumpKind::Branch
            } else {
                JumpKind::Plain
            });
            if kind == JumpKind::Return {
                continue;
            }
            let target = (blk.last >= blk.first + 2)
                .then(|| &prog.instrs[blk.last - 2].1)
                .filter(|p| (opcode::PUSH1..=opcode::PUSH32).contains(&p.op))
                .and_then(|p| p.immediate_value())
                .ok_or(CfgError::DynamicJump(*off))?;
            let t = if target < bemp_evm::Word::from(usize::MAX) { target.to::<usize>() } else { usize::MAX };
            let to = block_of(t)
                .filter(|tb| prog.instrs[blocks[*tb].first].1.op == JUMPDEST)
                .ok_or(CfgError::BadTarget { offset: *off, target: t })?;
            match kind {
                JumpKind::Return => {}
                JumpKind::Call { ret, .. } => {
                    let r = block_of(prog.labels[ret]).ok_or(CfgError::DynamicJump(*off))?;
                    edges.push(Edge { from: b, to: r, kind: EdgeKind::CallReturn });
                }
                JumpKind::BackEdge => edges.push(Edge { from: b, to, kind: EdgeKind::Back }),
                JumpKind::Plain => edges.push(Edge { from: b, to, kind: EdgeKind::Jump }),
                JumpKind::Branch => {
                    edges.push(Edge { from: b, to, kind: EdgeKind::Branch });
                    if let Some(f) = fallthrough {
                        edges.push(Edge { from: b, to: f, kind: EdgeKind::Fallthrough });
                    }
                }
            }
        } else if !opcode::is_terminator(last.op) {
            if let Some(f) = fallthrough {
                edges.push(Edge { from: b, to: f, kind: EdgeKind::Fallthrough });
            }
        }
    }
    edges.sort();
    let loop_heads = edges.iter().filter(|e| e.kind == EdgeKind::Back).map(|e| e.to).collect();
    Ok(Cfg { blocks, edges, loop_heads })
}
