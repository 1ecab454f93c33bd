mod common;

use std::cell::RefCell;

use bemp_evm::opcode::{ADD, DUP1, LT, POP, STOP};
use bemp_evm::{GasSchedule, Interpreter};
use common::*;
use mlc::backend::sym::JumpKind;
use mlc::backend::{resolve_labels, CodegenOptions, SizedProgram, SymInstr, SymProgram};
use mlc::gas::{build_cfg, check_program, enumerate_paths, EdgeKind, Path, DEFAULT_PATH_CAP};

fn op(b: u8) -> SymInstr {
    SymInstr::op(b)
}

fn sized(p: &SymProgram) -> SizedProgram {
    resolve_labels(p).unwrap()
}

#[test]
fn straight_line_is_one_block_one_path() {
    let p = SymProgram { instrs: vec![SymInstr::push_u64(1), SymInstr::push_u64(2), op(ADD), op(STOP)], ..Default::default() };
    let cfg = build_cfg(&sized(&p)).unwrap();
    assert_eq!(cfg.blocks.len(), 1);
    assert!(cfg.edges.is_empty());
    assert_eq!(enumerate_paths(&cfg, 0, DEFAULT_PATH_CAP).unwrap().len(), 1);
}

#[test]
fn diamond_has_four_blocks_four_edges_two_paths() {
    let mut p = SymProgram::default();
    let (other, join) = (p.new_label("else"), p.new_label("join"));
    p.instrs = vec![
        SymInstr::push_u64(1),
        SymInstr::PushLabel(other),
        SymInstr::Jump { conditional: true, kind: JumpKind::Branch },
        SymInstr::push_u64(2),
        SymInstr::PushLabel(join),
        SymInstr::Jump { conditional: false, kind: JumpKind::Plain },
        SymInstr::LabelDef(other),
        SymInstr::push_u64(3),
        SymInstr::LabelDef(join),
        op(STOP),
    ];
    let cfg = build_cfg(&sized(&p)).unwrap();
    assert_eq!(cfg.blocks.len(), 4);
    assert_eq!(cfg.edges.len(), 4);
    assert!(cfg.loop_heads.is_empty());
    let paths = enumerate_paths(&cfg, 0, DEFAULT_PATH_CAP).unwrap();
    assert_eq!(paths.iter().map(|p| p.blocks.clone()).collect::<Vec<_>>(), vec![vec![0, 1, 3], vec![0, 2, 3]]);
}

fn one_loop() -> SymProgram {
    let mut p = SymProgram::default();
    let (head, exit) = (p.new_label("head"), p.new_label("exit"));
    p.instrs = vec![
        SymInstr::push_u64(0),
        SymInstr::LabelDef(head),
        op(DUP1),
        SymInstr::push_u64(10),
        op(LT),
        SymInstr::PushLabel(exit),
        SymInstr::Jump { conditional: true, kind: JumpKind::Branch },
        SymInstr::push_u64(1),
        op(ADD),
        SymInstr::PushLabel(head),
        SymInstr::Jump { conditional: false, kind: JumpKind::BackEdge },
        SymInstr::LabelDef(exit),
        op(POP),
        op(STOP),
    ];
    p
}

#[test]
fn single_loop_has_one_back_edge_and_three_paths() {
    let cfg = build_cfg(&sized(&one_loop())).unwrap();
    assert_eq!(cfg.blocks.len(), 4);
    assert_eq!(cfg.back_edges().count(), 1);
    assert_eq!(cfg.loop_heads.iter().copied().collect::<Vec<_>>(), vec![1]);
    let from_entry = enumerate_paths(&cfg, 0, DEFAULT_PATH_CAP).unwrap();
    let from_head = enumerate_paths(&cfg, 1, DEFAULT_PATH_CAP).unwrap();
    assert_eq!(from_entry.iter().map(|p| p.blocks.clone()).collect::<Vec<_>>(), vec![vec![0]]);
    assert_eq!(from_head.iter().map(|p| p.blocks.clone()).collect::<Vec<_>>(), vec![vec![1, 2], vec![1, 3]]);
}

#[test]
fn untagged_cycle_is_rejected() {
    let mut p = one_loop();
    for i in &mut p.instrs {
        if let SymInstr::Jump { kind, .. } = i {
            if *kind == JumpKind::BackEdge {
                *kind = JumpKind::Plain;
            }
        }
    }
    let cfg = build_cfg(&sized(&p)).unwrap();
    assert!(cfg.edges.iter().all(|e| e.kind != EdgeKind::Back));
    assert!(enumerate_paths(&cfg, 0, DEFAULT_PATH_CAP).is_err());
}

#[test]
fn path_cap_is_enforced() {
    // Twelve diamonds in a row give 4096 paths.
    let mut p = SymProgram::default();
    for k in 0..12 {
        let (other, join) = (p.new_label(format!("e{k}")), p.new_label(format!("j{k}")));
        p.instrs.extend([
            SymInstr::push_u64(1),
            SymInstr::PushLabel(other),
            SymInstr::Jump { conditional: true, kind: JumpKind::Branch },
            SymInstr::PushLabel(join),
            SymInstr::Jump { conditional: false, kind: JumpKind::Plain },
            SymInstr::LabelDef(other),
            SymInstr::LabelDef(join),
        ]);
    }
    p.instrs.push(op(STOP));
    let cfg = build_cfg(&sized(&p)).unwrap();
    assert_eq!(enumerate_paths(&cfg, 0, DEFAULT_PATH_CAP).unwrap().len(), 4096);
    assert!(enumerate_paths(&cfg, 0, 1000).is_err());
}

fn bump_source(used: u64) -> String {
    format!(
        "let private bump [@gas_checking] (x : uint256) : uint256 = add_gas {used} 0; x * 3 + 1
         let public call_bump (x : uint256) : uint256 = bump x"
    )
}

fn bump_report(used: u64) -> mlc::gas::FunctionReport {
    let d = deploy_with(&bump_source(used), CodegenOptions::default());
    let r = check_program(&d.art.sized, &GasSchedule::default(), DEFAULT_PATH_CAP).unwrap();
    r.function("bump").unwrap().clone()
}

#[test]
fn exact_annotation_passes_with_equality_and_one_less_fails() {
    let cost = bump_report(0).paths[0].cost;
    let exact = bump_report(cost);
    assert!(exact.pass);
    assert_eq!(exact.paths.len(), 1);
    assert_eq!(exact.paths[0].cost, exact.paths[0].bound);
    let short = bump_report(cost - 1);
    assert!(!short.pass);
    let line = short.paths[0].line();
    assert!(line.starts_with("PATH bump@") && line.ends_with("FAIL"), "{line}");
}

#[test]
fn skipped_functions_are_listed() {
    let d = deploy_with(&bump_source(1000), CodegenOptions::default());
    let r = check_program(&d.art.sized, &GasSchedule::default(), DEFAULT_PATH_CAP).unwrap();
    assert!(r.pass);
    assert!(r.render().contains("SKIP call_bump"));
    let f = r.function("call_bump").unwrap();
    assert!(!f.checked && f.paths.is_empty());
}

const LOOPY: &str = "
let private walk [@gas_checking] (n : uint256) : uint256 =
  add_gas 1000 0;
  let mutable x = n in
  let mutable steps = (0 : uint256) in
  while x > 1 do
    add_gas 1000 0;
    if x % 2 = 0 then x <- x / 2 else x <- 3 * x + 1;
    steps <- steps + 1
  done;
  if steps > 10 then steps - 10 else steps
";

/// Splits an executed block sequence wherever control enters a loop head.
fn segments(blocks: &[usize], heads: &std::collections::BTreeSet<usize>) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        if k == 0 || heads.contains(b) {
            out.push(Vec::new());
        }
        out.last_mut().unwrap().push(*b);
    }
    out
}

#[test]
fn executed_walks_are_enumerated_paths() {
    let mut d = deploy(LOOPY);
    let cfg = build_cfg(&d.art.sized).unwrap();
    let f = d.art.sized.function("walk").unwrap().clone();
    let entry = cfg.block_at(f.entry).unwrap();
    let mut enumerated: Vec<Path> = enumerate_paths(&cfg, entry, DEFAULT_PATH_CAP).unwrap();
    for h in &cfg.loop_heads {
        if (f.start..f.end).contains(&cfg.blocks[*h].start) {
            enumerated.extend(enumerate_paths(&cfg, *h, DEFAULT_PATH_CAP).unwrap());
        }
    }
    let schedule = GasSchedule::default();
    for n in [0u64, 1, 2, 3, 6, 7, 27] {
        let seen = RefCell::new(Vec::new());
        let tx = tx("walk", &[w(n)]);
        let r = {
            let mut it = Interpreter::new(&schedule).with_hook(|s| {
                if s.depth == 0 && (f.start..f.end).contains(&s.pc) && cfg.blocks.iter().any(|b| b.start == s.pc) {
                    seen.borrow_mut().push(cfg.block_at(s.pc).unwrap());
                }
            });
            it.exec_tx(&mut d.world, &tx)
        };
        assert!(r.outcome.is_success(), "{:?}", r.outcome);
        for seg in segments(&seen.borrow(), &cfg.loop_heads) {
            assert!(
                enumerated.iter().any(|p| p.blocks == seg),
                "n={n}: executed {seg:?} is not an enumerated path"
            );
        }
    }
}
