//! IR → symbolic assembly.
//!
//! Locals live on the EVM stack and are reached with DUP/SWAP, so at most 16
//! words may be live at any point. Calling convention: the caller pushes the
//! return label, then the arguments left to right, then jumps. The callee
//! leaves its result (if any) in place of all of that and jumps back.

use bemp_core::ArithOp;
use bemp_evm::opcode::*;
use bemp_evm::word::from_bigint;
use bemp_evm::Word;

use crate::diag::{CompileError, ErrorKind, Result};
use crate::ir::{CmpOp, CoreFunction, Expr, ExprKind, FuncId, LocalId, Program, Ty};

use super::layout::*;
use super::sym::{FunctionInfo, JumpKind, Label, Macro, Meta, SymInstr, SymProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CodegenOptions {
    /// Also give private functions with word-only signatures a selector.
    /// Used to test private functions in isolation.
    pub expose_private: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Local(LocalId),
    Temp,
}

struct Gen<'p> {
    p: &'p Program,
    layout: &'p LayoutPlan,
    out: SymProgram,
    entries: Vec<Label>,
    stack: Vec<Slot>,
    fname: String,
}

fn unsupported(e: &Expr, what: &str) -> CompileError {
    CompileError::new(ErrorKind::UnsupportedConstruct, e.span, what.to_string())
}

/// Functions reachable from the dispatcher.
pub fn exposed(p: &Program, opts: CodegenOptions) -> Vec<FuncId> {
    p.functions
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            f.is_public()
                || (opts.expose_private
                    && f.param_types().iter().all(|t| t.is_scalar())
                    && (f.ret.is_scalar() || f.ret == Ty::Unit))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Word range check for a calldata argument of type `t`: returns
/// (offset added first, largest valid word) or `None` when every word is valid.
pub(crate) fn arg_range(t: Ty) -> Option<(Word, Word)> {
    let (bits, signed) = match t {
        Ty::Int(k) => (k.bits() as usize, k.is_signed()),
        Ty::Bool => (1, false),
        Ty::Address => (160, false),
        _ => return None,
    };
    if bits >= 256 {
        return None;
    }
    let max = (Word::from(1) << bits) - Word::from(1);
    let offset = if signed { Word::from(1) << (bits - 1) } else { Word::ZERO };
    Some((offset, max))
}

pub fn codegen(p: &Program, layout: &LayoutPlan, opts: CodegenOptions) -> Result<SymProgram> {
    let mut g = Gen { p, layout, out: SymProgram::default(), entries: Vec::new(), stack: Vec::new(), fname: String::new() };
    for f in &p.functions {
        let l = g.out.new_label(f.name.clone());
        g.entries.push(l);
        g.out.functions.push(FunctionInfo { name: f.name.clone(), entry: l, gas_checking: f.gas_checking });
    }
    g.dispatcher(&exposed(p, opts));
    for (id, f) in p.functions.iter().enumerate() {
        g.function(id, f)?;
    }
    Ok(g.out)
}

impl Gen<'_> {
    fn emit(&mut self, i: SymInstr) {
        self.out.instrs.push(i);
    }

    fn op(&mut self, b: u8) {
        self.emit(SymInstr::op(b));
    }

    fn push(&mut self, w: Word) {
        self.emit(SymInstr::push(w));
    }

    fn push_u64(&mut self, v: u64) {
        self.emit(SymInstr::push_u64(v));
    }

    fn label(&mut self, hint: &str) -> Label {
        let n = self.out.label_names.len();
        self.out.new_label(format!("{}_{hint}{n}", self.fname))
    }

    fn jump(&mut self, target: Label, kind: JumpKind) {
        self.emit(SymInstr::PushLabel(target));
        self.emit(SymInstr::Jump { conditional: false, kind });
    }

    fn branch(&mut self, target: Label) {
        self.emit(SymInstr::PushLabel(target));
        self.emit(SymInstr::Jump { conditional: true, kind: JumpKind::Branch });
    }

    fn revert_with(&mut self, name: &str) {
        self.push(exception_word(name));
        self.push_u64(0);
        self.op(MSTORE);
        self.push_u64(4);
        self.push_u64(0);
        self.op(REVERT);
    }

    fn dispatcher(&mut self, exposed: &[FuncId]) {
        self.fname = "dispatch".into();
        self.push_u64(HEAP_START);
        self.push_u64(FREE_POINTER);
        self.op(MSTORE);
        self.push(Word::from(1) << 224);
        self.push_u64(0);
        self.op(CALLDATALOAD);
        self.op(DIV);
        let stubs: Vec<Label> = exposed.iter().map(|f| self.label(&format!("{}_", self.p.functions[*f].name))).collect();
        for (f, stub) in exposed.iter().zip(&stubs) {
            self.op(dup_op(1));
            self.push(Word::from(selector(&self.p.functions[*f].name)));
            self.op(EQ);
            self.branch(*stub);
        }
        self.revert_with(UNKNOWN_SELECTOR);
        let any_check = exposed.iter().any(|f| self.p.functions[*f].param_types().into_iter().any(|t| arg_range(t).is_some()));
        // Only allocated when some argument is range checked, so every label is defined.
        let bad = if any_check { Some(self.label("bad_argument")) } else { None };
        for (&fid, &stub) in exposed.iter().zip(&stubs) {
            let f = &self.p.functions[fid];
            self.emit(SymInstr::LabelDef(stub));
            self.op(POP);
            let ret = self.label("ret");
            self.emit(SymInstr::PushLabel(ret));
            for (k, t) in f.param_types().into_iter().enumerate() {
                self.push_u64(4 + 32 * k as u64);
                self.op(CALLDATALOAD);
                if let (Some((offset, max)), Some(bad)) = (arg_range(t), bad) {
                    self.op(dup_op(1));
                    if offset != Word::ZERO {
                        self.push(offset);
                        self.op(ADD);
                    }
                    self.push(max);
                    self.op(LT);
                    self.branch(bad);
                }
            }
            self.emit(SymInstr::Macro(Macro::Call { callee: fid, target: self.entries[fid], ret }));
            if f.ret.words() == 1 {
                self.push_u64(0);
                self.op(MSTORE);
                self.push_u64(32);
            } else {
                self.push_u64(0);
            }
            self.push_u64(0);
            self.op(RETURN);
        }
        if let Some(bad) = bad {
            self.emit(SymInstr::LabelDef(bad));
            self.revert_with(BAD_ARGUMENT);
        }
    }

    fn function(&mut self, id: FuncId, f: &CoreFunction) -> Result<()> {
        self.fname = f.name.clone();
        self.emit(SymInstr::Meta(Meta::FunctionStart(id)));
        self.emit(SymInstr::LabelDef(self.entries[id]));
        self.stack = vec![Slot::Temp];
        let mut args = 0;
        for p in &f.params {
            if f.locals[*p].ty.words() == 1 {
                self.stack.push(Slot::Local(*p));
                args += 1;
            }
        }
        self.gen(&f.body)?;
        if f.body.ty != Ty::Never {
            self.emit(SymInstr::Macro(Macro::Return { args, result: f.ret.words() == 1 }));
        }
        self.emit(SymInstr::Meta(Meta::FunctionEnd(id)));
        Ok(())
    }

    /// Distance from the top (1 = top) of a local's slot.
    fn depth(&self, e: &Expr, l: LocalId) -> Result<usize> {
        let pos = self
            .stack
            .iter()
            .rposition(|s| *s == Slot::Local(l))
            .ok_or_else(|| unsupported(e, "local is not on the stack"))?;
        Ok(self.stack.len() - pos)
    }

    fn dup(&mut self, e: &Expr, n: usize) -> Result<()> {
        if !(1..=16).contains(&n) {
            return Err(unsupported(e, "expression needs more than 16 live stack words"));
        }
        self.op(dup_op(n as u8));
        Ok(())
    }

    fn swap(&mut self, e: &Expr, n: usize) -> Result<()> {
        if !(1..=16).contains(&n) {
            return Err(unsupported(e, "expression needs more than 16 live stack words"));
        }
        self.op(swap_op(n as u8));
        Ok(())
    }

    /// Generates `e`, leaving its words on the stack.
    fn gen(&mut self, e: &Expr) -> Result<()> {
        let base = self.stack.len();
        self.gen_inner(e)?;
        self.stack.truncate(base);
        if e.ty.words() == 1 {
            self.stack.push(Slot::Temp);
        }
        Ok(())
    }

    /// Removes `n` words from under the top `keep` (0 or 1) words.
    fn drop_under(&mut self, n: usize, keep: usize) {
        for _ in 0..n {
            if keep == 1 {
                self.op(swap_op(1));
            }
            self.op(POP);
        }
    }

    fn gen_inner(&mut self, e: &Expr) -> Result<()> {
        use ExprKind::*;
        match &e.kind {
            Lit(v) => self.push(from_bigint(v)),
            Bool(b) => self.push_u64(*b as u64),
            Unit => {}
            Local(l) => {
                if e.ty.words() == 1 {
                    let d = self.depth(e, *l)?;
                    self.dup(e, d)?;
                }
            }
            Let { local, value, body } => {
                self.gen(value)?;
                if value.ty == Ty::Never {
                    return Ok(());
                }
                let bound = value.ty.words() == 1;
                if bound {
                    *self.stack.last_mut().unwrap() = Slot::Local(*local);
                }
                self.gen(body)?;
                if bound && body.ty != Ty::Never {
                    self.drop_under(1, body.ty.words());
                }
            }
            Assign { local, value } => {
                self.gen(value)?;
                if value.ty.words() == 1 {
                    let d = self.depth(e, *local)?;
                    self.swap(e, d - 1)?;
                    self.op(POP);
                }
            }
            Seq(es) => {
                for (i, x) in es.iter().enumerate() {
                    self.gen(x)?;
                    if x.ty == Ty::Never {
                        break;
                    }
                    if i + 1 < es.len() && x.ty.words() == 1 {
                        self.op(POP);
                        self.stack.pop();
                    }
                }
            }
            If { cond, then, els } => {
                self.gen(cond)?;
                let l_then = self.label("then");
                let l_end = self.label("endif");
                self.branch(l_then);
                self.stack.pop();
                let mid = self.stack.len();
                self.gen(els)?;
                if els.ty != Ty::Never {
                    self.jump(l_end, JumpKind::Plain);
                }
                self.stack.truncate(mid);
                self.emit(SymInstr::LabelDef(l_then));
                self.gen(then)?;
                self.emit(SymInstr::LabelDef(l_end));
            }
            While { body, cond, .. } => {
                let head = self.label("loop");
                let exit = self.label("exit");
                self.emit(SymInstr::LabelDef(head));
                self.gen(cond)?;
                self.op(ISZERO);
                self.branch(exit);
                self.stack.pop();
                self.gen(body)?;
                if body.ty != Ty::Never {
                    self.jump(head, JumpKind::BackEdge);
                }
                self.emit(SymInstr::LabelDef(exit));
            }
            Match { scrutinee, arms, .. } => {
                self.gen(scrutinee)?;
                let end = self.label("endmatch");
                let n = arms.len();
                if n == 1 {
                    self.arm(e, &arms[0], end, true)?;
                } else {
                    // The tag sits above the pointer while dispatching.
                    let labels: Vec<Label> = (0..n - 1).map(|_| self.label("case")).collect();
                    self.op(dup_op(1));
                    self.op(MLOAD);
                    self.stack.push(Slot::Temp);
                    for (k, l) in labels.iter().enumerate() {
                        self.op(dup_op(1));
                        self.push_u64(k as u64);
                        self.op(EQ);
                        self.branch(*l);
                    }
                    let mid = self.stack.len();
                    self.op(POP);
                    self.stack.pop();
                    self.arm(e, &arms[n - 1], end, false)?;
                    for (k, l) in labels.iter().enumerate() {
                        self.stack.truncate(mid);
                        self.emit(SymInstr::LabelDef(*l));
                        self.op(POP);
                        self.stack.pop();
                        self.arm(e, &arms[k], end, k + 2 == n)?;
                    }
                }
                self.emit(SymInstr::LabelDef(end));
            }
            Ctor { adt, ctor, args } => {
                for a in args {
                    self.gen(a)?;
                }
                let size = self.layout.ctor_sizes[*adt][*ctor];
                self.emit(SymInstr::Macro(Macro::Alloc { size, tag: Some(*ctor as u64), fields: args.len() }));
            }
            Record { rec, fields } => {
                for a in fields {
                    self.gen(a)?;
                }
                let size = self.layout.record_sizes[*rec];
                self.emit(SymInstr::Macro(Macro::Alloc { size, tag: None, fields: fields.len() }));
            }
            Field { base: b, field, .. } => {
                self.gen(b)?;
                self.offset(record_field_offset(*field));
                self.op(MLOAD);
            }
            SetField { base: b, field, value, .. } => {
                self.gen(b)?;
                self.gen(value)?;
                self.op(swap_op(1));
                self.offset(record_field_offset(*field));
                self.op(MSTORE);
            }
            GlobalRead { slot } => {
                self.push(self.layout.global_slots[*slot]);
                self.op(SLOAD);
            }
            GlobalWrite { slot, value } => {
                self.gen(value)?;
                self.push(self.layout.global_slots[*slot]);
                self.op(SSTORE);
            }
            MapGet { map, key } => {
                self.gen(key)?;
                self.op(dup_op(1));
                self.push(map_value_base(*map));
                self.op(ADD);
                self.op(SLOAD);
                self.op(swap_op(1));
                self.is_member(*map);
                self.op(MUL);
            }
            MapMem { map, key } => {
                self.gen(key)?;
                self.is_member(*map);
            }
            MapSize { map } => {
                self.push(map_size_slot(*map));
                self.op(SLOAD);
            }
            MapSet { map, key, value } => {
                self.gen(key)?;
                self.gen(value)?;
                // [k, v]
                self.op(dup_op(2));
                self.push(map_value_base(*map));
                self.op(ADD);
                self.op(SSTORE);
                // [k] -> [presence slot, epoch + 1]
                self.push(map_presence_base(*map));
                self.op(ADD);
                self.current_mark(*map);
                self.op(dup_op(2));
                self.op(SLOAD);
                self.op(dup_op(2));
                self.op(EQ);
                let skip = self.label("present");
                self.branch(skip);
                self.op(dup_op(1));
                self.op(dup_op(3));
                self.op(SSTORE);
                self.push(map_size_slot(*map));
                self.op(SLOAD);
                self.push_u64(1);
                self.op(ADD);
                self.push(map_size_slot(*map));
                self.op(SSTORE);
                self.emit(SymInstr::LabelDef(skip));
                self.op(POP);
                self.op(POP);
            }
            MapClear { map } => {
                self.current_mark(*map);
                self.push(map_epoch_slot(*map));
                self.op(SSTORE);
                self.push_u64(0);
                self.push(map_size_slot(*map));
                self.op(SSTORE);
            }
            Call { func, args } => {
                let ret = self.label("ret");
                self.emit(SymInstr::PushLabel(ret));
                self.stack.push(Slot::Temp);
                for a in args {
                    self.gen(a)?;
                }
                self.emit(SymInstr::Macro(Macro::Call { callee: *func, target: self.entries[*func], ret }));
            }
            Arith { op, lhs, rhs } => {
                let signed = matches!(e.ty, Ty::Int(k) if k.is_signed());
                self.gen(lhs)?;
                self.gen(rhs)?;
                match op {
                    ArithOp::Add => self.op(ADD),
                    ArithOp::Mul => self.op(MUL),
                    ArithOp::Sub => {
                        self.op(swap_op(1));
                        self.op(SUB);
                    }
                    ArithOp::Div => {
                        self.op(swap_op(1));
                        self.op(if signed { SDIV } else { DIV });
                    }
                    ArithOp::Rem => {
                        self.op(swap_op(1));
                        self.op(if signed { SMOD } else { MOD });
                    }
                }
            }
            Compare { op, lhs, rhs } => {
                let signed = matches!(lhs.ty, Ty::Int(k) if k.is_signed());
                let (lt, gt) = if signed { (SLT, SGT) } else { (LT, GT) };
                self.gen(lhs)?;
                self.gen(rhs)?;
                // Operands are [a, b] with b on top; LT/GT compare top against second.
                match op {
                    CmpOp::Eq => self.op(EQ),
                    CmpOp::Ne => {
                        self.op(EQ);
                        self.op(ISZERO);
                    }
                    CmpOp::Lt => self.op(gt),
                    CmpOp::Gt => self.op(lt),
                    CmpOp::Le => {
                        self.op(lt);
                        self.op(ISZERO);
                    }
                    CmpOp::Ge => {
                        self.op(gt);
                        self.op(ISZERO);
                    }
                }
            }
            And(a, b) | Or(a, b) => {
                self.gen(a)?;
                let end = self.label("sc");
                self.op(dup_op(1));
                if matches!(e.kind, And(..)) {
                    self.op(ISZERO);
                }
                self.branch(end);
                self.op(POP);
                self.stack.pop();
                self.gen(b)?;
                self.emit(SymInstr::LabelDef(end));
            }
            Not(a) => {
                self.gen(a)?;
                self.op(ISZERO);
            }
            Raise(x) => {
                let name = self.p.exceptions[*x].clone();
                self.revert_with(&name);
            }
            AddGas { used, alloc } => self.emit(SymInstr::Meta(Meta::Annotation { used: *used, alloc: *alloc })),
            Send { to, amount } => {
                self.gen(to)?;
                self.gen(amount)?;
                self.emit(SymInstr::Macro(Macro::Send));
            }
            Emit { event, payload } => {
                self.gen(payload)?;
                self.push_u64(0);
                self.op(MSTORE);
                self.push(event_topic(&self.p.events[*event]));
                self.push_u64(32);
                self.push_u64(0);
                self.op(LOG1);
            }
            Caller => self.op(CALLER),
            CallValue => self.op(CALLVALUE),
            CallData(i) => {
                self.gen(i)?;
                self.push_u64(32);
                self.op(MUL);
                self.push_u64(4);
                self.op(ADD);
                self.op(CALLDATALOAD);
            }
            Implies(..) | Old(_) | Result | GasCounter | AllocCounter | LogicCall { .. } | ToMath(_) => {
                return Err(unsupported(e, "specification construct in executable code"));
            }
        }
        Ok(())
    }

    fn offset(&mut self, off: u64) {
        if off != 0 {
            self.push_u64(off);
            self.op(ADD);
        }
    }

    /// `[] -> [epoch + 1]`, the presence mark of live keys.
    fn current_mark(&mut self, map: usize) {
        self.push(map_epoch_slot(map));
        self.op(SLOAD);
        self.push_u64(1);
        self.op(ADD);
    }

    /// `[key] -> [key is present]`.
    fn is_member(&mut self, map: usize) {
        self.push(map_presence_base(map));
        self.op(ADD);
        self.op(SLOAD);
        self.current_mark(map);
        self.op(EQ);
    }

    /// One match arm with the scrutinee pointer on top of the stack.
    fn arm(&mut self, m: &Expr, arm: &crate::ir::MatchArm, end: Label, last: bool) -> Result<()> {
        let mut bound = 0;
        for (i, b) in arm.binders.iter().enumerate() {
            if let Some(b) = b {
                self.dup(m, bound + 1)?;
                self.offset(ctor_field_offset(i));
                self.op(MLOAD);
                self.stack.push(Slot::Local(*b));
                bound += 1;
            }
        }
        self.gen(&arm.body)?;
        if arm.body.ty != Ty::Never {
            self.drop_under(bound + 1, arm.body.ty.words());
            if !last {
                self.jump(end, JumpKind::Plain);
            }
        }
        Ok(())
    }
}
