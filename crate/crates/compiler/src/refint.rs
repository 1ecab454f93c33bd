//! Reference interpreter over the typed IR.
//!
//! Storage uses the same slot layout as compiled code, so storage deltas of
//! the two can be compared directly. In [`RefMode::SpecCheck`] it also
//! evaluates contracts (requires, ensures, loop invariants and variants) and
//! reports arithmetic overflow; in [`RefMode::Release`] arithmetic wraps the
//! way the EVM's does and contracts are ignored.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use bemp_core::{checked_arith, Address, ArithOp, BoundedInt, NumericError};
use bemp_evm::interp::Log;
use bemp_evm::word::{self, from_bigint, to_signed, to_unsigned};
use bemp_evm::{GasSchedule, Interpreter, Outcome, Tx, Word, World};
use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::backend::codegen::{exposed, CodegenOptions};
use crate::backend::layout::*;
use crate::ir::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefMode {
    #[default]
    SpecCheck,
    Release,
}

/// A contract or arithmetic failure found while interpreting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{function}: precondition #{index} does not hold")]
    Requires { function: String, index: usize },
    #[error("{function}: postcondition #{index} does not hold")]
    Ensures { function: String, index: usize },
    #[error("{function}: loop invariant #{index} does not hold")]
    Invariant { function: String, index: usize },
    #[error("{function}: variant does not decrease")]
    Variant { function: String },
    #[error("{function}: {error}")]
    Arithmetic { function: String, error: NumericError },
    #[error("{function}: send of {amount} exceeds the contract balance")]
    Send { function: String, amount: BigInt },
    #[error("{function}: `old` value is not available")]
    OldUnavailable { function: String },
    #[error("step budget exhausted")]
    Exhausted,
    #[error("call depth limit reached")]
    Depth,
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Unit,
    Adt(Rc<AdtValue>),
    Record(Rc<RefCell<Vec<Value>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdtValue {
    pub ctor: usize,
    pub fields: Vec<Value>,
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            (Value::Adt(a), Value::Adt(b)) => a == b,
            (Value::Record(a), Value::Record(b)) => *a.borrow() == *b.borrow(),
            _ => false,
        }
    }
}

impl Value {
    pub fn int(&self) -> &BigInt {
        match self {
            Value::Int(v) => v,
            other => panic!("expected an integer, found {other:?}"),
        }
    }

    pub fn bool(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            other => panic!("expected a boolean, found {other:?}"),
        }
    }

    /// The word a scalar occupies in storage, calldata or return data.
    pub fn to_word(&self) -> Word {
        match self {
            Value::Int(v) => from_bigint(v),
            Value::Bool(b) => word::from_bool(*b),
            other => panic!("{other:?} is not a scalar"),
        }
    }

    pub fn from_word(w: Word, ty: Ty) -> Value {
        match ty {
            Ty::Bool => Value::Bool(!w.is_zero()),
            Ty::Int(k) if k.is_signed() => Value::Int(to_signed(w)),
            _ => Value::Int(to_unsigned(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefOutcome {
    Return(Value),
    Revert(String),
    Violation(Violation),
    /// The caller could not pay the transaction value.
    Rejected,
}

impl RefOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, RefOutcome::Return(_))
    }

    /// The EVM outcome compiled code should produce, if there is one.
    pub fn to_evm(&self) -> Option<Outcome> {
        match self {
            RefOutcome::Return(Value::Unit) => Some(Outcome::Return(Vec::new())),
            RefOutcome::Return(v) => Some(Outcome::Return(v.to_word().to_be_bytes::<32>().to_vec())),
            RefOutcome::Revert(name) => {
                let tag = word::tag4(name);
                Some(Outcome::Revert { data: tag.to_vec(), tag: Some(tag) })
            }
            RefOutcome::Violation(_) => None,
            RefOutcome::Rejected => Some(Outcome::Fault(bemp_evm::FaultKind::InsufficientBalance)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefTxResult {
    pub outcome: RefOutcome,
    pub storage_delta: BTreeMap<Word, (Word, Word)>,
    pub logs: Vec<Log>,
    pub declared_gas: u64,
    pub declared_alloc: u64,
    /// Bytes of memory cells created.
    pub allocated: u64,
}

pub struct RefInterp<'p> {
    p: &'p Program,
    layout: LayoutPlan,
    mode: RefMode,
    fuel: u64,
    entry_points: Vec<FuncId>,
    schedule: GasSchedule,
}

const MAX_DEPTH: usize = 200;

impl<'p> RefInterp<'p> {
    pub fn new(p: &'p Program) -> Self {
        RefInterp {
            p,
            layout: LayoutPlan::new(p),
            mode: RefMode::SpecCheck,
            fuel: 10_000_000,
            entry_points: exposed(p, CodegenOptions::default()),
            schedule: GasSchedule::default(),
        }
    }

    pub fn mode(mut self, mode: RefMode) -> Self {
        self.mode = mode;
        self
    }

    /// Entry points as with the same codegen options.
    pub fn options(mut self, opts: CodegenOptions) -> Self {
        self.entry_points = exposed(self.p, opts);
        self
    }

    /// Evaluation step budget per transaction.
    pub fn fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    /// Runs a transaction the way the compiled dispatcher would.
    pub fn exec_tx(&self, world: &mut World, tx: &Tx) -> RefTxResult {
        let mut working = world.clone();
        let mut m = Machine::new(self, &mut working, tx);
        let outcome = if !m.world.transfer(tx.caller, tx.to, tx.value) {
            RefOutcome::Rejected
        } else {
            m.dispatch()
        };
        let (declared_gas, declared_alloc, allocated) = (m.declared_gas, m.declared_alloc, m.allocated);
        let logs = std::mem::take(&mut m.logs);
        let mut r = RefTxResult {
            outcome,
            storage_delta: BTreeMap::new(),
            logs: Vec::new(),
            declared_gas,
            declared_alloc,
            allocated,
        };
        if r.outcome.is_success() {
            r.storage_delta = storage_delta(world, &working, tx.to);
            r.logs = logs;
            *world = working;
        }
        r
    }

    /// Calls one function directly with the given arguments.
    pub fn call(&self, world: &mut World, tx: &Tx, func: FuncId, args: Vec<Value>) -> RefTxResult {
        let mut working = world.clone();
        let mut m = Machine::new(self, &mut working, tx);
        let outcome = if !m.world.transfer(tx.caller, tx.to, tx.value) {
            RefOutcome::Rejected
        } else {
            m.finish(func, args)
        };
        let (declared_gas, declared_alloc, allocated) = (m.declared_gas, m.declared_alloc, m.allocated);
        let logs = std::mem::take(&mut m.logs);
        let mut r = RefTxResult {
            outcome,
            storage_delta: BTreeMap::new(),
            logs: Vec::new(),
            declared_gas,
            declared_alloc,
            allocated,
        };
        if r.outcome.is_success() {
            r.storage_delta = storage_delta(world, &working, tx.to);
            r.logs = logs;
            *world = working;
        }
        r
    }
}

/// Slot → (before, after) for every slot of `contract` that differs.
pub fn storage_delta(before: &World, after: &World, contract: Address) -> BTreeMap<Word, (Word, Word)> {
    let (b, a) = (before.storage(contract), after.storage(contract));
    let mut out = BTreeMap::new();
    for slot in b.keys().chain(a.keys()) {
        let x = b.get(slot).copied().unwrap_or(Word::ZERO);
        let y = a.get(slot).copied().unwrap_or(Word::ZERO);
        if x != y {
            out.insert(*slot, (x, y));
        }
    }
    out
}

enum Ctl {
    Raise(ExnId),
    Violation(Violation),
}

type Eval<T> = std::result::Result<T, Ctl>;

struct Frame<'p> {
    func: Option<FuncId>,
    name: &'p str,
    locals: Vec<Value>,
    old: HashMap<*const Expr, Value>,
    result: Option<Value>,
    variant: Option<BigInt>,
}

struct Machine<'a, 'p> {
    ri: &'a RefInterp<'p>,
    p: &'p Program,
    world: &'a mut World,
    this: Address,
    caller: Address,
    value: Word,
    calldata: Vec<u8>,
    declared_gas: u64,
    declared_alloc: u64,
    allocated: u64,
    logs: Vec<Log>,
    steps: u64,
    depth: usize,
}

fn arith_word(op: ArithOp, a: Word, b: Word, signed: bool) -> Word {
    match op {
        ArithOp::Add => a.wrapping_add(b),
        ArithOp::Sub => a.wrapping_sub(b),
        ArithOp::Mul => a.wrapping_mul(b),
        ArithOp::Div if signed => word::sdiv(a, b),
        ArithOp::Rem if signed => word::smod(a, b),
        ArithOp::Div => a.checked_div(b).unwrap_or(Word::ZERO),
        ArithOp::Rem => a.checked_rem(b).unwrap_or(Word::ZERO),
    }
}

impl<'a, 'p> Machine<'a, 'p> {
    fn new(ri: &'a RefInterp<'p>, world: &'a mut World, tx: &Tx) -> Self {
        Machine {
            ri,
            p: ri.p,
            world,
            this: tx.to,
            caller: tx.caller,
            value: tx.value,
            calldata: tx.calldata.clone(),
            declared_gas: 0,
            declared_alloc: 0,
            allocated: 0,
            logs: Vec::new(),
            steps: 0,
            depth: 0,
        }
    }

    fn spec(&self) -> bool {
        self.ri.mode == RefMode::SpecCheck
    }

    fn sload(&self, slot: Word) -> Word {
        self.world.sload(self.this, slot)
    }

    fn sstore(&mut self, slot: Word, v: Word) {
        self.world.sstore(self.this, slot, v);
    }

    /// Calldata word at byte `offset`, zero-padded.
    fn calldata_word(&self, offset: Word) -> Word {
        let mut buf = [0u8; 32];
        if offset < Word::from(self.calldata.len()) {
            let off = offset.to::<usize>();
            for (k, b) in buf.iter_mut().enumerate() {
                *b = self.calldata.get(off + k).copied().unwrap_or(0);
            }
        }
        Word::from_be_bytes(buf)
    }

    fn dispatch(&mut self) -> RefOutcome {
        let sel = self.calldata_word(Word::ZERO) >> 224;
        let Some(&f) =
            self.ri.entry_points.iter().find(|f| Word::from(selector(&self.p.functions[**f].name)) == sel)
        else {
            return RefOutcome::Revert(UNKNOWN_SELECTOR.into());
        };
        let func = &self.p.functions[f];
        let mut args = Vec::new();
        for (k, t) in func.param_types().into_iter().enumerate() {
            let w = self.calldata_word(Word::from(4 + 32 * k));
            if let Some((offset, max)) = arg_range_of(t) {
                if w.wrapping_add(offset) > max {
                    return RefOutcome::Revert(BAD_ARGUMENT.into());
                }
            }
            args.push(Value::from_word(w, t));
        }
        self.finish(f, args)
    }

    fn finish(&mut self, f: FuncId, args: Vec<Value>) -> RefOutcome {
        match self.call(None, f, args) {
            Ok(v) => RefOutcome::Return(v),
            Err(Ctl::Raise(x)) => RefOutcome::Revert(self.p.exceptions[x].clone()),
            Err(Ctl::Violation(v)) => RefOutcome::Violation(v),
        }
    }

    fn violation<T>(&self, v: Violation) -> Eval<T> {
        Err(Ctl::Violation(v))
    }

    fn call(&mut self, caller: Option<&Frame<'p>>, f: FuncId, args: Vec<Value>) -> Eval<Value> {
        if self.depth >= MAX_DEPTH {
            return self.violation(Violation::Depth);
        }
        let func = &self.p.functions[f];
        let mut fr = Frame {
            func: Some(f),
            name: &func.name,
            locals: vec![Value::Unit; func.locals.len()],
            old: HashMap::new(),
            result: None,
            variant: None,
        };
        for (p, a) in func.params.iter().zip(args) {
            fr.locals[*p] = a;
        }
        if self.spec() {
            for (i, r) in func.requires.iter().enumerate() {
                if !self.eval(&mut fr, r)?.bool() {
                    return self.violation(Violation::Requires { function: func.name.clone(), index: i });
                }
            }
            if let Some(v) = &func.variant {
                let now = self.eval(&mut fr, v)?.int().clone();
                if let Some(outer) = caller.filter(|c| c.func == Some(f)).and_then(|c| c.variant.as_ref()) {
                    if now.is_negative() || &now >= outer {
                        return self.violation(Violation::Variant { function: func.name.clone() });
                    }
                }
                fr.variant = Some(now);
            }
            let mut olds = Vec::new();
            for e in func.ensures.iter().chain(func.variant.iter()) {
                collect_old(e, &mut olds);
            }
            collect_loop_old(&func.body, &mut olds);
            for o in olds {
                if let ExprKind::Old(inner) = &o.kind {
                    if let Ok(v) = self.eval(&mut fr, inner) {
                        fr.old.insert(o as *const Expr, v);
                    }
                }
            }
        }
        self.depth += 1;
        let r = self.eval(&mut fr, &func.body);
        self.depth -= 1;
        let v = r?;
        if self.spec() {
            fr.result = Some(v.clone());
            for (i, en) in func.ensures.iter().enumerate() {
                if !self.eval(&mut fr, en)?.bool() {
                    return self.violation(Violation::Ensures { function: func.name.clone(), index: i });
                }
            }
        }
        Ok(v)
    }

    fn arith(&self, fr: &Frame<'p>, op: ArithOp, ty: Ty, a: &BigInt, b: &BigInt) -> Eval<Value> {
        let kind = match ty {
            Ty::Int(k) => k,
            _ => {
                return match op.apply_unbounded(a, b) {
                    Some(v) => Ok(Value::Int(v)),
                    None => self.violation(Violation::Arithmetic {
                        function: fr.name.to_string(),
                        error: NumericError::DivisionByZero,
                    }),
                };
            }
        };
        if self.spec() {
            let bound = |v: &BigInt| BoundedInt::new(kind, v.clone());
            let r = match (bound(a), bound(b)) {
                (Ok(x), Ok(y)) => checked_arith(op, &x, &y),
                (Err(e), _) | (_, Err(e)) => Err(e),
            };
            return match r {
                Ok(v) => Ok(Value::Int(v.value().clone())),
                Err(error) => self.violation(Violation::Arithmetic { function: fr.name.to_string(), error }),
            };
        }
        let w = arith_word(op, from_bigint(a), from_bigint(b), kind.is_signed());
        Ok(Value::from_word(w, ty))
    }

    fn tick(&mut self) -> Eval<()> {
        self.steps += 1;
        if self.steps > self.ri.fuel {
            return self.violation(Violation::Exhausted);
        }
        Ok(())
    }

    fn is_member(&self, map: MapId, key: Word) -> bool {
        self.sload(map_presence_base(map).wrapping_add(key)) == self.sload(map_epoch_slot(map)).wrapping_add(Word::from(1))
    }

    /// Storage word for a map key, `None` when a spec-level key lies outside
    /// the key type.
    fn map_key(&self, map: MapId, key: &Value) -> Option<Word> {
        let kt = self.p.maps[map].key;
        match key {
            Value::Int(k) => {
                let ok = match kt {
                    Ty::Int(kind) => kind.contains(k),
                    Ty::Address => !k.is_negative() && k.bits() <= 160,
                    _ => true,
                };
                ok.then(|| from_bigint(k))
            }
            other => Some(other.to_word()),
        }
    }

    /// Evaluation recurses over both the expression tree and program calls,
    /// so the stack is grown on demand rather than bounded by the thread's.
    fn eval(&mut self, fr: &mut Frame<'p>, e: &Expr) -> Eval<Value> {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.eval_expr(fr, e))
    }

    fn eval_expr(&mut self, fr: &mut Frame<'p>, e: &Expr) -> Eval<Value> {
        use ExprKind::*;
        self.tick()?;
        Ok(match &e.kind {
            Lit(v) => Value::Int(v.clone()),
            Bool(b) => Value::Bool(*b),
            Unit => Value::Unit,
            Local(l) => fr.locals[*l].clone(),
            Let { local, value, body } => {
                let v = self.eval(fr, value)?;
                fr.locals[*local] = v;
                self.eval(fr, body)?
            }
            Assign { local, value } => {
                let v = self.eval(fr, value)?;
                fr.locals[*local] = v;
                Value::Unit
            }
            Seq(es) => {
                let mut last = Value::Unit;
                for x in es {
                    last = self.eval(fr, x)?;
                }
                last
            }
            If { cond, then, els } => {
                if self.eval(fr, cond)?.bool() {
                    self.eval(fr, then)?
                } else {
                    self.eval(fr, els)?
                }
            }
            While { cond, invariants, variant, body } => {
                loop {
                    if self.spec() {
                        for (i, inv) in invariants.iter().enumerate() {
                            if !self.eval(fr, inv)?.bool() {
                                return self.violation(Violation::Invariant { function: fr.name.to_string(), index: i });
                            }
                        }
                    }
                    if !self.eval(fr, cond)?.bool() {
                        break;
                    }
                    let before = match (self.spec(), variant) {
                        (true, Some(v)) => Some(self.eval(fr, v)?.int().clone()),
                        _ => None,
                    };
                    if before.as_ref().is_some_and(|b| b.is_negative()) {
                        return self.violation(Violation::Variant { function: fr.name.to_string() });
                    }
                    self.eval(fr, body)?;
                    if let (Some(b), Some(v)) = (before, variant) {
                        if self.eval(fr, v)?.int() >= &b {
                            return self.violation(Violation::Variant { function: fr.name.to_string() });
                        }
                    }
                }
                Value::Unit
            }
            Match { scrutinee, arms, .. } => {
                let Value::Adt(v) = self.eval(fr, scrutinee)? else {
                    unreachable!("match on a non-constructor value")
                };
                let arm = &arms[v.ctor];
                for (b, f) in arm.binders.iter().zip(&v.fields) {
                    if let Some(b) = b {
                        fr.locals[*b] = f.clone();
                    }
                }
                self.eval(fr, &arm.body)?
            }
            Ctor { adt, ctor, args } => {
                let mut fields = Vec::with_capacity(args.len());
                for a in args {
                    fields.push(self.eval(fr, a)?);
                }
                self.allocated += self.ri.layout.ctor_sizes[*adt][*ctor];
                Value::Adt(Rc::new(AdtValue { ctor: *ctor, fields }))
            }
            Record { rec, fields } => {
                let mut vs = Vec::with_capacity(fields.len());
                for a in fields {
                    vs.push(self.eval(fr, a)?);
                }
                self.allocated += self.ri.layout.record_sizes[*rec];
                Value::Record(Rc::new(RefCell::new(vs)))
            }
            Field { base, field, .. } => {
                let Value::Record(r) = self.eval(fr, base)? else { unreachable!("field of a non-record") };
                let v = r.borrow()[*field].clone();
                v
            }
            SetField { base, field, value, .. } => {
                let Value::Record(r) = self.eval(fr, base)? else { unreachable!("field of a non-record") };
                let v = self.eval(fr, value)?;
                r.borrow_mut()[*field] = v;
                Value::Unit
            }
            GlobalRead { slot } => Value::from_word(self.sload(self.ri.layout.global_slots[*slot]), e.ty),
            GlobalWrite { slot, value } => {
                let v = self.eval(fr, value)?.to_word();
                self.sstore(self.ri.layout.global_slots[*slot], v);
                Value::Unit
            }
            MapGet { map, key } => {
                let k = self.eval(fr, key)?;
                match self.map_key(*map, &k) {
                    Some(k) if self.is_member(*map, k) => {
                        Value::from_word(self.sload(map_value_base(*map).wrapping_add(k)), e.ty)
                    }
                    _ => Value::from_word(Word::ZERO, e.ty),
                }
            }
            MapMem { map, key } => {
                let k = self.eval(fr, key)?;
                Value::Bool(self.map_key(*map, &k).is_some_and(|k| self.is_member(*map, k)))
            }
            MapSize { map } => Value::Int(to_unsigned(self.sload(map_size_slot(*map)))),
            MapSet { map, key, value } => {
                let k = self.eval(fr, key)?.to_word();
                let v = self.eval(fr, value)?.to_word();
                self.sstore(map_value_base(*map).wrapping_add(k), v);
                if !self.is_member(*map, k) {
                    let mark = self.sload(map_epoch_slot(*map)).wrapping_add(Word::from(1));
                    self.sstore(map_presence_base(*map).wrapping_add(k), mark);
                    let size = self.sload(map_size_slot(*map)).wrapping_add(Word::from(1));
                    self.sstore(map_size_slot(*map), size);
                }
                Value::Unit
            }
            MapClear { map } => {
                let mark = self.sload(map_epoch_slot(*map)).wrapping_add(Word::from(1));
                self.sstore(map_epoch_slot(*map), mark);
                self.sstore(map_size_slot(*map), Word::ZERO);
                Value::Unit
            }
            Call { func, args } => {
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(fr, a)?);
                }
                self.call(Some(fr), *func, vs)?
            }
            Arith { op, lhs, rhs } => {
                let a = self.eval(fr, lhs)?;
                let b = self.eval(fr, rhs)?;
                self.arith(fr, *op, e.ty, a.int(), b.int())?
            }
            Compare { op, lhs, rhs } => {
                let a = self.eval(fr, lhs)?;
                let b = self.eval(fr, rhs)?;
                let ord = match (&a, &b) {
                    (Value::Int(x), Value::Int(y)) => x.cmp(y),
                    (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
                    _ => unreachable!("comparison of non-scalars"),
                };
                Value::Bool(op.eval(ord))
            }
            And(a, b) => Value::Bool(self.eval(fr, a)?.bool() && self.eval(fr, b)?.bool()),
            Or(a, b) => Value::Bool(self.eval(fr, a)?.bool() || self.eval(fr, b)?.bool()),
            Implies(a, b) => Value::Bool(!self.eval(fr, a)?.bool() || self.eval(fr, b)?.bool()),
            Not(a) => Value::Bool(!self.eval(fr, a)?.bool()),
            Raise(x) => return Err(Ctl::Raise(*x)),
            AddGas { used, alloc } => {
                self.declared_gas += used;
                self.declared_alloc += alloc;
                Value::Unit
            }
            Send { to, amount } => {
                let to = self.eval(fr, to)?;
                let amount = self.eval(fr, amount)?;
                let w = amount.to_word();
                if self.spec() && w > self.world.balance(self.this) {
                    return self.violation(Violation::Send { function: fr.name.to_string(), amount: amount.int().clone() });
                }
                let to = word::to_address(to.to_word());
                Interpreter::new(&self.ri.schedule).call_with_stipend(self.world, self.this, to, w);
                Value::Unit
            }
            Emit { event, payload } => {
                let v = self.eval(fr, payload)?.to_word();
                self.logs.push(Log {
                    address: self.this,
                    topic: event_topic(&self.p.events[*event]),
                    data: v.to_be_bytes::<32>().to_vec(),
                });
                Value::Unit
            }
            Caller => Value::Int(self.caller.to_bigint()),
            CallValue => Value::Int(to_unsigned(self.value)),
            CallData(i) => {
                let i = self.eval(fr, i)?.to_word();
                let off = i.wrapping_mul(Word::from(32)).wrapping_add(Word::from(4));
                Value::Int(to_unsigned(self.calldata_word(off)))
            }
            Old(_) => match fr.old.get(&(e as *const Expr)) {
                Some(v) => v.clone(),
                None => return self.violation(Violation::OldUnavailable { function: fr.name.to_string() }),
            },
            Result => fr.result.clone().expect("`result` outside a postcondition"),
            GasCounter => Value::Int(BigInt::from(self.declared_gas)),
            AllocCounter => Value::Int(BigInt::from(self.declared_alloc)),
            LogicCall { func, args } => {
                let l = &self.p.logic[*func];
                let mut inner = Frame {
                    func: None,
                    name: &l.name,
                    locals: vec![Value::Unit; l.locals.len()],
                    old: HashMap::new(),
                    result: None,
                    variant: None,
                };
                for (p, a) in l.params.iter().zip(args) {
                    inner.locals[*p] = self.eval(fr, a)?;
                }
                self.eval(&mut inner, &l.body)?
            }
            ToMath(a) => self.eval(fr, a)?,
        })
    }
}

fn arg_range_of(t: Ty) -> Option<(Word, Word)> {
    crate::backend::codegen::arg_range(t)
}

fn collect_old<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
    if matches!(e.kind, ExprKind::Old(_)) {
        out.push(e);
    }
    for c in e.children() {
        collect_old(c, out);
    }
}

/// `old` inside loop invariants and variants refers to function entry too.
fn collect_loop_old<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
    if let ExprKind::While { invariants, variant, .. } = &e.kind {
        for i in invariants.iter().chain(variant.iter().map(|b| &**b)) {
            collect_old(i, out);
        }
    }
    for c in e.children() {
        collect_loop_old(c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bemp_core::IntKind;

    #[test]
    fn release_arithmetic_wraps_like_the_evm() {
        let w = arith_word(ArithOp::Sub, Word::ZERO, Word::from(1), false);
        assert_eq!(w, Word::MAX);
        assert_eq!(arith_word(ArithOp::Div, Word::from(5), Word::ZERO, false), Word::ZERO);
        let k = IntKind::UINT32;
        assert!(!k.contains(&to_unsigned(w)));
    }
}
