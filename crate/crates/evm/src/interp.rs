//! Gas-metered interpreter for the supported opcode subset.
//!
//! A transaction runs against a private copy of the world and is committed
//! only when it halts with STOP or RETURN. Value-carrying CALLs run the callee
//! with the 2300 stipend; the transfer itself is kept even if the callee fails.

use std::collections::BTreeMap;
use std::fmt;

use bemp_core::Address;
use num_bigint::BigInt;

use crate::asm::jumpdests;
use crate::opcode::{self, *};
use crate::schedule::{GasSchedule, CALL_STIPEND, MEMORY_WORD_GAS};
use crate::word::{self, from_bool, Word};
use crate::world::World;

pub const STACK_LIMIT: usize = 1024;
pub const CALL_DEPTH_LIMIT: usize = 1024;
/// Memory offsets past this bound cost more gas than any u64 limit can pay.
const MEMORY_CEILING: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    StackUnderflow,
    StackOverflow,
    InvalidJump(usize),
    InvalidOpcode(u8),
    InsufficientBalance,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::StackUnderflow => f.write_str("stack underflow"),
            FaultKind::StackOverflow => f.write_str("stack overflow"),
            FaultKind::InvalidJump(t) => write!(f, "invalid jump to 0x{t:x}"),
            FaultKind::InvalidOpcode(b) => write!(f, "invalid opcode 0x{b:02x}"),
            FaultKind::InsufficientBalance => f.write_str("caller cannot pay the call value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Return(Vec<u8>),
    /// `tag` is the first four bytes of the revert data, if there are four.
    Revert { data: Vec<u8>, tag: Option<[u8; 4]> },
    OutOfGas,
    Fault(FaultKind),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Return(_))
    }

    pub fn revert_tag(&self) -> Option<[u8; 4]> {
        match self {
            Outcome::Revert { tag, .. } => *tag,
            _ => None,
        }
    }

    /// The returned bytes read as one big-endian word, if exactly 32 bytes came back.
    pub fn return_word(&self) -> Option<Word> {
        match self {
            Outcome::Return(b) if b.len() == 32 => Some(Word::from_be_slice(b)),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Return(b) => write!(f, "return 0x{}", hex::encode(b)),
            Outcome::Revert { tag: Some(t), .. } => write!(f, "revert 0x{}", hex::encode(t)),
            Outcome::Revert { data, .. } => write!(f, "revert 0x{}", hex::encode(data)),
            Outcome::OutOfGas => f.write_str("out of gas"),
            Outcome::Fault(k) => write!(f, "fault: {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Log {
    pub address: Address,
    pub topic: Word,
    pub data: Vec<u8>,
}

/// A transaction against one contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tx {
    pub to: Address,
    pub caller: Address,
    pub value: Word,
    pub calldata: Vec<u8>,
    pub gas_limit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxResult {
    pub outcome: Outcome,
    pub gas_used: u64,
    /// Slot → (before, after) for the called contract; empty unless committed.
    pub storage_delta: BTreeMap<Word, (Word, Word)>,
    pub logs: Vec<Log>,
    pub declared_gas: u64,
    pub declared_alloc: u64,
    /// Part of `gas_used` spent on memory expansion.
    pub memory_gas: u64,
    pub memory_high_water: usize,
    pub trace: Vec<String>,
}

/// Declared (used, allocation) amounts keyed by the byte offset they precede.
pub type Annotations = BTreeMap<usize, (u64, u64)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    Stop,
    Return(Vec<u8>),
    Revert(Vec<u8>),
    OutOfGas,
    Fault(FaultKind),
}

/// Per-frame environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameEnv {
    pub address: Address,
    pub caller: Address,
    pub value: Word,
    pub calldata: Vec<u8>,
}

/// State of one executing frame.
#[derive(Debug, Clone)]
pub struct MachineState {
    pub pc: usize,
    pub stack: Vec<Word>,
    pub memory: Vec<u8>,
    pub gas_remaining: u64,
    pub declared_gas: u64,
    pub declared_alloc: u64,
    pub memory_gas: u64,
    pub logs: Vec<Log>,
    pub env: FrameEnv,
    pub depth: usize,
    code: Vec<u8>,
    valid_jumps: Vec<bool>,
}

impl MachineState {
    pub fn new(code: Vec<u8>, env: FrameEnv, gas: u64, depth: usize) -> Self {
        let valid_jumps = jumpdests(&code);
        MachineState {
            pc: 0,
            stack: Vec::new(),
            memory: Vec::new(),
            gas_remaining: gas,
            declared_gas: 0,
            declared_alloc: 0,
            memory_gas: 0,
            logs: Vec::new(),
            env,
            depth,
            code,
            valid_jumps,
        }
    }

    pub fn code(&self) -> &[u8] {
        &self.code
    }

    fn charge(&mut self, amount: u64) -> Result<(), Halt> {
        if self.gas_remaining < amount {
            self.gas_remaining = 0;
            return Err(Halt::OutOfGas);
        }
        self.gas_remaining -= amount;
        Ok(())
    }

    fn pop(&mut self) -> Result<Word, Halt> {
        self.stack.pop().ok_or(Halt::Fault(FaultKind::StackUnderflow))
    }

    fn push(&mut self, w: Word) -> Result<(), Halt> {
        if self.stack.len() >= STACK_LIMIT {
            return Err(Halt::Fault(FaultKind::StackOverflow));
        }
        self.stack.push(w);
        Ok(())
    }

    /// Grows memory to cover `[offset, offset + size)`, charging 3 gas per new word.
    fn expand(&mut self, offset: Word, size: Word) -> Result<(usize, usize), Halt> {
        if size.is_zero() {
            return Ok((0, 0));
        }
        let ceiling = Word::from(MEMORY_CEILING);
        if offset >= ceiling || size >= ceiling {
            self.gas_remaining = 0;
            return Err(Halt::OutOfGas);
        }
        let (off, len) = (offset.to::<u64>(), size.to::<u64>());
        let end = off + len;
        let words = end.div_ceil(32);
        let have = (self.memory.len() / 32) as u64;
        if words > have {
            let cost = (words - have) * MEMORY_WORD_GAS;
            self.charge(cost)?;
            self.memory_gas += cost;
            self.memory.resize(words as usize * 32, 0);
        }
        Ok((off as usize, len as usize))
    }

    fn read_memory(&mut self, offset: Word, size: Word) -> Result<Vec<u8>, Halt> {
        let (off, len) = self.expand(offset, size)?;
        Ok(self.memory[off..off + len].to_vec())
    }

    /// Reads a word directly, without charging or expanding; zero past the end.
    pub fn peek_word(&self, offset: usize) -> Word {
        let mut buf = [0u8; 32];
        for (k, b) in buf.iter_mut().enumerate() {
            *b = self.memory.get(offset + k).copied().unwrap_or(0);
        }
        Word::from_be_bytes(buf)
    }
}

/// What a step hook sees, before the instruction at `pc` executes.
pub struct StepView<'s> {
    pub depth: usize,
    pub pc: usize,
    pub op: u8,
    pub gas_remaining: u64,
    pub memory_gas: u64,
    pub declared_gas: u64,
    pub declared_alloc: u64,
    pub stack: &'s [Word],
    pub memory: &'s [u8],
}

type Hook<'a> = Box<dyn FnMut(&StepView<'_>) + 'a>;

pub struct Interpreter<'a> {
    schedule: &'a GasSchedule,
    annotations: Annotations,
    trace: Option<Vec<String>>,
    hook: Option<Hook<'a>>,
}

impl<'a> Interpreter<'a> {
    pub fn new(schedule: &'a GasSchedule) -> Self {
        Interpreter { schedule, annotations: Annotations::new(), trace: None, hook: None }
    }

    /// Declared-cost annotations for the top-level contract's code.
    pub fn with_annotations(mut self, annotations: Annotations) -> Self {
        self.annotations = annotations;
        self
    }

    /// Records one trace line per executed step.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn with_hook(mut self, hook: impl FnMut(&StepView<'_>) + 'a) -> Self {
        self.hook = Some(Box::new(hook));
        self
    }

    /// Runs a transaction. `world` changes only if the outcome is a return.
    pub fn exec_tx(&mut self, world: &mut World, tx: &Tx) -> TxResult {
        let mut result = TxResult {
            outcome: Outcome::Fault(FaultKind::InsufficientBalance),
            gas_used: 0,
            storage_delta: BTreeMap::new(),
            logs: Vec::new(),
            declared_gas: 0,
            declared_alloc: 0,
            memory_gas: 0,
            memory_high_water: 0,
            trace: Vec::new(),
        };
        let mut working = world.clone();
        if !working.transfer(tx.caller, tx.to, tx.value) {
            return result;
        }
        let env = FrameEnv { address: tx.to, caller: tx.caller, value: tx.value, calldata: tx.calldata.clone() };
        let mut st = MachineState::new(working.code(tx.to).to_vec(), env, tx.gas_limit, 0);
        let halt = self.run(&mut st, &mut working);

        result.declared_gas = st.declared_gas;
        result.declared_alloc = st.declared_alloc;
        result.memory_gas = st.memory_gas;
        result.memory_high_water = st.memory.len();
        result.trace = self.trace.as_mut().map(std::mem::take).unwrap_or_default();
        result.gas_used = tx.gas_limit - st.gas_remaining;
        result.outcome = match halt {
            Halt::Stop => Outcome::Return(Vec::new()),
            Halt::Return(data) => Outcome::Return(data),
            Halt::Revert(data) => {
                let tag = data.get(..4).map(|t| [t[0], t[1], t[2], t[3]]);
                Outcome::Revert { data, tag }
            }
            Halt::OutOfGas => Outcome::OutOfGas,
            Halt::Fault(k) => Outcome::Fault(k),
        };
        if matches!(result.outcome, Outcome::OutOfGas | Outcome::Fault(_)) {
            result.gas_used = tx.gas_limit;
        }
        if result.outcome.is_success() {
            let before = world.storage(tx.to);
            let after = working.storage(tx.to);
            for slot in before.keys().chain(after.keys()) {
                let (b, a) = (
                    before.get(slot).copied().unwrap_or(Word::ZERO),
                    after.get(slot).copied().unwrap_or(Word::ZERO),
                );
                if a != b {
                    result.storage_delta.insert(*slot, (b, a));
                }
            }
            result.logs = st.logs;
            *world = working;
        }
        result
    }

    /// Sends `value` from `from` to `callee` the way a compiled `send` does:
    /// the callee runs with exactly the stipend and its success is reported
    /// but meant to be discarded. The transfer stands even if the callee fails.
    pub fn call_with_stipend(&mut self, world: &mut World, from: Address, callee: Address, value: Word) -> bool {
        let mut logs = Vec::new();
        self.sub_call(world, from, callee, value, 0, Vec::new(), 1, &mut logs).0
    }

    /// Steps until the frame halts.
    pub fn run(&mut self, st: &mut MachineState, world: &mut World) -> Halt {
        loop {
            if let Some(h) = self.step(st, world) {
                return h;
            }
        }
    }

    /// Executes one instruction; returns the halt reason if execution ended.
    pub fn step(&mut self, st: &mut MachineState, world: &mut World) -> Option<Halt> {
        match self.step_inner(st, world) {
            Ok(()) => None,
            Err(h) => {
                if matches!(h, Halt::OutOfGas | Halt::Fault(_)) {
                    st.gas_remaining = 0;
                }
                Some(h)
            }
        }
    }

    fn observe(&mut self, st: &MachineState, op: u8) {
        if let Some(trace) = self.trace.as_mut() {
            let top: Vec<String> = st.stack.iter().rev().take(4).map(|w| format!("0x{w:x}")).collect();
            trace.push(format!(
                "pc=0x{:x} op={} gas={} stack=[{}]",
                st.pc,
                Mnemonic(op),
                st.gas_remaining,
                top.join(", ")
            ));
        }
        if let Some(hook) = self.hook.as_mut() {
            hook(&StepView {
                depth: st.depth,
                pc: st.pc,
                op,
                gas_remaining: st.gas_remaining,
                memory_gas: st.memory_gas,
                declared_gas: st.declared_gas,
                declared_alloc: st.declared_alloc,
                stack: &st.stack,
                memory: &st.memory,
            });
        }
    }

    fn step_inner(&mut self, st: &mut MachineState, world: &mut World) -> Result<(), Halt> {
        let Some(&op) = st.code.get(st.pc) else {
            return Err(Halt::Stop);
        };
        if st.depth == 0 {
            if let Some(&(used, alloc)) = self.annotations.get(&st.pc) {
                st.declared_gas += used;
                st.declared_alloc += alloc;
            }
        }
        self.observe(st, op);
        if opcode::info(op).is_none() || op == CREATE {
            return Err(Halt::Fault(FaultKind::InvalidOpcode(op)));
        }
        st.charge(self.schedule.cost(op))?;
        let mut next = st.pc + 1 + opcode::immediate_len(op);

        match op {
            STOP => return Err(Halt::Stop),
            ADD | MUL | SUB | DIV | SDIV | MOD | SMOD | LT | GT | SLT | SGT | EQ | AND | OR => {
                let a = st.pop()?;
                let b = st.pop()?;
                let r = match op {
                    ADD => a.wrapping_add(b),
                    MUL => a.wrapping_mul(b),
                    SUB => a.wrapping_sub(b),
                    DIV => a.checked_div(b).unwrap_or(Word::ZERO),
                    SDIV => word::sdiv(a, b),
                    MOD => a.checked_rem(b).unwrap_or(Word::ZERO),
                    SMOD => word::smod(a, b),
                    LT => from_bool(a < b),
                    GT => from_bool(a > b),
                    SLT => from_bool(word::slt(a, b)),
                    SGT => from_bool(word::slt(b, a)),
                    EQ => from_bool(a == b),
                    AND => a & b,
                    _ => a | b,
                };
                st.push(r)?;
            }
            ISZERO => {
                let a = st.pop()?;
                st.push(from_bool(a.is_zero()))?;
            }
            NOT => {
                let a = st.pop()?;
                st.push(!a)?;
            }
            CALLER => st.push(word::from_address(st.env.caller))?,
            CALLVALUE => st.push(st.env.value)?,
            CALLDATALOAD => {
                let off = st.pop()?;
                let mut buf = [0u8; 32];
                if off < Word::from(st.env.calldata.len()) {
                    let off = off.to::<usize>();
                    for (k, b) in buf.iter_mut().enumerate() {
                        *b = st.env.calldata.get(off + k).copied().unwrap_or(0);
                    }
                }
                st.push(Word::from_be_bytes(buf))?;
            }
            CALLDATASIZE => st.push(Word::from(st.env.calldata.len()))?,
            POP => {
                st.pop()?;
            }
            MLOAD => {
                let off = st.pop()?;
                let (o, _) = st.expand(off, Word::from(32))?;
                let w = st.peek_word(o);
                st.push(w)?;
            }
            MSTORE => {
                let off = st.pop()?;
                let v = st.pop()?;
                let (o, _) = st.expand(off, Word::from(32))?;
                st.memory[o..o + 32].copy_from_slice(&v.to_be_bytes::<32>());
            }
            SLOAD => {
                let slot = st.pop()?;
                st.push(world.sload(st.env.address, slot))?;
            }
            SSTORE => {
                let slot = st.pop()?;
                let v = st.pop()?;
                world.sstore(st.env.address, slot, v);
            }
            JUMP => {
                let target = st.pop()?;
                next = self.jump_target(st, target)?;
            }
            JUMPI => {
                let target = st.pop()?;
                let cond = st.pop()?;
                if !cond.is_zero() {
                    next = self.jump_target(st, target)?;
                }
            }
            PC => st.push(Word::from(st.pc))?,
            JUMPDEST => {}
            PUSH1..=PUSH32 => {
                let n = opcode::immediate_len(op);
                let mut buf = [0u8; 32];
                for k in 0..n {
                    buf[32 - n + k] = st.code.get(st.pc + 1 + k).copied().unwrap_or(0);
                }
                st.push(Word::from_be_bytes(buf))?;
            }
            DUP1..=DUP16 => {
                let n = (op - DUP1 + 1) as usize;
                if st.stack.len() < n {
                    return Err(Halt::Fault(FaultKind::StackUnderflow));
                }
                let w = st.stack[st.stack.len() - n];
                st.push(w)?;
            }
            SWAP1..=SWAP16 => {
                let n = (op - SWAP1 + 1) as usize;
                let len = st.stack.len();
                if len < n + 1 {
                    return Err(Halt::Fault(FaultKind::StackUnderflow));
                }
                st.stack.swap(len - 1, len - 1 - n);
            }
            LOG1 => {
                let off = st.pop()?;
                let size = st.pop()?;
                let topic = st.pop()?;
                let data = st.read_memory(off, size)?;
                st.logs.push(Log { address: st.env.address, topic, data });
            }
            CALL => {
                let gas = st.pop()?;
                let to = word::to_address(st.pop()?);
                let value = st.pop()?;
                let (in_off, in_len) = (st.pop()?, st.pop()?);
                let (out_off, out_len) = (st.pop()?, st.pop()?);
                let input = st.read_memory(in_off, in_len)?;
                let (o, olen) = st.expand(out_off, out_len)?;
                let allot = if gas > Word::from(st.gas_remaining) { st.gas_remaining } else { gas.to::<u64>() };
                st.gas_remaining -= allot;
                let (ok, ret, left) =
                    self.sub_call(world, st.env.address, to, value, allot, input, st.depth + 1, &mut st.logs);
                st.gas_remaining += left.min(allot);
                let n = olen.min(ret.len());
                st.memory[o..o + n].copy_from_slice(&ret[..n]);
                st.push(from_bool(ok))?;
            }
            RETURN | REVERT => {
                let off = st.pop()?;
                let size = st.pop()?;
                let data = st.read_memory(off, size)?;
                return Err(if op == RETURN { Halt::Return(data) } else { Halt::Revert(data) });
            }
            _ => return Err(Halt::Fault(FaultKind::InvalidOpcode(op))),
        }
        st.pc = next;
        Ok(())
    }

    fn jump_target(&self, st: &MachineState, target: Word) -> Result<usize, Halt> {
        let t = if target < Word::from(st.code.len()) { target.to::<usize>() } else { usize::MAX };
        if t != usize::MAX && st.valid_jumps[t] {
            Ok(t)
        } else {
            Err(Halt::Fault(FaultKind::InvalidJump(t.min(st.code.len()))))
        }
    }

    /// Runs a nested frame. Returns (success, return data, unspent callee gas
    /// drawn from the caller's allotment).
    #[allow(clippy::too_many_arguments)]
    fn sub_call(
        &mut self,
        world: &mut World,
        from: Address,
        to: Address,
        value: Word,
        allot: u64,
        input: Vec<u8>,
        depth: usize,
        logs: &mut Vec<Log>,
    ) -> (bool, Vec<u8>, u64) {
        if depth > CALL_DEPTH_LIMIT || !world.transfer(from, to, value) {
            return (false, Vec::new(), allot);
        }
        let stipend = if value.is_zero() { 0 } else { CALL_STIPEND };
        let after_transfer = world.clone();
        let env = FrameEnv { address: to, caller: from, value, calldata: input };
        let mut st = MachineState::new(world.code(to).to_vec(), env, allot + stipend, depth);
        let halt = self.run(&mut st, world);
        // The stipend is free to the caller; only the caller's allotment can come back.
        let left = st.gas_remaining.saturating_sub(stipend);
        match halt {
            Halt::Stop => {
                logs.append(&mut st.logs);
                (true, Vec::new(), left)
            }
            Halt::Return(data) => {
                logs.append(&mut st.logs);
                (true, data, left)
            }
            Halt::Revert(data) => {
                *world = after_transfer;
                (false, data, left)
            }
            Halt::OutOfGas | Halt::Fault(_) => {
                *world = after_transfer;
                (false, Vec::new(), 0)
            }
        }
    }
}

/// Total ether as an unbounded integer, for conservation checks.
pub fn total_ether(world: &World) -> BigInt {
    world.total_ether()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{assemble, Instr};

    fn run_code(instrs: &[Instr], gas: u64) -> (TxResult, World, World) {
        let schedule = GasSchedule::default();
        let contract = Address::from_u64(0xc0);
        let mut world = World::new();
        world.deploy(contract, assemble(instrs));
        let before = world.clone();
        let tx = Tx { to: contract, caller: Address::from_u64(1), value: Word::ZERO, calldata: vec![], gas_limit: gas };
        let r = Interpreter::new(&schedule).exec_tx(&mut world, &tx);
        (r, before, world)
    }

    #[test]
    fn push_push_add_costs_nine() {
        let schedule = GasSchedule::default();
        let code = assemble(&[Instr::push_u64(1), Instr::push_u64(2), Instr::op(ADD)]);
        let env = FrameEnv { address: Address::ZERO, caller: Address::ZERO, value: Word::ZERO, calldata: vec![] };
        let mut st = MachineState::new(code, env, 100, 0);
        let mut world = World::new();
        let mut it = Interpreter::new(&schedule);
        for _ in 0..3 {
            assert_eq!(it.step(&mut st, &mut world), None);
        }
        assert_eq!(st.stack, vec![Word::from(3)]);
        assert_eq!(100 - st.gas_remaining, 9);
    }

    #[test]
    fn jump_to_non_jumpdest_faults() {
        let (r, before, after) = run_code(&[Instr::push_u64(3), Instr::op(JUMP), Instr::op(STOP)], 1000);
        assert_eq!(r.outcome, Outcome::Fault(FaultKind::InvalidJump(3)));
        assert_eq!(r.gas_used, 1000);
        assert_eq!(before, after);
    }

    #[test]
    fn dup_on_empty_stack_underflows() {
        let (r, _, _) = run_code(&[Instr::op(DUP1)], 1000);
        assert_eq!(r.outcome, Outcome::Fault(FaultKind::StackUnderflow));
    }

    #[test]
    fn zero_gas_is_out_of_gas() {
        let (r, before, after) = run_code(&[Instr::push_u64(1), Instr::op(STOP)], 0);
        assert_eq!(r.outcome, Outcome::OutOfGas);
        assert_eq!(before, after);
    }

    #[test]
    fn store_then_revert_rolls_back() {
        let code = [
            Instr::push_u64(7),
            Instr::push_u64(1),
            Instr::op(SSTORE),
            Instr::push_u64(0),
            Instr::push_u64(0),
            Instr::op(REVERT),
        ];
        let (r, before, after) = run_code(&code, 100_000);
        assert!(matches!(r.outcome, Outcome::Revert { .. }));
        assert!(r.storage_delta.is_empty());
        assert_eq!(before, after);
    }

    #[test]
    fn store_then_stop_commits() {
        let code = [Instr::push_u64(7), Instr::push_u64(1), Instr::op(SSTORE), Instr::op(STOP)];
        let (r, _, after) = run_code(&code, 100_000);
        assert_eq!(r.outcome, Outcome::Return(vec![]));
        assert_eq!(r.storage_delta.get(&Word::from(1)), Some(&(Word::ZERO, Word::from(7))));
        assert_eq!(after.sload(Address::from_u64(0xc0), Word::from(1)), Word::from(7));
        assert_eq!(r.gas_used, 3 + 3 + 20000);
    }

    #[test]
    fn memory_expansion_is_linear() {
        let code = [Instr::push_u64(1), Instr::push_u64(64), Instr::op(MSTORE), Instr::op(STOP)];
        let (r, _, _) = run_code(&code, 1000);
        // Three words touched (bytes 0..96).
        assert_eq!(r.memory_gas, 9);
        assert_eq!(r.gas_used, 3 + 3 + 3 + 9);
    }

    #[test]
    fn huge_memory_offset_runs_out_of_gas() {
        let code = [Instr::push_u64(1), Instr::push(Word::MAX), Instr::op(MSTORE)];
        let (r, _, _) = run_code(&code, 1_000_000);
        assert_eq!(r.outcome, Outcome::OutOfGas);
    }

    #[test]
    fn trace_lines() {
        let schedule = GasSchedule::default();
        let contract = Address::from_u64(0xc0);
        let mut world = World::new();
        world.deploy(contract, assemble(&[Instr::push_u64(1), Instr::push_u64(2), Instr::op(ADD), Instr::op(STOP)]));
        let tx = Tx { to: contract, caller: Address::ZERO, value: Word::ZERO, calldata: vec![], gas_limit: 100 };
        let r = Interpreter::new(&schedule).with_trace().exec_tx(&mut world, &tx);
        assert_eq!(r.trace.len(), 4);
        assert_eq!(r.trace[2], "pc=0x4 op=ADD gas=94 stack=[0x2, 0x1]");
    }

    #[test]
    fn annotations_advance_declared_counters() {
        let schedule = GasSchedule::default();
        let contract = Address::from_u64(0xc0);
        let mut world = World::new();
        world.deploy(contract, assemble(&[Instr::push_u64(1), Instr::op(POP), Instr::op(STOP)]));
        let tx = Tx { to: contract, caller: Address::ZERO, value: Word::ZERO, calldata: vec![], gas_limit: 100 };
        let ann: Annotations = [(0usize, (5u64, 0u64)), (2, (2, 32))].into_iter().collect();
        let r = Interpreter::new(&schedule).with_annotations(ann).exec_tx(&mut world, &tx);
        assert_eq!((r.declared_gas, r.declared_alloc), (7, 32));
    }
}
