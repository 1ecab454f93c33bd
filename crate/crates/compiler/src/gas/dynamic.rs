//! Dynamic counterpart of the static check: meter what a function actually
//! spends between its entry and its return.

use std::cell::RefCell;

use bemp_evm::{GasSchedule, Interpreter, Tx, TxResult, Word, World};

use crate::backend::layout::FREE_POINTER;

use crate::backend::resolve::SizedProgram;
use crate::backend::sym::JumpKind;

/// One outermost call of the measured function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallMeasurement {
    /// Gas spent from the entry to the return site, memory expansion excluded.
    pub gas: u64,
    pub memory_gas: u64,
    pub declared_gas: u64,
    pub declared_alloc: u64,
    /// Heap bytes handed out, read from the free pointer.
    pub allocated: u64,
}

/// Entry snapshot: return site, gas, memory gas, declared gas and
/// allocation, free pointer.
type Open = (usize, u64, u64, u64, u64, u64);

#[derive(Default)]
struct Probe {
    pending: Option<usize>,
    open: Option<Open>,
    done: Vec<CallMeasurement>,
}

fn free_pointer(memory: &[u8]) -> u64 {
    let at = FREE_POINTER as usize;
    memory.get(at..at + 32).map_or(0, |w| Word::from_be_slice(w).saturating_to())
}

/// Runs `tx` and measures every outermost call of `function` (calls nested
/// inside another call of it are part of that call).
pub fn measure_calls(
    sized: &SizedProgram,
    function: &str,
    world: &mut World,
    tx: &Tx,
    schedule: &GasSchedule,
) -> (TxResult, Vec<CallMeasurement>) {
    let annotations = sized.annotation_map();
    let entry = sized.function(function).map(|f| f.entry);
    let probe = RefCell::new(Probe::default());
    let result = {
        let mut it = Interpreter::new(schedule).with_annotations(annotations.clone()).with_hook(|v| {
            if v.depth != 0 {
                return;
            }
            let mut p = probe.borrow_mut();
            if let Some((ret, g0, m0, d0, a0, f0)) = p.open {
                if v.pc == ret {
                    // An annotation anchored on the return site belongs to the caller.
                    let (du, da) = annotations.get(&ret).copied().unwrap_or((0, 0));
                    let memory_gas = v.memory_gas - m0;
                    p.done.push(CallMeasurement {
                        gas: g0 - v.gas_remaining - memory_gas,
                        memory_gas,
                        declared_gas: v.declared_gas - du - d0,
                        declared_alloc: v.declared_alloc - da - a0,
                        allocated: free_pointer(v.memory) - f0,
                    });
                    p.open = None;
                }
                return;
            }
            if let Some(ret) = p.pending {
                if Some(v.pc) == entry {
                    p.open =
                        Some((ret, v.gas_remaining, v.memory_gas, v.declared_gas, v.declared_alloc, free_pointer(v.memory)));
                }
                p.pending = None;
                return;
            }
            if let Some(JumpKind::Call { callee, ret }) = sized.jump_kinds.get(&v.pc) {
                if sized.functions.get(*callee).is_some_and(|f| f.name == function) {
                    p.pending = Some(sized.labels[*ret]);
                }
            }
        });
        it.exec_tx(world, tx)
    };
    (result, probe.into_inner().done)
}
