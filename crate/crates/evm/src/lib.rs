//! EVM substrate: the opcode subset, its gas schedule, an assembler and
//! disassembler for concrete instructions, and a metered interpreter.

pub mod asm;
pub mod interp;
pub mod opcode;
pub mod schedule;
pub mod word;
pub mod world;

pub use asm::{assemble, disassemble, DisasmError, Instr};
pub use interp::{Annotations, FaultKind, Interpreter, MachineState, Outcome, Tx, TxResult};
pub use schedule::GasSchedule;
pub use word::Word;
pub use world::World;
