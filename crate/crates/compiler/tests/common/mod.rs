#![allow(dead_code)]

use bemp_core::Address;
use bemp_evm::{GasSchedule, Interpreter, Tx, TxResult, Word, World};
use mlc::backend::{compile_program, Artifacts, CodegenOptions};
use mlc::ir::Program;
use mlc::refint::{RefInterp, RefMode, RefTxResult};

pub const CONTRACT: u64 = 0xc0de;
pub const USER: u64 = 0xbeef;

pub struct Deployed {
    pub program: Program,
    pub art: Artifacts,
    pub opts: CodegenOptions,
    pub world: World,
}

pub fn deploy_with(src: &str, opts: CodegenOptions) -> Deployed {
    let program = mlc::compile_source(src).unwrap_or_else(|e| panic!("{e}"));
    let art = compile_program(&program, opts).unwrap();
    let mut world = World::new();
    world.deploy(Address::from_u64(CONTRACT), art.code.clone());
    world.set_balance(Address::from_u64(USER), Word::from(1_000_000u64));
    Deployed { program, art, opts, world }
}

pub fn deploy(src: &str) -> Deployed {
    deploy_with(src, CodegenOptions { expose_private: true })
}

pub fn calldata(name: &str, args: &[Word]) -> Vec<u8> {
    let mut out = mlc::backend::layout::selector(name).to_be_bytes().to_vec();
    for a in args {
        out.extend_from_slice(&a.to_be_bytes::<32>());
    }
    out
}

pub fn tx(name: &str, args: &[Word]) -> Tx {
    Tx {
        to: Address::from_u64(CONTRACT),
        caller: Address::from_u64(USER),
        value: Word::ZERO,
        calldata: calldata(name, args),
        gas_limit: 10_000_000,
    }
}

impl Deployed {
    pub fn run(&mut self, tx: &Tx) -> TxResult {
        let schedule = GasSchedule::default();
        let mut it = Interpreter::new(&schedule).with_annotations(self.art.sized.annotation_map());
        it.exec_tx(&mut self.world, tx)
    }

    pub fn call(&mut self, name: &str, args: &[Word]) -> TxResult {
        self.run(&tx(name, args))
    }

    pub fn reference(&self, world: &mut World, tx: &Tx, mode: RefMode) -> RefTxResult {
        RefInterp::new(&self.program).mode(mode).options(self.opts).exec_tx(world, tx)
    }
}

pub fn w(v: u64) -> Word {
    Word::from(v)
}
