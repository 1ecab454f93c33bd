use bemp_core::Address;
use bemp_evm::asm::{assemble, disassemble, Instr};
use bemp_evm::opcode::*;
use bemp_evm::{GasSchedule, Interpreter, Outcome, Tx, Word, World};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONTRACT: u64 = 0xc0;
const CALLEE: u64 = 0xca;

/// Sends `amount` wei to the callee with a zero gas argument, drops the
/// success flag, then writes slot 1.
fn sender_code(amount: u64) -> Vec<u8> {
    assemble(&[
        Instr::push_u64(0),
        Instr::push_u64(0),
        Instr::push_u64(0),
        Instr::push_u64(0),
        Instr::push_u64(amount),
        Instr::push_u64(CALLEE),
        Instr::push_u64(0),
        Instr::op(CALL),
        Instr::op(POP),
        Instr::push_u64(1),
        Instr::push_u64(1),
        Instr::op(SSTORE),
        Instr::op(STOP),
    ])
}

fn sstore_callee() -> Vec<u8> {
    assemble(&[Instr::push_u64(5), Instr::push_u64(9), Instr::op(SSTORE), Instr::op(STOP)])
}

#[test]
fn stipend_callee_cannot_store() {
    let schedule = GasSchedule::default();
    let mut world = World::new();
    let (c, k, user) = (Address::from_u64(CONTRACT), Address::from_u64(CALLEE), Address::from_u64(1));
    world.deploy(c, sender_code(10));
    world.deploy(k, sstore_callee());
    world.set_balance(c, Word::from(100));
    let total = world.total_ether();
    let tx = Tx { to: c, caller: user, value: Word::ZERO, calldata: vec![], gas_limit: 1_000_000 };
    let r = Interpreter::new(&schedule).exec_tx(&mut world, &tx);
    assert!(r.outcome.is_success(), "{:?}", r.outcome);
    assert!(world.storage(k).is_empty());
    assert_eq!(world.balance(k), Word::from(10));
    assert_eq!(world.total_ether(), total);
}

#[test]
fn empty_callee_receives_value() {
    let schedule = GasSchedule::default();
    let mut world = World::new();
    let (c, k) = (Address::from_u64(CONTRACT), Address::from_u64(CALLEE));
    world.set_balance(c, Word::from(3));
    let ok = Interpreter::new(&schedule).call_with_stipend(&mut world, c, k, Word::from(3));
    assert!(ok);
    assert_eq!(world.balance(k), Word::from(3));
    assert_eq!(world.balance(c), Word::ZERO);
}

#[test]
fn stipend_calls_conserve_ether() {
    let schedule = GasSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let mut world = World::new();
        let (c, k) = (Address::from_u64(CONTRACT), Address::from_u64(CALLEE));
        world.set_balance(c, Word::from(rng.gen_range(0..50u64)));
        world.set_balance(k, Word::from(rng.gen_range(0..50u64)));
        if rng.gen() {
            world.deploy(k, sstore_callee());
        }
        let total = world.total_ether();
        let value = Word::from(rng.gen_range(0..60u64));
        let _ = Interpreter::new(&schedule).call_with_stipend(&mut world, c, k, value);
        assert_eq!(world.total_ether(), total);
        assert!(world.storage(k).is_empty());
    }
}

#[test]
fn execution_is_deterministic() {
    let schedule = GasSchedule::default();
    let mut world = World::new();
    let c = Address::from_u64(CONTRACT);
    world.deploy(c, sender_code(1));
    world.deploy(Address::from_u64(CALLEE), sstore_callee());
    world.set_balance(c, Word::from(5));
    let tx = Tx { to: c, caller: Address::from_u64(2), value: Word::ZERO, calldata: vec![], gas_limit: 60_000 };
    let (mut w1, mut w2) = (world.clone(), world.clone());
    let r1 = Interpreter::new(&schedule).exec_tx(&mut w1, &tx);
    let r2 = Interpreter::new(&schedule).exec_tx(&mut w2, &tx);
    assert_eq!(r1, r2);
    assert_eq!(w1, w2);
}

#[test]
fn every_truncated_gas_limit_rolls_back() {
    let schedule = GasSchedule::default();
    let mut world = World::new();
    let c = Address::from_u64(CONTRACT);
    world.deploy(c, sender_code(1));
    world.set_balance(c, Word::from(5));
    let tx = Tx { to: c, caller: Address::from_u64(2), value: Word::ZERO, calldata: vec![], gas_limit: 100_000 };
    let full = Interpreter::new(&schedule).exec_tx(&mut world.clone(), &tx).gas_used;
    for limit in (0..full).step_by(97) {
        let mut w = world.clone();
        let r = Interpreter::new(&schedule).exec_tx(&mut w, &Tx { gas_limit: limit, ..tx.clone() });
        assert_eq!(r.outcome, Outcome::OutOfGas);
        assert_eq!(w, world);
    }
}

fn arb_instr() -> impl Strategy<Value = Instr> {
    prop_oneof![
        (1u8..=32, any::<[u8; 32]>()).prop_map(|(w, bytes)| {
            let mut b = bytes;
            for x in b.iter_mut().take(32 - w as usize) {
                *x = 0;
            }
            Instr::push_width(w, Word::from_be_bytes(b))
        }),
        prop::sample::select(all().filter(|i| i.immediate == 0).map(|i| i.byte).collect::<Vec<_>>())
            .prop_map(Instr::op),
    ]
}

proptest! {
    #[test]
    fn disassemble_inverts_assemble(prog in prop::collection::vec(arb_instr(), 0..64)) {
        let bytes = assemble(&prog);
        let back: Vec<Instr> = disassemble(&bytes).unwrap().into_iter().map(|(_, i)| i).collect();
        prop_assert_eq!(back, prog);
    }
}
