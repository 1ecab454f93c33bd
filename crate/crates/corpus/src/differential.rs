//! Compiled bytecode against the reference interpreter on random inputs.

use bemp_core::Address;
use bemp_evm::{word, Tx, Word, World};
use mlc::backend::CodegenOptions;
use num_bigint::BigInt;
use mlc::ir::{FuncId, Ty};
use mlc::refint::RefMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contracts::{calldata, Compiled, Contract};
use crate::harness::{execute, Engine, Execution, StepOutcome};
use crate::scenario::{run_scenario, RunMode, RunOptions, Scenario, ACCOUNT_BASE, MARKET_ADDRESS};
use crate::CorpusError;

const SETUP: &str = include_str!("../scenarios/happy_path.json");
const GAS_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub contract: Contract,
    pub function: String,
    pub vectors: usize,
    /// Vectors on which the specification-checking run hit an obligation
    /// failure and was compared in release mode only.
    pub spec_skipped: usize,
    pub mismatches: Vec<String>,
}

/// Starting world and callers for a contract's vectors.
pub struct Fixture {
    pub compiled: Compiled,
    pub world: World,
    pub address: Address,
    pub callers: Vec<Address>,
}

impl Fixture {
    /// The market starts from the happy-path state with its market still
    /// open; the other contracts start empty.
    pub fn new(contract: Contract) -> Result<Self, CorpusError> {
        let compiled = Compiled::new(contract, CodegenOptions { expose_private: true })?;
        let address = Address::from_u64(MARKET_ADDRESS);
        match contract {
            Contract::Market => {
                let mut s = Scenario::from_json(SETUP)?;
                s.steps.retain(|st| st.op != "closeMarket");
                let r = run_scenario(&s, &RunOptions::new(RunMode::Compiled))?;
                let mut world = r.final_world;
                world.deploy(address, compiled.artifacts.code.clone());
                let callers = (0..s.accounts.len() as u64).map(|i| Address::from_u64(ACCOUNT_BASE + i)).collect();
                Ok(Fixture { compiled, world, address, callers })
            }
            _ => {
                let mut world = World::new();
                world.deploy(address, compiled.artifacts.code.clone());
                let caller = Address::from_u64(ACCOUNT_BASE);
                world.set_balance(caller, Word::from(1_000_000u64));
                Ok(Fixture { compiled, world, address, callers: vec![caller] })
            }
        }
    }
}

fn edge_words(t: Ty) -> Vec<Word> {
    match t {
        Ty::Bool => vec![Word::ZERO, Word::from(1)],
        Ty::Address => vec![Word::ZERO, Word::from(1), Word::MAX >> 96],
        Ty::Int(k) => {
            let mut v = vec![word::from_bigint(&k.min_value()), word::from_bigint(&k.max_value()), Word::ZERO, Word::from(1)];
            if k.is_signed() {
                v.push(Word::MAX);
            } else {
                v.push(word::from_bigint(&k.max_value()) - Word::from(1));
            }
            v
        }
        _ => vec![Word::ZERO],
    }
}

fn small(rng: &mut ChaCha8Rng, t: Ty, fixture: &Fixture) -> Word {
    match t {
        Ty::Address => {
            let i = rng.gen_range(0..fixture.callers.len());
            crate::view::address_word(fixture.callers[i])
        }
        Ty::Int(k) if k.is_signed() => word::from_bigint(&rng.gen_range(-8i64..80).into()),
        _ => Word::from(rng.gen_range(0u64..80)),
    }
}

fn uniform(rng: &mut ChaCha8Rng, t: Ty) -> Word {
    let w = Word::from_limbs(rng.gen::<[u64; 4]>());
    match t {
        Ty::Bool => w & Word::from(1),
        Ty::Address => w >> 96,
        Ty::Int(k) if k.bits() < 256 => {
            let m = word::to_unsigned(w >> (256 - k.bits() as usize));
            if k.is_signed() && m > k.max_value() {
                word::from_bigint(&(m - (BigInt::from(1u8) << k.bits())))
            } else {
                word::from_bigint(&m)
            }
        }
        _ => w,
    }
}

/// One argument word. Unbounded draws are skipped for the list contract,
/// whose running time grows with its argument.
fn arg(rng: &mut ChaCha8Rng, t: Ty, fixture: &Fixture) -> Word {
    let bounded = fixture.compiled.contract == Contract::Lists;
    match rng.gen_range(0..100) {
        0..=49 => small(rng, t, fixture),
        50..=74 => {
            let e = edge_words(t);
            let w = e[rng.gen_range(0..e.len())];
            if bounded && t != Ty::Bool {
                small(rng, t, fixture)
            } else {
                w
            }
        }
        75..=94 if !bounded => uniform(rng, t),
        95..=99 => Word::from_limbs(rng.gen::<[u64; 4]>()),
        _ => small(rng, t, fixture),
    }
}

/// Order-book words appended to `match_orders` calldata: mostly valid
/// sorted books, sometimes unsorted or malformed ones.
fn book_words(rng: &mut ChaCha8Rng) -> (Word, Word, Vec<Word>) {
    let (nb, ns) = (rng.gen_range(0u64..10), rng.gen_range(0u64..10));
    let mut words = Vec::new();
    for side in [nb, ns] {
        let mut prices: Vec<u64> = (0..side).map(|_| rng.gen_range(1..9)).collect();
        if rng.gen_bool(0.8) {
            prices.sort_unstable_by(|a, b| b.cmp(a));
        }
        for p in prices {
            let tokens = if rng.gen_bool(0.95) { Word::from(rng.gen_range(1u64..17)) } else { Word::ZERO };
            words.push(tokens);
            words.push(Word::from(p));
        }
    }
    (Word::from(nb), Word::from(ns), words)
}

fn same(a: &Execution, b: &Execution) -> bool {
    a.outcome == b.outcome && a.storage_delta == b.storage_delta && a.logs == b.logs
}

/// Runs `vectors` random calls of every entry point of `contract` through
/// the compiled code and the reference interpreter.
pub fn differential(contract: Contract, vectors: usize, seed: u64) -> Result<Vec<DiffReport>, CorpusError> {
    let fixture = Fixture::new(contract)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for f in fixture.compiled.entry_points() {
        out.push(differential_function(&fixture, f, vectors, &mut rng));
    }
    Ok(out)
}

fn differential_function(fx: &Fixture, f: FuncId, vectors: usize, rng: &mut ChaCha8Rng) -> DiffReport {
    let func = &fx.compiled.program.functions[f];
    let types = fx.compiled.param_types(f);
    let mut report = DiffReport {
        contract: fx.compiled.contract,
        function: func.name.clone(),
        vectors,
        spec_skipped: 0,
        mismatches: Vec::new(),
    };
    for n in 0..vectors {
        let mut args: Vec<Word> = types.iter().map(|t| arg(rng, *t, fx)).collect();
        if func.name == "match_orders" && rng.gen_bool(0.8) {
            let (nb, ns, words) = book_words(rng);
            args = vec![nb, ns];
            args.extend(words);
        }
        let caller = fx.callers[rng.gen_range(0..fx.callers.len())];
        let value = if rng.gen_bool(0.1) { Word::from(rng.gen_range(1u64..50)) } else { Word::ZERO };
        let tx = Tx { to: fx.address, caller, value, calldata: calldata(&func.name, &args), gas_limit: GAS_LIMIT };

        let run = |engine| {
            let mut w = fx.world.clone();
            let r = execute(&fx.compiled, None, engine, &mut w, &tx);
            (r, w)
        };
        let (compiled, cw) = run(Engine::Compiled);
        let (release, rw) = run(Engine::Reference(RefMode::Release));
        if !same(&compiled, &release) || cw != rw {
            report.mismatches.push(format!("vector {n}: compiled {} vs release {}", compiled.outcome, release.outcome));
            continue;
        }
        let (spec, sw) = run(Engine::Reference(RefMode::SpecCheck));
        match &spec.outcome {
            StepOutcome::Violation(v) if !func.is_public() => {
                let _ = v;
                report.spec_skipped += 1;
            }
            _ if same(&compiled, &spec) && cw == sw => {}
            _ => report.mismatches.push(format!("vector {n}: compiled {} vs spec-check {}", compiled.outcome, spec.outcome)),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_respects_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let w = uniform(&mut rng, Ty::Int(bemp_core::IntKind::UINT64));
            assert!(w <= Word::from(u64::MAX));
            let s = word::to_signed(uniform(&mut rng, Ty::Int(bemp_core::IntKind::INT32)));
            assert!(bemp_core::IntKind::INT32.contains(&s), "{s}");
        }
    }
}
