//! Dynamic gas and allocation measurements of the list and trading
//! contracts, per call of an annotated function.

use bemp_core::{Address, Trade, TradeList};
use bemp_evm::interp::Log;
use bemp_evm::{GasSchedule, Tx, Word, World};
use mlc::backend::CodegenOptions;
use mlc::gas::{measure_calls, CallMeasurement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contracts::{calldata, Compiled, Contract};
use crate::CorpusError;

const CONTRACT: u64 = 0xc0de;
const CALLER: u64 = 0xbeef;

/// A measured call together with the size it was run at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub size: u64,
    pub call: CallMeasurement,
}

impl Sample {
    /// Metered gas and allocation within what the annotations declared.
    pub fn within_declared(&self) -> bool {
        self.call.gas <= self.call.declared_gas && self.call.allocated <= self.call.declared_alloc
    }
}

pub struct Bench {
    pub compiled: Compiled,
    world: World,
}

impl Bench {
    pub fn new(contract: Contract) -> Result<Self, CorpusError> {
        let compiled = Compiled::new(contract, CodegenOptions::default())?;
        let mut world = World::new();
        world.deploy(Address::from_u64(CONTRACT), compiled.artifacts.code.clone());
        Ok(Bench { compiled, world })
    }

    /// Runs one transaction and returns every outermost call of `function`
    /// along with the transaction's logs.
    pub fn measure(&self, function: &str, data: Vec<u8>) -> (Vec<CallMeasurement>, Vec<Log>, bool) {
        let tx = Tx {
            to: Address::from_u64(CONTRACT),
            caller: Address::from_u64(CALLER),
            value: Word::ZERO,
            calldata: data,
            gas_limit: 50_000_000,
        };
        let mut world = self.world.clone();
        let (r, calls) = measure_calls(&self.compiled.artifacts.sized, function, &mut world, &tx, &GasSchedule::default());
        let ok = r.outcome.is_success();
        (calls, r.logs, ok)
    }
}

/// `match_orders` calldata for books given as (tokens, price) pairs.
pub fn match_orders_calldata(buys: &[(u64, u64)], sells: &[(u64, u64)]) -> Vec<u8> {
    let mut words = vec![Word::from(buys.len()), Word::from(sells.len())];
    for (t, p) in buys.iter().chain(sells) {
        words.push(Word::from(*t));
        words.push(Word::from(*p));
    }
    calldata("match_orders", &words)
}

/// Trades from `match_orders` Trade events, most recent first.
pub fn decode_trades(logs: &[Log]) -> TradeList {
    let trades = logs
        .iter()
        .map(|l| {
            let w = Word::from_be_slice(&l.data);
            let low = (w & Word::from(0xffffu64)).to::<u64>();
            Trade {
                seller_index: (low >> 8) as usize,
                buyer_index: (low & 0xff) as usize,
                amount: bemp_core::MathInt::from(bemp_evm::word::to_unsigned(w >> 16)),
            }
        })
        .collect();
    TradeList { trades }
}

/// A random book side of `n` orders sorted by non-increasing price.
pub fn random_side(rng: &mut impl Rng, n: usize) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = (0..n).map(|_| (rng.gen_range(1..17), rng.gen_range(1..9))).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1));
    v
}

/// Books of total size `n` (both sides non-empty) that keep the matcher
/// busiest: every bid covers every ask and quantities alternate so that
/// each step consumes exactly one order.
pub fn adversarial_books(nb: usize, ns: usize) -> (Vec<(u64, u64)>, Vec<(u64, u64)>) {
    let buys = (0..nb).map(|i| (2 + (i as u64 % 2), 9)).collect();
    let sells = (0..ns).map(|i| (3 - (i as u64 % 2), 1)).collect();
    (buys, sells)
}

/// Measures the `trading` function for every size in `sizes` over every
/// split of the size into two non-empty books, on random and adversarial
/// instances.
pub fn trading_samples(sizes: std::ops::RangeInclusive<usize>, random_per_split: usize, seed: u64) -> Result<Vec<Sample>, CorpusError> {
    let bench = Bench::new(Contract::Trading)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in sizes {
        for nb in 1..n {
            let ns = n - nb;
            let mut books = vec![adversarial_books(nb, ns)];
            books.extend((0..random_per_split).map(|_| (random_side(&mut rng, nb), random_side(&mut rng, ns))));
            for (b, s) in books {
                let (calls, _, ok) = bench.measure("trading", match_orders_calldata(&b, &s));
                if !ok || calls.len() != 1 {
                    return Err(CorpusError::Compile("trading".into(), format!("measurement run failed at size {n}")));
                }
                out.push(Sample { size: n as u64, call: calls[0] });
            }
        }
    }
    Ok(out)
}

/// Measures each outermost call of `function` while the list entry point
/// `entry` runs with argument `i`.
pub fn list_samples(entry: &str, function: &str, sizes: std::ops::RangeInclusive<u64>) -> Result<Vec<Sample>, CorpusError> {
    let bench = Bench::new(Contract::Lists)?;
    let mut out = Vec::new();
    for i in sizes {
        let (calls, _, ok) = bench.measure(function, calldata(entry, &[Word::from(i)]));
        if !ok || calls.is_empty() {
            return Err(CorpusError::Compile("lists".into(), format!("{entry}({i}) did not reach {function}")));
        }
        out.extend(calls.into_iter().map(|call| Sample { size: i, call }));
    }
    Ok(out)
}
