use bemp_core::{trading, Address, Mode, Order};
use bemp_corpus::measure::{decode_trades, list_samples, match_orders_calldata, random_side, trading_samples, Bench};
use bemp_corpus::Contract;
use mlc::gas::measure_constants;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn orders(side: &[(u64, u64)]) -> Vec<Order> {
    side.iter().enumerate().map(|(i, (t, p))| Order::new(Address::from_u64(i as u64 + 1), *t, *p).unwrap()).collect()
}

#[test]
fn on_chain_matcher_reproduces_the_native_trade_list() {
    let bench = Bench::new(Contract::Trading).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let nb = rand::Rng::gen_range(&mut rng, 1..9);
        let ns = rand::Rng::gen_range(&mut rng, 1..9);
        let (b, s) = (random_side(&mut rng, nb), random_side(&mut rng, ns));
        let (_, logs, ok) = bench.measure("trading", match_orders_calldata(&b, &s));
        assert!(ok);
        let native = trading(&orders(&b), &orders(&s), Mode::SpecCheck).unwrap();
        assert_eq!(decode_trades(&logs), native, "buys {b:?} sells {s:?}");
    }
}

#[test]
fn trading_stays_within_its_annotations_and_an_affine_bound() {
    let samples = trading_samples(2..=10, 4, 3).unwrap();
    assert!(samples.iter().all(|s| s.within_declared()));
    let gas: Vec<(u64, u64)> = samples.iter().map(|s| (s.size, s.call.gas)).collect();
    let alloc: Vec<(u64, u64)> = samples.iter().map(|s| (s.size, s.call.allocated)).collect();
    let g = measure_constants(&gas, u64::MAX).unwrap();
    let a = measure_constants(&alloc, u64::MAX).unwrap();
    for (n, y) in &gas {
        assert!(i128::from(*y) <= g.at(*n), "gas {y} at {n} above {g:?}");
        // The postcondition's bound.
        assert!(*y <= 537 * n + 256);
    }
    for (n, y) in &alloc {
        assert!(i128::from(*y) <= a.at(*n));
        assert!(*y <= 192 * n + 32);
    }
}

#[test]
fn list_functions_never_exceed_their_annotations() {
    for (entry, f) in [("build_and_count", "mk_list42"), ("build_and_count", "length_"), ("run_g", "g_")] {
        let samples = list_samples(entry, f, 0..=20).unwrap();
        for s in &samples {
            assert!(s.within_declared(), "{f} at {}: {:?}", s.size, s.call);
        }
    }
}

#[test]
fn list_annotations_are_tight() {
    // Annotations equal path costs, so metered and declared gas coincide.
    for s in list_samples("build_and_count", "length_", 0..=20).unwrap() {
        assert_eq!(s.call.gas, s.call.declared_gas);
        assert_eq!(s.call.gas, 108 * s.size + 60);
    }
}
