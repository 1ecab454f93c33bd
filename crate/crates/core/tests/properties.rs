use bemp_core::chain::{send, token_transfer, Address, Ledger, Mode, TokenMap};
use bemp_core::numeric::{checked_arith, ArithOp, BoundedInt, IntKind, MathInt, NumericError};
use bemp_core::trading::{
    correct, matching_order, nb_token, oracle_max_tokens, sorted_order, sum_buyer, sum_seller, trading, Order, Trade,
    TradeList,
};
use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Range of a kind computed from the bit pattern, without going through `IntKind`.
fn oracle_bounds(bits: u16, signed: bool) -> (BigInt, BigInt) {
    let span = BigInt::one() << bits as usize;
    if signed {
        let half = &span >> 1usize;
        (-half.clone(), half - 1)
    } else {
        (BigInt::zero(), span - 1)
    }
}

/// Values clustered near the interesting edges of a kind's range.
fn sample(rng: &mut ChaCha8Rng, bits: u16, signed: bool) -> BigInt {
    let (lo, hi) = oracle_bounds(bits, signed);
    match rng.gen_range(0..6) {
        0 => lo + rng.gen_range(0..4),
        1 => hi - rng.gen_range(0..4),
        2 => BigInt::from(rng.gen_range(-3i64..4)).clamp(lo, hi),
        3 => {
            let small_bits = rng.gen_range(1..=bits as u64 / 2);
            let v = rng.gen_biguint(small_bits);
            let v = BigInt::from(v);
            if signed && rng.gen() { -v } else { v }
        }
        _ => rng.gen_bigint_range(&lo, &(hi + 1)),
    }
}

#[test]
fn arithmetic_agrees_with_unbounded_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    for kind in IntKind::all() {
        let (lo, hi) = oracle_bounds(kind.bits(), kind.is_signed());
        for _ in 0..2_000 {
            let op = ArithOp::ALL[rng.gen_range(0..ArithOp::ALL.len())];
            let a = sample(&mut rng, kind.bits(), kind.is_signed());
            let b = sample(&mut rng, kind.bits(), kind.is_signed());
            let got = checked_arith(op, &BoundedInt::new(kind, a.clone()).unwrap(), &BoundedInt::new(kind, b.clone()).unwrap());
            let expected = match op {
                ArithOp::Add => Some(&a + &b),
                ArithOp::Sub => Some(&a - &b),
                ArithOp::Mul => Some(&a * &b),
                ArithOp::Div | ArithOp::Rem if b.is_zero() => None,
                // Truncated division rebuilt from magnitudes.
                ArithOp::Div => {
                    let q = a.magnitude() / b.magnitude();
                    let neg = (a < BigInt::zero()) != (b < BigInt::zero());
                    Some(if neg { -BigInt::from(q) } else { BigInt::from(q) })
                }
                ArithOp::Rem => {
                    let r = BigInt::from(a.magnitude() % b.magnitude());
                    Some(if a < BigInt::zero() { -r } else { r })
                }
            };
            match (expected, got) {
                (None, Err(NumericError::DivisionByZero)) => {}
                (Some(v), Ok(r)) if v >= lo && v <= hi => {
                    assert_eq!(r.value(), &v);
                    assert_eq!(r.kind(), kind);
                }
                (Some(v), Err(NumericError::Overflow { .. })) if v < lo || v > hi => {}
                (e, g) => panic!("{kind} {op}: {a} {b}: oracle {e:?}, got {g:?}"),
            }
        }
    }
}

#[test]
fn math_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in IntKind::all() {
        for _ in 0..1_000 {
            let v = sample(&mut rng, kind.bits(), kind.is_signed());
            let x = BoundedInt::new(kind, v).unwrap();
            assert_eq!(BoundedInt::from_math(kind, &x.to_math()).unwrap(), x);
        }
        let (lo, hi) = oracle_bounds(kind.bits(), kind.is_signed());
        assert!(BoundedInt::from_math(kind, &MathInt(hi + 1)).is_err());
        assert!(BoundedInt::from_math(kind, &MathInt(lo - 1)).is_err());
    }
}

#[test]
fn send_conserves_and_touches_two_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1_000 {
        let mut ledger = Ledger::new();
        let n = rng.gen_range(2..6u64);
        for k in 0..n {
            ledger.set_value(Address::from_u64(k), rng.gen_range(0..1_000u64)).unwrap();
        }
        let from = Address::from_u64(rng.gen_range(0..n));
        let to = loop {
            let t = Address::from_u64(rng.gen_range(0..n + 1));
            if t != from {
                break t;
            }
        };
        let have: u64 = ledger.get(from).value().try_into().unwrap();
        let amount = BoundedInt::uint256(rng.gen_range(0..=have) as u128);
        let before = ledger.clone();
        send(&mut ledger, from, to, &amount, Mode::SpecCheck).unwrap();
        assert_eq!(before.total(), ledger.total());
        for (addr, v) in ledger.iter() {
            if addr != from && addr != to {
                assert_eq!(before.get(addr).value(), v);
            }
        }
        assert_eq!(ledger.get(from).value(), &(before.get(from).value() - amount.value()));
    }
}

proptest! {
    #[test]
    fn token_transfer_preserves_pair_sum(a in 1u64..1_000, b in 0u64..1_000, x in 1u64..1_000) {
        let (p, q) = (Address::from_u64(1), Address::from_u64(2));
        let mut from = TokenMap::new();
        let mut to = TokenMap::new();
        from.set_value(p, a).unwrap();
        to.set_value(q, b).unwrap();
        let amount = BoundedInt::uint256(x as u128);
        let r = token_transfer(&mut from, &mut to, p, q, &amount, Mode::SpecCheck);
        if x <= a {
            prop_assert!(r.is_ok());
            prop_assert_eq!(from.get(p).value() + to.get(q).value(), BigInt::from(a + b));
        } else {
            prop_assert!(r.is_err());
            prop_assert_eq!(from.get(p).value().clone(), BigInt::from(a));
        }
    }
}

fn random_book(rng: &mut ChaCha8Rng, len: usize) -> Vec<Order> {
    let mut prices: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=8)).collect();
    prices.sort_unstable_by(|a, b| b.cmp(a));
    prices
        .into_iter()
        .enumerate()
        .map(|(k, p)| Order::new(Address::from_u64(k as u64 + 100), rng.gen_range(1..=16u64), p).unwrap())
        .collect()
}

fn random_trades(rng: &mut ChaCha8Rng) -> TradeList {
    let n = rng.gen_range(0..12);
    TradeList::from_construction_order(
        (0..n)
            .map(|_| Trade::new(rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(1..10)))
            .collect(),
    )
}

#[test]
fn seller_and_buyer_sums_partition_the_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let l = random_trades(&mut rng);
        let sellers: MathInt = (0..4).map(|i| sum_seller(&l, i)).sum();
        let buyers: MathInt = (0..4).map(|i| sum_buyer(&l, i)).sum();
        assert_eq!(sellers, nb_token(&l));
        assert_eq!(buyers, nb_token(&l));
    }
}

#[test]
fn volume_is_additive_over_concatenation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let l = random_trades(&mut rng);
        let cut = rng.gen_range(0..=l.len());
        let (head, tail) = l.trades.split_at(cut);
        let a = TradeList { trades: head.to_vec() };
        let b = TradeList { trades: tail.to_vec() };
        assert_eq!(nb_token(&l), &nb_token(&a) + &nb_token(&b));
    }
}

/// Minimum cut of the buyer/seller network, found by trying every pair of
/// buyer and seller subsets. Only usable on tiny books.
fn brute_force_min_cut(buys: &[Order], sells: &[Order]) -> BigInt {
    let t = |o: &Order| o.tokens.value().clone();
    let mut best: Option<BigInt> = None;
    for bmask in 0u32..(1 << buys.len()) {
        for smask in 0u32..(1 << sells.len()) {
            // Buyers in bmask stay on the source side, sellers in smask on the sink side.
            let mut cut = BigInt::zero();
            for (i, b) in buys.iter().enumerate() {
                if bmask & (1 << i) == 0 {
                    cut += t(b);
                    continue;
                }
                for (j, s) in sells.iter().enumerate() {
                    if smask & (1 << j) != 0 && b.price.value() >= s.price.value() {
                        cut += t(b).min(t(s));
                    }
                }
            }
            for (j, s) in sells.iter().enumerate() {
                if smask & (1 << j) == 0 {
                    cut += t(s);
                }
            }
            best = Some(match best {
                Some(c) if c <= cut => c,
                _ => cut,
            });
        }
    }
    best.unwrap()
}

#[test]
fn oracle_matches_exhaustive_min_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let nb = rng.gen_range(0..=4);
        let ns = rng.gen_range(0..=4);
        let buys = random_book(&mut rng, nb);
        let sells = random_book(&mut rng, ns);
        assert_eq!(oracle_max_tokens(&buys, &sells).0, brute_force_min_cut(&buys, &sells));
    }
}

#[test]
fn trading_is_correct_optimal_and_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1_000 {
        let (nb, ns) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let buys = random_book(&mut rng, nb);
        let sells = random_book(&mut rng, ns);
        assert!(sorted_order(&buys) && sorted_order(&sells));
        let (b0, s0) = (buys.clone(), sells.clone());
        let r = trading(&buys, &sells, Mode::SpecCheck).unwrap();
        assert!(correct(&r, &buys, &sells));
        assert!(r.trades.iter().all(|t| matching_order(t, &buys, &sells)));
        assert_eq!(nb_token(&r), oracle_max_tokens(&buys, &sells));
        assert_eq!((buys, sells), (b0, s0));
    }
}

#[test]
fn equal_prices_trade() {
    let buys = vec![Order::new(Address::from_u64(1), 2, 4).unwrap()];
    let sells = vec![Order::new(Address::from_u64(2), 2, 4).unwrap()];
    let r = trading(&buys, &sells, Mode::SpecCheck).unwrap();
    assert_eq!(r.construction_order(), vec![Trade::new(0, 0, 2)]);
}
