//! Reads the market's order books from storage and plans settlements with
//! the native matcher.

use bemp_core::{trading, Address, Mode, Order, TradingError};
use bemp_evm::{word, Word};
use num_bigint::BigInt;

use crate::contracts::FLOATING_POINT_CORRECTION;
use crate::view::StorageView;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookEntry {
    pub id: u64,
    pub address: Address,
    pub tokens: Word,
    pub price: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Books {
    pub sells: Vec<BookEntry>,
    pub buys: Vec<BookEntry>,
}

/// One settle call: `amount` tokens for `ether` wei.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settlement {
    pub sell_id: u64,
    pub buy_id: u64,
    pub amount: Word,
    pub ether: Word,
}

fn read_side(view: &StorageView<'_>, prefix: &str, next: &str) -> Vec<BookEntry> {
    let n = view.global(next).to::<u64>();
    (0..n)
        .map(|id| {
            let k = Word::from(id);
            BookEntry {
                id,
                address: word::to_address(view.get(&format!("{prefix}_address"), k)),
                tokens: view.get(&format!("{prefix}_tokens"), k),
                price: view.get(&format!("{prefix}_price"), k),
            }
        })
        .collect()
}

pub fn read_books(view: &StorageView<'_>) -> Books {
    Books { sells: read_side(view, "sell", "sell_next"), buys: read_side(view, "buy", "buy_next") }
}

/// True iff each book holds exactly the ids below its counter.
pub fn books_indexed(view: &StorageView<'_>) -> bool {
    ["sell", "buy"].iter().all(|side| {
        let next = view.global(&format!("{side}_next"));
        let map = format!("{side}_address");
        view.size(&map) == next && (0..next.to::<u64>()).all(|id| view.mem(&map, Word::from(id)))
    })
}

/// Wei paid for `amount` scaled tokens at `price` wei per unscaled token,
/// rounded up so every trade pays something.
pub fn ether_for(amount: Word, price: Word) -> Word {
    let c = Word::from(FLOATING_POINT_CORRECTION);
    let num = amount.saturating_mul(price);
    num / c + if (num % c).is_zero() { Word::ZERO } else { Word::from(1) }
}

fn to_orders(side: &[BookEntry]) -> Result<Vec<Order>, TradingError> {
    side.iter().map(|e| Order::new(e.address, word::to_unsigned(e.tokens), word::to_unsigned(e.price))).collect()
}

fn by_price(side: &[BookEntry]) -> Vec<BookEntry> {
    let mut v = side.to_vec();
    v.sort_by(|a, b| b.price.cmp(&a.price));
    v
}

/// Sorts both books by non-increasing price (ties keep id order), runs the
/// matcher and returns one settlement per trade, oldest first. An empty
/// side plans nothing.
pub fn plan_settlements(books: &Books) -> Result<Vec<Settlement>, TradingError> {
    if books.sells.is_empty() || books.buys.is_empty() {
        return Ok(Vec::new());
    }
    let (sells, buys) = (by_price(&books.sells), by_price(&books.buys));
    let trades = trading(&to_orders(&buys)?, &to_orders(&sells)?, Mode::SpecCheck)?;
    Ok(trades
        .construction_order()
        .into_iter()
        .map(|t| {
            let amount = word::from_bigint(&t.amount.0);
            let s = &sells[t.seller_index];
            Settlement { sell_id: s.id, buy_id: buys[t.buyer_index].id, amount, ether: ether_for(amount, s.price) }
        })
        .collect())
}

pub(crate) fn big(w: Word) -> BigInt {
    word::to_unsigned(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: u64, tokens: u64, price: u64) -> BookEntry {
        BookEntry { id, address: Address::from_u64(100 + id), tokens: Word::from(tokens), price: Word::from(price) }
    }

    #[test]
    fn ether_rounds_up() {
        let c = FLOATING_POINT_CORRECTION;
        assert_eq!(ether_for(Word::from(c), Word::from(7u64)), Word::from(7u64));
        assert_eq!(ether_for(Word::from(1u64), Word::from(1u64)), Word::from(1u64));
        assert_eq!(ether_for(Word::from(c + 1), Word::from(2u64)), Word::from(3u64));
    }

    #[test]
    fn plan_maps_sorted_indices_back_to_ids() {
        // Stored out of price order: id 1 is the better bid.
        let books = Books { buys: vec![entry(0, 2, 3), entry(1, 2, 5)], sells: vec![entry(0, 3, 4)] };
        let plan = plan_settlements(&books).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!((plan[0].sell_id, plan[0].buy_id, plan[0].amount), (0, 1, Word::from(2u64)));
    }

    #[test]
    fn incompatible_books_plan_nothing() {
        let books = Books { buys: vec![entry(0, 2, 1)], sells: vec![entry(0, 2, 9)] };
        assert!(plan_settlements(&books).unwrap().is_empty());
    }
}
