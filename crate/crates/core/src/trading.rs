//! Order-book matching.
//!
//! Buy and sell books are arrays sorted by non-increasing price. [`trading`]
//! walks both books with two cursors and greedily pairs the current buyer with
//! the current seller whenever the bid covers the ask. [`oracle_max_tokens`]
//! computes the best achievable volume independently, as a maximum flow.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::chain::{Address, Mode};
use crate::numeric::{BoundedInt, IntKind, MathInt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TradingError {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("loop invariant broken: {0}")]
    InvariantBroken(String),
    #[error("order book line {line}: {msg}")]
    BookFormat { line: usize, msg: String },
    #[error("{side} book is not sorted: price at {first} is below price at {second}")]
    Unsorted { side: &'static str, first: usize, second: usize },
}

/// A buy or sell order: `tokens` units offered or wanted at `price` each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    pub address: Address,
    pub tokens: BoundedInt,
    pub price: BoundedInt,
}

impl Order {
    /// Builds an order with uint256 quantities.
    pub fn new(address: Address, tokens: impl Into<BigInt>, price: impl Into<BigInt>) -> Result<Self, TradingError> {
        let bad = |e: crate::numeric::NumericError| TradingError::PreconditionViolation(e.to_string());
        Ok(Order {
            address,
            tokens: BoundedInt::new(IntKind::UINT256, tokens).map_err(bad)?,
            price: BoundedInt::new(IntKind::UINT256, price).map_err(bad)?,
        })
    }
}

/// One matched pair: `amount` tokens move from seller to buyer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trade {
    pub seller_index: usize,
    pub buyer_index: usize,
    pub amount: MathInt,
}

impl Trade {
    pub fn new(seller_index: usize, buyer_index: usize, amount: i64) -> Self {
        Trade { seller_index, buyer_index, amount: MathInt::from(amount) }
    }
}

impl fmt::Display for Trade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seller {} buyer {} amount {}", self.seller_index, self.buyer_index, self.amount)
    }
}

/// Trades with the most recent first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TradeList {
    pub trades: Vec<Trade>,
}

impl TradeList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a list from trades given oldest first.
    pub fn from_construction_order(mut trades: Vec<Trade>) -> Self {
        trades.reverse();
        TradeList { trades }
    }

    /// Prepends `t` as the most recent trade.
    pub fn push(&mut self, t: Trade) {
        self.trades.insert(0, t);
    }

    /// Trades oldest first, the order in which the matcher produced them.
    pub fn construction_order(&self) -> Vec<Trade> {
        self.trades.iter().rev().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.trades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trades.is_empty()
    }
}

fn price(o: &Order) -> &BigInt {
    o.price.value()
}

fn tokens(o: &Order) -> &BigInt {
    o.tokens.value()
}

/// True iff prices never increase along the sequence.
pub fn sorted_order(orders: &[Order]) -> bool {
    first_unsorted(orders).is_none()
}

fn first_unsorted(orders: &[Order]) -> Option<usize> {
    orders.windows(2).position(|w| price(&w[1]) > price(&w[0]))
}

/// True iff the trade's indices are in range, its amount is positive and the
/// bid covers the ask.
pub fn matching_order(t: &Trade, buys: &[Order], sells: &[Order]) -> bool {
    match (buys.get(t.buyer_index), sells.get(t.seller_index)) {
        (Some(b), Some(s)) => price(s) <= price(b) && t.amount.0.is_positive(),
        _ => false,
    }
}

/// Every trade satisfies [`matching_order`].
pub fn matching(trades: &TradeList, buys: &[Order], sells: &[Order]) -> bool {
    trades.trades.iter().all(|t| matching_order(t, buys, sells))
}

pub fn sum_seller(trades: &TradeList, seller: usize) -> MathInt {
    trades.trades.iter().filter(|t| t.seller_index == seller).map(|t| t.amount.clone()).sum()
}

pub fn sum_buyer(trades: &TradeList, buyer: usize) -> MathInt {
    trades.trades.iter().filter(|t| t.buyer_index == buyer).map(|t| t.amount.clone()).sum()
}

/// Total volume of the trade list.
pub fn nb_token(trades: &TradeList) -> MathInt {
    trades.trades.iter().map(|t| t.amount.clone()).sum()
}

/// No seller or buyer is over-committed and every trade matches.
pub fn correct(trades: &TradeList, buys: &[Order], sells: &[Order]) -> bool {
    sells.iter().enumerate().all(|(i, s)| sum_seller(trades, i).0 <= *tokens(s))
        && buys.iter().enumerate().all(|(i, b)| sum_buyer(trades, i).0 <= *tokens(b))
        && matching(trades, buys, sells)
}

fn check_preconditions(buys: &[Order], sells: &[Order]) -> Result<(), TradingError> {
    let fail = |m: String| Err(TradingError::PreconditionViolation(m));
    if buys.is_empty() || sells.is_empty() {
        return fail("both books must be non-empty".into());
    }
    if let Some(k) = first_unsorted(buys) {
        return fail(format!("buy book unsorted at {k}..{}", k + 1));
    }
    if let Some(k) = first_unsorted(sells) {
        return fail(format!("sell book unsorted at {k}..{}", k + 1));
    }
    if let Some(k) = buys.iter().position(|o| tokens(o).is_zero()) {
        return fail(format!("buy order {k} has no tokens"));
    }
    if let Some(k) = sells.iter().position(|o| tokens(o).is_zero()) {
        return fail(format!("sell order {k} has no tokens"));
    }
    Ok(())
}

/// Checks the per-iteration invariants of the matching loop.
fn check_invariants(
    result: &TradeList,
    buys: &[Order],
    sells: &[Order],
    buy_left: &[BigInt],
    sell_left: &[BigInt],
    i: usize,
    j: usize,
) -> Result<(), TradingError> {
    let broken = |m: String| Err(TradingError::InvariantBroken(m));
    if i > buys.len() || j > sells.len() {
        return broken(format!("cursor out of range: i={i} j={j}"));
    }
    if !matching(result, buys, sells) {
        return broken("a recorded trade does not match".into());
    }
    for (k, s) in sells.iter().enumerate() {
        if sum_seller(result, k).0 + &sell_left[k] != *tokens(s) {
            return broken(format!("seller {k} stock is not conserved"));
        }
        if k >= j && !sell_left[k].is_positive() {
            return broken(format!("pending seller {k} has no stock"));
        }
    }
    for (k, b) in buys.iter().enumerate() {
        if sum_buyer(result, k).0 + &buy_left[k] != *tokens(b) {
            return broken(format!("buyer {k} demand is not conserved"));
        }
        if k >= i && !buy_left[k].is_positive() {
            return broken(format!("pending buyer {k} has no demand"));
        }
    }
    Ok(())
}

/// Greedy two-cursor matching over price-sorted books.
///
/// The inputs are left untouched; remaining quantities are tracked on private
/// copies. In [`Mode::SpecCheck`] the preconditions, the loop invariants after
/// every iteration and the final correctness are all asserted.
pub fn trading(buys: &[Order], sells: &[Order], mode: Mode) -> Result<TradeList, TradingError> {
    let checking = mode == Mode::SpecCheck;
    if checking {
        check_preconditions(buys, sells)?;
    }
    let mut buy_left: Vec<BigInt> = buys.iter().map(|o| tokens(o).clone()).collect();
    let mut sell_left: Vec<BigInt> = sells.iter().map(|o| tokens(o).clone()).collect();
    let mut result = TradeList::new();
    let (mut i, mut j) = (0usize, 0usize);

    while i < buys.len() && j < sells.len() {
        let measure = buys.len() + sells.len() - i - j;
        if price(&buys[i]) >= price(&sells[j]) {
            if buy_left[i] <= sell_left[j] {
                let amount = buy_left[i].clone();
                sell_left[j] -= &amount;
                buy_left[i] = BigInt::zero();
                result.push(Trade { seller_index: j, buyer_index: i, amount: MathInt(amount) });
                i += 1;
                if sell_left[j].is_zero() {
                    j += 1;
                }
            } else {
                let amount = sell_left[j].clone();
                buy_left[i] -= &amount;
                sell_left[j] = BigInt::zero();
                result.push(Trade { seller_index: j, buyer_index: i, amount: MathInt(amount) });
                j += 1;
            }
        } else {
            j += 1;
        }
        if checking {
            if buys.len() + sells.len() - i - j >= measure {
                return Err(TradingError::InvariantBroken("loop measure did not decrease".into()));
            }
            check_invariants(&result, buys, sells, &buy_left, &sell_left, i, j)?;
        }
    }

    if checking && !correct(&result, buys, sells) {
        return Err(TradingError::InvariantBroken("result is not correct".into()));
    }
    Ok(result)
}

/// The largest volume any correct trade list can reach, by maximum flow
/// through source → buyer → compatible seller → sink.
pub fn oracle_max_tokens(buys: &[Order], sells: &[Order]) -> MathInt {
    let nb = buys.len();
    let n = nb + sells.len() + 2;
    let (source, sink) = (n - 2, n - 1);
    let mut cap = vec![vec![BigInt::zero(); n]; n];
    for (bi, b) in buys.iter().enumerate() {
        cap[source][bi] = tokens(b).clone();
        for (si, s) in sells.iter().enumerate() {
            if price(b) >= price(s) {
                cap[bi][nb + si] = tokens(b).min(tokens(s)).clone();
            }
        }
    }
    for (si, s) in sells.iter().enumerate() {
        cap[nb + si][sink] = tokens(s).clone();
    }
    MathInt(max_flow(&mut cap, source, sink))
}

/// Edmonds–Karp on a dense residual matrix.
fn max_flow(cap: &mut [Vec<BigInt>], source: usize, sink: usize) -> BigInt {
    let n = cap.len();
    let mut total = BigInt::zero();
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u][v].is_positive() {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return total;
        }
        let mut bottleneck: Option<BigInt> = None;
        let mut v = sink;
        while v != source {
            let u = parent[v];
            bottleneck = Some(match bottleneck {
                Some(b) if b <= cap[u][v] => b,
                _ => cap[u][v].clone(),
            });
            v = u;
        }
        let bottleneck = bottleneck.expect("augmenting path has an edge");
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u][v] -= &bottleneck;
            cap[v][u] += &bottleneck;
            v = u;
        }
        total += bottleneck;
    }
}

/// Stable sort by non-increasing price.
pub fn sort_orders(orders: &mut [Order]) {
    orders.sort_by(|a, b| price(b).cmp(price(a)));
}

/// A parsed order-book file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBook {
    pub buys: Vec<Order>,
    pub sells: Vec<Order>,
}

impl OrderBook {
    /// Parses `buys N sells M` followed by N buy and M sell lines of the form
    /// `<address-hex> <tokens> <price>`. Blank lines and `#` comments are skipped.
    /// Set `require_sorted` to reject books that are not price-sorted.
    pub fn parse(text: &str, require_sorted: bool) -> Result<Self, TradingError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let fmt_err = |line: usize, msg: &str| TradingError::BookFormat { line, msg: msg.to_string() };
        let (hline, header) = lines.next().ok_or_else(|| fmt_err(1, "missing `buys N sells M` header"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (nb, ns) = match parts[..] {
            ["buys", nb, "sells", ns] => (
                nb.parse::<usize>().map_err(|_| fmt_err(hline, "bad buy count"))?,
                ns.parse::<usize>().map_err(|_| fmt_err(hline, "bad sell count"))?,
            ),
            _ => return Err(fmt_err(hline, "expected `buys N sells M`")),
        };
        let mut orders = Vec::with_capacity(nb + ns);
        for (line, body) in lines.by_ref().take(nb + ns) {
            let fields: Vec<&str> = body.split_whitespace().collect();
            let [addr, tok, pr] = fields[..] else {
                return Err(fmt_err(line, "expected `<address> <tokens> <price>`"));
            };
            let address: Address = addr.parse().map_err(|_| fmt_err(line, "bad address"))?;
            let tok: BigInt = tok.parse().map_err(|_| fmt_err(line, "bad token count"))?;
            let pr: BigInt = pr.parse().map_err(|_| fmt_err(line, "bad price"))?;
            orders.push(Order::new(address, tok, pr).map_err(|e| fmt_err(line, &e.to_string()))?);
        }
        if orders.len() != nb + ns {
            return Err(fmt_err(hline, "fewer orders than the header announces"));
        }
        if let Some((line, _)) = lines.next() {
            return Err(fmt_err(line, "more orders than the header announces"));
        }
        let sells = orders.split_off(nb);
        let book = OrderBook { buys: orders, sells };
        if require_sorted {
            if let Some(k) = first_unsorted(&book.buys) {
                return Err(TradingError::Unsorted { side: "buy", first: k, second: k + 1 });
            }
            if let Some(k) = first_unsorted(&book.sells) {
                return Err(TradingError::Unsorted { side: "sell", first: k, second: k + 1 });
            }
        }
        Ok(book)
    }

    pub fn render(&self) -> String {
        let mut out = format!("buys {} sells {}\n", self.buys.len(), self.sells.len());
        for o in self.buys.iter().chain(&self.sells) {
            out.push_str(&format!("{} {} {}\n", o.address, tokens(o), price(o)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book(spec: &[(u64, u64)]) -> Vec<Order> {
        spec.iter()
            .enumerate()
            .map(|(k, &(p, t))| Order::new(Address::from_u64(k as u64 + 1), t, p).unwrap())
            .collect()
    }

    #[test]
    fn sortedness() {
        assert!(sorted_order(&[]));
        assert!(sorted_order(&book(&[(5, 1), (5, 1), (3, 1)])));
        assert!(!sorted_order(&book(&[(3, 1), (5, 1)])));
    }

    #[test]
    fn matching_order_examples() {
        let t = Trade::new(0, 0, 1);
        assert!(matching_order(&t, &book(&[(5, 1)]), &book(&[(3, 1)])));
        assert!(!matching_order(&t, &book(&[(2, 1)]), &book(&[(3, 1)])));
        let out = Trade::new(1, 0, 1);
        assert!(!matching_order(&out, &book(&[(5, 1)]), &book(&[(3, 1)])));
        assert!(!matching_order(&Trade::new(0, 0, 0), &book(&[(5, 1)]), &book(&[(3, 1)])));
    }

    #[test]
    fn sums() {
        assert_eq!(sum_seller(&TradeList::new(), 3), MathInt::zero());
        assert_eq!(nb_token(&TradeList::new()), MathInt::zero());
        let l = TradeList::from_construction_order(vec![Trade::new(0, 0, 3), Trade::new(0, 1, 1), Trade::new(1, 1, 1)]);
        assert_eq!(sum_seller(&l, 0), MathInt::from(4));
        assert_eq!(sum_buyer(&l, 1), MathInt::from(2));
        assert_eq!(nb_token(&TradeList::from_construction_order(vec![Trade::new(0, 0, 3)])), MathInt::from(3));
    }

    #[test]
    fn correct_examples() {
        let b = book(&[(5, 2)]);
        let s = book(&[(3, 1)]);
        assert!(correct(&TradeList::new(), &b, &s));
        let over = TradeList::from_construction_order(vec![Trade::new(0, 0, 2)]);
        assert!(!correct(&over, &b, &s));
    }

    #[test]
    fn single_pair() {
        let r = trading(&book(&[(5, 2)]), &book(&[(3, 4)]), Mode::SpecCheck).unwrap();
        assert_eq!(r.construction_order(), vec![Trade::new(0, 0, 2)]);
    }

    #[test]
    fn incompatible_prices() {
        let r = trading(&book(&[(2, 3)]), &book(&[(5, 1)]), Mode::SpecCheck).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn two_by_two() {
        let buys = book(&[(5, 3), (4, 2)]);
        let sells = book(&[(4, 4), (3, 1)]);
        let r = trading(&buys, &sells, Mode::SpecCheck).unwrap();
        assert_eq!(
            r.construction_order(),
            vec![Trade::new(0, 0, 3), Trade::new(0, 1, 1), Trade::new(1, 1, 1)]
        );
        assert_eq!(nb_token(&r), MathInt::from(5));
        assert_eq!(oracle_max_tokens(&buys, &sells), MathInt::from(5));
        assert_eq!(buys, book(&[(5, 3), (4, 2)]));
    }

    #[test]
    fn preconditions_in_spec_check() {
        let ok = book(&[(5, 1)]);
        assert!(trading(&[], &ok, Mode::SpecCheck).is_err());
        assert!(trading(&book(&[(3, 1), (5, 1)]), &ok, Mode::SpecCheck).is_err());
        assert!(trading(&book(&[(5, 0)]), &ok, Mode::SpecCheck).is_err());
        assert!(trading(&[], &ok, Mode::Release).unwrap().is_empty());
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(oracle_max_tokens(&book(&[(5, 2)]), &book(&[(3, 4)])), MathInt::from(2));
        assert_eq!(oracle_max_tokens(&book(&[(2, 2)]), &book(&[(3, 4)])), MathInt::zero());
        assert_eq!(oracle_max_tokens(&[], &[]), MathInt::zero());
    }

    #[test]
    fn order_book_file() {
        let text = "buys 2 sells 1\n0x01 3 5\n0x02 2 4\n# sells\n0x03 4 4\n";
        let b = OrderBook::parse(text, true).unwrap();
        assert_eq!(b.buys.len(), 2);
        assert_eq!(OrderBook::parse(&b.render(), true).unwrap(), b);
        let unsorted = "buys 2 sells 0\n0x01 3 4\n0x02 2 5\n";
        assert_eq!(
            OrderBook::parse(unsorted, true),
            Err(TradingError::Unsorted { side: "buy", first: 0, second: 1 })
        );
        assert!(OrderBook::parse(unsorted, false).is_ok());
        assert!(OrderBook::parse("buys 1 sells 0\n", true).is_err());
        assert!(OrderBook::parse("", true).is_err());
    }

    #[test]
    fn sort_is_stable_descending() {
        let mut v = book(&[(3, 1), (5, 2), (3, 3), (5, 4)]);
        sort_orders(&mut v);
        let got: Vec<(u64, u64)> = v
            .iter()
            .map(|o| (o.price.value().try_into().unwrap(), o.tokens.value().try_into().unwrap()))
            .collect();
        assert_eq!(got, [(5, 2), (5, 4), (3, 1), (3, 3)]);
    }
}
