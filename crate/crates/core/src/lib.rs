//! Value-level building blocks shared by the compiler, interpreter and corpus:
//! bounded integers, the chain model the contracts run against, and the
//! order-book matching engine with its optimality oracle.

pub mod chain;
pub mod numeric;
pub mod trading;

pub use chain::{Address, BalanceMap, ChainError, Event, ExecContext, Ledger, Mode, TokenMap};
pub use numeric::{checked_arith, ArithOp, BoundedInt, IntKind, MathInt, NumericError};
pub use trading::{oracle_max_tokens, trading, Order, Trade, TradeList, TradingError};
