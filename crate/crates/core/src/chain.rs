//! The world the contracts run against: addresses, ether and token balance
//! maps, guard flags and the event log.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::numeric::{BoundedInt, IntKind, MathInt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("specification violated: {0}")]
    SpecViolation(String),
    #[error("guard `{0}` is not satisfied")]
    GuardFailed(String),
    #[error("unknown guard flag `{0}`")]
    UnknownFlag(String),
    #[error("balances must be uint256, got {0}")]
    NotUint256(IntKind),
    #[error("bad address `{0}`")]
    BadAddress(String),
    #[error("snapshot line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
}

/// A 160-bit account address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    /// An address whose low 8 bytes hold `n`. Handy for tests and scenarios.
    pub fn from_u64(n: u64) -> Self {
        let mut bytes = [0u8; 20];
        bytes[12..].copy_from_slice(&n.to_be_bytes());
        Address(bytes)
    }

    /// Interprets `v` as an address; fails unless `0 <= v < 2^160`.
    pub fn from_bigint(v: &BigInt) -> Option<Self> {
        if v.sign() == Sign::Minus || v.bits() > 160 {
            return None;
        }
        let (_, raw) = v.to_bytes_be();
        let mut bytes = [0u8; 20];
        bytes[20 - raw.len()..].copy_from_slice(&raw);
        Some(Address(bytes))
    }

    pub fn to_bigint(self) -> BigInt {
        BigInt::from_bytes_be(Sign::Plus, &self.0)
    }

    pub fn to_uint160(self) -> BoundedInt {
        BoundedInt::new(IntKind::UINT160, self.to_bigint()).expect("160-bit value")
    }

    pub fn is_zero(self) -> bool {
        self == Address::ZERO
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0x")?;
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for Address {
    type Err = ChainError;

    /// Accepts up to 40 hex digits with an optional `0x` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        if digits.is_empty() || digits.len() > 40 {
            return Err(ChainError::BadAddress(s.to_string()));
        }
        let v = BigInt::parse_bytes(digits.as_bytes(), 16).ok_or_else(|| ChainError::BadAddress(s.to_string()))?;
        Address::from_bigint(&v).ok_or_else(|| ChainError::BadAddress(s.to_string()))
    }
}

/// How preconditions of the non-failing primitives are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Preconditions are asserted and violations reported as `SpecViolation`.
    #[default]
    SpecCheck,
    /// Preconditions are assumed. A violating call changes nothing, the way a
    /// failed value transfer leaves both balances alone.
    Release,
}

/// Address-indexed uint256 balances. Absent addresses read as zero but are
/// distinguishable from explicit zero entries through [`BalanceMap::contains`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BalanceMap {
    entries: BTreeMap<Address, BigInt>,
}

/// Ether balances.
pub type Ledger = BalanceMap;
/// Token balances (export, import, market).
pub type TokenMap = BalanceMap;

fn uint256_max() -> BigInt {
    (BigInt::one() << 256usize) - 1
}

impl BalanceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, addr: Address) -> BoundedInt {
        let v = self.entries.get(&addr).cloned().unwrap_or_default();
        BoundedInt::new(IntKind::UINT256, v).expect("stored balances are in range")
    }

    pub fn contains(&self, addr: Address) -> bool {
        self.entries.contains_key(&addr)
    }

    pub fn set(&mut self, addr: Address, value: &BoundedInt) -> Result<(), ChainError> {
        if value.kind() != IntKind::UINT256 {
            return Err(ChainError::NotUint256(value.kind()));
        }
        self.entries.insert(addr, value.value().clone());
        Ok(())
    }

    /// Sets a balance from a plain integer; fails if it leaves the uint256 range.
    pub fn set_value(&mut self, addr: Address, value: impl Into<BigInt>) -> Result<(), ChainError> {
        let v = BoundedInt::new(IntKind::UINT256, value)
            .map_err(|e| ChainError::SpecViolation(e.to_string()))?;
        self.set(addr, &v)
    }

    pub fn remove(&mut self, addr: Address) {
        self.entries.remove(&addr);
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Address, &BigInt)> {
        self.entries.iter().map(|(a, v)| (*a, v))
    }

    pub fn total(&self) -> MathInt {
        MathInt(self.entries.values().sum())
    }
}

fn check_uint256(amount: &BoundedInt) -> Result<(), ChainError> {
    if amount.kind() == IntKind::UINT256 {
        Ok(())
    } else {
        Err(ChainError::NotUint256(amount.kind()))
    }
}

/// Moves `amount` ether from `from` to `to`.
///
/// The primitive never fails at runtime: the caller must establish that the
/// sender holds enough, the receiver cannot overflow, and the two differ.
pub fn send(ledger: &mut Ledger, from: Address, to: Address, amount: &BoundedInt, mode: Mode) -> Result<(), ChainError> {
    check_uint256(amount)?;
    let violation = if from == to {
        Some("sender and receiver are the same address".to_string())
    } else if ledger.get(from).value() < amount.value() {
        Some(format!("{from} holds less than {}", amount.value()))
    } else if ledger.get(to).value() + amount.value() > uint256_max() {
        Some(format!("{to} would exceed the uint256 range"))
    } else {
        None
    };
    if let Some(msg) = violation {
        return match mode {
            Mode::SpecCheck => Err(ChainError::SpecViolation(format!("send: {msg}"))),
            Mode::Release => Ok(()),
        };
    }
    move_value(ledger, from, amount.value(), true);
    move_value(ledger, to, amount.value(), false);
    Ok(())
}

/// Moves `amount` tokens from `m_from[from]` to `m_to[to]`, preserving their sum.
pub fn token_transfer(
    m_from: &mut TokenMap,
    m_to: &mut TokenMap,
    from: Address,
    to: Address,
    amount: &BoundedInt,
    mode: Mode,
) -> Result<(), ChainError> {
    check_uint256(amount)?;
    let violation = if amount.is_zero() {
        Some("amount must be positive".to_string())
    } else if m_from.get(from).value() < amount.value() {
        Some(format!("{from} holds less than {}", amount.value()))
    } else if m_to.get(to).value() + amount.value() > uint256_max() {
        Some(format!("{to} would exceed the uint256 range"))
    } else {
        None
    };
    if let Some(msg) = violation {
        return match mode {
            Mode::SpecCheck => Err(ChainError::SpecViolation(format!("token transfer: {msg}"))),
            Mode::Release => Ok(()),
        };
    }
    move_value(m_from, from, amount.value(), true);
    move_value(m_to, to, amount.value(), false);
    Ok(())
}

fn move_value(map: &mut BalanceMap, addr: Address, amount: &BigInt, debit: bool) {
    let entry = map.entries.entry(addr).or_insert_with(BigInt::zero);
    if debit {
        *entry -= amount;
    } else {
        *entry += amount;
    }
}

/// Guard flags understood by [`ExecContext::guard`].
pub const FLAG_NAMES: [&str; 5] = ["onlyOwner", "onlyMarket", "onlyOracle", "onlyAlgo", "marketOpen"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub payload: Vec<BigInt>,
}

/// Per-transaction context: caller, guard flags and emitted events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecContext {
    pub msg_sender: Address,
    flags: BTreeMap<&'static str, bool>,
    event_log: Vec<Event>,
}

impl ExecContext {
    /// A context with every flag false.
    pub fn new(msg_sender: Address) -> Self {
        ExecContext {
            msg_sender,
            flags: FLAG_NAMES.iter().map(|n| (*n, false)).collect(),
            event_log: Vec::new(),
        }
    }

    pub fn set_flag(&mut self, name: &str, value: bool) -> Result<(), ChainError> {
        match self.flags.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(ChainError::UnknownFlag(name.to_string())),
        }
    }

    pub fn flag(&self, name: &str) -> Result<bool, ChainError> {
        self.flags
            .get(name)
            .copied()
            .ok_or_else(|| ChainError::UnknownFlag(name.to_string()))
    }

    /// Returns iff the named flag holds.
    pub fn guard(&self, name: &str) -> Result<(), ChainError> {
        if self.flag(name)? {
            Ok(())
        } else {
            Err(ChainError::GuardFailed(name.to_string()))
        }
    }

    pub fn emit(&mut self, name: impl Into<String>, payload: Vec<BigInt>) {
        self.event_log.push(Event { name: name.into(), payload });
    }

    pub fn events(&self) -> &[Event] {
        &self.event_log
    }
}

/// One line of a world snapshot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SnapshotEntry {
    pub address: Address,
    pub kind: String,
    pub value: BigInt,
}

/// Renders named balance maps as canonical text, one `<kind> <address> <value>`
/// line per entry, ordered by address then kind.
pub fn render_snapshot(maps: &[(&str, &BalanceMap)]) -> String {
    let mut entries: Vec<SnapshotEntry> = maps
        .iter()
        .flat_map(|(kind, map)| {
            map.iter().map(move |(address, value)| SnapshotEntry {
                address,
                kind: kind.to_string(),
                value: value.clone(),
            })
        })
        .collect();
    entries.sort();
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{} {} {}\n", e.kind, e.address, e.value));
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<Vec<SnapshotEntry>, ChainError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| ChainError::Snapshot { line: i + 1, msg: msg.to_string() };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [kind, addr, value] = parts[..] else {
            return Err(err("expected `<kind> <address> <value>`"));
        };
        let address: Address = addr.parse().map_err(|_| err("bad address"))?;
        let value: BigInt = value.parse().map_err(|_| err("bad value"))?;
        if value.sign() == Sign::Minus || value > uint256_max() {
            return Err(err("value outside uint256"));
        }
        out.push(SnapshotEntry { address, kind: kind.to_string(), value });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amt(v: u64) -> BoundedInt {
        BoundedInt::uint256(v as u128)
    }

    #[test]
    fn address_hex_round_trip() {
        let a = Address::from_u64(0xbeef);
        let s = a.to_string();
        assert_eq!(s, "0x000000000000000000000000000000000000beef");
        assert_eq!(s.parse::<Address>().unwrap(), a);
        assert!("0x".parse::<Address>().is_err());
        assert!(Address::from_bigint(&(BigInt::one() << 160usize)).is_none());
    }

    #[test]
    fn zero_send_changes_nothing() {
        let (a, b) = (Address::from_u64(1), Address::from_u64(2));
        let mut l = Ledger::new();
        l.set_value(a, 10).unwrap();
        l.set_value(b, 0).unwrap();
        let before = l.clone();
        send(&mut l, a, b, &amt(0), Mode::SpecCheck).unwrap();
        assert_eq!(l, before);
    }

    #[test]
    fn full_send_conserves() {
        let (a, b) = (Address::from_u64(1), Address::from_u64(2));
        let mut l = Ledger::new();
        l.set_value(a, 10).unwrap();
        l.set_value(b, 5).unwrap();
        send(&mut l, a, b, &amt(10), Mode::SpecCheck).unwrap();
        assert_eq!(l.get(a), amt(0));
        assert_eq!(l.get(b), amt(15));
        assert_eq!(l.total(), MathInt::from(15));
    }

    #[test]
    fn send_violations() {
        let (a, b) = (Address::from_u64(1), Address::from_u64(2));
        let mut l = Ledger::new();
        l.set_value(a, 3).unwrap();
        assert!(matches!(send(&mut l, a, a, &amt(1), Mode::SpecCheck), Err(ChainError::SpecViolation(_))));
        assert!(matches!(send(&mut l, a, b, &amt(4), Mode::SpecCheck), Err(ChainError::SpecViolation(_))));
        let before = l.clone();
        send(&mut l, a, b, &amt(4), Mode::Release).unwrap();
        assert_eq!(l, before);
        l.set_value(b, uint256_max()).unwrap();
        assert!(send(&mut l, a, b, &amt(1), Mode::SpecCheck).is_err());
    }

    #[test]
    fn token_transfer_examples() {
        let (market, buyer) = (Address::from_u64(7), Address::from_u64(8));
        let mut m = TokenMap::new();
        let mut imp = TokenMap::new();
        m.set_value(market, 7).unwrap();
        token_transfer(&mut m, &mut imp, market, buyer, &amt(7), Mode::SpecCheck).unwrap();
        assert_eq!((m.get(market), imp.get(buyer)), (amt(0), amt(7)));

        let mut m = TokenMap::new();
        let mut imp = TokenMap::new();
        m.set_value(market, 7).unwrap();
        imp.set_value(buyer, 1).unwrap();
        token_transfer(&mut m, &mut imp, market, buyer, &amt(3), Mode::SpecCheck).unwrap();
        assert_eq!((m.get(market), imp.get(buyer)), (amt(4), amt(4)));

        let mut m = TokenMap::new();
        m.set_value(market, 2).unwrap();
        assert!(matches!(
            token_transfer(&mut m, &mut imp, market, buyer, &amt(3), Mode::SpecCheck),
            Err(ChainError::SpecViolation(_))
        ));
        assert!(token_transfer(&mut m, &mut imp, market, buyer, &amt(0), Mode::SpecCheck).is_err());
    }

    #[test]
    fn guards() {
        let mut ctx = ExecContext::new(Address::from_u64(1));
        ctx.set_flag("onlyMarket", true).unwrap();
        assert_eq!(ctx.guard("onlyMarket"), Ok(()));
        ctx.set_flag("onlyMarket", false).unwrap();
        assert_eq!(ctx.guard("onlyMarket"), Err(ChainError::GuardFailed("onlyMarket".into())));
        assert_eq!(ctx.guard("onlyWizard"), Err(ChainError::UnknownFlag("onlyWizard".into())));
    }

    #[test]
    fn events_append() {
        let mut ctx = ExecContext::new(Address::ZERO);
        ctx.emit("A", vec![BigInt::from(1)]);
        ctx.emit("B", vec![]);
        let names: Vec<_> = ctx.events().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["A", "B"]);
    }

    #[test]
    fn snapshot_is_sorted_and_parses_back() {
        let mut ether = Ledger::new();
        let mut tokens = TokenMap::new();
        ether.set_value(Address::from_u64(2), 5).unwrap();
        ether.set_value(Address::from_u64(1), 9).unwrap();
        tokens.set_value(Address::from_u64(1), 3).unwrap();
        let text = render_snapshot(&[("ether", &ether), ("export", &tokens)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "ether 0x0000000000000000000000000000000000000001 9",
                "export 0x0000000000000000000000000000000000000001 3",
                "ether 0x0000000000000000000000000000000000000002 5",
            ]
        );
        let parsed = parse_snapshot(&text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[2].value, BigInt::from(5));
        assert!(parse_snapshot("ether 0x01").is_err());
        assert!(parse_snapshot("ether 0x01 -1").is_err());
    }
}
