//! Committed chain state: accounts with ether balance, code and storage.

use std::collections::BTreeMap;

use bemp_core::chain::{render_snapshot, BalanceMap};
use bemp_core::Address;
use num_bigint::BigInt;

use crate::word::{to_unsigned, Word};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Account {
    pub balance: Word,
    pub code: Vec<u8>,
    /// Non-zero slots only; absent slots read as zero.
    pub storage: BTreeMap<Word, Word>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct World {
    accounts: BTreeMap<Address, Account>,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn account(&self, a: Address) -> Option<&Account> {
        self.accounts.get(&a)
    }

    pub fn account_mut(&mut self, a: Address) -> &mut Account {
        self.accounts.entry(a).or_default()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (Address, &Account)> {
        self.accounts.iter().map(|(a, acc)| (*a, acc))
    }

    pub fn balance(&self, a: Address) -> Word {
        self.accounts.get(&a).map_or(Word::ZERO, |acc| acc.balance)
    }

    pub fn set_balance(&mut self, a: Address, v: Word) {
        self.account_mut(a).balance = v;
    }

    pub fn code(&self, a: Address) -> &[u8] {
        self.accounts.get(&a).map_or(&[], |acc| acc.code.as_slice())
    }

    pub fn deploy(&mut self, a: Address, code: Vec<u8>) {
        self.account_mut(a).code = code;
    }

    pub fn sload(&self, a: Address, slot: Word) -> Word {
        self.accounts
            .get(&a)
            .and_then(|acc| acc.storage.get(&slot).copied())
            .unwrap_or(Word::ZERO)
    }

    pub fn sstore(&mut self, a: Address, slot: Word, value: Word) {
        let storage = &mut self.account_mut(a).storage;
        if value.is_zero() {
            storage.remove(&slot);
        } else {
            storage.insert(slot, value);
        }
    }

    pub fn storage(&self, a: Address) -> BTreeMap<Word, Word> {
        self.accounts.get(&a).map(|acc| acc.storage.clone()).unwrap_or_default()
    }

    /// Moves ether; returns false (and changes nothing) if `from` is short.
    pub fn transfer(&mut self, from: Address, to: Address, value: Word) -> bool {
        let have = self.balance(from);
        if have < value {
            return false;
        }
        if from == to || value.is_zero() {
            return true;
        }
        let Some(credited) = self.balance(to).checked_add(value) else {
            return false;
        };
        self.set_balance(from, have - value);
        self.set_balance(to, credited);
        true
    }

    pub fn total_ether(&self) -> BigInt {
        self.accounts.values().map(|a| to_unsigned(a.balance)).sum()
    }

    /// Ether balances as a chain-model ledger.
    pub fn ether_ledger(&self) -> BalanceMap {
        let mut l = BalanceMap::new();
        for (a, acc) in &self.accounts {
            l.set_value(*a, to_unsigned(acc.balance)).expect("word fits uint256");
        }
        l
    }

    /// Canonical text form of the ether ledger.
    pub fn ether_snapshot(&self) -> String {
        render_snapshot(&[("ether", &self.ether_ledger())])
    }
}
