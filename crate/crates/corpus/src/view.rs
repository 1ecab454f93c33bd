//! Read-only access to a deployed contract's globals and maps.

use bemp_core::Address;
use bemp_evm::{Word, World};
use mlc::backend::layout::{map_epoch_slot, map_presence_base, map_size_slot, map_value_base};
use mlc::ir::Program;

pub struct StorageView<'a> {
    program: &'a Program,
    world: &'a World,
    contract: Address,
}

impl<'a> StorageView<'a> {
    pub fn new(program: &'a Program, world: &'a World, contract: Address) -> Self {
        StorageView { program, world, contract }
    }

    fn map_id(&self, map: &str) -> usize {
        self.program.maps.iter().position(|m| m.name == map).unwrap_or_else(|| panic!("no map named {map}"))
    }

    /// Field of a global record, by field name.
    pub fn global(&self, field: &str) -> Word {
        let slot = self.program.slots.iter().position(|s| s.field == field).unwrap_or_else(|| panic!("no field {field}"));
        self.world.sload(self.contract, Word::from(slot))
    }

    pub fn mem(&self, map: &str, key: Word) -> bool {
        let m = self.map_id(map);
        let epoch = self.world.sload(self.contract, map_epoch_slot(m));
        self.world.sload(self.contract, map_presence_base(m) + key) == epoch + Word::from(1)
    }

    /// Value under `key`, zero when absent.
    pub fn get(&self, map: &str, key: Word) -> Word {
        if !self.mem(map, key) {
            return Word::ZERO;
        }
        self.world.sload(self.contract, map_value_base(self.map_id(map)) + key)
    }

    pub fn size(&self, map: &str) -> Word {
        self.world.sload(self.contract, map_size_slot(self.map_id(map)))
    }
}

pub fn address_word(a: Address) -> Word {
    Word::from_be_slice(&a.0)
}
