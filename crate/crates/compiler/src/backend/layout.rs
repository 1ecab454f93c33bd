//! Where values live: storage slots for globals and maps, memory cells for
//! constructed values.

use bemp_evm::word::{tag4_u32, tag_word};
use bemp_evm::Word;

use crate::ir::{MapId, Program};

/// Memory cell holding the free pointer.
pub const FREE_POINTER: u64 = 0x40;
/// First byte handed out by the allocator.
pub const HEAP_START: u64 = 0x80;

/// Revert tag for a selector that names no entry point.
pub const UNKNOWN_SELECTOR: &str = "UnknownSelector";
/// Revert tag for a calldata word outside its parameter's range.
pub const BAD_ARGUMENT: &str = "BadArgument";

/// Storage and memory plan for one program.
///
/// Global field `i` (in declaration order) lives in slot `i`. Map `m` owns
/// the region starting at `(m + 1) << 200`: its size counter, its epoch,
/// then values at `+ 1 << 192` and presence marks at `+ 2 << 192`, indexed
/// by key. A key is present when its mark equals the current epoch plus one,
/// so clearing is a constant-time epoch bump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutPlan {
    pub global_slots: Vec<Word>,
    pub map_bases: Vec<Word>,
    /// Bytes per constructor cell, indexed `[adt][ctor]`.
    pub ctor_sizes: Vec<Vec<u64>>,
    pub record_sizes: Vec<u64>,
}

impl LayoutPlan {
    pub fn new(p: &Program) -> Self {
        LayoutPlan {
            global_slots: (0..p.slots.len()).map(Word::from).collect(),
            map_bases: (0..p.maps.len()).map(map_base).collect(),
            ctor_sizes: p
                .adts
                .iter()
                .map(|a| a.ctors.iter().map(|c| 32 * (1 + c.fields.len() as u64)).collect())
                .collect(),
            record_sizes: p.records.iter().map(|r| 32 * r.fields.len() as u64).collect(),
        }
    }
}

pub fn map_base(m: MapId) -> Word {
    Word::from(m + 1) << 200
}

pub fn map_size_slot(m: MapId) -> Word {
    map_base(m)
}

pub fn map_epoch_slot(m: MapId) -> Word {
    map_base(m) + Word::from(1)
}

pub fn map_value_base(m: MapId) -> Word {
    map_base(m) + (Word::from(1) << 192)
}

pub fn map_presence_base(m: MapId) -> Word {
    map_base(m) + (Word::from(2) << 192)
}

/// Field `i` of a constructor cell sits after the tag word.
pub fn ctor_field_offset(i: usize) -> u64 {
    32 * (i as u64 + 1)
}

pub fn record_field_offset(i: usize) -> u64 {
    32 * i as u64
}

/// Four-byte entry point selector of a function.
pub fn selector(name: &str) -> u32 {
    tag4_u32(name)
}

/// Word stored at memory 0 before reverting with `exception`.
pub fn exception_word(exception: &str) -> Word {
    tag_word(exception)
}

/// LOG1 topic of an event.
pub fn event_topic(event: &str) -> Word {
    tag_word(event)
}
