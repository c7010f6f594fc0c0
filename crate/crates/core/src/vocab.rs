//! Open-addressed hash directory from terms to head-block offsets.
//!
//! The directory stores only 32-bit offsets; term strings live in the head
//! blocks, so every probe compares against the term embedded there.

use thiserror::Error;

/// Marks an unused directory slot. Offset 0 is a valid head block.
pub const EMPTY: u32 = u32::MAX;

/// Longest term a head block can record (its length is one byte).
pub const MAX_TERM_LEN: usize = u8::MAX as usize;

const MIN_CAPACITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("term of {0} bytes is longer than {MAX_TERM_LEN}")]
    TermTooLong(usize),
    #[error("empty term")]
    EmptyTerm,
    #[error("directory cannot grow past {0} slots")]
    CapacityOverflow(usize),
}

/// Gives the directory access to the term stored in a head block.
pub trait HeadTerms {
    fn head_term(&self, offset: u32) -> &[u8];
}

/// 32-bit FNV-1a.
#[inline]
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashDirectory {
    slots: Vec<u32>,
    count: usize,
}

impl Default for HashDirectory {
    fn default() -> Self {
        Self::with_capacity(MIN_CAPACITY)
    }
}

impl HashDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// `capacity` is rounded up to a power of two.
    pub fn with_capacity(capacity: usize) -> Self {
        HashDirectory {
            slots: vec![EMPTY; capacity.max(2).next_power_of_two()],
            count: 0,
        }
    }

    pub(crate) fn from_slots(slots: Vec<u32>) -> Self {
        let count = slots.iter().filter(|&&s| s != EMPTY).count();
        HashDirectory { slots, count }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of distinct terms `v`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn slots(&self) -> &[u32] {
        &self.slots
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [u32] {
        &mut self.slots
    }

    /// Bytes charged for the directory: `8v`, i.e. twice `v` four-byte slots.
    pub fn charged_bytes(&self) -> u64 {
        8 * self.count as u64
    }

    /// Head offsets in ascending slot order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.slots.iter().copied().filter(|&s| s != EMPTY)
    }

    #[inline]
    fn home(&self, term: &[u8]) -> usize {
        fnv1a(term) as usize & (self.slots.len() - 1)
    }

    /// Slot index at which `term` sits or would be inserted.
    fn probe(&self, term: &[u8], terms: &impl HeadTerms) -> (usize, bool) {
        let mask = self.slots.len() - 1;
        let mut i = self.home(term);
        loop {
            let s = self.slots[i];
            if s == EMPTY {
                return (i, false);
            }
            if terms.head_term(s) == term {
                return (i, true);
            }
            i = (i + 1) & mask;
        }
    }

    pub fn lookup(&self, term: &[u8], terms: &impl HeadTerms) -> Option<u32> {
        match self.probe(term, terms) {
            (i, true) => Some(self.slots[i]),
            _ => None,
        }
    }

    /// Records `offset` for a term not yet present. The head block at
    /// `offset` must already hold the term.
    pub fn insert(&mut self, term: &[u8], offset: u32, terms: &impl HeadTerms) -> Result<(), VocabError> {
        check_term(term)?;
        debug_assert_ne!(offset, EMPTY);
        if 2 * (self.count + 1) > self.slots.len() {
            self.grow(terms)?;
        }
        let (i, found) = self.probe(term, terms);
        debug_assert!(!found, "term inserted twice");
        self.slots[i] = offset;
        self.count += 1;
        Ok(())
    }

    /// Doubles the capacity and re-places every entry by rehashing the term
    /// read from its head block.
    pub fn grow(&mut self, terms: &impl HeadTerms) -> Result<(), VocabError> {
        let capacity = self
            .slots
            .len()
            .checked_mul(2)
            .ok_or(VocabError::CapacityOverflow(self.slots.len()))?;
        let old = std::mem::replace(&mut self.slots, vec![EMPTY; capacity]);
        let mask = capacity - 1;
        for offset in old.into_iter().filter(|&s| s != EMPTY) {
            let mut i = self.home(terms.head_term(offset));
            while self.slots[i] != EMPTY {
                i = (i + 1) & mask;
            }
            self.slots[i] = offset;
        }
        Ok(())
    }
}

pub fn check_term(term: &[u8]) -> Result<(), VocabError> {
    if term.is_empty() {
        return Err(VocabError::EmptyTerm);
    }
    if term.len() > MAX_TERM_LEN {
        return Err(VocabError::TermTooLong(term.len()));
    }
    Ok(())
}
